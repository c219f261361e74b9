import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparse_ilac.geometry import (
    Coprime, GeometryError, Nested, ULA, arch_from_spec, arch_label, build_geometry,
    enumerate_fixed_m, steering_vector,
)


class TestBuild:
    def test_nested_33(self):
        assert build_geometry(Nested(3, 3)).positions == (0, 1, 2, 3, 7, 11)

    def test_coprime_23(self):
        g = build_geometry(Coprime(2, 3))
        assert g.positions == (0, 2, 3, 4, 6, 9)
        assert g.M == 6

    def test_ula(self):
        assert build_geometry(ULA(4)).positions == (0, 1, 2, 3)

    @pytest.mark.parametrize("arch", [Nested(0, 5), Nested(4, 1), Nested(5, 0), Coprime(1, 4)])
    def test_degenerate_is_ula(self, arch):
        g = build_geometry(arch)
        assert arch.is_ula_equivalent
        assert g.positions == tuple(range(g.M))

    @pytest.mark.parametrize("bad", [lambda: Coprime(2, 4), lambda: Coprime(3, 2), lambda: Nested(-1, 3),
                                     lambda: Nested(0, 0), lambda: ULA(0)])
    def test_invalid(self, bad):
        with pytest.raises(GeometryError):
            bad()

    def test_spec_round_trip(self):
        a = arch_from_spec("Nested", ["8", 8])
        assert a == Nested(8, 8)
        assert arch_label(a) == "nested(8,8)"
        with pytest.raises(GeometryError):
            arch_from_spec("mra", [4])


@given(st.integers(0, 20), st.integers(0, 20))
def test_nested_positions_distinct_and_sorted(n1, n2):
    if n1 + n2 == 0:
        return
    g = build_geometry(Nested(n1, n2))
    p = np.array(g.positions)
    assert p[0] == 0 and np.all(np.diff(p) > 0)
    assert g.M == n1 + n2


@given(st.integers(1, 8), st.integers(2, 20))
def test_coprime_count(m1, m2):
    from math import gcd
    if m1 >= m2 or gcd(m1, m2) != 1:
        return
    g = build_geometry(Coprime(m1, m2))
    assert g.M == 2 * m1 + m2 - 1


class TestSteering:
    def test_broadside_ones(self):
        assert np.array_equal(steering_vector(build_geometry(Nested(3, 3)), 0.0), np.ones(6))

    def test_endfire_ula2(self):
        np.testing.assert_allclose(steering_vector(build_geometry(ULA(2)), np.pi / 2), [1, -1], atol=1e-15)

    def test_nested_entry(self):
        a = steering_vector(build_geometry(Nested(3, 3)), np.pi / 6)
        assert abs(a[5] - np.exp(1j * np.pi * 5.5)) < 1e-12

    def test_matrix_shape(self):
        A = steering_vector(build_geometry(ULA(5)), np.linspace(-1, 1, 7))
        assert A.shape == (5, 7)
        np.testing.assert_allclose(np.abs(A), 1.0)


def test_enumerate_fixed_m_16():
    archs = enumerate_fixed_m(16)
    nested = [a.params for a in archs if isinstance(a, Nested)]
    coprime = [a.params for a in archs if isinstance(a, Coprime)]
    assert nested == [(n, 16 - n) for n in range(1, 16)]
    assert coprime == [(1, 15), (2, 13), (3, 11), (4, 9), (5, 7)]
    assert all(build_geometry(a).M == 16 for a in archs)
