"""Linear array geometries on the half-wavelength grid.

Positions are integers in units of ``d0 = lambda / 2``; the first element sits
at the reference point (position 0). Three architectures are supported:

* ``ULA(M)``: compact uniform linear array ``{0, ..., M-1}``.
* ``Nested(N1, N2)``: inner compact ULA of ``N1`` elements followed by an
  outer ULA of ``N2`` elements with spacing ``N1 + 1``.
* ``Coprime(M1, M2)``: union of a ``2*M1``-element ULA with spacing ``M2`` and
  an ``M2``-element ULA with spacing ``M1`` sharing the origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import gcd

import numpy as np


class GeometryError(ValueError):
    """Invalid architecture parameters."""


@dataclass(frozen=True)
class ULA:
    M: int

    kind = "ula"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise GeometryError(f"ULA needs M >= 1, got {self.M}")

    @property
    def n_elements(self) -> int:
        return self.M

    @property
    def params(self) -> tuple[int, ...]:
        return (self.M,)

    @property
    def is_ula_equivalent(self) -> bool:
        return True


@dataclass(frozen=True)
class Nested:
    N1: int
    N2: int

    kind = "nested"

    def __post_init__(self):
        if self.N1 < 0 or self.N2 < 0:
            raise GeometryError(f"nested parameters must be non-negative, got {self.params}")
        if self.N1 + self.N2 < 1:
            raise GeometryError("nested array needs N1 + N2 >= 1")

    @property
    def n_elements(self) -> int:
        return self.N1 + self.N2

    @property
    def params(self) -> tuple[int, ...]:
        return (self.N1, self.N2)

    @property
    def is_ula_equivalent(self) -> bool:
        # (0, M), (M - 1, 1) and (M, 0) all collapse to {0, ..., M-1}
        return self.N1 == 0 or self.N2 <= 1


@dataclass(frozen=True)
class Coprime:
    M1: int
    M2: int

    kind = "coprime"

    def __post_init__(self):
        if self.M1 < 1:
            raise GeometryError(f"co-prime array needs M1 >= 1, got {self.M1}")
        if self.M1 >= self.M2:
            raise GeometryError(f"co-prime array needs M1 < M2, got {self.params}")
        if gcd(self.M1, self.M2) != 1:
            raise GeometryError(f"{self.params} are not co-prime")

    @property
    def n_elements(self) -> int:
        return 2 * self.M1 + self.M2 - 1

    @property
    def params(self) -> tuple[int, ...]:
        return (self.M1, self.M2)

    @property
    def is_ula_equivalent(self) -> bool:
        return self.M1 == 1


ArchParams = ULA | Nested | Coprime

_ARCH_BY_NAME = {"ula": ULA, "nested": Nested, "coprime": Coprime}


def arch_from_spec(kind: str, params) -> ArchParams:
    """Build an architecture from a tag and parameter list (as in JSON configs)."""
    try:
        cls = _ARCH_BY_NAME[kind.lower()]
    except KeyError:
        raise GeometryError(f"unknown architecture {kind!r}") from None
    return cls(*[int(p) for p in params])


def arch_label(arch: ArchParams) -> str:
    return f"{arch.kind}({','.join(str(p) for p in arch.params)})"


@dataclass(frozen=True)
class ArrayGeometry:
    """Immutable antenna position set with its generating architecture."""

    positions: tuple[int, ...]
    arch: ArchParams

    @property
    def M(self) -> int:
        return len(self.positions)

    @property
    def aperture(self) -> int:
        return self.positions[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"arch": self.arch.kind, "params": list(self.arch.params),
                "positions": list(self.positions)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_geometry(arch: ArchParams) -> ArrayGeometry:
    """Construct the sorted, de-duplicated position set of an architecture."""
    if isinstance(arch, ULA):
        pos = set(range(arch.M))
    elif isinstance(arch, Nested):
        N1, N2 = arch.N1, arch.N2
        inner = set(range(N1))
        outer = {(N1 + 1) * k - 1 for k in range(1, N2 + 1)}
        pos = inner | outer
    elif isinstance(arch, Coprime):
        M1, M2 = arch.M1, arch.M2
        pos = {k * M2 for k in range(2 * M1)} | {k * M1 for k in range(1, M2)}
    else:
        raise GeometryError(f"unsupported architecture {arch!r}")
    positions = tuple(sorted(pos))
    if len(positions) != arch.n_elements:
        raise GeometryError(
            f"{arch_label(arch)} produced {len(positions)} positions, expected {arch.n_elements}")
    return ArrayGeometry(positions=positions, arch=arch)


def steering_vector(geom: ArrayGeometry, theta) -> np.ndarray:
    """Far-field steering vector(s) ``exp(j*pi*d_m*sin(theta))``.

    A scalar ``theta`` yields shape ``(M,)``; an array of angles yields
    ``(M, len(theta))`` with one column per angle.
    """
    d = np.asarray(geom.positions, dtype=np.float64)
    th = np.asarray(theta, dtype=np.float64)
    if th.ndim == 0:
        return np.exp(1j * np.pi * d * np.sin(th))
    return np.exp(1j * np.pi * np.outer(d, np.sin(th.ravel())))


def enumerate_fixed_m(M: int) -> list[ArchParams]:
    """All nested splits with ``N1, N2 >= 1`` and co-prime pairs totalling ``M`` elements."""
    archs: list[ArchParams] = [Nested(n1, M - n1) for n1 in range(1, M)]
    for m1 in range(1, M):
        m2 = M + 1 - 2 * m1
        if m2 > m1 and gcd(m1, m2) == 1:
            archs.append(Coprime(m1, m2))
    return archs
