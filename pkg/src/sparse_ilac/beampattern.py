"""Physical-array beam patterns and their sparse-array descriptors.

The pattern of a position set ``D`` at spatial-angle difference
``delta = sin(theta_k) - sin(theta_i)`` is::

    G(delta; D) = |sum_m exp(j*pi*d_m*delta)|^2 / M^2

Nested and co-prime arrays admit two-term closed forms ``|f + e^{j*Phi} g|^2``
and ``|e^{j*Phi} I1 + I2|^2`` built from Dirichlet ratios. This module
evaluates both routes, extracts the first local minimum point (FLMP), beam
width, peak-to-local-minimum ratio (PLMR) and side-lobe heights numerically,
and evaluates the branch-wise analytic bounds on those quantities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import numpy as np
from scipy.optimize import bisect

from . import kernels
from .geometry import ArchParams, ArrayGeometry, Coprime, Nested, ULA, build_geometry


class FlmpNotFoundError(RuntimeError):
    pass


class ThresholdCapError(RuntimeError):
    """A threshold scan ran past its configured cap."""


class PremiseError(ValueError):
    """An analytic prediction was requested outside the regime it covers."""


@dataclass(frozen=True)
class BeamMetrics:
    flmp: float
    bw: float
    plmr: float
    slh: list[tuple[float, float]] = field(default_factory=list)
    grid_step: float = 0.0

    def to_dict(self) -> dict:
        return {"flmp": self.flmp, "bw": self.bw, "plmr": self.plmr,
                "slh": [[p, h] for p, h in self.slh]}


@dataclass(frozen=True)
class FnpSet:
    """First-null points of the closed-form components, as exact rationals."""

    kind: str
    d1: Fraction
    d2: Fraction
    d3: Fraction
    da: Fraction | None = None

    def as_floats(self) -> dict[str, float]:
        out = {"d1": float(self.d1), "d2": float(self.d2), "d3": float(self.d3)}
        if self.da is not None:
            out["da"] = float(self.da)
        return out


@dataclass(frozen=True)
class Thresholds:
    n_th: int | None = None
    n_ap: int | None = None
    m_th1: int | None = None
    m_th2: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class BoundInterval:
    lower: float
    upper: float
    branch: str

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack


@dataclass(frozen=True)
class PlmrBound:
    value: float
    labels: tuple[str, ...]
    branch: str


@dataclass(frozen=True)
class SideLobe:
    position: float
    height: float
    group: str


@dataclass(frozen=True)
class LobeMatch:
    predicted: SideLobe
    window: float
    position: float | None
    height: float | None

    @property
    def rel_error(self) -> float:
        if self.height is None:
            return float("inf")
        return abs(self.height - self.predicted.height) / self.predicted.height


# ---------------------------------------------------------------------------
# pattern evaluation


def gain(geom: ArrayGeometry, delta):
    """Normalized power pattern by direct summation over the elements."""
    scalar = np.ndim(delta) == 0
    out = kernels.array_gain(geom.positions, np.atleast_1d(delta))
    return float(out[0]) if scalar else out


def dirichlet_ratio(n: int, x):
    """``sin(n*x) / sin(x)`` with removable singularities filled by their limits.

    The argument is reduced to ``x = k*pi + e`` with ``|e| <= pi/2``, so that
    ``sin(n*x)/sin(x) = (-1)^(k*(n-1)) * sin(n*e)/sin(e)``, which is evaluated
    without cancellation near every pole.
    """
    x = np.asarray(x, dtype=np.float64)
    k = np.round(x / np.pi)
    e = x - k * np.pi
    sign = np.where(np.mod(k * (n - 1), 2) == 0, 1.0, -1.0)
    small = e == 0.0
    e_safe = np.where(small, 1.0, e)
    ratio = np.where(small, float(n), np.sin(n * e_safe) / np.sin(e_safe))
    return sign * ratio


def nested_terms(N1: int, N2: int, delta):
    """Inner-array term ``f``, outer-array term ``g`` and relative phase ``Phi``."""
    delta = np.asarray(delta, dtype=np.float64)
    f = dirichlet_ratio(N1, 0.5 * np.pi * delta)
    g = dirichlet_ratio(N2, 0.5 * np.pi * (N1 + 1) * delta)
    phi = 0.5 * np.pi * N2 * (N1 + 1) * delta
    return f, g, phi


def coprime_terms(M1: int, M2: int, delta):
    """Subarray terms ``I1`` (spacing ``M2``), ``I2`` (spacing ``M1``) and phase ``Phi``."""
    delta = np.asarray(delta, dtype=np.float64)
    i1 = dirichlet_ratio(2 * M1, 0.5 * np.pi * M2 * delta)
    i2 = dirichlet_ratio(M2 - 1, 0.5 * np.pi * M1 * delta)
    phi = 0.5 * np.pi * (M1 - 1) * M2 * delta
    return i1, i2, phi


def closed_form_gain(arch: ArchParams, delta):
    """Beam pattern from the architecture's two-term closed form."""
    scalar = np.ndim(delta) == 0
    M = arch.n_elements
    if isinstance(arch, ULA):
        out = dirichlet_ratio(arch.M, 0.5 * np.pi * np.asarray(delta, dtype=np.float64)) ** 2
    elif isinstance(arch, Nested):
        f, g, phi = nested_terms(arch.N1, arch.N2, delta)
        out = f * f + g * g + 2.0 * f * g * np.cos(phi)
    elif isinstance(arch, Coprime):
        a, b, phi = coprime_terms(arch.M1, arch.M2, delta)
        out = a * a + b * b + 2.0 * a * b * np.cos(phi)
    else:
        raise TypeError(f"unsupported architecture {arch!r}")
    out = out / (M * M)
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# numerical descriptors


def default_grid_step(arch: ArchParams) -> float:
    """Coarse search step: ``min(1e-4, Delta2 / 50)``."""
    if isinstance(arch, Nested) and not arch.is_ula_equivalent:
        d2 = 2.0 / ((arch.N1 + 1) * arch.N2)
    elif isinstance(arch, Coprime) and arch.M1 > 1:
        d2 = 2.0 / (arch.M1 * (arch.M2 - 1))
    else:
        d2 = 2.0 / arch.n_elements
    return min(1e-4, d2 / 50.0)


def _golden_min(fn, a: float, b: float, tol: float = 1e-9) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def first_local_min(fn, step: float, upper: float = 2.0, chunk: int = 4096,
                    refine_tol: float = 1e-9) -> float:
    """Smallest strict local minimum of ``fn`` on ``(0, upper]``.

    ``fn`` maps an array of abscissae to values. The grid ``k*step`` is
    scanned in chunks; plateaus count as one candidate at their midpoint. The
    coarse candidate is refined by golden-section search on its bracketing
    interval.
    """
    n_total = int(np.floor(upper / step + 1e-9))
    xs_prev = np.empty(0)
    vals_prev = np.empty(0)
    k0 = 0
    while k0 <= n_total:
        k1 = min(n_total, k0 + chunk - 1)
        xs = np.arange(k0, k1 + 1) * step
        vals = np.asarray(fn(xs), dtype=np.float64)
        xs = np.concatenate([xs_prev, xs])
        vals = np.concatenate([vals_prev, vals])
        i = 1
        while i < len(vals) - 1:
            if vals[i] < vals[i - 1]:
                j = i
                while j + 1 < len(vals) and vals[j + 1] == vals[i]:
                    j += 1
                if j + 1 >= len(vals):
                    break  # plateau runs into the chunk edge; re-examine next round
                if vals[j + 1] > vals[i]:
                    lo, hi = xs[i - 1], xs[j + 1]
                    if j > i:
                        return 0.5 * (xs[i] + xs[j])

                    def scalar(x):
                        return float(np.asarray(fn(np.array([x])))[0])

                    return _golden_min(scalar, lo, hi, refine_tol)
                i = j + 1
            else:
                i += 1
        # carry the unexamined tail (and its left neighbour) into the next chunk
        keep = max(0, min(i - 1, len(vals) - 2))
        xs_prev, vals_prev = xs[keep:], vals[keep:]
        k0 = k1 + 1
    raise FlmpNotFoundError("no local minimum of the beam pattern on (0, %g]" % upper)


def find_flmp(geom: ArrayGeometry, grid_step: float | None = None) -> float:
    """First local minimum point of the physical beam pattern on ``(0, 2]``."""
    step = default_grid_step(geom.arch) if grid_step is None else grid_step
    pos = geom.positions
    return float(first_local_min(lambda d: kernels.array_gain(pos, d), step))


def _local_maxima(xs, vals):
    inner = (vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:])
    idx = np.nonzero(inner)[0] + 1
    # three-point parabolic vertex
    y0, y1, y2 = vals[idx - 1], vals[idx], vals[idx + 1]
    denom = y0 - 2.0 * y1 + y2
    h = xs[1] - xs[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(denom != 0.0, 0.5 * (y0 - y2) / denom, 0.0)
    off = np.clip(off, -0.5, 0.5)
    pos = xs[idx] + off * h
    height = y1 - 0.25 * (y0 - y2) * off
    return pos, height


def compute_metrics(geom: ArrayGeometry, grid_step: float | None = None,
                    slh_floor_db: float = -30.0) -> BeamMetrics:
    """FLMP, BW, PLMR and the side lobes above ``slh_floor_db`` on ``(FLMP, 2]``."""
    step = default_grid_step(geom.arch) if grid_step is None else grid_step
    flmp = find_flmp(geom, step)
    g_min = gain(geom, flmp)
    plmr = float("inf") if g_min <= 0.0 else 1.0 / g_min
    xs = np.arange(flmp, 2.0 + 0.5 * step, step)
    vals = kernels.array_gain(geom.positions, xs)
    pos, height = _local_maxima(xs, vals)
    floor = 10.0 ** (slh_floor_db / 10.0)
    keep = height >= floor
    order = np.argsort(-height[keep], kind="stable")
    slh = [(float(p), float(min(h, 1.0))) for p, h in zip(pos[keep][order], height[keep][order])]
    return BeamMetrics(flmp=flmp, bw=2.0 * flmp, plmr=plmr, slh=slh, grid_step=step)


# ---------------------------------------------------------------------------
# analytic descriptors


def fnp_set(arch: ArchParams) -> FnpSet:
    """First-null points of the closed-form components."""
    if isinstance(arch, Nested):
        N1, N2 = arch.N1, arch.N2
        if N1 < 1 or N2 < 1:
            raise ValueError("nested first-null points need N1 >= 1 and N2 >= 1")
        d1 = Fraction(2, N1)
        d2 = Fraction(2, (N1 + 1) * N2)
        d3 = Fraction(1, (N1 + 1) * N2)
        assert d3 < d2 < d1 and d2 == 2 * d3
        return FnpSet("nested", d1, d2, d3)
    if isinstance(arch, Coprime):
        M1, M2 = arch.M1, arch.M2
        if M1 < 2:
            raise ValueError("co-prime first-null points need M1 >= 2")
        d1 = Fraction(1, M1 * M2)
        d2 = Fraction(2, M1 * (M2 - 1))
        d3 = Fraction(1, (M1 - 1) * M2)
        da = Fraction(3, 2 * M1 * M2)
        assert d1 < d3 <= 2 * d1 < d2 and da < 2 * d1
        if M1 >= 4:
            assert d3 < da
        return FnpSet("coprime", d1, d2, d3, da)
    raise ValueError(f"first-null points are defined for nested and co-prime arrays, not {arch!r}")


def n_ap(N1: int) -> int:
    """``floor(sqrt(10*N1^2 / (N1+1)))`` in exact integer arithmetic."""
    return isqrt((10 * N1 * N1) // (N1 + 1))


def _nested_decreasing_on_main_lobe(N1: int, N2: int, phi_step: float, h: float) -> bool:
    phi = np.arange(phi_step, np.pi - 0.5 * phi_step, phi_step)
    scale = 2.0 / (np.pi * N2 * (N1 + 1))
    arch = Nested(N1, N2)
    deriv = (closed_form_gain(arch, (phi + h) * scale)
             - closed_form_gain(arch, (phi - h) * scale)) / (2.0 * h)
    return bool(np.all(deriv < 0.0))


@lru_cache(maxsize=None)
def nested_n_th(N1: int, phi_step: float = 1e-4, h: float = 1e-6, cap: int = 512) -> int:
    """Largest ``N2`` for which the pattern decreases strictly over ``Phi`` in ``(0, pi)``."""
    if N1 < 7:
        return 1
    best = 1
    for N2 in range(2, cap + 1):
        if not _nested_decreasing_on_main_lobe(N1, N2, phi_step, h):
            return best
        best = N2
    raise ThresholdCapError(f"N_th for N1={N1} beyond cap {cap}")


def coprime_region(M1: int, M2: int) -> int:
    """Which interval holds the FLMP: 1 -> (D1, D3], 2 -> (D3, Da], 3 -> beyond Da."""
    arch = Coprime(M1, M2)
    flmp = first_local_min(lambda d: closed_form_gain(arch, d), default_grid_step(arch))
    fs = fnp_set(arch)
    if flmp <= float(fs.d3):
        return 1
    if flmp <= float(fs.da):
        return 2
    return 3


@lru_cache(maxsize=None)
def coprime_thresholds(M1: int, cap: int = 512, confirm: int = 6) -> tuple[int, int]:
    """``(M_th1, M_th2)`` from an exhaustive scan over co-prime ``M2 > M1``.

    The scan classifies the FLMP location for each ``M2`` and stops once
    ``confirm`` consecutive co-prime values sit in the outermost region.
    """
    if M1 < 2:
        raise ValueError("co-prime thresholds need M1 >= 2")
    last1 = last2 = None
    run3 = 0
    for M2 in range(M1 + 1, cap + 1):
        if gcd(M1, M2) != 1:
            continue
        region = coprime_region(M1, M2)
        if region == 1:
            last1 = last2 = M2
            run3 = 0
        elif region == 2:
            last2 = M2
            run3 = 0
        else:
            run3 += 1
            if run3 >= confirm:
                break
    else:
        raise ThresholdCapError(f"co-prime thresholds for M1={M1} beyond cap {cap}")
    m_th1 = M1 if last1 is None or M1 >= 14 else last1
    m_th2 = max(m_th1, last2 if last2 is not None else m_th1)
    return m_th1, m_th2


def thresholds(arch: ArchParams, cap: int = 512) -> Thresholds:
    if isinstance(arch, Nested):
        if arch.N1 < 1:
            raise ValueError("nested thresholds need N1 >= 1")
        return Thresholds(n_th=nested_n_th(arch.N1, cap=cap), n_ap=n_ap(arch.N1))
    if isinstance(arch, Coprime):
        m1, m2 = coprime_thresholds(arch.M1, cap=cap)
        return Thresholds(m_th1=m1, m_th2=m2)
    raise ValueError(f"thresholds are defined for nested and co-prime arrays, not {arch!r}")


def _inner_level_residual(N1: int, N2: int, phi: float) -> float:
    g = float(dirichlet_ratio(N2, phi / N2))
    return np.cos(phi) + g / (2.0 * N1)


def solve_delta_int(N1: int, N2: int, tol: float = 1e-10) -> float:
    """Lower FLMP bound for a dominant outer subarray.

    Solves ``cos(Phi) = -g(Phi) / (2 f(0))`` on ``Phi in [pi/2, pi]``, the point
    where the pattern falls back to the inner-subarray level ``f(0)^2 / M^2``,
    and maps it to ``Delta = 2*Phi / (pi*N2*(N1+1))``.
    """
    if N1 < 1 or N2 < 2:
        raise ValueError("solve_delta_int needs N1 >= 1 and N2 >= 2")
    lo, hi = 0.5 * np.pi, np.pi
    r_lo = _inner_level_residual(N1, N2, lo)
    r_hi = _inner_level_residual(N1, N2, hi)
    if not (r_lo > 0.0 > r_hi):
        raise ArithmeticError(
            f"no sign change on [pi/2, pi] for N1={N1}, N2={N2}: ({r_lo:.3g}, {r_hi:.3g})")
    phi = bisect(lambda p: _inner_level_residual(N1, N2, p), lo, hi, xtol=tol)
    return 2.0 * phi / (np.pi * N2 * (N1 + 1))


def flmp_bounds(arch: ArchParams, th: Thresholds | None = None) -> BoundInterval:
    """Branch-wise interval containing the FLMP."""
    if arch.is_ula_equivalent:
        d = 2.0 / arch.n_elements
        return BoundInterval(d, d, "ula")
    th = th or thresholds(arch)
    fs = fnp_set(arch)
    if isinstance(arch, Nested):
        N1, N2 = arch.N1, arch.N2
        if N2 <= th.n_th:
            return BoundInterval(2.0 * (N2 - 1) / ((N1 + 1) * N2), 2.0 / (N1 + 1), "nested:inner")
        if N2 <= th.n_ap:
            return BoundInterval(float(fs.d3), float(fs.d2), "nested:transition")
        return BoundInterval(solve_delta_int(N1, N2), float(fs.d2), "nested:outer")
    M2 = arch.M2
    if M2 <= th.m_th1:
        return BoundInterval(float(fs.d1), float(fs.d3), "coprime:1")
    if M2 <= th.m_th2:
        return BoundInterval(float(fs.d3), float(fs.da), "coprime:2")
    return BoundInterval(float(2 * fs.d1), float(fs.d2), "coprime:3")


def plmr_bound(arch: ArchParams, th: Thresholds | None = None) -> PlmrBound:
    """Analytic lower bound on the PLMR and the pattern samples that set it."""
    if arch.is_ula_equivalent:
        # exact Dirichlet null: PLMR is unbounded, only the trivial bound G <= 1 is finite
        return PlmrBound(1.0, ("trivial",), "ula")
    th = th or thresholds(arch)
    fs = fnp_set(arch)
    M = arch.n_elements
    if isinstance(arch, Nested):
        N1, N2 = arch.N1, arch.N2
        d1, d2, d3 = float(fs.d1), float(fs.d2), float(fs.d3)
        f2, _, _ = nested_terms(N1, N2, d2)
        if N2 <= th.n_th:
            f4, _, _ = nested_terms(N1, N2, (N2 - 1) * d2)
            f5, _, _ = nested_terms(N1, N2, N2 * d2)
            p = {"P4": float(f4) ** 2 / M ** 2,
                 "P5": (float(f5) ** 2 + N2 ** 2 - 2 * N2 * float(f5)) / M ** 2}
            branch = "nested:inner"
        elif N2 <= th.n_ap:
            f3, g3, _ = nested_terms(N1, N2, d3)
            p = {"P3": (float(f3) ** 2 + float(g3) ** 2) / M ** 2, "P2": float(f2) ** 2 / M ** 2}
            branch = "nested:transition"
        else:
            d_int = solve_delta_int(N1, N2)
            p = {"Pint": closed_form_gain(arch, d_int), "P2": float(f2) ** 2 / M ** 2}
            branch = "nested:outer"
        del d1
    else:
        d1, d2, d3 = float(fs.d1), float(fs.d2), float(fs.d3)
        M2 = arch.M2

        def term(which, d):
            i1, i2, _ = coprime_terms(arch.M1, M2, d)
            return float(i1 if which == 1 else i2)

        q1 = term(2, d1) ** 2 / M ** 2
        q2 = term(1, d2) ** 2 / M ** 2
        q3 = (term(1, d3) ** 2 + term(2, d3) ** 2) / M ** 2
        q4 = term(2, 2 * d1) ** 2 / M ** 2
        if M2 <= th.m_th1:
            p = {"Q1": q1, "Q3": q3}
            branch = "coprime:1"
        elif M2 <= th.m_th2:
            p = {"Q3": q3}
            branch = "coprime:2"
        else:
            p = {"Q2": q2, "Q4": q4}
            branch = "coprime:3"
    inv = {k: (float("inf") if v <= 0.0 else 1.0 / v) for k, v in p.items()}
    best = max(inv.values())
    return PlmrBound(best, tuple(p), branch)


def slh_predict(arch: ArchParams, strict: bool = True) -> list[SideLobe]:
    """Predicted dominant side-lobe positions and heights on ``Delta > 0`` and ``< 0``."""
    M = arch.n_elements
    if arch.is_ula_equivalent:
        return []
    if isinstance(arch, Nested):
        N1, N2 = arch.N1, arch.N2
        if N2 < n_ap(N1):
            msg = f"outer subarray too small for side-lobe prediction (N2={N2} < N_ap={n_ap(N1)})"
            if strict:
                raise PremiseError(msg)
            warnings.warn(msg)
        h = (N2 - 1) ** 2 / M ** 2
        return [SideLobe(2.0 * n / (N1 + 1), h, "outer")
                for n in range(-N1, N1 + 1) if n != 0]
    M1, M2 = arch.M1, arch.M2
    s1 = {Fraction(2 * n, M2) for n in range(-(M2 - 1), M2) if n != 0}
    s2 = {Fraction(2 * n, M1) for n in range(-(M1 - 1), M1) if n != 0}
    assert not (s1 & s2), "co-prime grating lobes overlap"
    h1 = 4 * M1 ** 2 / M ** 2
    h2 = (M2 - 1) ** 2 / M ** 2
    lobes = [SideLobe(float(p), h1, "S1") for p in s1] + [SideLobe(float(p), h2, "S2") for p in s2]
    return sorted(lobes, key=lambda s: s.position)


def match_side_lobes(geom: ArrayGeometry, predicted: list[SideLobe],
                     samples: int = 4001) -> list[LobeMatch]:
    """Pair each predicted lobe with a true local maximum of the pattern.

    The search window around a prediction spans half the distance to the
    nearest other predicted lobe (the main lobe at 0 included). Inside it,
    the local maximum whose height is closest to the prediction is taken.
    """
    centers = np.array(sorted({0.0} | {s.position for s in predicted}))
    out = []
    for lobe in predicted:
        others = centers[np.abs(centers - lobe.position) > 1e-12]
        half = 0.5 * float(np.min(np.abs(others - lobe.position)))
        xs = np.linspace(lobe.position - half, lobe.position + half, samples)
        vals = gain(geom, xs)
        pos, height = _local_maxima(xs, vals)
        if pos.size == 0:
            out.append(LobeMatch(lobe, half, None, None))
            continue
        k = int(np.argmin(np.abs(height - lobe.height)))
        out.append(LobeMatch(lobe, half, float(pos[k]), float(height[k])))
    return out


def pattern_table(geom: ArrayGeometry, n_points: int = 10001):
    """``(delta, gain, gain_db)`` rows on a uniform grid over ``[-2, 2]``."""
    d = np.linspace(-2.0, 2.0, n_points)
    g = gain(geom, d)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(g)
    return d, g, db


def analyze(arch: ArchParams, grid_step: float | None = None) -> dict:
    """Numerical metrics plus whatever analytic bounds apply to ``arch``."""
    geom = build_geometry(arch)
    metrics = compute_metrics(geom, grid_step)
    out = {"arch": arch.kind, "params": list(arch.params), **metrics.to_dict()}
    if isinstance(arch, (Nested, Coprime)) and not arch.is_ula_equivalent:
        th = thresholds(arch)
        b = flmp_bounds(arch, th)
        pb = plmr_bound(arch, th)
        out["thresholds"] = th.to_dict()
        out["bounds"] = {"lower": b.lower, "upper": b.upper, "branch": b.branch}
        out["plmr_bound"] = pb.value
        out["plmr_bound_terms"] = list(pb.labels)
    else:
        b = flmp_bounds(arch)
        out["bounds"] = {"lower": b.lower, "upper": b.upper, "branch": b.branch}
        out["plmr_bound"] = plmr_bound(arch).value
        out["thresholds"] = {}
    return out
