"""Angle-of-arrival spectra, peak picking and RMSE scoring.

Spectra are evaluated on a uniform grid of ``theta`` over ``[-pi/2, pi/2]``.
A steering model is given by integer positions (the physical array, or
``0..L`` for the smoothed co-array), so both domains share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from . import kernels
from .coarray import difference_coarray, spatial_smoothing, virtualize
from .geometry import ArrayGeometry, Nested, Coprime

DEFAULT_GRID_STEP = 1e-3


@dataclass(frozen=True)
class SpectrumResult:
    grid: np.ndarray
    values: np.ndarray
    domain: str
    unstable: bool = False

    def __post_init__(self):
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values differ in length")


@dataclass(frozen=True)
class EstimateReport:
    estimates: np.ndarray
    truths: np.ndarray
    matched: np.ndarray
    errors: np.ndarray
    rmse: float
    resolved: np.ndarray

    @property
    def n_resolved(self) -> int:
        return int(self.resolved.sum())

    def to_dict(self) -> dict:
        return {"estimates": self.estimates.tolist(), "truths": self.truths.tolist(),
                "matched": self.matched.tolist(), "rmse": self.rmse,
                "resolved": self.resolved.tolist()}


def theta_grid(step: float = DEFAULT_GRID_STEP) -> np.ndarray:
    """Uniform grid over ``[-pi/2, pi/2]`` with spacing as close to ``step`` as fits."""
    n = int(round(np.pi / step))
    return np.linspace(-np.pi / 2, np.pi / 2, n + 1)


def _positions(steering) -> np.ndarray:
    if isinstance(steering, ArrayGeometry):
        return np.asarray(steering.positions, dtype=np.float64)
    return np.asarray(steering, dtype=np.float64)


def bartlett_spectrum(cov: np.ndarray, steering, grid: np.ndarray,
                      domain: str = "physical") -> SpectrumResult:
    """``a^H C a / ||a||^2`` on the grid; ``steering`` is a geometry or a position list."""
    pos = _positions(steering)
    cov = np.asarray(cov, dtype=np.complex128)
    if cov.shape != (pos.size, pos.size):
        raise ValueError(f"covariance {cov.shape} does not match {pos.size} steering entries")
    vals = kernels.steered_power(cov, pos, np.sin(grid)) / pos.size
    return SpectrumResult(np.asarray(grid), np.maximum(vals, 0.0), domain)


def music_spectrum(R: np.ndarray, n_sources: int, grid: np.ndarray, steering=None,
                   domain: str = "coarray", gap_tol: float = 1e-9) -> SpectrumResult:
    """``1 / ||E_n^H a||^2`` with ``E_n`` the noise subspace of ``R``.

    ``steering`` defaults to a ULA of ``dim(R)`` elements. The result is
    flagged unstable when the signal/noise eigen-gap is below ``gap_tol``
    relative to the largest eigenvalue.
    """
    R = np.asarray(R, dtype=np.complex128)
    dim = R.shape[0]
    if not 1 <= n_sources < dim:
        raise ValueError(f"n_sources must be in [1, {dim - 1}], got {n_sources}")
    pos = np.arange(dim, dtype=np.float64) if steering is None else _positions(steering)
    w, V = eigh(R)
    w, V = w[::-1], V[:, ::-1]
    scale = max(abs(w[0]), np.finfo(float).tiny)
    unstable = bool((w[n_sources - 1] - w[n_sources]) < gap_tol * scale)
    En = V[:, n_sources:]
    proj = En @ En.conj().T
    denom = kernels.steered_power(proj, pos, np.sin(grid))
    vals = 1.0 / np.maximum(denom, np.finfo(float).tiny)
    return SpectrumResult(np.asarray(grid), vals, domain, unstable)


def find_peaks(spectrum: SpectrumResult, K: int) -> np.ndarray:
    """Up to ``K`` largest strict local maxima, parabolically refined, sorted by angle."""
    if K < 1:
        raise ValueError("K must be >= 1")
    v = spectrum.values
    g = spectrum.grid
    if v.size < 3:
        return np.empty(0)
    inner = np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]))[0] + 1
    if inner.size == 0:
        return np.empty(0)
    top = inner[np.argsort(-v[inner], kind="stable")[:K]]
    y0, y1, y2 = v[top - 1], v[top], v[top + 1]
    denom = y0 - 2.0 * y1 + y2
    off = np.where(denom != 0.0, 0.5 * (y0 - y2) / np.where(denom != 0.0, denom, 1.0), 0.0)
    step = g[1] - g[0]
    return np.sort(g[top] + np.clip(off, -0.5, 0.5) * step)


def _ordered_match(truths: np.ndarray, ests: np.ndarray, penalty: float) -> np.ndarray:
    """Order-preserving assignment of sorted estimates to sorted truths.

    With equal counts this is plain sort-and-pair. With fewer estimates an
    alignment is chosen by dynamic programming: a matched pair costs its
    squared error, an unmatched truth costs ``penalty^2`` and a spurious
    estimate is dropped for free. ``-1`` marks unmatched truths.
    """
    n, m = truths.size, ests.size
    if m == n:
        return np.arange(n)
    pen2 = penalty * penalty
    cost = np.zeros((n + 1, m + 1))
    cost[:, 0] = np.arange(n + 1) * pen2
    move = np.zeros((n + 1, m + 1), dtype=np.int8)  # 0 match, 1 skip truth, 2 skip estimate
    move[1:, 0] = 1
    move[0, 1:] = 2
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            opts = (cost[i - 1, j - 1] + (truths[i - 1] - ests[j - 1]) ** 2,
                    cost[i - 1, j] + pen2,
                    cost[i, j - 1])
            k = int(np.argmin(opts))
            cost[i, j], move[i, j] = opts[k], k
    match = np.full(n, -1)
    i, j = n, m
    while i > 0:
        if j > 0 and move[i, j] == 0:
            match[i - 1] = j - 1
            i, j = i - 1, j - 1
        elif j > 0 and move[i, j] == 2:
            j -= 1
        else:
            i -= 1
    return match


def score_rmse(true_angles, est_angles, penalty: float = np.pi / 2,
               resolve_tol: float | None = None) -> EstimateReport:
    """RMSE over all sources with a fixed error charged per missing estimate.

    Extra estimates beyond the number of truths are ignored (the largest
    peaks are passed in by convention). A source counts as resolved when some
    estimate lies within ``resolve_tol`` of it (default: half the smallest
    truth spacing), independently of the RMSE pairing.
    """
    truths = np.sort(np.asarray(true_angles, dtype=np.float64))
    if truths.size == 0:
        raise ValueError("need at least one true angle")
    ests = np.sort(np.asarray(est_angles, dtype=np.float64))[: truths.size] if np.size(est_angles) else np.empty(0)
    if resolve_tol is None:
        resolve_tol = 0.5 * float(np.min(np.diff(truths))) if truths.size > 1 else penalty
    match = _ordered_match(truths, ests, penalty)
    ok = match >= 0
    matched = np.full(truths.size, np.nan)
    matched[ok] = ests[match[ok]]
    errors = np.full(truths.size, float(penalty))
    errors[ok] = np.abs(truths[ok] - matched[ok])
    rmse = float(np.sqrt(np.mean(errors ** 2)))
    if ests.size:
        resolved = np.min(np.abs(truths[:, None] - ests[None, :]), axis=1) <= resolve_tol
    else:
        resolved = np.zeros(truths.size, dtype=bool)
    return EstimateReport(ests, truths, matched, errors, rmse, resolved)


# ---------------------------------------------------------------------------
# pipelines


def default_domain(geom: ArrayGeometry) -> str:
    sparse = isinstance(geom.arch, (Nested, Coprime)) and not geom.arch.is_ula_equivalent
    return "coarray" if sparse else "physical"


def spectrum_from_covariance(R: np.ndarray, geom: ArrayGeometry, grid: np.ndarray,
                             domain: str = "auto", estimator: str = "bartlett",
                             n_sources: int | None = None) -> SpectrumResult:
    """Bartlett or MUSIC spectrum of ``R`` on the physical array or its smoothed co-array."""
    if domain == "auto":
        domain = default_domain(geom)
    if domain == "coarray":
        ca = difference_coarray(geom)
        R_use = spatial_smoothing(virtualize(R, ca))
        pos = np.arange(ca.L + 1)
    elif domain == "physical":
        R_use = R
        pos = np.asarray(geom.positions)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if estimator == "bartlett":
        return bartlett_spectrum(R_use, pos, grid, domain)
    if estimator == "music":
        if n_sources is None:
            raise ValueError("MUSIC needs n_sources")
        return music_spectrum(R_use, n_sources, grid, pos, domain)
    raise ValueError(f"unknown estimator {estimator!r}")


def localize(R: np.ndarray, geom: ArrayGeometry, n_sources: int, grid_step: float = DEFAULT_GRID_STEP,
             domain: str = "auto", estimator: str = "bartlett") -> tuple[SpectrumResult, np.ndarray]:
    spec = spectrum_from_covariance(R, geom, theta_grid(grid_step), domain, estimator, n_sources)
    return spec, find_peaks(spec, n_sources)
