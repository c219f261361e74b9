"""Difference co-array processing and the virtual-array link analysis.

Vectorizing the covariance ``R`` of an array with positions ``d`` gives a
signal observed on the lags ``d_i - d_j``. The hole-free segment ``-L..L`` of
those lags acts as a virtual ULA with ``M_svir = 2L + 1`` elements, which after
spatial smoothing supports more sources than physical antennas.

The same vectorization applied to a communication signal destroys the
symbol phase and costs SNR. The helpers at the bottom quantify both effects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beampattern import gain
from .geometry import ArrayGeometry, steering_vector
from .signal import complex_gaussian


@dataclass(frozen=True)
class CoArray:
    lags: np.ndarray
    weights: np.ndarray
    pair_map: dict[int, list[tuple[int, int]]]
    L: int
    M: int

    @property
    def m_vir(self) -> int:
        return int(self.lags.size)

    @property
    def m_svir(self) -> int:
        return 2 * self.L + 1

    @property
    def holes(self) -> list[int]:
        """Missing lags inside ``[-max_lag, max_lag]``."""
        top = int(self.lags.max())
        present = set(self.lags.tolist())
        return [k for k in range(-top, top + 1) if k not in present]

    def weight(self, lag: int) -> int:
        idx = np.searchsorted(self.lags, lag)
        if idx < self.lags.size and self.lags[idx] == lag:
            return int(self.weights[idx])
        return 0

    def representative(self, lag: int) -> tuple[int, int]:
        """Pair ``(p, q)`` with ``d_p - d_q = lag`` and the smallest ``p``."""
        return min(self.pair_map[lag])

    def to_dict(self) -> dict:
        return {"lags": self.lags.tolist(), "weights": self.weights.tolist(),
                "holes": self.holes, "M_vir": self.m_vir, "M_svir": self.m_svir}


def difference_coarray(geom: ArrayGeometry) -> CoArray:
    """Enumerate all ``M^2`` ordered position differences."""
    pos = geom.positions
    pair_map: dict[int, list[tuple[int, int]]] = {}
    for i, di in enumerate(pos):
        for j, dj in enumerate(pos):
            pair_map.setdefault(di - dj, []).append((i, j))
    lags = np.array(sorted(pair_map), dtype=np.int64)
    weights = np.array([len(pair_map[k]) for k in lags], dtype=np.int64)
    L = 0
    while (L + 1) in pair_map:
        L += 1
    return CoArray(lags=lags, weights=weights, pair_map=pair_map, L=L, M=geom.M)


def virtualize(R: np.ndarray, coarray: CoArray) -> np.ndarray:
    """Single-snapshot virtual-ULA signal on lags ``-L..L``.

    Entries of ``vec(R)`` that share a lag are averaged.
    """
    R = np.asarray(R, dtype=np.complex128)
    M = coarray.M
    if R.shape != (M, M):
        raise ValueError(f"covariance is {R.shape}, co-array expects {(M, M)}")
    L = coarray.L
    z = np.empty(2 * L + 1, dtype=np.complex128)
    for k, lag in enumerate(range(-L, L + 1)):
        pairs = coarray.pair_map[lag]
        z[k] = sum(R[i, j] for i, j in pairs) / len(pairs)
    return z


def spatial_smoothing(z_s: np.ndarray) -> np.ndarray:
    """Average the ``L + 1`` forward windows of length ``L + 1``."""
    z_s = np.asarray(z_s, dtype=np.complex128)
    n = z_s.size
    if n % 2 == 0:
        raise ValueError("virtual snapshot must have odd length 2L+1")
    L = (n - 1) // 2
    if L < 1:
        raise ValueError("contiguous co-array segment too short for smoothing (L = 0)")
    windows = np.lib.stride_tricks.sliding_window_view(z_s, L + 1)  # (L+1, L+1)
    R_ss = windows.T @ windows.conj() / (L + 1)
    return 0.5 * (R_ss + R_ss.conj().T)


# ---------------------------------------------------------------------------
# virtual-array communication


def type1_pattern(geom: ArrayGeometry, delta, selected: bool = False, coarray: CoArray | None = None):
    """Same-user (Type I) interference pattern of the virtual array.

    Unselected: redundancy-weighted sum over every lag, normalized by ``M^4``.
    Selected: unweighted virtual ULA over ``-L..L``, normalized by ``M_svir^2``.
    """
    ca = coarray or difference_coarray(geom)
    d = np.asarray(delta, dtype=np.float64)
    if selected:
        lags = np.arange(-ca.L, ca.L + 1)
        s = np.exp(1j * np.pi * np.multiply.outer(d, lags)).sum(axis=-1)
        return np.abs(s) ** 2 / ca.m_svir ** 2
    s = (ca.weights * np.exp(1j * np.pi * np.multiply.outer(d, ca.lags))).sum(axis=-1)
    return np.abs(s) ** 2 / ca.M ** 4


def type2_pattern(geom: ArrayGeometry, d_ki, d_kj, selected: bool = False,
                  coarray: CoArray | None = None):
    """Cross-user (Type II) interference pattern from users ``i`` and ``j`` seen by ``k``.

    Unselected form is the Kronecker inner product over all ``(p, q)`` pairs;
    the selected form keeps one representative pair per lag in ``-L..L``.
    """
    a = np.asarray(d_ki, dtype=np.float64)
    b = np.asarray(d_kj, dtype=np.float64)
    pos = np.asarray(geom.positions, dtype=np.float64)
    if selected:
        ca = coarray or difference_coarray(geom)
        reps = [ca.representative(lag) for lag in range(-ca.L, ca.L + 1)]
        dp = pos[[p for p, _ in reps]]
        dq = pos[[q for _, q in reps]]
        norm = ca.m_svir ** 2
    else:
        M = pos.size
        dp = np.repeat(pos, M)
        dq = np.tile(pos, M)
        norm = M ** 4
    phase = np.multiply.outer(a, dp) - np.multiply.outer(b, dq)
    s = np.exp(1j * np.pi * phase).sum(axis=-1)
    return np.abs(s) ** 2 / norm


def virtual_snr_closed(M: int, rho: float) -> tuple[float, float]:
    """Closed-form ``(snr_vir, snr_phy)`` of virtual versus physical MRC (linear units).

    ``snr_vir = 2 M^2 rho^2 / (2 M rho + (M+1)/M)``, ``snr_phy = M rho``.
    """
    if M < 1 or not rho > 0:
        raise ValueError("need M >= 1 and rho > 0")
    snr_phy = M * rho
    snr_vir = 2.0 * M * M * rho * rho / (2.0 * M * rho + (M + 1.0) / M)
    assert snr_vir <= snr_phy * (1 + 1e-12)
    return snr_vir, snr_phy


def virtual_snr_exact(M: int, rho: float) -> float:
    """Virtual-array SNR with the exact fourth moment of the noise-noise term.

    For ``s = a^H n ~ CN(0, M)``, ``E|s|^4 = 2 M^2``, so the noise-noise power
    is ``2 sigma^4`` instead of ``(M+1)/M sigma^4``.
    """
    return 2.0 * M * M * rho * rho / (2.0 * M * rho + 2.0)


@dataclass(frozen=True)
class VirtualSnrMoments:
    """Empirical second moments of the virtual MRC output terms (``sigma^2 = 1``)."""

    signal: float
    noise_sx: float
    noise_xs: float
    noise_ss: float
    cross_mean: complex
    cross_std: float
    trials: int

    @property
    def snr(self) -> float:
        return self.signal / (self.noise_sx + self.noise_xs + self.noise_ss)


def virtual_snr_mc(geom: ArrayGeometry, rho: float, trials: int, rng: np.random.Generator,
                   theta: float = 0.0, chunk: int = 20000) -> VirtualSnrMoments:
    """Monte Carlo of virtual-array MRC for one LoS user with ``beta = 1``.

    Each trial draws ``y = a sqrt(P) x + n``, vectorizes ``y y^H`` and applies
    ``w_s = (conj(a) kron a) / M``. The output splits into the signal term
    ``M P |x|^2``, two signal-noise products and the noise-noise term.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = steering_vector(geom, theta)
    M = geom.M
    P = float(rho)
    acc = np.zeros(4)
    cross_sum = 0j
    cross_sq = 0.0
    done = 0
    while done < trials:
        n_t = min(chunk, trials - done)
        x = complex_gaussian(rng, n_t)
        noise = complex_gaussian(rng, (n_t, M))
        s = noise @ a.conj()  # a^H n per trial
        sig = M * P * np.abs(x) ** 2
        t_sx = np.sqrt(P) * x.conj() * s
        t_xs = np.sqrt(P) * x * s.conj()
        t_ss = np.abs(s) ** 2 / M
        acc += [np.sum(sig ** 2), np.sum(np.abs(t_sx) ** 2),
                np.sum(np.abs(t_xs) ** 2), np.sum(t_ss ** 2)]
        c = t_sx * t_ss
        cross_sum += c.sum()
        cross_sq += float(np.sum(np.abs(c) ** 2))
        done += n_t
    mean = acc / trials
    cm = cross_sum / trials
    cstd = np.sqrt(max(cross_sq / trials - abs(cm) ** 2, 0.0) / trials)
    return VirtualSnrMoments(signal=mean[0], noise_sx=mean[1], noise_xs=mean[2], noise_ss=mean[3],
                             cross_mean=cm, cross_std=float(cstd), trials=trials)


def physical_snr_mc(geom: ArrayGeometry, rho: float, trials: int, rng: np.random.Generator,
                    theta: float = 0.0) -> float:
    """Empirical post-MRC SNR of the physical array for one LoS user."""
    a = steering_vector(geom, theta)
    x = complex_gaussian(rng, trials)
    noise = complex_gaussian(rng, (trials, geom.M))
    sig = geom.M * np.sqrt(rho) * x
    nz = noise @ a.conj()
    return float(np.mean(np.abs(sig) ** 2) / np.mean(np.abs(nz) ** 2))


def detection_statistic(y: np.ndarray, geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Virtual-array MRC output ``w_s^H vec(y[n] y[n]^H)`` for each snapshot column.

    ``vec(y y^H) = conj(y) kron y`` is formed in real arithmetic, which keeps
    the result bit-identical when a column is rotated by a power of ``j``.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim == 1:
        y = y[:, None]
    a = steering_vector(geom, theta)
    w = np.kron(a.conj(), a) / geom.M
    out = np.empty(y.shape[1])
    for n in range(y.shape[1]):
        c, d = y[:, n].real, y[:, n].imag
        z_re = np.kron(c, c) + np.kron(d, d)
        z_im = np.kron(c, d) - np.kron(d, c)
        out[n] = np.dot(w.real, z_re) + np.dot(w.imag, z_im)
    return out


def snr_db(x: float) -> float:
    return float(10.0 * np.log10(x))


def gain_product(geom: ArrayGeometry, d_ki, d_kj):
    """``G(d_ki) * G(-d_kj)``, the factorized Type II pattern."""
    return gain(geom, d_ki) * gain(geom, -np.asarray(d_kj))
