"""Physical-array uplink with MRC receivers: SINR and achievable rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beampattern import gain
from .geometry import ArrayGeometry


@dataclass(frozen=True)
class LinkResult:
    sinr: np.ndarray
    rate: np.ndarray
    sum_rate: float


def mrc(h: np.ndarray) -> np.ndarray:
    """Unit-norm matched filter ``h / ||h||``."""
    h = np.asarray(h, dtype=np.complex128)
    nrm = np.linalg.norm(h)
    if nrm == 0:
        raise ValueError("MRC undefined for a zero channel")
    return h / nrm


def user_sinr(k: int, channels: np.ndarray, powers, noise_power: float = 1.0) -> float:
    """SINR of user ``k`` after MRC, with every other column of ``channels`` interfering."""
    H = np.asarray(channels, dtype=np.complex128)
    P = np.broadcast_to(np.asarray(powers, dtype=np.float64), (H.shape[1],))
    v = mrc(H[:, k])
    g = np.abs(v.conj() @ H) ** 2 * P
    interference = g.sum() - g[k]
    return float(g[k] / (interference + noise_power))


def _all_sinr(H: np.ndarray, P: np.ndarray, noise_power: float) -> np.ndarray:
    norms = np.linalg.norm(H, axis=0)
    if np.any(norms == 0):
        raise ValueError("MRC undefined for a zero channel")
    V = H / norms
    G = np.abs(V.conj().T @ H) ** 2 * P[None, :]
    desired = np.diag(G).copy()
    return desired / (G.sum(axis=1) - desired + noise_power)


def sum_rate(channels: np.ndarray, powers, noise_power: float = 1.0, comm_mask=None) -> LinkResult:
    """Per-user SINR and ``log2(1 + SINR)``; the sum runs over comm users only.

    Every user in ``channels`` (comm or loc) interferes with every other one.
    """
    H = np.asarray(channels, dtype=np.complex128)
    P = np.broadcast_to(np.asarray(powers, dtype=np.float64), (H.shape[1],)).copy()
    mask = np.ones(H.shape[1], dtype=bool) if comm_mask is None else np.asarray(comm_mask, dtype=bool)
    if not mask.any():
        raise ValueError("sum rate needs at least one comm user")
    sinr = _all_sinr(H, P, noise_power)
    rate = np.log2(1.0 + sinr)
    return LinkResult(sinr=sinr, rate=rate, sum_rate=float(rate[mask].sum()))


def los_sinr_closed(geom: ArrayGeometry, angles, receive_snrs) -> np.ndarray:
    """LoS SINR from the beam pattern: ``Pk M / (M sum_{i != k} Pi G(d_ki) + 1)``."""
    th = np.asarray(angles, dtype=np.float64)
    snr = np.broadcast_to(np.asarray(receive_snrs, dtype=np.float64), th.shape)
    u = np.sin(th)
    G = gain(geom, u[:, None] - u[None, :])
    np.fill_diagonal(G, 0.0)
    M = geom.M
    return snr * M / (M * (G @ snr) + 1.0)
