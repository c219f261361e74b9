"""Uplink channels, symbols, received snapshot blocks and sample covariances.

The base station observes::

    y[n] = sum_k h_k * sqrt(P_k) * x_k[n] + n[n],   n = 1..T

with i.i.d. CN(0, 1) symbols for every user and CN(0, sigma^2 I) noise.
Channels are drawn once per block: line-of-sight users get ``beta * a(theta)``
and multipath users a one-ring superposition of ``L`` paths.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import ArchParams, ArrayGeometry, arch_from_spec, steering_vector

ROLES = ("comm", "loc")


@dataclass(frozen=True)
class LoS:
    beta: complex = 1.0

    def __post_init__(self):
        if abs(self.beta) == 0:
            raise ValueError("LoS gain must be non-zero")


@dataclass(frozen=True)
class OneRing:
    """Ring of scatterers of radius ``ring_radius`` around a user at ``distance``."""

    n_paths: int = 10
    ring_radius: float = 5.0
    distance: float = 40.0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("one-ring model needs at least one path")
        if not 0 < self.ring_radius < self.distance:
            raise ValueError("one-ring model needs 0 < ring_radius < distance")

    @property
    def spread(self) -> float:
        """Half-width of the angular spread in radians."""
        return float(np.arcsin(self.ring_radius / self.distance))


Channel = LoS | OneRing


@dataclass(frozen=True)
class UserConfig:
    role: str
    theta: float
    power: float
    channel: Channel = field(default_factory=LoS)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not self.power > 0:
            raise ValueError("transmit power must be positive")
        if abs(self.theta) > np.pi / 2 + 1e-12:
            raise ValueError("user angle outside [-pi/2, pi/2]")


@dataclass(frozen=True)
class Scenario:
    users: tuple[UserConfig, ...]
    noise_power: float = 1.0
    snapshots: int = 200
    arch: ArchParams | None = None

    def __post_init__(self):
        if not self.users:
            raise ValueError("scenario needs at least one user")
        if self.snapshots < 1:
            raise ValueError("scenario needs T >= 1")
        if not self.noise_power > 0:
            raise ValueError("noise power must be positive")
        roles = [u.role for u in self.users]
        if "loc" in roles and "comm" in roles[roles.index("loc"):]:
            raise ValueError("communication users must precede localization users")

    @property
    def n_comm(self) -> int:
        return sum(u.role == "comm" for u in self.users)

    @property
    def comm_mask(self) -> np.ndarray:
        return np.array([u.role == "comm" for u in self.users])

    @property
    def loc_angles(self) -> np.ndarray:
        return np.array([u.theta for u in self.users if u.role == "loc"])

    @property
    def powers(self) -> np.ndarray:
        return np.array([u.power for u in self.users], dtype=np.float64)


@dataclass(frozen=True)
class SnapshotBlock:
    """Received samples together with the components that produced them.

    ``y`` is ``M x T``; ``channels`` is ``M x K``; ``symbols`` is ``K x T``.
    The comm part is kept so the localization residual can be formed by
    perfect cancellation.
    """

    y: np.ndarray
    channels: np.ndarray
    symbols: np.ndarray
    noise: np.ndarray
    scenario: Scenario

    @property
    def M(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]


def complex_gaussian(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|z|^2 = var``."""
    s = np.sqrt(var / 2.0)
    return s * rng.standard_normal(shape) + 1j * s * rng.standard_normal(shape)


def los_channel(geom: ArrayGeometry, theta: float, beta: complex = 1.0) -> np.ndarray:
    return beta * steering_vector(geom, theta)


def one_ring_channel(geom: ArrayGeometry, theta_center: float, params: OneRing,
                     rng: np.random.Generator) -> np.ndarray:
    """Sum of ``L`` paths with CN(0, 1/L) gains and angles uniform in the ring spread.

    Path angles falling outside the visible region are clamped to ``+-pi/2``
    with a warning.
    """
    L = params.n_paths
    spread = params.spread
    angles = rng.uniform(theta_center - spread, theta_center + spread, size=L)
    if np.any(np.abs(angles) > np.pi / 2):
        warnings.warn(f"one-ring path angles clamped to [-pi/2, pi/2] around {theta_center:.4f} rad",
                      RuntimeWarning, stacklevel=2)
        angles = np.clip(angles, -np.pi / 2, np.pi / 2)
    gains = complex_gaussian(rng, L, 1.0 / L)
    return steering_vector(geom, angles) @ gains


def draw_channels(scenario: Scenario, geom: ArrayGeometry, rng: np.random.Generator) -> np.ndarray:
    """``M x K`` channel matrix, one column per user in scenario order."""
    cols = []
    for u in scenario.users:
        if isinstance(u.channel, OneRing):
            cols.append(one_ring_channel(geom, u.theta, u.channel, rng))
        else:
            cols.append(los_channel(geom, u.theta, u.channel.beta))
    return np.stack(cols, axis=1)


def generate_snapshots(scenario: Scenario, geom: ArrayGeometry,
                       rng: np.random.Generator) -> SnapshotBlock:
    """Draw channels, then symbols, then noise, and assemble the received block."""
    H = draw_channels(scenario, geom, rng)
    K, T = len(scenario.users), scenario.snapshots
    X = complex_gaussian(rng, (K, T))
    N = complex_gaussian(rng, (geom.M, T), scenario.noise_power)
    amp = np.sqrt(scenario.powers)[:, None]
    mask = scenario.comm_mask
    y_comm = H[:, mask] @ (amp[mask] * X[mask])
    y_loc = H[:, ~mask] @ (amp[~mask] * X[~mask])
    y = (y_comm + y_loc) + N
    return SnapshotBlock(y=y, channels=H, symbols=X, noise=N, scenario=scenario)


def localization_residual(block: SnapshotBlock) -> np.ndarray:
    """Received block with the (known) comm contributions subtracted."""
    sc = block.scenario
    mask = sc.comm_mask
    if not mask.any():
        return block.y
    amp = np.sqrt(sc.powers)[mask, None]
    y_comm = block.channels[:, mask] @ (amp * block.symbols[mask])
    return block.y - y_comm


def sample_covariance(y: np.ndarray) -> np.ndarray:
    """``(1/T) sum_n y[n] y[n]^H``, symmetrized to be exactly Hermitian."""
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[:, None]
    R = (y @ y.conj().T) / y.shape[1]
    return 0.5 * (R + R.conj().T)


def snr_to_power(snr_db: float, noise_power: float = 1.0) -> float:
    return noise_power * 10.0 ** (snr_db / 10.0)


def channel_from_dict(d: dict | None) -> Channel:
    if not d:
        return LoS()
    model = d.get("model", "los").lower().replace("-", "_")
    if model == "los":
        beta = d.get("beta", 1.0)
        if isinstance(beta, (list, tuple)):
            beta = complex(beta[0], beta[1])
        return LoS(beta)
    if model == "one_ring":
        return OneRing(int(d.get("n_paths", 10)), float(d.get("ring_radius", 5.0)),
                       float(d.get("distance", 40.0)))
    raise ValueError(f"unknown channel model {model!r}")


def scenario_from_json(src) -> tuple[Scenario, int | None]:
    """Parse a scenario config (dict, JSON text or path); returns ``(scenario, seed)``.

    Schema::

        {"geometry": {"arch": "nested", "params": [3, 3]},
         "snr_db": 20, "snapshots": 1000, "seed": 7, "noise_power": 1.0,
         "users": [{"role": "loc", "theta_deg": -10.0,
                    "channel": {"model": "los"}}, ...]}

    A user may override the shared ``snr_db`` with its own ``snr_db`` or give
    ``theta`` in radians instead of ``theta_deg``.
    """
    if isinstance(src, dict):
        cfg = src
    elif isinstance(src, Path) or (isinstance(src, str) and not src.lstrip().startswith("{")):
        cfg = json.loads(Path(src).read_text())
    else:
        cfg = json.loads(src)
    noise = float(cfg.get("noise_power", 1.0))
    snr_db = float(cfg.get("snr_db", 20.0))
    users = []
    for u in cfg["users"]:
        theta = float(u["theta"]) if "theta" in u else float(np.deg2rad(u["theta_deg"]))
        power = float(u["power"]) if "power" in u else snr_to_power(float(u.get("snr_db", snr_db)), noise)
        users.append(UserConfig(u.get("role", "comm"), theta, power, channel_from_dict(u.get("channel"))))
    geo = cfg.get("geometry")
    arch = arch_from_spec(geo["arch"], geo["params"]) if geo else None
    sc = Scenario(tuple(users), noise, int(cfg.get("snapshots", 200)), arch)
    seed = cfg.get("seed")
    return sc, (None if seed is None else int(seed))
