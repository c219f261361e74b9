"""Monte Carlo experiments: rate sweeps, joint rate/RMSE evaluation, Pareto
fronts, communication- versus localization-centric selection and DoF runs.

Every trial draws from ``np.random.default_rng([seed, tag, trial])`` so results
do not depend on execution order or worker count, and configurations that
share a tag see common random numbers. Only this module spawns workers.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import commlink, estimation
from .coarray import physical_snr_mc, virtual_snr_closed, virtual_snr_exact, virtual_snr_mc
from .geometry import ULA, ArchParams, Coprime, Nested, arch_from_spec, arch_label, build_geometry, enumerate_fixed_m
from .output import metadata
from .signal import (LoS, OneRing, Scenario, UserConfig, channel_from_dict, draw_channels, generate_snapshots,
                     localization_residual, sample_covariance, snr_to_power)

EXPERIMENTS = ("rate_sweep", "joint_eval", "centric_sweep", "dof", "snr_compare", "beampattern",
               "coarray", "simulate")

DEFAULT_CHANNEL = {"model": "one_ring", "n_paths": 10, "ring_radius": 5.0, "distance": 40.0}
DESK_TRIALS, DESK_SNAPSHOTS = 50, 200
FULL_TRIALS, FULL_SNAPSHOTS = 500, 1000


@dataclass
class ExperimentConfig:
    experiment: str
    archs: list = field(default_factory=list)
    sweep: dict | None = None
    M: int | None = None
    K: int = 30
    K_c: int = 30
    theta_max_deg: float = 6.0
    theta_max_list: list = field(default_factory=list)
    n_loc_list: list = field(default_factory=list)
    snr_db: float = 20.0
    snapshots: int = DESK_SNAPSHOTS
    channel: dict = field(default_factory=lambda: dict(DEFAULT_CHANNEL))
    loc_channel: dict = field(default_factory=lambda: {"model": "los"})
    trials: int = DESK_TRIALS
    seed: int = 0
    grid_step: float = estimation.DEFAULT_GRID_STEP
    estimator: str = "bartlett"
    domain: str = "auto"
    penalty: float = float(np.pi / 2)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.theta_max_deg < 90.0:
            raise ValueError("theta_max must lie in (0, 90) degrees")
        self.archs = [a if not isinstance(a, (dict, list, tuple)) else _arch(a) for a in self.archs]

    def to_dict(self) -> dict:
        """Canonical form used for hashing; excludes the worker count."""
        d = asdict(self)
        d["archs"] = [{"arch": a.kind, "params": list(a.params)} for a in self.archs]
        d.pop("workers")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ExperimentResult:
    experiment: str
    records: list[dict]
    metadata: dict
    extra: dict = field(default_factory=dict)

    def payload(self) -> dict:
        return {"experiment": self.experiment, "records": self.records, **self.extra}

    def table(self) -> tuple[list[str], list[list]]:
        header: list[str] = []
        for r in self.records:
            for k, v in r.items():
                if k not in header and not isinstance(v, (list, dict)):
                    header.append(k)
        return header, [[r.get(k, "") for k in header] for r in self.records]


def _arch(spec) -> ArchParams:
    """``{"arch": "nested", "params": [3, 3]}`` or ``["nested", 3, 3]``."""
    if isinstance(spec, dict):
        return arch_from_spec(spec["arch"], spec["params"])
    return arch_from_spec(spec[0], spec[1:])


def trial_rng(seed: int, tag: str, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(tag.encode()), int(trial)])


def parallel_map(fn, tasks: list, workers: int = 1) -> list:
    """Ordered map; results are identical for any worker count."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def build_hotspot_scenario(K: int, K_c: int, theta_max_deg: float, snr_db: float, T: int,
                           channel: dict | None = None, loc_channel: dict | None = None,
                           noise_power: float = 1.0, arch: ArchParams | None = None) -> Scenario:
    """``K`` users equally spaced over ``[-theta_max, theta_max]``; the first ``K_c`` communicate."""
    if K < 1 or not 0 <= K_c <= K:
        raise ValueError(f"need K >= 1 and 0 <= K_c <= K, got K={K}, K_c={K_c}")
    angles = np.deg2rad(np.linspace(-theta_max_deg, theta_max_deg, K)) if K > 1 else np.zeros(1)
    comm_ch = channel_from_dict(DEFAULT_CHANNEL if channel is None else channel)
    loc_ch = channel_from_dict(loc_channel)
    P = snr_to_power(snr_db, noise_power)
    users = tuple(UserConfig("comm" if k < K_c else "loc", float(angles[k]), P,
                             comm_ch if k < K_c else loc_ch) for k in range(K))
    return Scenario(users, noise_power, T, arch)


# ---------------------------------------------------------------------------
# single trials


def evaluate_trial(task) -> dict:
    """One Monte Carlo draw: comm sum rate and/or localization RMSE for ``arch``.

    ``task`` is ``(scenario, arch, seed, tag, trial, options)``.
    """
    sc, arch, seed, tag, trial, opt = task
    geom = build_geometry(arch)
    rng = trial_rng(seed, tag, trial)
    out: dict = {}
    n_loc = len(sc.users) - sc.n_comm
    if n_loc == 0:
        H = draw_channels(sc, geom, rng)
    else:
        block = generate_snapshots(sc, geom, rng)
        H = block.channels
        R = sample_covariance(localization_residual(block))
        _, est = estimation.localize(R, geom, n_loc, opt["grid_step"], opt["domain"], opt["estimator"])
        rep = estimation.score_rmse(sc.loc_angles, est, opt["penalty"])
        out["rmse"] = rep.rmse
        out["n_resolved"] = rep.n_resolved
    if sc.n_comm:
        out["sum_rate"] = commlink.sum_rate(H, sc.powers, sc.noise_power, sc.comm_mask).sum_rate
    return out


def _options(cfg: ExperimentConfig) -> dict:
    return {"grid_step": cfg.grid_step, "domain": cfg.domain, "estimator": cfg.estimator,
            "penalty": cfg.penalty}


def _summarize(arch: ArchParams, trials: list[dict]) -> dict:
    rec = {"arch": arch_label(arch), "family": arch.kind, "M": arch.n_elements, "trials": len(trials)}
    for key in ("sum_rate", "rmse"):
        vals = np.array([t[key] for t in trials if key in t])
        if vals.size:
            rec[f"{key}_mean"] = float(np.mean(vals))
            rec[f"{key}_std"] = float(np.std(vals))
            rec[f"{key}_median"] = float(np.median(vals))
    if any("n_resolved" in t for t in trials):
        rec["n_resolved_mean"] = float(np.mean([t["n_resolved"] for t in trials]))
    return rec


def evaluate_configs(cfg: ExperimentConfig, archs: list[ArchParams], sc: Scenario, tag: str) -> list[dict]:
    """Mean/std/median per architecture; trials of all configs share one worker pool."""
    opt = _options(cfg)
    tasks = [(sc, a, cfg.seed, tag, t, opt) for a in archs for t in range(cfg.trials)]
    flat = parallel_map(evaluate_trial, tasks, cfg.workers)
    return [_summarize(a, flat[i * cfg.trials:(i + 1) * cfg.trials]) for i, a in enumerate(archs)]


# ---------------------------------------------------------------------------
# experiments


def expand_sweep(sweep: dict) -> list[ArchParams]:
    """``{"family": "nested", "vary": "N1", "fixed": 8, "values": [1, 2, ...]}`` to architectures."""
    fam, vary, values = sweep["family"], sweep.get("vary"), sweep["values"]
    fixed = sweep.get("fixed")
    out: list[ArchParams] = []
    for v in values:
        v = int(v)
        if fam == "ula":
            out.append(ULA(v))
        elif fam == "nested":
            out.append(Nested(v, fixed) if vary == "N1" else Nested(fixed, v))
        elif fam == "coprime":
            m1, m2 = (v, fixed) if vary == "M1" else (fixed, v)
            if m1 < m2 and np.gcd(m1, m2) == 1:
                out.append(Coprime(m1, m2))
        else:
            raise ValueError(f"unknown family {fam!r}")
    return out


def _with_meta(cfg: ExperimentConfig, records: list[dict], **extra) -> ExperimentResult:
    return ExperimentResult(cfg.experiment, records, metadata(cfg.to_dict(), cfg.seed), extra)


def run_rate_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    archs = list(cfg.archs) + (expand_sweep(cfg.sweep) if cfg.sweep else [])
    if not archs:
        raise ValueError("rate sweep needs archs or a sweep spec")
    sc = build_hotspot_scenario(cfg.K, cfg.K, cfg.theta_max_deg, cfg.snr_db, cfg.snapshots,
                                cfg.channel, cfg.loc_channel)
    return _with_meta(cfg, evaluate_configs(cfg, archs, sc, "rate"))


def pareto_front(points, return_index: bool = False):
    """Non-dominated subset of ``(rate, rmse)`` points, rate ascending.

    Higher rate and lower RMSE are better; a point is dropped when another
    one is at least as good in both and strictly better in one. Exact
    duplicates keep their first occurrence.
    """
    pts = [(float(r), float(e)) for r, e in points]
    if not pts:
        raise ValueError("pareto_front needs at least one point")
    if any(np.isnan(r) or np.isnan(e) for r, e in pts):
        raise ValueError("pareto_front got NaN coordinates")
    order = sorted(range(len(pts)), key=lambda i: (-pts[i][0], pts[i][1], i))
    keep, best = [], np.inf
    for i in order:
        if pts[i][1] < best:
            keep.append(i)
            best = pts[i][1]
    keep.sort(key=lambda i: (pts[i][0], i))
    return keep if return_index else [pts[i] for i in keep]


def fixed_m_candidates(M: int) -> list[ArchParams]:
    return [ULA(M)] + enumerate_fixed_m(M)


def run_joint_eval(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.M is None:
        raise ValueError("joint evaluation needs M")
    archs = fixed_m_candidates(cfg.M)
    sc = build_hotspot_scenario(cfg.K, cfg.K_c, cfg.theta_max_deg, cfg.snr_db, cfg.snapshots,
                                cfg.channel, cfg.loc_channel)
    if sc.n_comm == 0 or sc.n_comm == len(sc.users):
        raise ValueError("joint evaluation needs both comm and loc users")
    recs = evaluate_configs(cfg, archs, sc, "joint")
    idx = pareto_front([(r["sum_rate_mean"], r["rmse_mean"]) for r in recs], return_index=True)
    for i, r in enumerate(recs):
        r["pareto"] = i in idx
    return _with_meta(cfg, recs, frontier=[recs[i]["arch"] for i in idx])


def run_centric_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Per ``theta_max`` and family, pick the rate-maximizing (C-C) and RMSE-minimizing (L-C) config."""
    if cfg.M is None:
        raise ValueError("centric sweep needs M")
    thetas = cfg.theta_max_list or [6.0, 12.0, 18.0, 24.0, 30.0, 36.0, 42.0, 48.0, 54.0, 60.0]
    archs = fixed_m_candidates(cfg.M)
    out = []
    for th in thetas:
        sc = build_hotspot_scenario(cfg.K, cfg.K_c, th, cfg.snr_db, cfg.snapshots,
                                    cfg.channel, cfg.loc_channel)
        recs = evaluate_configs(cfg, archs, sc, f"centric:{th!r}")
        ula = recs[0]
        out.append({"theta_max_deg": th, "family": "ula", "mode": "baseline", "arch": ula["arch"],
                    "sum_rate": ula["sum_rate_mean"], "rmse": ula["rmse_mean"]})
        for fam in ("nested", "coprime"):
            fam_recs = [r for r in recs[1:] if r["family"] == fam]
            if not fam_recs:
                continue
            cc = max(fam_recs, key=lambda r: r["sum_rate_mean"])
            lc = min(fam_recs, key=lambda r: r["rmse_mean"])
            for mode, r in (("C-C", cc), ("L-C", lc)):
                out.append({"theta_max_deg": th, "family": fam, "mode": mode, "arch": r["arch"],
                            "sum_rate": r["sum_rate_mean"], "rmse": r["rmse_mean"]})
    return _with_meta(cfg, out)


def run_dof_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """RMSE versus the number of localization users for each architecture."""
    archs = cfg.archs or [Nested(3, 3), ULA(6)]
    counts = cfg.n_loc_list or [10]
    out = []
    for n in counts:
        sc = build_hotspot_scenario(n + cfg.K_c, cfg.K_c, cfg.theta_max_deg, cfg.snr_db, cfg.snapshots,
                                    cfg.channel, cfg.loc_channel)
        for rec in evaluate_configs(cfg, archs, sc, f"dof:{n}"):
            out.append({"n_loc": n, **rec})
    return _with_meta(cfg, out)


def run_snr_compare(cfg: ExperimentConfig, Ms=(4, 8, 16), rhos_db=(-10.0, 0.0, 10.0)) -> ExperimentResult:
    """Closed-form and simulated virtual-array SNR next to the physical MRC SNR."""
    out = []
    for M in Ms:
        geom = build_geometry(ULA(M))
        for rdb in rhos_db:
            rho = 10.0 ** (rdb / 10.0)
            closed, phy = virtual_snr_closed(M, rho)
            mom = virtual_snr_mc(geom, rho, cfg.trials, trial_rng(cfg.seed, f"snr:{M}:{rdb!r}", 0))
            phy_mc = physical_snr_mc(geom, rho, cfg.trials, trial_rng(cfg.seed, f"phy:{M}:{rdb!r}", 0))
            out.append({"M": M, "rho_dB": rdb, "snr_phy_dB": _db(phy), "snr_vir_closed_dB": _db(closed),
                        "snr_vir_mc_dB": _db(mom.snr), "snr_vir_exact_dB": _db(virtual_snr_exact(M, rho)),
                        "snr_phy_mc_dB": _db(phy_mc)})
    return _with_meta(cfg, out)


def run_simulate(cfg: ExperimentConfig, sc: Scenario, scenario_dict: dict | None = None) -> ExperimentResult:
    """Per-trial rate/RMSE of one explicit scenario on its own geometry."""
    if sc.arch is None:
        raise ValueError("scenario has no geometry")
    opt = _options(cfg)
    tasks = [(sc, sc.arch, cfg.seed, "simulate", t, opt) for t in range(cfg.trials)]
    trials = parallel_map(evaluate_trial, tasks, cfg.workers)
    summary = _summarize(sc.arch, trials)
    recs = [{"trial": t, **r} for t, r in enumerate(trials)]
    meta = metadata({**cfg.to_dict(), "scenario": scenario_dict}, cfg.seed)
    return ExperimentResult(cfg.experiment, recs, meta, {"summary": summary})


def _db(x: float) -> float:
    return float(10.0 * np.log10(x))


__all__ = ["ExperimentConfig", "ExperimentResult", "build_hotspot_scenario", "evaluate_trial",
           "run_rate_sweep", "run_joint_eval", "pareto_front", "run_centric_sweep", "run_dof_experiment",
           "run_snr_compare", "run_simulate", "expand_sweep", "trial_rng", "parallel_map",
           "LoS", "OneRing"]
