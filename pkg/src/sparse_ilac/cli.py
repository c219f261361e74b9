"""Command-line entry point: ``sparse-ilac <subcommand> [options]``.

Every subcommand accepts the shared flags ``--config``, ``--seed``, ``--out``,
``--trials``, ``--snapshots``, ``--grid-step``, ``--full-scale``, ``--workers``
and ``--plot-data``. Outputs go to stdout, or to files under ``--out``, and
start with a metadata header (tool version, config hash, seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import beampattern, experiments
from .coarray import difference_coarray
from .estimation import find_peaks, score_rmse, spectrum_from_covariance, theta_grid
from .experiments import ExperimentConfig
from .geometry import GeometryError, arch_from_spec, build_geometry
from .output import dumps_csv, dumps_json, metadata, write_text
from .signal import generate_snapshots, localization_residual, sample_covariance, scenario_from_json


class ConfigError(Exception):
    pass


def parse_arch(text: str):
    """``nested:3,3`` / ``coprime:5,7`` / ``ula:16``."""
    try:
        kind, _, params = text.partition(":")
        return arch_from_spec(kind, [int(p) for p in params.split(",") if p])
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad architecture {text!r}: {exc}") from None


def _shared() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--config", type=Path, help="JSON config file")
    g.add_argument("--seed", type=int, help="base seed (default 0)")
    g.add_argument("--out", type=Path, help="output directory (default: print to stdout)")
    g.add_argument("--trials", type=int, help="Monte Carlo trials")
    g.add_argument("--snapshots", type=int, help="snapshots per block (T)")
    g.add_argument("--grid-step", type=float, help="search grid step")
    g.add_argument("--full-scale", action="store_true", help="500 trials and T=1000")
    g.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    g.add_argument("--plot-data", action="store_true", help="also emit spectra / patterns as CSV")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared()
    ap = argparse.ArgumentParser(prog="sparse-ilac", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("beampattern", parents=[shared], help="beam pattern, FLMP/BW/PLMR/SLH and bounds")
    p.add_argument("--arch", type=parse_arch, help="e.g. nested:8,8")
    p.add_argument("--points", type=int, default=10001, help="pattern samples over [-2, 2]")

    p = sub.add_parser("coarray", parents=[shared], help="difference co-array lags, weights and holes")
    p.add_argument("--arch", type=parse_arch)

    p = sub.add_parser("localize", parents=[shared], help="AoA spectrum and estimates for a scenario")
    p.add_argument("--estimator", choices=["bartlett", "music"], default="bartlett")
    p.add_argument("--domain", choices=["auto", "physical", "coarray"], default="auto")

    p = sub.add_parser("snr-compare", parents=[shared], help="virtual versus physical array SNR")
    p.add_argument("--m", type=int, nargs="+", default=[4, 8, 16])
    p.add_argument("--rho-db", type=float, nargs="+", default=[-10.0, 0.0, 10.0])

    p = sub.add_parser("rate-sweep", parents=[shared], help="sum rate across architectures")
    p.add_argument("--arch", type=parse_arch, nargs="*", default=[])
    p.add_argument("--family", choices=["ula", "nested", "coprime"])
    p.add_argument("--vary", help="varied parameter (N1, N2, M1, M2)")
    p.add_argument("--fixed", type=int, help="the other parameter")
    p.add_argument("--values", type=int, nargs="+")

    for name, helptext in (("joint-eval", "sum rate and RMSE for every fixed-M configuration"),
                           ("pareto", "Pareto frontier over fixed-M configurations")):
        p = sub.add_parser(name, parents=[shared], help=helptext)
        p.add_argument("--m", type=int)

    p = sub.add_parser("centric-sweep", parents=[shared], help="C-C / L-C selection versus theta_max")
    p.add_argument("--m", type=int)
    p.add_argument("--theta-max", type=float, nargs="+")

    p = sub.add_parser("dof", parents=[shared], help="RMSE versus number of localization users")
    p.add_argument("--arch", type=parse_arch, nargs="*", default=[])
    p.add_argument("--n-loc", type=int, nargs="+")
    p.add_argument("--theta-max", type=float)

    sub.add_parser("simulate", parents=[shared], help="per-trial rate/RMSE for a scenario config")
    return ap


# ---------------------------------------------------------------------------


def _load_config(args) -> dict:
    if args.config is None:
        return {}
    try:
        return json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None


def _emit(args, files: dict[str, str], primary: str) -> None:
    """Write ``files`` under ``--out``, or print the primary one (all of them with ``--plot-data``)."""
    if args.out is None:
        sys.stdout.write(files[primary])
        if args.plot_data:
            for name in sorted(files):
                if name != primary:
                    sys.stdout.write(files[name])
        return
    for name, text in files.items():
        write_text(args.out, name, text)
    sys.stdout.write(json.dumps({"written": sorted(files)}) + "\n")


def _arch_from(args, cfg: dict):
    if getattr(args, "arch", None) is not None:
        return args.arch
    geo = cfg.get("geometry", cfg)
    if "arch" not in geo:
        raise ConfigError("no architecture given (use --arch or a geometry config)")
    return arch_from_spec(geo["arch"], geo["params"])


def _experiment_config(args, name: str, base: dict, file_cfg: dict) -> ExperimentConfig:
    d = {"experiment": name, **base, **{k: v for k, v in file_cfg.items() if k != "experiment"}}
    if args.full_scale:
        d["trials"], d["snapshots"] = experiments.FULL_TRIALS, experiments.FULL_SNAPSHOTS
    for flag, key in (("seed", "seed"), ("trials", "trials"), ("snapshots", "snapshots"),
                      ("grid_step", "grid_step")):
        val = getattr(args, flag)
        if val is not None:
            d[key] = val
    d["workers"] = args.workers
    try:
        return ExperimentConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _result_files(res, stem: str) -> dict[str, str]:
    header, rows = res.table()
    return {f"{stem}.json": dumps_json(res.payload(), res.metadata),
            f"{stem}.csv": dumps_csv(header, rows, res.metadata)}


def cmd_beampattern(args, cfg):
    arch = _arch_from(args, cfg)
    seed = args.seed if args.seed is not None else 0
    conf = {"experiment": "beampattern", "arch": arch.kind, "params": list(arch.params),
            "grid_step": args.grid_step, "points": args.points}
    meta = metadata(conf, seed)
    info = beampattern.analyze(arch, args.grid_step)
    info["positions"] = list(build_geometry(arch).positions)
    d, g, db = beampattern.pattern_table(build_geometry(arch), args.points)
    files = {"beampattern.json": dumps_json(info, meta),
             "beampattern.csv": dumps_csv(["delta", "gain_linear", "gain_dB"], zip(d, g, db), meta)}
    _emit(args, files, "beampattern.json")


def cmd_coarray(args, cfg):
    arch = _arch_from(args, cfg)
    geom = build_geometry(arch)
    conf = {"experiment": "coarray", "arch": arch.kind, "params": list(arch.params)}
    meta = metadata(conf, args.seed if args.seed is not None else 0)
    payload = {"geometry": geom.to_dict(), **difference_coarray(geom).to_dict()}
    _emit(args, {"coarray.json": dumps_json(payload, meta)}, "coarray.json")


def cmd_localize(args, cfg):
    if not cfg:
        raise ConfigError("localize needs --config <scenario.json>")
    sc, seed = scenario_from_json(cfg)
    if args.snapshots is not None:
        sc = type(sc)(sc.users, sc.noise_power, args.snapshots, sc.arch)
    seed = args.seed if args.seed is not None else (seed or 0)
    if sc.arch is None:
        raise ConfigError("scenario config has no geometry")
    geom = build_geometry(sc.arch)
    n_loc = len(sc.loc_angles)
    if n_loc == 0:
        raise ConfigError("scenario has no localization users")
    step = args.grid_step or 1e-3
    rng = experiments.trial_rng(seed, "localize", 0)
    R = sample_covariance(localization_residual(generate_snapshots(sc, geom, rng)))
    spec = spectrum_from_covariance(R, geom, theta_grid(step), args.domain, args.estimator, n_loc)
    est = find_peaks(spec, n_loc)
    rep = score_rmse(sc.loc_angles, est)
    conf = {"experiment": "localize", "scenario": cfg, "estimator": args.estimator,
            "domain": args.domain, "grid_step": step, "snapshots": sc.snapshots}
    meta = metadata(conf, seed)
    payload = {"domain": spec.domain, "estimator": args.estimator, "unstable": spec.unstable,
               "report": rep.to_dict()}
    files = {"estimate.json": dumps_json(payload, meta),
             "spectrum.csv": dumps_csv(["theta_rad", "power"], zip(spec.grid, spec.values), meta)}
    _emit(args, files, "estimate.json")


def cmd_snr_compare(args, cfg):
    base = {"trials": 100000}
    ec = _experiment_config(args, "snr_compare", base, cfg)
    res = experiments.run_snr_compare(ec, tuple(args.m), tuple(args.rho_db))
    res.metadata["config_hash"] = metadata({**ec.to_dict(), "m": args.m, "rho_db": args.rho_db},
                                           ec.seed)["config_hash"]
    header = ["M", "rho_dB", "snr_phy_dB", "snr_vir_closed_dB", "snr_vir_mc_dB"]
    rows = [[r[k] for k in header] for r in res.records]
    _emit(args, {"snr_compare.csv": dumps_csv(header, rows, res.metadata)}, "snr_compare.csv")


def cmd_rate_sweep(args, cfg):
    base = {"K": 30, "K_c": 30, "theta_max_deg": 6.0}
    if args.family:
        if args.values is None:
            raise ConfigError("--family needs --values")
        base["sweep"] = {"family": args.family, "vary": args.vary, "fixed": args.fixed,
                         "values": args.values}
    if args.arch:
        base["archs"] = [{"arch": a.kind, "params": list(a.params)} for a in args.arch]
    ec = _experiment_config(args, "rate_sweep", base, cfg)
    if not ec.archs and not ec.sweep:
        raise ConfigError("rate-sweep needs --arch, --family or a config with archs/sweep")
    _emit(args, _result_files(experiments.run_rate_sweep(ec), "rate_sweep"), "rate_sweep.csv")


def _fixed_m_config(args, name, cfg):
    base = {"M": 16, "K": 30, "K_c": 22, "theta_max_deg": 30.0}
    if args.m is not None:
        base["M"] = args.m
    return _experiment_config(args, name, base, cfg)


def cmd_joint_eval(args, cfg):
    res = experiments.run_joint_eval(_fixed_m_config(args, "joint_eval", cfg))
    _emit(args, _result_files(res, "joint_eval"), "joint_eval.csv")


def cmd_pareto(args, cfg):
    res = experiments.run_joint_eval(_fixed_m_config(args, "joint_eval", cfg))
    front = [r for r in res.records if r["pareto"]]
    front.sort(key=lambda r: r["sum_rate_mean"])
    files = _result_files(res, "pareto_table")
    files["pareto_front.json"] = dumps_json({"frontier": [
        {"arch": r["arch"], "sum_rate": r["sum_rate_mean"], "rmse": r["rmse_mean"]} for r in front]},
        res.metadata)
    _emit(args, files, "pareto_front.json")


def cmd_centric_sweep(args, cfg):
    base = {"M": 16, "K": 30, "K_c": 22}
    if args.m is not None:
        base["M"] = args.m
    if args.theta_max:
        base["theta_max_list"] = args.theta_max
    ec = _experiment_config(args, "centric_sweep", base, cfg)
    _emit(args, _result_files(experiments.run_centric_sweep(ec), "centric_sweep"), "centric_sweep.csv")


def cmd_dof(args, cfg):
    base = {"K_c": 0, "theta_max_deg": 40.0, "snapshots": 1000, "n_loc_list": [10],
            "archs": [{"arch": "nested", "params": [3, 3]}, {"arch": "ula", "params": [6]}]}
    if args.arch:
        base["archs"] = [{"arch": a.kind, "params": list(a.params)} for a in args.arch]
    if args.n_loc:
        base["n_loc_list"] = args.n_loc
    if args.theta_max is not None:
        base["theta_max_deg"] = args.theta_max
    ec = _experiment_config(args, "dof", base, cfg)
    _emit(args, _result_files(experiments.run_dof_experiment(ec), "dof"), "dof.csv")


def cmd_simulate(args, cfg):
    if not cfg:
        raise ConfigError("simulate needs --config <scenario.json>")
    sc, seed = scenario_from_json(cfg)
    run_keys = {k: cfg[k] for k in ("trials", "estimator", "domain", "grid_step") if k in cfg}
    if args.seed is None and seed is not None:
        run_keys["seed"] = seed
    if args.snapshots is not None:
        sc = type(sc)(sc.users, sc.noise_power, args.snapshots, sc.arch)
    ec = _experiment_config(args, "simulate", {"snapshots": sc.snapshots}, run_keys)
    res = experiments.run_simulate(ec, sc, cfg)
    _emit(args, _result_files(res, "simulate"), "simulate.json")


COMMANDS = {
    "beampattern": cmd_beampattern, "coarray": cmd_coarray, "localize": cmd_localize,
    "snr-compare": cmd_snr_compare, "rate-sweep": cmd_rate_sweep, "joint-eval": cmd_joint_eval,
    "pareto": cmd_pareto, "centric-sweep": cmd_centric_sweep, "dof": cmd_dof, "simulate": cmd_simulate,
}


def execute(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, _load_config(args))
    except (ConfigError, GeometryError, ValueError, KeyError) as exc:
        print(f"sparse-ilac {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> int:
    return execute(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
