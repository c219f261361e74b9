"""Acceptance suite: one marked group per criterion, tolerances fixed here.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion with its wall time against the budget.
"""

from math import gcd

import numpy as np
import pytest

from sparse_ilac import beampattern as bp
from sparse_ilac.cli import execute
from sparse_ilac.coarray import (detection_statistic, difference_coarray, type2_pattern, virtual_snr_closed,
                                 virtual_snr_mc)
from sparse_ilac.commlink import los_sinr_closed, user_sinr
from sparse_ilac.experiments import (ExperimentConfig, pareto_front, run_dof_experiment, run_joint_eval,
                                     run_rate_sweep)
from sparse_ilac.geometry import ULA, Coprime, Nested, build_geometry, steering_vector
from sparse_ilac.signal import complex_gaussian

# tolerances and budgets, pinned
IDENTITY_TOL = 1e-9
N_DELTA = 10_001
SLH_REL_TOL = 0.20
SNR_REL_TOL = 0.03
SNR_TRIALS = 100_000
SNR_HIGH_RHO_TOL = 0.01
TYPE2_TOL = 1e-12
SINR_TOL = 1e-10
DOF_NESTED_MAX = 0.01
DOF_ULA_MIN = 0.1

QUARTER_TURNS = np.array([1, 1j, -1, -1j])


def nested_sweep():
    return [Nested(n1, n2) for n1 in range(1, 17) for n2 in range(1, 17)]


def coprime_sweep(max_m=32):
    return [Coprime(m1, m2) for m1 in range(1, max_m) for m2 in range(m1 + 1, max_m + 2)
            if gcd(m1, m2) == 1 and 2 * m1 + m2 - 1 <= max_m]


SWEEP = nested_sweep() + coprime_sweep()


# ---------------------------------------------------------------------------
# 1


@pytest.mark.criterion(1, "geometry exactness", 1)
def test_c01_geometry_positions():
    assert build_geometry(Nested(3, 3)).positions == (0, 1, 2, 3, 7, 11)
    assert build_geometry(Coprime(2, 3)).positions == (0, 2, 3, 4, 6, 9)


# ---------------------------------------------------------------------------
# 2


@pytest.mark.criterion(2, "beam-pattern closed form = direct sum", 30)
def test_c02_closed_form_identity():
    delta = np.linspace(-2.0, 2.0, N_DELTA)
    worst = {}
    for arch in SWEEP:
        geom = build_geometry(arch)
        err = np.max(np.abs(bp.closed_form_gain(arch, delta) - bp.gain(geom, delta)))
        worst[arch] = err
    bad = {a: e for a, e in worst.items() if not e < IDENTITY_TOL}
    assert not bad, f"closed form deviates: {bad}"


# ---------------------------------------------------------------------------
# 3 / 4


@pytest.fixture(scope="module")
def sweep_metrics():
    out = {}
    for arch in SWEEP:
        geom = build_geometry(arch)
        step = bp.default_grid_step(arch)
        flmp = bp.find_flmp(geom, step)
        out[arch] = {"flmp": flmp, "plmr": 1.0 / bp.gain(geom, flmp), "step": step,
                     "bounds": bp.flmp_bounds(arch), "plmr_bound": bp.plmr_bound(arch)}
    return out


@pytest.mark.criterion(3, "FLMP inside branch bounds; threshold spot checks", 120)
def test_c03_threshold_spot_checks():
    assert bp.n_ap(8) == 8
    assert bp.coprime_thresholds(5) == (8, 8)


@pytest.mark.criterion(3, "FLMP inside branch bounds; threshold spot checks", 120)
def test_c03_flmp_within_bounds(sweep_metrics):
    outside = {a: (m["flmp"], m["bounds"]) for a, m in sweep_metrics.items()
               if not m["bounds"].contains(m["flmp"], slack=m["step"])}
    assert not outside, f"{len(outside)} configurations outside their interval: {outside}"


@pytest.mark.criterion(4, "PLMR >= analytic lower bound", 120)
def test_c04_plmr_lower_bound(sweep_metrics):
    below = {a: (round(m["plmr"], 4), round(m["plmr_bound"].value, 4), m["plmr_bound"].branch)
             for a, m in sweep_metrics.items() if not m["plmr"] >= m["plmr_bound"].value}
    assert not below, f"{len(below)} configurations with PLMR below the bound: {below}"


# ---------------------------------------------------------------------------
# 5


@pytest.mark.criterion(5, "side-lobe positions and heights", 10)
@pytest.mark.parametrize("arch", [Nested(8, 8), Coprime(5, 7)], ids=str)
def test_c05_slh_prediction(arch):
    geom = build_geometry(arch)
    pred = bp.slh_predict(arch)
    matches = bp.match_side_lobes(geom, pred)
    assert len(matches) == len(pred) > 0
    bad = []
    for m in matches:
        if m.position is None or abs(m.position - m.predicted.position) > m.window:
            bad.append((m.predicted.position, "no maximum in window"))
        elif m.rel_error > SLH_REL_TOL:
            bad.append((m.predicted.position, m.predicted.height, m.height))
    assert not bad, bad


def test_c05_nested_height_value():
    assert bp.slh_predict(Nested(8, 8))[0].height == pytest.approx(49 / 256)


# ---------------------------------------------------------------------------
# 6


def brute_force_lags(positions):
    counts = {}
    for a in positions:
        for b in positions:
            counts[a - b] = counts.get(a - b, 0) + 1
    return counts


@pytest.mark.criterion(6, "co-array laws and brute-force agreement", 5)
def test_c06_named_coarrays():
    ca = difference_coarray(build_geometry(Nested(3, 3)))
    assert ca.lags.tolist() == list(range(-11, 12))
    assert ca.m_svir == 23 == (6 ** 2 + 2 * 6 - 2) // 2
    ca = difference_coarray(build_geometry(Coprime(2, 3)))
    assert ca.holes == [-8, 8]
    assert ca.L == 7


@pytest.mark.criterion(6, "co-array laws and brute-force agreement", 5)
def test_c06_sweep_laws():
    for arch in SWEEP:
        geom = build_geometry(arch)
        ca = difference_coarray(geom)
        M = geom.M
        assert int(ca.weights.sum()) == M * M
        assert ca.weight(0) == M
        ref = brute_force_lags(geom.positions)
        assert ca.lags.tolist() == sorted(ref)
        assert ca.weights.tolist() == [ref[k] for k in sorted(ref)]


# ---------------------------------------------------------------------------
# 7


@pytest.mark.criterion(7, "virtual SNR closed form vs Monte Carlo", 60)
@pytest.mark.parametrize("M", [4, 8, 16])
@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0])
def test_c07_virtual_snr_mc(M, rho):
    geom = build_geometry(ULA(M))
    closed, phy = virtual_snr_closed(M, rho)
    assert closed <= phy
    mc = virtual_snr_mc(geom, rho, SNR_TRIALS, np.random.default_rng([7, M, int(rho * 10)])).snr
    assert abs(mc - closed) / closed < SNR_REL_TOL, f"MC {mc:.5g} vs closed {closed:.5g}"


@pytest.mark.criterion(7, "virtual SNR closed form vs Monte Carlo", 60)
def test_c07_high_snr_limit():
    for M in (4, 8, 16):
        vir, phy = virtual_snr_closed(M, 1e3)
        assert vir <= phy
        assert abs(vir / phy - 1.0) < SNR_HIGH_RHO_TOL


# ---------------------------------------------------------------------------
# 8


@pytest.mark.criterion(8, "Type II factorization", 5)
def test_c08_type2_factorization():
    rng = np.random.default_rng(8)
    for arch in (Nested(3, 3), Nested(8, 8), Coprime(2, 3), Coprime(5, 7), ULA(8)):
        geom = build_geometry(arch)
        a, b = rng.uniform(-2, 2, (2, 1000))
        direct = type2_pattern(geom, a, b)
        fact = bp.gain(geom, a) * bp.gain(geom, -b)
        assert np.max(np.abs(direct - fact)) < TYPE2_TOL


# ---------------------------------------------------------------------------
# 9


@pytest.mark.criterion(9, "phase destruction of the detection statistic", 5)
def test_c09_single_user_quarter_turns():
    rng = np.random.default_rng(9)
    geom = build_geometry(Nested(3, 3))
    theta, P, T = 0.3, 10.0, 64
    h = steering_vector(geom, theta)
    x = complex_gaussian(rng, T)
    x_rot = x * QUARTER_TURNS[rng.integers(0, 4, T)]
    eta = detection_statistic(np.outer(h, np.sqrt(P) * x), geom, theta)
    eta_rot = detection_statistic(np.outer(h, np.sqrt(P) * x_rot), geom, theta)
    assert np.array_equal(eta, eta_rot)


@pytest.mark.criterion(9, "phase destruction of the detection statistic", 5)
def test_c09_multi_user_common_rotation():
    rng = np.random.default_rng(91)
    geom = build_geometry(Coprime(2, 3))
    theta = np.array([-0.4, 0.1, 0.5])
    H = steering_vector(geom, theta)
    X = complex_gaussian(rng, (3, 32))
    rot = QUARTER_TURNS[rng.integers(0, 4, 32)]
    Y, Y_rot = H @ X, H @ (X * rot)
    for t in theta:
        assert np.array_equal(detection_statistic(Y, geom, t), detection_statistic(Y_rot, geom, t))


@pytest.mark.criterion(9, "phase destruction of the detection statistic", 5)
def test_c09_noise_keeps_signal_term():
    # with the same noise draw, only the signal-noise cross term sees the symbol phase
    rng = np.random.default_rng(92)
    geom = build_geometry(Nested(3, 3))
    theta, P, T = -0.2, 4.0, 64
    a = steering_vector(geom, theta)
    x = complex_gaussian(rng, T)
    n = complex_gaussian(rng, (geom.M, T))
    x_rot = x * np.exp(2j * np.pi * rng.random(T))
    s = a.conj() @ n
    for xx in (x, x_rot):
        eta = detection_statistic(np.outer(a, np.sqrt(P) * xx) + n, geom, theta)
        signal = geom.M * P * np.abs(xx) ** 2
        cross = 2 * np.sqrt(P) * np.real(xx.conj() * s)
        np.testing.assert_allclose(eta - cross - np.abs(s) ** 2 / geom.M, signal, rtol=1e-12, atol=1e-9)
    np.testing.assert_array_equal(np.round(np.abs(x) ** 2, 12), np.round(np.abs(x_rot) ** 2, 12))


# ---------------------------------------------------------------------------
# 10


@pytest.mark.criterion(10, "MRC SINR equals beam-pattern closed form", 5)
def test_c10_sinr_identity():
    rng = np.random.default_rng(10)
    for arch in (ULA(16), Nested(8, 8), Coprime(5, 7), Nested(3, 3)):
        geom = build_geometry(arch)
        for K in (1, 2, 5, 30):
            theta = rng.uniform(-np.pi / 2, np.pi / 2, K)
            snr = 10 ** rng.uniform(-1, 2, K)
            H = np.stack([steering_vector(geom, t) for t in theta], axis=1)
            direct = np.array([user_sinr(k, H, snr, 1.0) for k in range(K)])
            closed = los_sinr_closed(geom, theta, snr)
            np.testing.assert_allclose(direct, closed, rtol=SINR_TOL, atol=0)


# ---------------------------------------------------------------------------
# 11 / 14


def dof_config(workers=1):
    return ExperimentConfig(experiment="dof", archs=[Nested(3, 3), ULA(6)], n_loc_list=[10], K_c=0,
                            theta_max_deg=40.0, snr_db=20.0, snapshots=1000, trials=50, seed=11,
                            workers=workers)


@pytest.fixture(scope="module")
def dof_result():
    return run_dof_experiment(dof_config())


@pytest.mark.criterion(11, "DoF: nested co-array localizes 10 users with 6 antennas", 180)
def test_c11_dof(dof_result):
    rec = {r["arch"]: r for r in dof_result.records}
    nested, ula = rec["nested(3,3)"], rec["ula(6)"]
    assert ula["rmse_median"] > DOF_ULA_MIN
    assert nested["rmse_median"] < DOF_NESTED_MAX, (
        f"nested median RMSE {nested['rmse_median']:.4f} rad, "
        f"{nested['n_resolved_mean']:.2f}/10 resolved on average")


DOF_ARGS = ["dof", "--arch", "nested:3,3", "ula:6", "--n-loc", "10", "--theta-max", "40",
            "--snapshots", "1000", "--trials", "50", "--seed", "11"]


@pytest.mark.criterion(14, "byte-identical reruns, serial and parallel", 180)
def test_c14_determinism(tmp_path, dof_result):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert execute(DOF_ARGS + ["--out", str(a)]) == 0
    assert execute(DOF_ARGS + ["--out", str(b)]) == 0
    assert execute(DOF_ARGS + ["--out", str(c), "--workers", "3"]) == 0
    for name in ("dof.json", "dof.csv"):
        ref = (a / name).read_bytes()
        assert (b / name).read_bytes() == ref
        assert (c / name).read_bytes() == ref
    parallel = run_dof_experiment(dof_config(workers=2))
    assert parallel.records == dof_result.records
    assert parallel.metadata == dof_result.metadata


# ---------------------------------------------------------------------------
# 12


def rate_config(archs, trials=50):
    return ExperimentConfig(experiment="rate_sweep", archs=archs, K=30, K_c=30, theta_max_deg=6.0,
                            snr_db=20.0, trials=trials, seed=12)


def rates(archs):
    return [r["sum_rate_mean"] for r in run_rate_sweep(rate_config(archs)).records]


@pytest.mark.criterion(12, "hot-spot sum-rate ordering and sweep shapes", 600)
def test_c12_sparse_beats_ula():
    n88, c57, u16 = rates([Nested(8, 8), Coprime(5, 7), ULA(16)])
    assert n88 > u16
    assert c57 > u16


@pytest.mark.criterion(12, "hot-spot sum-rate ordering and sweep shapes", 600)
def test_c12_vary_n1_non_monotone():
    r = np.array(rates([Nested(n1, 8) for n1 in range(1, 17)]))
    steps = np.diff(r)
    assert steps[0] > 0, r
    assert np.any(steps < 0), r


@pytest.mark.criterion(12, "hot-spot sum-rate ordering and sweep shapes", 600)
def test_c12_vary_n2_increasing():
    r = np.array(rates([Nested(8, n2) for n2 in (2, 4, 8, 16)]))
    assert np.all(np.diff(r) > 0), r


# ---------------------------------------------------------------------------
# 13


def dominated_oracle(points):
    """Indices of points not dominated by any other; O(n^2)."""
    keep = []
    for i, (r, e) in enumerate(points):
        dom = any((r2 >= r and e2 <= e and (r2 > r or e2 < e)) for j, (r2, e2) in enumerate(points) if j != i)
        dup = any(points[j] == (r, e) for j in range(i))
        if not dom and not dup:
            keep.append(i)
    return keep


@pytest.mark.criterion(13, "Pareto frontier on the M=16 enumeration", 300)
def test_c13_pareto():
    cfg = ExperimentConfig(experiment="joint_eval", M=16, K=30, K_c=22, theta_max_deg=30.0,
                           snr_db=20.0, snapshots=200, trials=50, seed=13)
    res = run_joint_eval(cfg)
    labels = [r["arch"] for r in res.records]
    assert labels.count("ula(16)") == 1
    pts = [(r["sum_rate_mean"], r["rmse_mean"]) for r in res.records]
    front = pareto_front(pts, return_index=True)
    assert front
    assert sorted(front) == dominated_oracle(pts)
    for i in front:
        r, e = pts[i]
        assert not any(r2 >= r and e2 <= e and (r2 > r or e2 < e) for r2, e2 in pts)
