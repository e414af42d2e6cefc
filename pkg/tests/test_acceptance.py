"""
Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary). The
protocol tests share one default-configuration sweep, which takes a couple of
minutes.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from dvlgp.config import ExperimentConfig, load_config
from dvlgp.consistency import chi2_band, monte_carlo_nees
from dvlgp.ekf import initial_state_from_truth, run_fusion
from dvlgp.geometry import BeamGeometry, build_transform
from dvlgp.io import NAV_COLUMNS, read_beams, read_imu, read_nav_log, read_truth
from dvlgp.ls import LeastSquaresEstimator
from dvlgp.mogpr import (
    KERNELS,
    N_HYPER,
    Dataset,
    Hyperparams,
    cross_covariance,
    fit,
    gram_matrix,
    kernel_matrix,
    load_model,
    nll,
    nll_grad,
)
from dvlgp.pipeline import ekf_config, mogpr_track, run_sweep
from dvlgp.report import TABLE_COLUMNS, VELOCITY_RMSE_COLUMNS, read_records
from dvlgp.sim import DvlErrorSpec, Pattern, TrajectorySpec, generate_trajectory, synthesize_beams

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
PITCH = np.radians(20.0)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("protocol")
    start = time.perf_counter()
    run_sweep(ExperimentConfig(), out)
    return out, time.perf_counter() - start


def _velocity_rows(out):
    rows = read_records(out / "report" / "velocity_rmse.csv", VELOCITY_RMSE_COLUMNS)
    return {float(r["bias"]): (float(r["rmse_ls"]), float(r["rmse_mogpr"])) for r in rows}


def test_criterion_01_ls_exactness(acceptance):
    start = time.perf_counter()
    truth = generate_trajectory(TrajectorySpec(Pattern.MIXED, duration=600.0, seed=1), rate=1)
    g = BeamGeometry(PITCH)
    beams = synthesize_beams(truth, g, DvlErrorSpec(), seed=0)
    v = LeastSquaresEstimator(build_transform(g)).estimate(beams.beams)
    err = np.abs(v - beams.truth_velocity_dvl).max()
    elapsed = time.perf_counter() - start
    ok = err <= 1e-12 and elapsed < 1.0
    acceptance("1", ok, f"max error {err:.2e} over {len(v)} epochs, {elapsed:.2f} s")
    assert ok


def test_criterion_02_ls_bias_law(acceptance, transform):
    rng = np.random.default_rng(2)
    est = LeastSquaresEstimator(transform)
    worst = 0.0
    for beta in np.linspace(0.0, 0.05, 26):
        v = rng.standard_normal(3)
        err = est.estimate(transform @ v + beta) - v
        worst = max(worst, np.abs(err - [0.0, 0.0, beta / np.cos(PITCH)]).max())
    ok = worst <= 1e-10
    acceptance("2", ok, f"max deviation from [0, 0, b/cos 20deg] {worst:.2e}")
    assert ok


def test_criterion_03_kernel_psd(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = np.inf
    for _ in range(100):
        hp = Hyperparams.from_vector(rng.uniform(-2.0, 1.0, N_HYPER))
        X = rng.standard_normal((50, 4)) * rng.uniform(0.1, 3.0)
        mats = [kernel_matrix(k, X, X, hp) for k in KERNELS] + [gram_matrix(X, hp)]
        worst = min(worst, min(np.linalg.eigvalsh(K).min() for K in mats))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-8 and elapsed < 10.0
    acceptance("3", ok, f"min eigenvalue {worst:.2e} over 100 sets x 4 matrices, {elapsed:.2f} s")
    assert ok


def test_criterion_04_gp_dense_oracle(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    n = 200
    X = rng.standard_normal((n, 4))
    ds = Dataset(X, np.column_stack([np.sin(X[:, 0]), X[:, 1] * X[:, 2], np.cos(X[:, 3])]))
    hp = Hyperparams.from_vector(rng.uniform(-1.0, 0.5, N_HYPER))
    model = fit(ds, hp)
    A = gram_matrix(X, hp) + (hp.noise_std**2 + model.jitter) * np.eye(n)
    A_inv = np.linalg.inv(A)
    Xs = rng.standard_normal((100, 4))
    Ks = cross_covariance(X, Xs, hp)
    mean_ref = Ks.T @ A_inv @ ds.targets
    var_ref = hp.prior_variance - np.einsum("ij,ik,kj->j", Ks, A_inv, Ks)
    mean, var, _ = model.predict_batch(Xs)
    rel_mean = np.abs(mean - mean_ref).max() / np.abs(mean_ref).max()
    rel_var = np.abs(var - var_ref).max() / np.abs(var_ref).max()
    elapsed = time.perf_counter() - start
    ok = max(rel_mean, rel_var) <= 1e-8 and elapsed < 10.0
    acceptance("4", ok, f"relative deviation mean {rel_mean:.1e}, variance {rel_var:.1e} (n={n}), {elapsed:.2f} s")
    assert ok


def test_criterion_05_gradient_check(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    h = 1e-5
    for _ in range(20):
        X = rng.standard_normal((20, 4))
        ds = Dataset(X, np.column_stack([np.sin(X[:, 0]), X[:, 1], X[:, 2] * X[:, 3]]) + 0.05 * rng.standard_normal((20, 3)))
        vec = rng.uniform(-1.0, 0.5, N_HYPER)
        g = nll_grad(ds, Hyperparams.from_vector(vec))
        fd = np.empty(N_HYPER)
        for i in range(N_HYPER):
            e = np.zeros(N_HYPER)
            e[i] = h
            fd[i] = (nll(ds, Hyperparams.from_vector(vec + e)) - nll(ds, Hyperparams.from_vector(vec - e))) / (2 * h)
        worst = max(worst, np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-12)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 30.0
    acceptance("5", ok, f"max relative error {worst:.2e} over 20 datasets x 16 components, {elapsed:.2f} s")
    assert ok


def test_criterion_06_posterior_contraction(acceptance):
    rng = np.random.default_rng(6)
    X = rng.standard_normal((60, 4))
    ds = Dataset(X, rng.standard_normal((60, 3)))
    model = fit(ds, Hyperparams.from_vector(rng.uniform(-1.0, 0.5, N_HYPER)))
    Xs = 2.0 * rng.standard_normal((1000, 4))
    _, latent, _ = model.predict_batch(Xs)
    excess = np.max(latent - model.hyperparams.prior_variance)
    interp = fit(ds, Hyperparams.from_natural(1.0, 1.0, 1e-8))
    mean, _, _ = interp.predict_batch(X)
    interp_err = np.abs(mean - ds.targets).max()
    ok = excess <= 0.0 and interp_err <= 1e-6
    acceptance("6", ok, f"max(var - prior) {excess:.2e} at 1000 points, interpolation error {interp_err:.2e}")
    assert ok


def test_criterion_07_kronecker_equivalence(acceptance):
    rng = np.random.default_rng(7)
    n = 50
    X = rng.standard_normal((n, 4))
    ds = Dataset(X, rng.standard_normal((n, 3)))
    hp = Hyperparams.from_vector(rng.uniform(-1.0, 0.5, N_HYPER))
    model = fit(ds, hp)
    K = gram_matrix(X, hp) + (hp.noise_std**2 + model.jitter) * np.eye(n)
    big = np.kron(np.eye(3), K)
    Xs = rng.standard_normal((20, 4))
    Ks = np.kron(np.eye(3), cross_covariance(X, Xs, hp))
    mean_big = Ks.T @ np.linalg.solve(big, ds.targets.T.ravel())
    var_big = np.kron(np.eye(3), gram_matrix(Xs, hp)) - Ks.T @ np.linalg.solve(big, Ks)
    mean, latent, _ = model.predict_batch(Xs)
    d_mean = np.abs(mean.T.ravel() - mean_big).max()
    d_var = np.abs(np.tile(latent, 3) - np.diag(var_big)).max()
    ok = max(d_mean, d_var) <= 1e-10
    acceptance("7", ok, f"block vs I3 (x) C deviation: mean {d_mean:.1e}, variance {d_var:.1e}")
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="with 0.02 m/s beam noise the 0.011 m/s bias moves the LS error norm by about 2%, far from 1.5x",
)
def test_criterion_08a_ls_rmse_grows(acceptance, sweep):
    out, elapsed = sweep
    rows = _velocity_rows(out)
    ratio = rows[0.011][0] / rows[0.001][0]
    ok = ratio >= 1.5 and elapsed <= 300.0
    acceptance("8a", ok, f"LS RMSE ratio bias 0.011 / 0.001 = {ratio:.3f} (need >= 1.5)")
    assert ok


def test_criterion_08b_mogpr_flat(acceptance, sweep):
    out, elapsed = sweep
    gp = np.array([v[1] for v in _velocity_rows(out).values()])
    spread = (gp.max() - gp.min()) / gp.min()
    ok = spread < 0.25 and elapsed <= 300.0
    acceptance("8b", ok, f"MOGPR RMSE spread across sweep {100 * spread:.1f}% (need < 25%), sweep {elapsed:.0f} s")
    assert ok


def test_criterion_08c_mogpr_beats_ls(acceptance, sweep):
    out, _ = sweep
    ls, gp = _velocity_rows(out)[0.011]
    ok = gp <= 0.85 * ls
    acceptance("8c", ok, f"bias 0.011: MOGPR {gp:.4f} vs LS {ls:.4f} m/s, improvement {100 * (1 - gp / ls):.1f}%")
    assert ok


def test_criterion_09_fusion_benefit(acceptance, sweep):
    out, _ = sweep
    table = read_records(out / "report" / "rmse_table.csv", TABLE_COLUMNS)
    runs = {(r["trajectory"], r["method"]): r for r in table if float(r["bias"]) == 0.011}
    details, ok = [], True
    for traj in sorted({t for t, _ in runs}):
        ls, gp = runs[traj, "ls"], runs[traj, "mogpr"]
        norm_ok = float(gp["vel_norm"]) <= float(ls["vel_norm"])
        down_ok = float(gp["vd"]) < float(ls["vd"])
        ok &= norm_ok and down_ok
        details.append(f"{traj} norm {float(gp['vel_norm']):.4f}/{float(ls['vel_norm']):.4f}, "
                       f"vd {float(gp['vd']):.4f}/{float(ls['vd']):.4f}")

    # runtime of one full-rate fusion run
    cfg = ExperimentConfig()
    mission = out / "test" / "traj00"
    truth, imu = read_truth(mission / "truth.csv"), read_imu(mission / "imu.csv")
    track = mogpr_track(load_model(out / "model" / "model.json"), read_beams(mission / "beams_bias0.011.csv"))
    ekf = ekf_config(cfg, adaptive_r=True)
    start = time.perf_counter()
    run_fusion(imu, track, initial_state_from_truth(truth, ekf), ekf)
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 120.0
    acceptance("9", ok, "MOGPR/LS " + "; ".join(details) + f"; one run {elapsed:.1f} s")
    assert ok


def test_criterion_10_filter_health(acceptance):
    cfg = ExperimentConfig()
    means, min_eig = monte_carlo_nees(cfg, runs=25, check_health=True)
    lo, hi = chi2_band(25)
    band = (0.9 * lo, 1.1 * hi)
    mean = means.mean()
    ok = band[0] <= mean <= band[1] and min_eig >= -1e-10
    acceptance("10", ok, f"NEES mean {mean:.2f} in [{band[0]:.2f}, {band[1]:.2f}], min eig(P) {min_eig:.2e} over 25 runs")
    assert ok


def test_criterion_11_adaptive_r(acceptance, sweep):
    out, _ = sweep
    r = slice(NAV_COLUMNS.index("r11"), NAV_COLUMNS.index("r33") + 1)
    ls_const, gp_vary = True, True
    for mission in sorted((out / "test").iterdir()):
        for path in sorted(mission.glob("nav_*.csv")):
            cols = read_nav_log(path)[:, r]
            constant = bool(np.all(cols == cols[0]))
            if path.name.startswith("nav_ls"):
                ls_const &= constant
            else:
                gp_vary &= not constant and bool(np.all(np.ptp(cols, axis=0) > 0))
    ok = ls_const and gp_vary
    acceptance("11", ok, f"LS r11..r33 constant: {ls_const}; MOGPR r11..r33 time-varying: {gp_vary}")
    assert ok


def test_criterion_12_determinism(acceptance, tmp_path):
    cfg = load_config(CONFIGS / "quick.ini")
    run_sweep(cfg, tmp_path / "a")
    run_sweep(cfg, tmp_path / "b")
    names = ("velocity_rmse.csv", "rmse_table.csv", "noise_over_time.csv")
    same = [(tmp_path / "a" / "report" / n).read_bytes() == (tmp_path / "b" / "report" / n).read_bytes() for n in names]
    ok = all(same)
    acceptance("12", ok, "report CSVs byte-identical across two sweeps: " + ", ".join(f"{n}={s}" for n, s in zip(names, same)))
    assert ok
