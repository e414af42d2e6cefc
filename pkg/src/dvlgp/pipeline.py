"""
Experiment stages shared by the CLI and the scripts.

Directory layout produced by :func:`run_sweep`::

    <out>/train/trajNN/beams_bias<b>.csv
    <out>/test/trajNN/{truth,imu}.csv, beams_bias<b>.csv,
                      velocity_<method>_bias<b>.csv, nav_<method>_bias<b>.csv
    <out>/model/model.json, nll_trace.csv
    <out>/report/velocity_rmse.csv, rmse_table.csv, noise_over_time.csv

Every random stream is seeded from the experiment seed and a fixed key path,
so individual stages can be rerun in isolation with identical results.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .ekf import EkfConfig, VelocityTrack, initial_state_from_truth, run_fusion
from .errors import InputError
from .geometry import build_transform
from .io import (
    NAV_COLUMNS,
    bias_tag,
    nav_log_array,
    read_beams,
    read_imu,
    read_truth,
    read_velocity,
    write_beams,
    write_imu,
    write_nll_trace,
    write_table,
    write_truth,
    write_velocity,
)
from .ls import LeastSquaresEstimator, Source
from .mogpr import Dataset, GpModel, initial_hyperparams, load_model, save_model, subsample, train
from .report import (
    VELOCITY_RMSE_COLUMNS,
    build_report,
    improvement_pct,
    velocity_error_norm_rmse,
    write_records,
)
from .sim import IMU_RATE, GroundTruth, generate_trajectory, synthesize_beams, synthesize_imu

log = logging.getLogger(__name__)

# seed stream keys
_TRAIN, _TEST = 1, 2
_MOTION, _IMU, _BEAMS, _INIT, _SUBSAMPLE = 1, 2, 3, 4, 5


def derive_seed(base: int, *keys: int) -> int:
    """Deterministic 32-bit seed for a key path below the experiment seed."""
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1)[0])


def ekf_config(cfg: ExperimentConfig, adaptive_r: bool | None = None, seed: int = 0) -> EkfConfig:
    e = cfg.ekf
    return EkfConfig(
        adaptive_r=e.adaptive_r if adaptive_r is None else adaptive_r,
        constant_r_std=e.constant_r_std_mps,
        joseph_form=e.joseph_form,
        init_velocity_std=e.init_velocity_std,
        init_attitude_std=float(np.radians(e.init_attitude_std_deg)),
        init_accel_bias_std=e.init_accel_bias_std,
        init_gyro_bias_std=e.init_gyro_bias_std,
        accel_noise_std=cfg.imu_errors.accel_noise_std,
        gyro_noise_std=cfg.imu_errors.gyro_noise_std,
        accel_bias_walk=cfg.imu_errors.accel_bias_walk,
        gyro_bias_walk=cfg.imu_errors.gyro_bias_walk,
        perturb_initial=e.perturb_initial,
        seed=seed,
    )


# --------------------------------------------------------------------------
# missions


def train_specs(cfg: ExperimentConfig):
    """Training missions: the configured pattern at evenly spread cruise speeds."""
    n = cfg.sweep.train_trajectories
    speeds = np.linspace(cfg.sweep.train_speed_min, cfg.sweep.train_speed_max, n)
    return [
        cfg.sim.trajectory(
            derive_seed(cfg.seed, _TRAIN, i, _MOTION), pattern=cfg.sweep.train_pattern, cruise_speed=float(s)
        )
        for i, s in enumerate(speeds)
    ]


def test_specs(cfg: ExperimentConfig):
    return [cfg.sim.trajectory(derive_seed(cfg.seed, _TEST, j, _MOTION)) for j in range(cfg.sweep.test_trajectories)]


def simulate_mission(cfg: ExperimentConfig, spec, out_dir, key: tuple, with_imu: bool = True) -> list[Path]:
    """
    Write truth, IMU and one beam file per sweep level for one mission.

    Beam noise is drawn from the same stream for every bias level, so files of one
    mission differ only by the bias (common random numbers).
    """
    out_dir = Path(out_dir)
    geometry = cfg.geometry.geometry()
    paths = []
    if with_imu:
        truth = generate_trajectory(spec, IMU_RATE)
        imu = synthesize_imu(truth, cfg.imu_errors.spec(), derive_seed(cfg.seed, *key, _IMU))
        paths.append(write_truth(out_dir / "truth.csv", truth))
        paths.append(write_imu(out_dir / "imu.csv", imu))
        dvl_truth = truth.decimate(IMU_RATE)
    else:
        dvl_truth = generate_trajectory(spec, 1)
    seed = derive_seed(cfg.seed, *key, _BEAMS)
    for b in cfg.sweep.biases:
        beams = synthesize_beams(dvl_truth, geometry, cfg.dvl_errors.spec(b), seed)
        paths.append(write_beams(out_dir / f"beams{bias_tag(b)}.csv", beams))
    return paths


def simulate(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Single mission from ``[sim]``; also writes ``beams.csv`` at the ``[dvl_errors]`` bias."""
    out_dir = Path(out_dir)
    spec = cfg.sim.trajectory(derive_seed(cfg.seed, _TEST, 0, _MOTION))
    paths = simulate_mission(cfg, spec, out_dir, (_TEST, 0))
    truth = read_truth(out_dir / "truth.csv").decimate(IMU_RATE)
    beams = synthesize_beams(
        truth, cfg.geometry.geometry(), cfg.dvl_errors.spec(), derive_seed(cfg.seed, _TEST, 0, _BEAMS)
    )
    paths.append(write_beams(out_dir / "beams.csv", beams))
    return paths


def training_beams(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """
    Training beams for every training mission and sweep level.

    Unlike test missions, each (mission, bias) pair gets its own noise draw.
    ``[sweep] train_biases`` overrides the levels, e.g. ``0`` for bias-free training.
    """
    out_dir = Path(out_dir)
    geometry = cfg.geometry.geometry()
    paths = []
    for i, spec in enumerate(train_specs(cfg)):
        truth = generate_trajectory(spec, 1)
        for k, b in enumerate(cfg.sweep.train_biases or cfg.sweep.biases):
            beams = synthesize_beams(truth, geometry, cfg.dvl_errors.spec(b), derive_seed(cfg.seed, _TRAIN, i, _BEAMS, k))
            paths.append(write_beams(out_dir / f"traj{i:02d}" / f"beams{bias_tag(b)}.csv", beams))
    return paths


# --------------------------------------------------------------------------
# training and velocity front ends


def build_dataset(beam_files) -> Dataset:
    beam_files = list(beam_files)
    if not beam_files:
        raise InputError("no training files given")
    data = [read_beams(p) for p in beam_files]
    X = np.vstack([d.beams for d in data])
    Y = np.vstack([d.truth_velocity_dvl for d in data])
    if len(X) < 2:
        raise InputError("training set is empty")
    return Dataset(X, Y)


def train_model(cfg: ExperimentConfig, beam_files, out_dir) -> GpModel:
    out_dir = Path(out_dir)
    full = build_dataset(beam_files)
    ds = subsample(full, cfg.gpr.max_points, derive_seed(cfg.seed, _SUBSAMPLE, cfg.gpr.seed))
    log.info("training on %d of %d points", len(ds), len(full))
    model = train(ds, initial_hyperparams(ds, cfg.gpr.init_noise_std), cfg.gpr.optimizer())
    save_model(out_dir / "model.json", model)
    write_nll_trace(out_dir / "nll_trace.csv", model.nll_trace)
    return model


def ls_track(cfg: ExperimentConfig, beams) -> VelocityTrack:
    est = LeastSquaresEstimator(build_transform(cfg.geometry.geometry()), cfg.dvl_errors.noise_std_mps)
    cov = np.broadcast_to(est.covariance, (len(beams), 3, 3)).copy()
    return VelocityTrack(beams.time, est.estimate(beams.beams), cov, Source.LS.value)


def mogpr_track(model: GpModel, beams) -> VelocityTrack:
    mean, _, meas_var = model.predict_batch(beams.beams)
    cov = meas_var[:, None, None] * np.eye(3)
    return VelocityTrack(beams.time, mean, cov, Source.MOGPR.value)


def _beam_file(mission_dir: Path, bias: float) -> Path:
    path = Path(mission_dir) / f"beams{bias_tag(bias)}.csv"
    if not path.exists():
        raise InputError(f"missing beam file for bias {bias:g}: {path}")
    return path


def eval_velocity(cfg: ExperimentConfig, model: GpModel, mission_dirs, out_dir) -> Path:
    """
    Velocity RMSE of both front ends per bias level, pooled over missions.

    The RMSE is taken over the 3-D error norm of every DVL epoch.
    """
    rows = []
    for b in cfg.sweep.biases:
        err_ls, err_gp = [], []
        for d in mission_dirs:
            beams = read_beams(_beam_file(d, b))
            err_ls.append(ls_track(cfg, beams).velocity - beams.truth_velocity_dvl)
            err_gp.append(mogpr_track(model, beams).velocity - beams.truth_velocity_dvl)
        zero = np.zeros((1, 3))
        r_ls = velocity_error_norm_rmse(np.vstack(err_ls), zero)
        r_gp = velocity_error_norm_rmse(np.vstack(err_gp), zero)
        pct = improvement_pct(r_ls, r_gp) if r_ls > 0 else float("nan")
        rows.append(dict(bias=b, rmse_ls=r_ls, rmse_mogpr=r_gp, improvement_pct=pct))
    return write_records(Path(out_dir) / "velocity_rmse.csv", VELOCITY_RMSE_COLUMNS, rows)


# --------------------------------------------------------------------------
# fusion


def fuse_track(cfg: ExperimentConfig, truth: GroundTruth, imu, track: VelocityTrack, adaptive_r: bool, init_seed: int):
    ekf = ekf_config(cfg, adaptive_r, init_seed)
    initial = initial_state_from_truth(truth, ekf)
    return run_fusion(imu, track, initial, ekf)


def write_decimated_log(cfg: ExperimentConfig, path, result) -> Path:
    step = max(int(round(IMU_RATE / cfg.output.log_rate_hz)), 1)
    rows = nav_log_array(result)
    keep = np.arange(0, len(rows), step)
    if keep[-1] != len(rows) - 1:
        keep = np.append(keep, len(rows) - 1)
    return write_table(path, NAV_COLUMNS, rows[keep])


def fuse_mission(
    cfg: ExperimentConfig,
    mission_dir,
    frontend: str,
    adaptive_r: bool | None = None,
    model: GpModel | None = None,
    external_csv=None,
) -> list[Path]:
    """
    Run the filter on one mission for every sweep level (or once for ``external``).

    The initial-state perturbation depends only on the mission key, so every
    front end and bias level starts from the same state.
    """
    mission_dir = Path(mission_dir)
    frontend = Source(frontend).value
    truth = read_truth(mission_dir / "truth.csv")
    imu = read_imu(mission_dir / "imu.csv")
    adaptive = cfg.ekf.adaptive_r if adaptive_r is None else adaptive_r
    init_seed = derive_seed(cfg.seed, _TEST, _mission_index(mission_dir), _INIT)
    paths = []
    if frontend == Source.EXTERNAL.value:
        if external_csv is None:
            raise InputError("the external front end needs --external-csv")
        track = read_velocity(external_csv, Source.EXTERNAL.value)
        result = fuse_track(cfg, truth, imu, track, adaptive, init_seed)
        return [write_decimated_log(cfg, mission_dir / "nav_external.csv", result)]
    if frontend == Source.MOGPR.value and model is None:
        raise InputError("the mogpr front end needs --model")
    for b in cfg.sweep.biases:
        beams = read_beams(_beam_file(mission_dir, b))
        track = ls_track(cfg, beams) if frontend == Source.LS.value else mogpr_track(model, beams)
        tag = f"{frontend}{bias_tag(b)}"
        paths.append(write_velocity(mission_dir / f"velocity_{tag}.csv", track))
        result = fuse_track(cfg, truth, imu, track, adaptive, init_seed)
        paths.append(write_decimated_log(cfg, mission_dir / f"nav_{tag}.csv", result))
    return paths


def _mission_index(mission_dir: Path) -> int:
    name = Path(mission_dir).name
    digits = "".join(ch for ch in name if ch.isdigit())
    return int(digits) if digits else 0


# --------------------------------------------------------------------------
# full protocol


def run_sweep(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """
    Full protocol: simulate, train, evaluate velocity, fuse both front ends, report.

    LS runs use a constant R; MOGPR runs use the GP predictive covariance.
    """
    out = Path(out_dir)
    log.info("simulating %d training missions", cfg.sweep.train_trajectories)
    train_files = training_beams(cfg, out / "train")
    test_dirs = []
    for j, spec in enumerate(test_specs(cfg)):
        d = out / "test" / f"traj{j:02d}"
        simulate_mission(cfg, spec, d, (_TEST, j))
        test_dirs.append(d)
    log.info("training MOGPR")
    model = train_model(cfg, train_files, out / "model")
    model = load_model(out / "model" / "model.json")
    outputs = [eval_velocity(cfg, model, test_dirs, out / "report")]
    for d in test_dirs:
        log.info("fusing %s", d.name)
        fuse_mission(cfg, d, "ls", adaptive_r=False)
        fuse_mission(cfg, d, "mogpr", adaptive_r=True, model=model)
    outputs += build_report(test_dirs, out / "report", cfg.output.skip_seconds)
    return outputs


def with_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    return cfg if seed is None else replace(cfg, seed=int(seed))


def with_output(cfg: ExperimentConfig, out: str | None) -> ExperimentConfig:
    return cfg if out is None else replace(cfg, output=replace(cfg.output, dir=str(out)))
