"""
Does the learned noise floor belong in the adaptive R?

Reruns the MOGPR-fed filter on the missions of a finished sweep with
R = (latent variance + sigma_n^2) I (the package default) and with the latent
variance alone, and prints the fusion RMSE of both variants next to LS.

    python3 scripts/noise_floor_sensitivity.py results/default
"""

import argparse
from pathlib import Path

import numpy as np

from dvlgp.config import ExperimentConfig, load_config
from dvlgp.ekf import VelocityTrack
from dvlgp.io import bias_tag, read_beams, read_imu, read_truth
from dvlgp.mogpr import load_model
from dvlgp.pipeline import derive_seed, fuse_track, ls_track, mogpr_track
from dvlgp.report import rmse_from_states

_TEST, _INIT = 2, 4  # same key path as the sweep, so every variant starts from the same state


def latent_only_track(model, beams) -> VelocityTrack:
    mean, latent, _ = model.predict_batch(beams.beams)
    # a zero latent variance would make R singular; keep a negligible floor
    cov = np.maximum(latent, 1e-12)[:, None, None] * np.eye(3)
    return VelocityTrack(beams.time, mean, cov, "mogpr")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("sweep_dir", type=Path)
    ap.add_argument("--config")
    ap.add_argument("--bias", type=float, default=0.011)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    model = load_model(args.sweep_dir / "model" / "model.json")
    print(f"learned sigma_n = {model.hyperparams.noise_std:.4f} m/s")
    print(f"{'mission':>8} {'variant':>14} {'|v| RMSE':>9} {'vd':>8} {'angles':>8} {'mean R std':>10}")
    for j, mission in enumerate(sorted((args.sweep_dir / "test").iterdir())):
        truth, imu = read_truth(mission / "truth.csv"), read_imu(mission / "imu.csv")
        beams = read_beams(mission / f"beams{bias_tag(args.bias)}.csv")
        init_seed = derive_seed(cfg.seed, _TEST, j, _INIT)
        tracks = {
            "ls constant R": (ls_track(cfg, beams), False),
            "latent + floor": (mogpr_track(model, beams), True),
            "latent only": (latent_only_track(model, beams), True),
        }
        for name, (track, adaptive) in tracks.items():
            res = fuse_track(cfg, truth, imu, track, adaptive, init_seed)
            row = rmse_from_states(res.time, res.velocity_n, res.attitude, truth, cfg.output.skip_seconds)
            r_std = np.sqrt(res.r_diag[res.updated, 0]).mean()
            print(f"{mission.name:>8} {name:>14} {row.vel_norm:9.4f} {row.velocity[2]:8.4f} {row.angle_norm:8.3f} {r_std:10.4f}")


if __name__ == "__main__":
    main()
