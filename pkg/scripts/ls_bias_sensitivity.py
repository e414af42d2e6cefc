"""
How strongly does a common beam bias show up in the LS velocity RMSE?

With all-ones bias b the LS error gains a constant vertical offset b/cos(pitch)
on top of zero-mean noise with covariance s^2 (T^T T)^-1. The expected RMSE of
the 3-D error norm is therefore sqrt(s^2 tr((T^T T)^-1) + (b/cos(pitch))^2).
This prints the ratio of that RMSE between the largest and smallest sweep bias
for a range of beam noise levels, checked against a quick simulation.

    python3 scripts/ls_bias_sensitivity.py
"""

import numpy as np

from dvlgp.geometry import BeamGeometry, build_transform
from dvlgp.ls import LeastSquaresEstimator


def expected_rmse(T, noise_std, bias, pitch):
    return np.sqrt(noise_std**2 * np.trace(np.linalg.inv(T.T @ T)) + (bias / np.cos(pitch)) ** 2)


def simulated_rmse(T, noise_std, bias, rng, n=200_000):
    v = np.array([1.5, 0.0, 0.0])
    beams = T @ v + bias + noise_std * rng.standard_normal((n, 4))
    err = LeastSquaresEstimator(T, noise_std).estimate(beams) - v
    return np.sqrt(np.mean(np.sum(err**2, axis=1)))


def main():
    pitch = np.radians(20.0)
    T = build_transform(BeamGeometry(pitch))
    rng = np.random.default_rng(0)
    lo, hi = 0.001, 0.011
    print(f"{'noise std':>10} {'ratio (closed form)':>20} {'ratio (simulated)':>18} {'vd-only ratio':>14}")
    for s in (0.02, 0.01, 0.005, 0.002, 0.001):
        ratio = expected_rmse(T, s, hi, pitch) / expected_rmse(T, s, lo, pitch)
        sim = simulated_rmse(T, s, hi, rng) / simulated_rmse(T, s, lo, rng)
        var_d = s**2 * np.linalg.inv(T.T @ T)[2, 2]
        vd = np.sqrt(var_d + (hi / np.cos(pitch)) ** 2) / np.sqrt(var_d + (lo / np.cos(pitch)) ** 2)
        print(f"{s:10.3f} {ratio:20.3f} {sim:18.3f} {vd:14.3f}")
    # noise level at which the norm ratio reaches 1.5
    tr = np.trace(np.linalg.inv(T.T @ T))
    a, b = (lo / np.cos(pitch)) ** 2, (hi / np.cos(pitch)) ** 2
    s_needed = np.sqrt((b - 2.25 * a) / (1.25 * tr))
    print(f"\nthe norm ratio reaches 1.5 only for beam noise std <= {s_needed:.4f} m/s")


if __name__ == "__main__":
    main()
