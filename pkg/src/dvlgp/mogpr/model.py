"""
Multi-output GP regression with an identity coregionalization matrix.

With ``B = I`` and hyperparameters shared across outputs, the multi-output Gram
matrix ``I_3 kron C`` is block diagonal. One n x n Cholesky factor therefore
serves all three velocity components; the 3n x 3n system is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, lapack, solve_triangular

from ..errors import CholeskyError
from .kernels import (
    INPUT_DIM,
    KERNELS,
    N_HYPER,
    Hyperparams,
    cross_covariance,
    gram_and_gradient_factors,
    gram_matrix,
)

OUTPUT_DIM = 3
JITTER_START = 1e-8
JITTER_LIMIT = 1e-4
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Dataset:
    """Training pairs: beam measurements (n, 4) -> DVL-frame velocity (n, 3)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.array(self.inputs, dtype=float)
        Y = np.array(self.targets, dtype=float)
        if X.ndim != 2 or X.shape[1] != INPUT_DIM:
            raise ValueError(f"inputs must be (n, {INPUT_DIM}), got {X.shape}")
        if Y.shape != (X.shape[0], OUTPUT_DIM):
            raise ValueError(f"targets must be (n, {OUTPUT_DIM}), got {Y.shape}")
        if X.shape[0] < 2:
            raise ValueError("a dataset needs at least two points")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", Y)

    def __len__(self):
        return self.inputs.shape[0]


def subsample(dataset: Dataset, max_points: int, seed: int) -> Dataset:
    """Uniform subsample without replacement, or the dataset itself if small enough."""
    if max_points < 2:
        raise ValueError("max_points must be at least 2")
    n = len(dataset)
    if n <= max_points:
        return dataset
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=max_points, replace=False))
    return Dataset(dataset.inputs[idx], dataset.targets[idx])


def initial_hyperparams(dataset: Dataset, noise_std: float = 0.02) -> Hyperparams:
    """
    Data-driven starting point for training.

    Length scales start at the per-beam input std; each kernel's signal variance
    starts at a third of the mean per-output target second moment about zero
    (the prior mean is zero, so the raw second moment is what the kernel must carry).
    """
    scales = dataset.inputs.std(axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    power = float(np.mean(dataset.targets**2))
    power = power if power > 0 else 1.0
    return Hyperparams.from_natural(power / len(KERNELS), scales, noise_std)


def regularized_cholesky(K: np.ndarray, scale: float, jitter: float | None = None):
    """
    Cholesky factor of ``K + jitter * I``.

    Without an explicit ``jitter`` the schedule starts at ``1e-8 * scale`` and
    grows tenfold per failure up to ``1e-4 * scale``.

    Returns
    -------
    L : (n, n) lower-triangular array
    jitter : float
        The jitter actually added.
    """
    n = K.shape[0]
    if jitter is not None:
        schedule = [jitter]
    else:
        steps = int(round(np.log10(JITTER_LIMIT / JITTER_START))) + 1
        schedule = [JITTER_START * scale * 10.0**i for i in range(steps)]
    for jit in schedule:
        A = K.copy()
        A[np.diag_indices(n)] += jit
        try:
            return cholesky(A, lower=True, check_finite=True), jit
        except (LinAlgError, ValueError):
            continue
    raise CholeskyError(
        f"Cholesky failed with jitter up to {schedule[-1]:.3g}", jitter=schedule[-1]
    )


@dataclass(frozen=True)
class Prediction:
    """
    Predictive distribution at one test input.

    ``covariance`` is the measurement covariance handed to the filter:
    ``(latent_variance + sigma_n^2) * I_3``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    latent_variance: float


@dataclass(frozen=True)
class GpModel:
    dataset: Dataset
    hyperparams: Hyperparams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    nll: float
    nll_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def noise_var(self) -> float:
        return self.hyperparams.noise_std**2

    def predict_batch(self, Xs):
        """
        Vectorized prediction.

        Returns
        -------
        mean : (m, 3) array
        latent_var : (m,) array
            Clamped posterior variance of the latent function.
        meas_var : (m,) array
            ``latent_var + sigma_n^2``, the per-axis measurement variance.
        """
        Xs = np.atleast_2d(np.asarray(Xs, float))
        Ks = cross_covariance(self.dataset.inputs, Xs, self.hyperparams)  # (n, m)
        mean = Ks.T @ self.alpha
        V = solve_triangular(self.chol, Ks, lower=True)
        prior = self.hyperparams.prior_variance
        latent = np.maximum(prior - np.einsum("ij,ij->j", V, V), 0.0)
        return mean, latent, latent + self.noise_var

    def predict(self, x) -> Prediction:
        mean, latent, meas = self.predict_batch(np.asarray(x, float)[None, :])
        return Prediction(mean[0], meas[0] * np.eye(OUTPUT_DIM), float(latent[0]))


def _noisy_gram(X, hp: Hyperparams) -> np.ndarray:
    K = gram_matrix(X, hp)
    K[np.diag_indices_from(K)] += hp.noise_std**2
    return K


def _jitter_scale(hp: Hyperparams) -> float:
    # trace(C)/n for a stationary kernel is the summed signal variance
    return hp.prior_variance


def _nll_from_factor(L, alpha, Y) -> float:
    n = L.shape[0]
    data_fit = 0.5 * float(np.sum(Y * alpha))
    log_det = float(np.sum(np.log(np.diag(L))))  # half log det
    return data_fit + OUTPUT_DIM * (log_det + 0.5 * n * _LOG_2PI)


def fit(dataset: Dataset, hp: Hyperparams, jitter: float | None = None, nll_trace=None) -> GpModel:
    """
    Factorize the regularized Gram matrix and solve for all three outputs.

    Parameters
    ----------
    dataset : Dataset
    hp : Hyperparams
    jitter : float, optional
        Use exactly this jitter instead of the escalation schedule (model reload).
    """
    K = _noisy_gram(dataset.inputs, hp)
    L, jit = regularized_cholesky(K, _jitter_scale(hp), jitter)
    alpha = cho_solve((L, True), dataset.targets)
    trace = np.empty(0) if nll_trace is None else np.asarray(nll_trace, float)
    return GpModel(dataset, hp, L, alpha, jit, _nll_from_factor(L, alpha, dataset.targets), trace)


def predict(model: GpModel, x) -> Prediction:
    return model.predict(x)


def nll(dataset: Dataset, hp: Hyperparams) -> float:
    """
    Negative log marginal likelihood summed over the three outputs.

    ``sum_o [ y_o^T K^-1 y_o / 2 ] + 3/2 log|K| + 3n/2 log(2 pi)``, with
    ``K = C + sigma_n^2 I + jitter I``.
    """
    K = _noisy_gram(dataset.inputs, hp)
    L, _ = regularized_cholesky(K, _jitter_scale(hp))
    alpha = cho_solve((L, True), dataset.targets)
    return _nll_from_factor(L, alpha, dataset.targets)


def _cholesky_inverse(L: np.ndarray) -> np.ndarray:
    inv, info = lapack.dpotri(L, lower=1)
    if info != 0:
        raise CholeskyError(f"dpotri failed with info={info}", jitter=float("nan"))
    inv = np.tril(inv)
    return inv + np.tril(inv, -1).T


def nll_and_grad(dataset: Dataset, hp: Hyperparams) -> tuple[float, np.ndarray]:
    """NLL and its gradient with respect to ``hp.to_vector()``."""
    X, Y = dataset.inputs, dataset.targets
    n = X.shape[0]
    K, parts, weights = gram_and_gradient_factors(X, hp)
    noise_var = hp.noise_std**2
    K[np.diag_indices(n)] += noise_var
    L, _ = regularized_cholesky(K, _jitter_scale(hp))
    alpha = cho_solve((L, True), Y)
    value = _nll_from_factor(L, alpha, Y)

    # dNLL/dtheta = 1/2 tr(W dK/dtheta),  W = 3 K^-1 - alpha alpha^T
    K_inv = _cholesky_inverse(L)
    W = OUTPUT_DIM * K_inv - alpha @ alpha.T

    grad = np.empty(N_HYPER)
    lengthscales = hp.lengthscales
    Wg = [W * g for g in weights]
    for k in range(len(KERNELS)):
        offset = k * (1 + INPUT_DIM)
        grad[offset] = 0.5 * np.sum(W * parts[k])
    for m in range(INPUT_DIM):
        D = X[:, m][:, None] - X[:, m][None, :]
        D *= D
        for k in range(len(KERNELS)):
            offset = k * (1 + INPUT_DIM)
            grad[offset + 1 + m] = 0.5 * np.sum(Wg[k] * D) / lengthscales[k, m] ** 2
    grad[-1] = 0.5 * np.trace(W) * 2.0 * noise_var
    return value, grad


def nll_grad(dataset: Dataset, hp: Hyperparams) -> np.ndarray:
    return nll_and_grad(dataset, hp)[1]
