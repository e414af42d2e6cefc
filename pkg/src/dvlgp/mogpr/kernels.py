"""
ARD kernels over beam-velocity inputs.

Three kernels are summed, each with its own signal variance and per-input
length scales: squared exponential, Matern 3/2 and rational quadratic (with
shape parameter fixed at 1). All hyperparameters live in log space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNELS = ("se", "matern32", "rq")
INPUT_DIM = 4
N_HYPER = len(KERNELS) * (1 + INPUT_DIM) + 1

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Hyperparams:
    """
    Log-space hyperparameters.

    Attributes
    ----------
    log_signal_var : (3,) array
        ``log(sigma_f^2)`` per kernel, in the order of ``KERNELS``.
    log_lengthscales : (3, 4) array
        ``log(sigma_m)`` per kernel and input dimension.
    log_noise_std : float
        ``log(sigma_n)``, shared observation noise.
    """

    log_signal_var: np.ndarray
    log_lengthscales: np.ndarray
    log_noise_std: float

    def __post_init__(self):
        lsv = np.array(self.log_signal_var, dtype=float).reshape(len(KERNELS))
        lls = np.array(self.log_lengthscales, dtype=float).reshape(len(KERNELS), INPUT_DIM)
        object.__setattr__(self, "log_signal_var", lsv)
        object.__setattr__(self, "log_lengthscales", lls)
        object.__setattr__(self, "log_noise_std", float(self.log_noise_std))
        if not (np.all(np.isfinite(self.to_vector()))):
            raise ValueError("hyperparameters must be finite")

    @classmethod
    def from_natural(cls, signal_var, lengthscales, noise_std) -> "Hyperparams":
        signal_var = np.broadcast_to(np.asarray(signal_var, float), (len(KERNELS),))
        lengthscales = np.broadcast_to(
            np.asarray(lengthscales, float), (len(KERNELS), INPUT_DIM)
        )
        if np.any(signal_var <= 0) or np.any(lengthscales <= 0) or noise_std <= 0:
            raise ValueError("hyperparameters must be strictly positive")
        return cls(np.log(signal_var), np.log(lengthscales), float(np.log(noise_std)))

    @classmethod
    def from_vector(cls, vec) -> "Hyperparams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (N_HYPER,):
            raise ValueError(f"expected {N_HYPER} log-hyperparameters, got {vec.shape}")
        blocks = vec[:-1].reshape(len(KERNELS), 1 + INPUT_DIM)
        return cls(blocks[:, 0], blocks[:, 1:], vec[-1])

    def to_vector(self) -> np.ndarray:
        """Flatten as ``[lsv_se, lls_se(4), lsv_m32, lls_m32(4), lsv_rq, lls_rq(4), lnoise]``."""
        blocks = np.column_stack([self.log_signal_var, self.log_lengthscales])
        return np.concatenate([blocks.ravel(), [self.log_noise_std]])

    @property
    def signal_var(self) -> np.ndarray:
        return np.exp(self.log_signal_var)

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)

    @property
    def noise_std(self) -> float:
        return float(np.exp(self.log_noise_std))

    @property
    def prior_variance(self) -> float:
        """Latent prior variance ``k(x, x)`` of the summed kernel."""
        return float(self.signal_var.sum())


def _kernel_index(kind: str) -> int:
    try:
        return KERNELS.index(kind)
    except ValueError:
        raise ValueError(f"unknown kernel {kind!r}; expected one of {KERNELS}") from None


def _profile(kind: str, s: float, r2):
    """Kernel value as a function of the scaled squared distance ``r2``."""
    if kind == "se":
        return s * np.exp(-0.5 * r2)
    if kind == "matern32":
        r = np.sqrt(r2)
        return s * (1.0 + _SQRT3 * r) * np.exp(-_SQRT3 * r)
    return s / (1.0 + 0.5 * r2)


def kernel_eval(kind: str, x, z, hp: Hyperparams) -> float:
    """Single kernel ``kind`` evaluated at one pair of 4-vectors."""
    k = _kernel_index(kind)
    d = (np.asarray(x, float) - np.asarray(z, float)) / hp.lengthscales[k]
    return float(_profile(kind, hp.signal_var[k], d @ d))


def kernel_sum(x, z, hp: Hyperparams) -> float:
    return sum(kernel_eval(kind, x, z, hp) for kind in KERNELS)


def _exact_sqdist(X, Z, lengthscales) -> np.ndarray:
    out = np.zeros((len(X), len(Z)))
    for m in range(X.shape[1]):
        diff = X[:, m][:, None] - Z[:, m][None, :]
        out += (diff / lengthscales[m]) ** 2
    return out


def kernel_matrix(kind: str, X, Z, hp: Hyperparams) -> np.ndarray:
    k = _kernel_index(kind)
    X = np.atleast_2d(np.asarray(X, float))
    Z = np.atleast_2d(np.asarray(Z, float))
    # the expanded-square shortcut loses ~1e-16 relative accuracy near r=0, which
    # turns the Matern sqrt into noise; use the exact difference form instead
    r2 = _exact_sqdist(X, Z, hp.lengthscales[k])
    return _profile(kind, hp.signal_var[k], r2)


def cross_covariance(X, Z, hp: Hyperparams) -> np.ndarray:
    """Summed-kernel matrix between rows of X and rows of Z."""
    return sum(kernel_matrix(kind, X, Z, hp) for kind in KERNELS)


def gram_matrix(X, hp: Hyperparams) -> np.ndarray:
    """Symmetric summed-kernel Gram matrix ``C(X, X)`` (no noise, no jitter)."""
    K = cross_covariance(X, X, hp)
    return 0.5 * (K + K.T)


def gram_and_gradient_factors(X, hp: Hyperparams):
    """
    Gram matrix plus the pieces needed for log-hyperparameter derivatives.

    Returns ``(K, parts, weights)`` where ``parts[k]`` is kernel k's Gram matrix
    and ``weights[k]`` is the matrix ``g_k`` such that
    ``dK/dlog l_{k,m} = g_k * (x_m - z_m)^2 / l_{k,m}^2``.
    """
    X = np.asarray(X, float)
    inv_sq = 1.0 / hp.lengthscales**2
    r2s = [np.zeros((len(X), len(X))) for _ in KERNELS]
    for m in range(X.shape[1]):
        D = X[:, m][:, None] - X[:, m][None, :]
        D *= D
        for k in range(len(KERNELS)):
            r2s[k] += inv_sq[k, m] * D
    parts, weights = [], []
    for k, kind in enumerate(KERNELS):
        s = hp.signal_var[k]
        r2 = r2s[k]
        if kind == "se":
            Kk = s * np.exp(-0.5 * r2)
            g = Kk
        elif kind == "matern32":
            r = np.sqrt(r2)
            e = np.exp(-_SQRT3 * r)
            Kk = s * (1.0 + _SQRT3 * r) * e
            g = 3.0 * s * e
        else:
            base = 1.0 / (1.0 + 0.5 * r2)
            Kk = s * base
            g = s * base * base
        parts.append(Kk)
        weights.append(g)
    K = sum(parts)
    return 0.5 * (K + K.T), parts, weights
