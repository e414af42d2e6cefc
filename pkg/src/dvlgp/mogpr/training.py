"""Hyperparameter learning by Adam on the negative log marginal likelihood."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError
from .kernels import Hyperparams
from .model import Dataset, GpModel, fit, initial_hyperparams, nll_and_grad

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    iterations: int = 50
    eps: float = 1e-8

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam moment coefficients must lie in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class Adam:
    """Bias-corrected Adam on a flat parameter vector (minimization)."""

    def __init__(self, config: OptimizerConfig, size: int):
        self.config = config
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        c = self.config
        self.t += 1
        self.m = c.beta1 * self.m + (1.0 - c.beta1) * grad
        self.v = c.beta2 * self.v + (1.0 - c.beta2) * grad * grad
        m_hat = self.m / (1.0 - c.beta1**self.t)
        v_hat = self.v / (1.0 - c.beta2**self.t)
        return params - c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def train(
    dataset: Dataset,
    init_hp: Hyperparams | None = None,
    opt: OptimizerConfig | None = None,
    init_noise_std: float = 0.02,
) -> GpModel:
    """
    Fit log-hyperparameters with Adam and return the model at the final iterate.

    ``model.nll_trace[i]`` is the NLL evaluated at the i-th iterate, before the
    i-th update, so ``nll_trace[0]`` is the initial NLL and the trace has exactly
    ``opt.iterations`` entries. ``model.nll`` is the NLL at the returned iterate.

    Raises
    ------
    TrainingError
        If the objective or its gradient becomes non-finite.
    """
    opt = opt or OptimizerConfig()
    hp = init_hp or initial_hyperparams(dataset, init_noise_std)
    params = hp.to_vector()
    adam = Adam(opt, params.size)
    trace = np.empty(opt.iterations)
    for i in range(opt.iterations):
        value, grad = nll_and_grad(dataset, Hyperparams.from_vector(params))
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            raise TrainingError(f"non-finite NLL at iteration {i}", iteration=i)
        trace[i] = value
        log.debug("iteration %d nll %.6f", i, value)
        params = adam.step(params, grad)
    final = Hyperparams.from_vector(params)
    model = fit(dataset, final, nll_trace=trace)
    if not np.isfinite(model.nll):
        raise TrainingError(f"non-finite NLL at iteration {opt.iterations}", iteration=opt.iterations)
    return model
