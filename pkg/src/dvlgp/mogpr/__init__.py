from .kernels import (
    KERNELS,
    N_HYPER,
    Hyperparams,
    cross_covariance,
    gram_matrix,
    kernel_eval,
    kernel_matrix,
    kernel_sum,
)
from .model import (
    Dataset,
    GpModel,
    Prediction,
    fit,
    initial_hyperparams,
    nll,
    nll_and_grad,
    nll_grad,
    predict,
    subsample,
)
from .storage import load_model, save_model
from .training import Adam, OptimizerConfig, train

__all__ = [
    "KERNELS",
    "N_HYPER",
    "Adam",
    "Dataset",
    "GpModel",
    "Hyperparams",
    "OptimizerConfig",
    "Prediction",
    "cross_covariance",
    "fit",
    "gram_matrix",
    "initial_hyperparams",
    "kernel_eval",
    "kernel_matrix",
    "kernel_sum",
    "load_model",
    "nll",
    "nll_and_grad",
    "nll_grad",
    "predict",
    "save_model",
    "subsample",
    "train",
]
