"""JSON model files.

Floats are written with ``repr`` precision so a save/load round trip is exact,
and the output is byte-stable for identical models.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import InputError
from .kernels import Hyperparams
from .model import Dataset, GpModel, fit

FORMAT = "dvlgp-mogpr"
FORMAT_VERSION = 1


def model_to_dict(model: GpModel) -> dict:
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kernels": ["se", "matern32", "rq"],
        "log_hyperparams": model.hyperparams.to_vector().tolist(),
        "jitter": model.jitter,
        "nll": model.nll,
        "nll_trace": np.asarray(model.nll_trace, float).tolist(),
        "inputs": model.dataset.inputs.tolist(),
        "targets": model.dataset.targets.tolist(),
    }


def model_from_dict(data: dict) -> GpModel:
    if data.get("format") != FORMAT:
        raise InputError(f"not a {FORMAT} model file")
    if data.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported model format version {data.get('version')!r}")
    try:
        dataset = Dataset(np.array(data["inputs"]), np.array(data["targets"]))
        hp = Hyperparams.from_vector(np.array(data["log_hyperparams"]))
        return fit(dataset, hp, jitter=float(data["jitter"]), nll_trace=data.get("nll_trace"))
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed model file: {exc}") from exc


def save_model(path, model: GpModel) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(model_to_dict(model), separators=(",", ":")) + "\n")
    except OSError as exc:
        raise InputError(f"cannot write model file {path}: {exc}") from exc
    return path


def load_model(path) -> GpModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(data)
