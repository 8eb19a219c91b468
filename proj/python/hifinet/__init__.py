"""Python bindings for the HiFiNet fault diagnosis toolkit."""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    DataError,
    DegenerateLabelsError,
    DivergenceError,
    DomainError,
    HifinetError,
    ShapeError,
    __version__,
    class_names,
    f1_drop,
    link_energy,
    payload_bits,
    schedule_energy,
    window_label,
)


def default_config():
    return json.loads(_core.default_config())


def normalize_config(config):
    return json.loads(_core.normalize_config(json.dumps(config)))


def config_hash(config):
    return _core.config_hash(json.dumps(config))


def metrics(truth, probabilities):
    """Accuracy, weighted precision/recall/F1, per-class scores and AUPRC."""
    return json.loads(_core.metrics(list(truth), [list(p) for p in probabilities]))


def run(command, config=None, workdir=".", rate=None):
    """Runs one CLI command ("inject", "all", ...) with a config dict."""
    text = json.dumps(config) if config is not None else ""
    _core.run_command(command, text, os.fspath(workdir), rate)


__all__ = [
    "ConfigError", "DataError", "DegenerateLabelsError", "DivergenceError", "DomainError", "HifinetError",
    "ShapeError", "__version__", "class_names", "config_hash", "default_config", "f1_drop", "link_energy",
    "metrics", "normalize_config", "payload_bits", "run", "schedule_energy", "window_label",
]
