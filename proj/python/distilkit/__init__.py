"""Teacher/student distillation toolkit with conditional teacher-student targets."""

import json

from ._distilkit import (
    ConfigError,
    DivergenceError,
    IoError,
    Network,
    adapt,
    conditional_loss,
    conditional_mask,
    entropy,
    gradcheck,
    hard_ce_loss,
    interpolated_loss,
    kl_divergence,
    run_experiment_json,
    soft_ts_loss,
    softmax,
)


def run_experiment(config=None, threads=1):
    """Runs an experiment from a config dict and returns the result rows as dicts."""
    text = json.dumps(config) if config is not None else ""
    return json.loads(run_experiment_json(text, threads))


__all__ = [
    "ConfigError",
    "DivergenceError",
    "IoError",
    "Network",
    "adapt",
    "conditional_loss",
    "conditional_mask",
    "entropy",
    "gradcheck",
    "hard_ce_loss",
    "interpolated_loss",
    "kl_divergence",
    "run_experiment",
    "soft_ts_loss",
    "softmax",
]
