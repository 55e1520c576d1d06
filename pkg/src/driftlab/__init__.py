"""driftlab: kernel drift-field generative training on 2D toy data.

A one-step generator is regressed toward its own outputs displaced by a
Laplace-kernel drift field (attraction to data samples, repulsion from
generated samples), optionally chained several stages ahead of the
current batch. See README.md for the method summary, the command-line
interface, and the acceptance suite.
"""

from .config import ConfigError, OptimizerSettings, RunConfig, default_config
from .datasets import ToySpec, sample_data, sample_noise
from .diagnostics import DecompositionReport, battery, drift_divergence, verify_rewrite
from .generator import (
    AdamState,
    EmaParams,
    GeneratorParams,
    Gradients,
    TrainingDiverged,
    adam_step,
    ema_update,
    forward,
    init_adam,
    init_ema,
    init_params,
    loss_and_grad,
)
from .kernel import DriftConfig, attraction, drift, laplace_kernel, repulsion, weighted_mean
from .lookahead import LookaheadPlan, LookaheadTrace, lookahead_target, lookahead_trace
from .metrics import MetricReport, compute_metrics, energy_distance, sliced_w1
from .rng import Stream, derive_seed
from .trainer import TrainState, evaluate, init_state, train_run, train_step

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "OptimizerSettings",
    "RunConfig",
    "default_config",
    "ToySpec",
    "sample_data",
    "sample_noise",
    "DecompositionReport",
    "battery",
    "drift_divergence",
    "verify_rewrite",
    "AdamState",
    "EmaParams",
    "GeneratorParams",
    "Gradients",
    "TrainingDiverged",
    "adam_step",
    "ema_update",
    "forward",
    "init_adam",
    "init_ema",
    "init_params",
    "loss_and_grad",
    "DriftConfig",
    "attraction",
    "drift",
    "laplace_kernel",
    "repulsion",
    "weighted_mean",
    "LookaheadPlan",
    "LookaheadTrace",
    "lookahead_target",
    "lookahead_trace",
    "MetricReport",
    "compute_metrics",
    "energy_distance",
    "sliced_w1",
    "Stream",
    "derive_seed",
    "TrainState",
    "evaluate",
    "init_state",
    "train_run",
    "train_step",
]
