"""The training loop: drift targets, optimizer steps, evals, checkpoints.

One step (method="lookahead"):

    noise     <- noise stream                    (batch_size_model rows)
    outputs   <- generator forward
    positives <- data stream                     (batch_size_data rows)
    target    <- lookahead target on (outputs, positives), held constant
    loss      <- mean squared row distance outputs vs target
    Adam update, then EMA update.

method="standard" replaces the target line with the plain one-stage
displacement `outputs + drift(outputs, positives, outputs)` through a
dedicated code path. With plan.k=0 the two methods produce bit-identical
trajectories; keeping both makes that reduction checkable end to end.

Randomness is split into four documented substreams of the run seed:
index 0 initializes parameters, 1 feeds training noise, 2 feeds training
data (further split by the dataset's own seed), 3 feeds evaluation
(eval noise, then eval data, then slicing directions, in that order).
Stream states are part of the checkpoint, so a resumed run replays the
exact draw sequence of an uninterrupted one.

Telemetry: every step yields the instantaneous loss and per-stage
batch-mean drift norms. The metrics log written at eval steps records
window averages of those quantities (mean over the steps since the
previous eval), which smooths single-batch noise out of convergence
curves, alongside energy distance and sliced W1 between EMA samples and
fresh data. The log is a JSON-lines file rewritten atomically at each
eval; `wallclock` (seconds since run start) is the one field that varies
between otherwise identical runs.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .checkpoint import atomic_write_bytes, load_state, save_state
from .config import RunConfig, config_from_dict, config_to_dict, save_config
from .datasets import sample_data, sample_noise
from .generator import (
    AdamState,
    EmaParams,
    GeneratorParams,
    TrainingDiverged,
    adam_step,
    backward,
    ema_update,
    forward,
    forward_cached,
    init_adam,
    init_ema,
    init_params,
)
from .kernel import drift
from .lookahead import lookahead_trace
from .metrics import compute_metrics
from .rng import Stream

__all__ = [
    "StepRecord",
    "TrainState",
    "init_state",
    "train_step",
    "train_run",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
    "METRICS_NAME",
]

STREAM_PARAMS, STREAM_NOISE, STREAM_DATA, STREAM_METRICS = 0, 1, 2, 3
METRICS_NAME = "metrics.jsonl"
CHECKPOINT_FORMAT = 1


@dataclass(frozen=True)
class StepRecord:
    """Instantaneous telemetry for one completed step."""

    step: int
    loss: float
    drift_norms: tuple[float, ...]


@dataclass
class TrainState:
    params: GeneratorParams
    adam: AdamState
    ema: EmaParams
    step: int
    noise_stream: Stream
    data_stream: Stream
    metrics_stream: Stream


def init_state(config: RunConfig) -> TrainState:
    root = Stream(config.seed)
    params = init_params(config.sizes, root.substream(STREAM_PARAMS), config.activation)
    opt = config.optimizer
    return TrainState(
        params=params,
        adam=init_adam(params, lr=opt.lr, beta1=opt.beta1, beta2=opt.beta2, eps=opt.eps),
        ema=init_ema(params, config.ema_decay),
        step=0,
        noise_stream=root.substream(STREAM_NOISE),
        data_stream=root.substream(STREAM_DATA).substream(config.dataset.seed),
        metrics_stream=root.substream(STREAM_METRICS),
    )


def _batch_mean_norm(v: np.ndarray) -> float:
    return float(np.mean(np.sqrt((v * v).sum(axis=1))))


def train_step(state: TrainState, config: RunConfig) -> StepRecord:
    """One optimizer step; advances the state in place."""
    noise = sample_noise(config.noise_dim, config.batch_size_model, state.noise_stream)
    outputs, cache = forward_cached(state.params, noise)
    if not np.isfinite(outputs).all():
        raise TrainingDiverged(f"non-finite generator outputs at step {state.step + 1}")
    positives = sample_data(config.dataset, config.batch_size_data, state.data_stream)

    if config.method == "standard":
        v = drift(outputs, positives, outputs, config.drift)
        target = outputs + v
        norms = (_batch_mean_norm(v),)
    else:
        trace = lookahead_trace(outputs, positives, config.plan, config.drift)
        target = trace.target
        norms = tuple(_batch_mean_norm(s.drift) for s in trace.stages)

    residual = outputs - target
    loss = float(np.sum(residual * residual) / outputs.shape[0])
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss at step {state.step + 1}")
    grads = backward(state.params, cache, 2.0 * residual / outputs.shape[0])
    adam_step(state.params, grads, state.adam)
    ema_update(state.ema, state.params)
    state.step += 1
    return StepRecord(step=state.step, loss=loss, drift_norms=norms)


def evaluate(state: TrainState, config: RunConfig) -> dict:
    """Distribution metrics for the current model; draws from the
    metrics stream in the documented order (noise, data, directions)."""
    eval_noise = sample_noise(config.noise_dim, config.eval_size, state.metrics_stream)
    params = state.ema.as_params(state.params) if config.eval_use_ema else state.params
    generated = forward(params, eval_noise)
    data = sample_data(config.dataset, config.eval_size, state.metrics_stream)
    report = compute_metrics(generated, data, config.projections, state.metrics_stream)
    return {
        "energy_distance": report.energy_distance,
        "sliced_w1": report.sliced_w1,
        "eval_size": config.eval_size,
        "projections": report.projections,
    }


def _stream_state(s: Stream) -> list[int]:
    return [int(s.seed), int(s.counter)]


def save_checkpoint(path: str, state: TrainState, config: RunConfig) -> None:
    """Self-describing npz archive; bit-exact round trip."""
    arrays: dict[str, np.ndarray] = {}
    for i, (w, b) in enumerate(zip(state.params.weights, state.params.biases)):
        arrays[f"w_{i}"] = w
        arrays[f"b_{i}"] = b
        arrays[f"ema_w_{i}"] = state.ema.weights[i]
        arrays[f"ema_b_{i}"] = state.ema.biases[i]
        arrays[f"adam_mw_{i}"] = state.adam.m_w[i]
        arrays[f"adam_vw_{i}"] = state.adam.v_w[i]
        arrays[f"adam_mb_{i}"] = state.adam.m_b[i]
        arrays[f"adam_vb_{i}"] = state.adam.v_b[i]
    meta = {
        "format": CHECKPOINT_FORMAT,
        "step": state.step,
        "seed": config.seed,
        "sizes": list(state.params.sizes),
        "activation": state.params.activation,
        "ema_decay": state.ema.decay,
        "adam": {
            "lr": state.adam.lr,
            "beta1": state.adam.beta1,
            "beta2": state.adam.beta2,
            "eps": state.adam.eps,
            "step": state.adam.step,
        },
        "streams": {
            "noise": _stream_state(state.noise_stream),
            "data": _stream_state(state.data_stream),
            "metrics": _stream_state(state.metrics_stream),
        },
        "config": config_to_dict(config),
    }
    save_state(path, arrays, meta)


def load_checkpoint(path: str) -> tuple[TrainState, RunConfig]:
    """Rebuild a TrainState (and the run's config) from an archive."""
    arrays, meta = load_state(path)
    for key in ("format", "step", "sizes", "activation", "ema_decay", "adam", "streams", "config"):
        if key not in meta:
            raise ValueError(f"{path}: checkpoint metadata is missing field {key!r}")
    config = config_from_dict(meta["config"])
    sizes = tuple(int(s) for s in meta["sizes"])
    n_layers = len(sizes) - 1

    def grab(name: str) -> np.ndarray:
        if name not in arrays:
            raise ValueError(f"{path}: checkpoint is missing array {name!r}")
        return np.array(arrays[name], dtype=np.float64)

    weights = [grab(f"w_{i}") for i in range(n_layers)]
    biases = [grab(f"b_{i}") for i in range(n_layers)]
    params = GeneratorParams(sizes, weights, biases, str(meta["activation"]))
    adam_meta = meta["adam"]
    adam = AdamState(
        lr=float(adam_meta["lr"]),
        beta1=float(adam_meta["beta1"]),
        beta2=float(adam_meta["beta2"]),
        eps=float(adam_meta["eps"]),
        step=int(adam_meta["step"]),
        m_w=[grab(f"adam_mw_{i}") for i in range(n_layers)],
        v_w=[grab(f"adam_vw_{i}") for i in range(n_layers)],
        m_b=[grab(f"adam_mb_{i}") for i in range(n_layers)],
        v_b=[grab(f"adam_vb_{i}") for i in range(n_layers)],
    )
    ema = EmaParams(
        float(meta["ema_decay"]),
        [grab(f"ema_w_{i}") for i in range(n_layers)],
        [grab(f"ema_b_{i}") for i in range(n_layers)],
    )
    streams = meta["streams"]
    state = TrainState(
        params=params,
        adam=adam,
        ema=ema,
        step=int(meta["step"]),
        noise_stream=Stream.from_state(streams["noise"]),
        data_stream=Stream.from_state(streams["data"]),
        metrics_stream=Stream.from_state(streams["metrics"]),
    )
    return state, config


def _write_metrics(path: str, records: list[dict]) -> None:
    text = "".join(json.dumps(r) + "\n" for r in records)
    atomic_write_bytes(path, text.encode("utf-8"))


def _load_metrics(path: str) -> list[dict]:
    if not os.path.exists(path):
        return []
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _checkpoint_name(step: int) -> str:
    return f"checkpoint_{step:08d}.npz"


def train_run(
    config: RunConfig, resume_from: str | None = None, render: bool = True
) -> tuple[TrainState, list[dict]]:
    """Run the loop to config.steps; returns final state and the log.

    Every eval_every steps a metrics record is appended; every
    checkpoint_every steps (and at the end) a checkpoint lands in
    out_dir. On divergence the last periodic checkpoint is left as the
    most recent good state, a diagnostic record is logged, and the
    exception propagates.
    """
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    save_config(os.path.join(out_dir, "config.json"), config)
    metrics_path = os.path.join(out_dir, METRICS_NAME)

    if resume_from is not None:
        state, ckpt_config = load_checkpoint(resume_from)
        if config_to_dict(ckpt_config) != config_to_dict(config):
            raise ValueError("checkpoint config does not match the requested run config")
        records = _load_metrics(metrics_path)
        records = [r for r in records if r.get("step", 0) <= state.step]
    else:
        state = init_state(config)
        records = []
    _write_metrics(metrics_path, records)

    t0 = time.monotonic()
    window_losses: list[float] = []
    window_norms: list[tuple[float, ...]] = []
    try:
        while state.step < config.steps:
            rec = train_step(state, config)
            window_losses.append(rec.loss)
            window_norms.append(rec.drift_norms)
            if state.step % config.eval_every == 0:
                entry = {
                    "step": state.step,
                    "loss": float(np.mean(window_losses)),
                    "drift_norms": [float(c) for c in np.mean(window_norms, axis=0)],
                }
                entry.update(evaluate(state, config))
                entry["wallclock"] = time.monotonic() - t0
                records.append(entry)
                _write_metrics(metrics_path, records)
                window_losses.clear()
                window_norms.clear()
            if state.step % config.checkpoint_every == 0 or state.step == config.steps:
                save_checkpoint(os.path.join(out_dir, _checkpoint_name(state.step)), state, config)
    except TrainingDiverged as exc:
        records.append({"step": state.step, "event": "diverged", "error": str(exc)})
        _write_metrics(metrics_path, records)
        raise

    if render:
        _render_run_figures(out_dir, state, config, records)
    return state, records


def _render_run_figures(
    out_dir: str, state: TrainState, config: RunConfig, records: list[dict]
) -> None:
    # Imported lazily so library use never touches the plotting stack.
    from .render import render_metrics, render_scatter

    stream = state.metrics_stream.substream(0)
    noise = sample_noise(config.noise_dim, config.eval_size, stream)
    params = state.ema.as_params(state.params) if config.eval_use_ema else state.params
    generated = forward(params, noise)
    data = sample_data(config.dataset, config.eval_size, stream)
    render_scatter(
        os.path.join(out_dir, "final_scatter.png"),
        [("data", data), ("generated", generated)],
    )
    if records:
        render_metrics(os.path.join(out_dir, "metrics.png"), records)
