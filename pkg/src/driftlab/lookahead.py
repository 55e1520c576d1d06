"""Lookahead regression targets built from chained drift fields.

Standard drift training regresses the generator output batch toward
`outputs + drift(outputs, positives, outputs)`: the model batch serves as
its own negative set. The lookahead extension repeats the displacement
k+1 times, each stage drifting the whole batch produced by the previous
stage:

    batch_0 = outputs
    drift_i = drift(batch_i, positives, batch_i)
    batch_{i+1} = batch_i + drift_i

and regresses toward a weighted cumulative displacement

    target = outputs + sum_i w_i * drift_i.

With the default weights (all 1) the target telescopes to batch_{k+1},
and k=0 reduces bit-for-bit to the standard drift target: the stage-0
drift is a direct drift call on the raw outputs, and multiplying by the
weight 1.0 is an exact floating-point identity.

Positives stay fixed across stages; only the model batch is pushed
forward. Later stages see a negative batch closer to the data, so their
drifts shrink; once outputs match the positives exactly, every stage
drift is exactly zero and the target equals the outputs.

The target is a constant for the optimizer: no gradient flows through the
drift computation (the trainer never differentiates it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import DriftConfig, drift

__all__ = ["LookaheadPlan", "LookaheadStage", "LookaheadTrace", "lookahead_trace", "lookahead_target"]


@dataclass(frozen=True)
class LookaheadPlan:
    """Depth k and the k+1 stage weights of the cumulative displacement."""

    k: int = 0
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 0:
            raise ValueError(f"k must be a nonnegative integer, got {self.k}")
        w = self.weights
        if w is None:
            w = (1.0,) * (self.k + 1)
        w = tuple(float(x) for x in w)
        if len(w) != self.k + 1:
            raise ValueError(f"need {self.k + 1} weights for k={self.k}, got {len(w)}")
        if not all(np.isfinite(x) and x >= 0.0 for x in w):
            raise ValueError(f"weights must be finite and >= 0, got {w}")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class LookaheadStage:
    """One stage: its input batch (the empirical q_i) and the drift on it."""

    index: int
    negatives: np.ndarray
    drift: np.ndarray


@dataclass(frozen=True)
class LookaheadTrace:
    stages: tuple[LookaheadStage, ...]
    target: np.ndarray


def lookahead_trace(
    outputs: np.ndarray,
    positives: np.ndarray,
    plan: LookaheadPlan = LookaheadPlan(),
    cfg: DriftConfig = DriftConfig(),
) -> LookaheadTrace:
    """Run all k+1 drift stages and accumulate the regression target.

    The target accumulator and the pushed-forward batch advance through
    identical add operations, so with unit weights the target equals the
    final batch bitwise, not just approximately.
    """
    current = np.asarray(outputs, dtype=np.float64)
    target = current
    stages = []
    for i in range(plan.k + 1):
        v = drift(current, positives, current, cfg)
        stages.append(LookaheadStage(index=i, negatives=current, drift=v))
        w = plan.weights[i]
        # w == 1.0 keeps both updates bit-identical (1.0 * v is exact).
        target = target + (v if w == 1.0 else w * v)
        current = current + v
    return LookaheadTrace(stages=tuple(stages), target=target)


def lookahead_target(
    outputs: np.ndarray,
    positives: np.ndarray,
    plan: LookaheadPlan = LookaheadPlan(),
    cfg: DriftConfig = DriftConfig(),
) -> np.ndarray:
    """The regression target alone; see lookahead_trace."""
    return lookahead_trace(outputs, positives, plan, cfg).target
