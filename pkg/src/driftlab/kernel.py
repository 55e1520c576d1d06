"""Laplace-kernel drift fields over explicit sample batches.

The drift field at a query point x, given a batch of positives (data
samples) and a batch of negatives (model samples), is

    V(x) = attraction(x) - repulsion(x)

where each force is a kernel-weighted soft mean displacement:

    attraction(x) = sum_i softmax_i(-||x - y+_i|| / tau) * y+_i  -  x
    repulsion(x)  = sum_j softmax_j(-||x - y-_j|| / tau) * y-_j  -  x

NOTE the minus sign in the kernel exponent: k(x, y) = exp(-||x - y|| / tau)
decays with distance, which is what makes both forces local. This
construction is sometimes written with the exponent's sign dropped; a
growing kernel would weight the farthest samples most and does not work.
Keep the exponent negative.

The query term `- x` cancels between the two forces, so the batched
`drift` computes the difference of the two weighted means directly. Both
means go through one code path, which yields two exact identities in
floating point:

  * anti-symmetry: drift(X, P, N) == -drift(X, N, P) entrywise, because
    swapping roles swaps the operands of a single subtraction;
  * fixed point: drift(X, P, P) == 0 exactly, because both means are
    computed by identical operations on identical inputs.

`DriftConfig.tau` may hold several temperatures; the per-temperature drift
fields are averaged with uniform weights. `include_self` controls whether
a negative sample bitwise-equal to the query contributes to repulsion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DriftConfig",
    "pairwise_distances",
    "laplace_kernel",
    "weighted_mean",
    "attraction",
    "repulsion",
    "drift",
]


@dataclass(frozen=True)
class DriftConfig:
    """Temperature and estimator policy for drift-field evaluation."""

    tau: float | tuple[float, ...] = 1.0
    include_self: bool = True
    stab_shift: bool = True

    def __post_init__(self) -> None:
        taus = self.tau if isinstance(self.tau, (tuple, list)) else (self.tau,)
        taus = tuple(float(t) for t in taus)
        if not taus:
            raise ValueError("at least one temperature is required")
        for t in taus:
            if not (math.isfinite(t) and t > 0.0):
                raise ValueError(f"temperatures must be finite and > 0, got {t}")
        object.__setattr__(self, "tau", taus if len(taus) > 1 else taus[0])

    @property
    def taus(self) -> tuple[float, ...]:
        return self.tau if isinstance(self.tau, tuple) else (self.tau,)


def _as_batch(name: str, x: np.ndarray) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty B x d matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_point(name: str, x: np.ndarray) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] < 1:
        raise ValueError(f"{name} must be a 1-D point, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distances between rows of `a` (n x d) and `b` (m x d).

    Accumulates squared coordinate differences explicitly rather than
    expanding ||a||^2 - 2ab + ||b||^2; the expansion loses ~1e-8 absolute
    accuracy near zero, which would poison the 1e-12 identity tolerances
    downstream.
    """
    n, d = a.shape
    acc = np.zeros((n, b.shape[0]), dtype=np.float64)
    for j in range(d):
        diff = a[:, j, None] - b[None, :, j]
        acc += diff * diff
    return np.sqrt(acc)


def laplace_kernel(x: np.ndarray, y: np.ndarray, tau: float) -> float:
    """k(x, y) = exp(-||x - y||_2 / tau), in (0, 1]; 1 iff x == y."""
    xa = _as_point("x", x)
    ya = _as_point("y", y)
    if xa.shape != ya.shape:
        raise ValueError(f"dimension mismatch: {xa.shape} vs {ya.shape}")
    if not (math.isfinite(tau) and tau > 0.0):
        raise ValueError(f"tau must be finite and > 0, got {tau}")
    diff = xa - ya
    return math.exp(-math.sqrt(float(np.dot(diff, diff))) / tau)


def _self_mask(queries: np.ndarray, batch: np.ndarray) -> np.ndarray:
    """mask[i, j] is True where batch row j is bitwise-equal to query row i."""
    eq = queries[:, None, 0] == batch[None, :, 0]
    for j in range(1, queries.shape[1]):
        eq &= queries[:, None, j] == batch[None, :, j]
    return eq


def _weighted_means(
    queries: np.ndarray,
    batch: np.ndarray,
    tau: float,
    stab_shift: bool,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Softmax(-dist/tau)-weighted mean of `batch` rows, one per query row.

    `mask` marks excluded batch entries. This single path serves both
    attraction and repulsion so their difference enjoys the exact
    cancellation properties documented at module level.
    """
    logits = -pairwise_distances(queries, batch) / tau
    if mask is not None:
        if mask.all(axis=1).any():
            raise ValueError("a query excludes every negative sample (empty batch)")
        logits = np.where(mask, -np.inf, logits)
    if stab_shift:
        logits = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    z = weights.sum(axis=1, keepdims=True)
    if not np.isfinite(z).all() or (z <= 0.0).any():
        raise ValueError("kernel weights overflowed or vanished; enable stab_shift or raise tau")
    return (weights @ batch) / z


def weighted_mean(
    query: np.ndarray, batch: np.ndarray, tau: float, stab_shift: bool = True
) -> np.ndarray:
    """Kernel-weighted mean of batch rows as seen from one query point."""
    q = _as_point("query", query)
    b = _as_batch("batch", batch)
    if q.shape[0] != b.shape[1]:
        raise ValueError(f"dimension mismatch: query d={q.shape[0]}, batch d={b.shape[1]}")
    if not (math.isfinite(tau) and tau > 0.0):
        raise ValueError(f"tau must be finite and > 0, got {tau}")
    return _weighted_means(q[None, :], b, tau, stab_shift)[0]


def attraction(
    query: np.ndarray, positives: np.ndarray, cfg: DriftConfig = DriftConfig()
) -> np.ndarray:
    """Pull toward the kernel-weighted mean of the positives."""
    q = _as_point("query", query)
    p = _as_batch("positives", positives)
    if q.shape[0] != p.shape[1]:
        raise ValueError(f"dimension mismatch: query d={q.shape[0]}, positives d={p.shape[1]}")
    means = [_weighted_means(q[None, :], p, t, cfg.stab_shift)[0] for t in cfg.taus]
    return sum(means) / len(means) - q


def repulsion(
    query: np.ndarray, negatives: np.ndarray, cfg: DriftConfig = DriftConfig()
) -> np.ndarray:
    """Push from the kernel-weighted mean of the negatives.

    With include_self=False, negatives bitwise-equal to the query are
    dropped; if nothing remains the batch is effectively empty.
    """
    q = _as_point("query", query)
    n = _as_batch("negatives", negatives)
    if q.shape[0] != n.shape[1]:
        raise ValueError(f"dimension mismatch: query d={q.shape[0]}, negatives d={n.shape[1]}")
    mask = None if cfg.include_self else _self_mask(q[None, :], n)
    means = [_weighted_means(q[None, :], n, t, cfg.stab_shift, mask)[0] for t in cfg.taus]
    return sum(means) / len(means) - q


def drift(
    queries: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    cfg: DriftConfig = DriftConfig(),
) -> np.ndarray:
    """Drift field attraction - repulsion, one row per query row.

    The query offsets cancel between the two forces, so each
    per-temperature field is the difference of two weighted means; fields
    are averaged across temperatures.
    """
    x = _as_batch("queries", queries)
    p = _as_batch("positives", positives)
    n = _as_batch("negatives", negatives)
    d = x.shape[1]
    if p.shape[1] != d or n.shape[1] != d:
        raise ValueError(
            f"dimension mismatch: queries d={d}, positives d={p.shape[1]}, negatives d={n.shape[1]}"
        )
    mask = None if cfg.include_self else _self_mask(x, n)
    fields = [
        _weighted_means(x, p, t, cfg.stab_shift) - _weighted_means(x, n, t, cfg.stab_shift, mask)
        for t in cfg.taus
    ]
    return sum(fields) / len(fields)
