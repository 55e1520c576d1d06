"""Numerical verification of the drift-field identities.

The stage-1 drift admits an algebraic rewrite. Push every negative sample
forward by its stage-0 drift,

    pushed_j = y_j + V0_j,      V0_j = drift at y_j over the raw batch,

and evaluate the drift at the pushed query f1 = x + V0_x directly against
the pushed batch. Expanding the repulsion numerator splits it into a
position part (kernel weights at pushed locations, raw positions y_j) and
an extra term carrying the stage-0 drifts:

    rewritten = attraction_part - position_repulsion - extra_term
    extra_term = sum_j k(f1, pushed_j) * V0_j / sum_j k(f1, pushed_j)

The extra term is what distinguishes the stage-1 drift from the stage-0
drift: it measures how the drift at one location influences the drift
evaluated at another. `verify_rewrite` computes the stage-1 drift twice,
once through the production `drift` operation on the pushed batch and
once through a deliberately independent code path (plain Python loops,
no softmax stabilization, no call into `drift`), and reports the gap.

`battery` runs the full identity suite over seeded instances for the
command-line `diag` entry point. Its `kernel_sign="grow"` mode flips the
kernel exponent to demonstrate why the sign matters: anti-symmetry and
the fixed point survive the flip (they are structural), but kernel
locality fails, because a growing kernel weights the farthest samples
most.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import DriftConfig, drift
from .lookahead import LookaheadPlan, lookahead_target
from .rng import Stream

__all__ = ["DecompositionReport", "verify_rewrite", "drift_divergence", "battery"]

REWRITE_TOL = 1e-10
ANTISYM_TOL = 1e-12


@dataclass(frozen=True)
class DecompositionReport:
    """Stage-1 drift at one query, computed two ways, plus its split.

    direct and rewritten are the same quantity by algebra; max_abs_gap is
    the infinity norm of their difference. attraction_part minus
    position_repulsion minus extra_term reassembles the rewritten vector,
    and baseline_drift is the stage-0 drift at the raw query for
    comparison.
    """

    direct: np.ndarray
    rewritten: np.ndarray
    extra_term: np.ndarray
    baseline_drift: np.ndarray
    attraction_part: np.ndarray
    position_repulsion: np.ndarray
    max_abs_gap: float


def _loop_kernel(x, y, tau: float) -> float:
    s = 0.0
    for a, b in zip(x, y):
        s += (a - b) * (a - b)
    return math.exp(-math.sqrt(s) / tau)


def _loop_weighted_mean(query, rows, tau: float, exclude_self: bool):
    """Plain-loop kernel mean of `rows` seen from `query`; no stabilization."""
    d = len(query)
    num = [0.0] * d
    z = 0.0
    for row in rows:
        if exclude_self and all(a == b for a, b in zip(row, query)):
            continue
        w = _loop_kernel(query, row, tau)
        z += w
        for c in range(d):
            num[c] += w * row[c]
    if z == 0.0:
        raise ValueError("every sample excluded or all kernel weights underflowed")
    return [num[c] / z for c in range(d)]


def _loop_stage0_drift(query, positives, negatives, taus, include_self: bool):
    """Loop-path drift at one point, averaged over temperatures."""
    d = len(query)
    acc = [0.0] * d
    for tau in taus:
        a = _loop_weighted_mean(query, positives, tau, exclude_self=False)
        r = _loop_weighted_mean(query, negatives, tau, exclude_self=not include_self)
        for c in range(d):
            acc[c] += a[c] - r[c]
    return [acc[c] / len(taus) for c in range(d)]


def verify_rewrite(
    query_index: int,
    outputs: np.ndarray,
    positives: np.ndarray,
    cfg: DriftConfig = DriftConfig(),
) -> DecompositionReport:
    """Check the stage-1 rewrite identity at one query row.

    The direct side pushes the whole output batch forward with the
    production drift operation and evaluates the drift at the pushed
    query against the pushed batch. The rewritten side recomputes
    everything with explicit loops from the raw batches.
    """
    out = np.asarray(outputs, dtype=np.float64)
    pos = np.asarray(positives, dtype=np.float64)
    if not 0 <= query_index < out.shape[0]:
        raise ValueError(f"query_index {query_index} out of range for batch of {out.shape[0]}")

    v0 = drift(out, pos, out, cfg)
    batch1 = out + v0
    direct = drift(batch1, pos, batch1, cfg)[query_index]

    out_rows = [list(map(float, row)) for row in out]
    pos_rows = [list(map(float, row)) for row in pos]
    d = len(out_rows[0])
    taus = cfg.taus

    v0_rows = [
        _loop_stage0_drift(row, pos_rows, out_rows, taus, cfg.include_self) for row in out_rows
    ]
    pushed = [[y[c] + v[c] for c in range(d)] for y, v in zip(out_rows, v0_rows)]
    baseline = v0_rows[query_index]
    f1 = pushed[query_index]

    rewritten = [0.0] * d
    attraction_part = [0.0] * d
    position_rep = [0.0] * d
    extra = [0.0] * d
    for tau in taus:
        a = _loop_weighted_mean(f1, pos_rows, tau, exclude_self=False)
        z = 0.0
        num_pushed = [0.0] * d
        num_pos = [0.0] * d
        num_drift = [0.0] * d
        for y, v, py in zip(out_rows, v0_rows, pushed):
            if not cfg.include_self and all(a_ == b_ for a_, b_ in zip(py, f1)):
                continue
            w = _loop_kernel(f1, py, tau)
            z += w
            for c in range(d):
                num_pushed[c] += w * py[c]
                num_pos[c] += w * y[c]
                num_drift[c] += w * v[c]
        if z == 0.0:
            raise ValueError("every pushed sample excluded or all kernel weights underflowed")
        for c in range(d):
            rewritten[c] += a[c] - num_pushed[c] / z
            attraction_part[c] += a[c]
            position_rep[c] += num_pos[c] / z
            extra[c] += num_drift[c] / z
    nt = len(taus)
    rewritten = np.array(rewritten) / nt
    attraction_part = np.array(attraction_part) / nt
    position_rep = np.array(position_rep) / nt
    extra = np.array(extra) / nt

    return DecompositionReport(
        direct=direct,
        rewritten=rewritten,
        extra_term=extra,
        baseline_drift=np.array(baseline),
        attraction_part=attraction_part,
        position_repulsion=position_rep,
        max_abs_gap=float(np.max(np.abs(direct - rewritten))),
    )


def drift_divergence(
    outputs: np.ndarray,
    positives: np.ndarray,
    cfg: DriftConfig = DriftConfig(),
) -> float:
    """Max over queries of ||stage-1 drift at f1 - stage-0 drift at f||_2.

    Zero exactly when outputs equal positives; positive otherwise is
    expected but not guaranteed for finite batches.
    """
    out = np.asarray(outputs, dtype=np.float64)
    v0 = drift(out, positives, out, cfg)
    batch1 = out + v0
    v1 = drift(batch1, positives, batch1, cfg)
    return float(np.max(np.sqrt(np.sum((v1 - v0) ** 2, axis=1))))


def _signed_drift(x, p, n, tau: float, sign: float) -> np.ndarray:
    """Softmax-mean drift with an explicit exponent sign, for the sign demo."""
    from .kernel import pairwise_distances

    def mean(batch):
        logits = sign * pairwise_distances(x, batch) / tau
        logits = logits - logits.max(axis=1, keepdims=True)
        w = np.exp(logits)
        return (w @ batch) / w.sum(axis=1, keepdims=True)

    return mean(p) - mean(n)


def _record(check: str, detail: str, gap: float, tol: float) -> dict:
    return {"check": check, "detail": detail, "gap": gap, "tol": tol, "ok": bool(gap <= tol)}


def battery(seed: int, kernel_sign: str = "decay") -> list[dict]:
    """Seeded identity checks; one record per check instance.

    kernel_sign="grow" flips the kernel exponent in the sign-demo checks:
    anti-symmetry and the fixed point still pass (they hold for any
    kernel), while locality fails, which is why the exponent must stay
    negative.
    """
    if kernel_sign not in ("decay", "grow"):
        raise ValueError(f"kernel_sign must be 'decay' or 'grow', got {kernel_sign!r}")
    sign = -1.0 if kernel_sign == "decay" else 1.0
    root = Stream(seed)
    records: list[dict] = []

    # Locality: from a query at the near sample, the near sample must
    # dominate the kernel mean. A growing kernel pulls toward the far one.
    near, far = 0.0, 10.0
    w_near = math.exp(sign * abs(near - near) / 1.0)
    w_far = math.exp(sign * abs(near - far) / 1.0)
    mean = (w_near * near + w_far * far) / (w_near + w_far)
    records.append(_record("kernel_locality", f"sign={kernel_sign} mean={mean:.6f}", 0.0 if mean < 1.0 else mean, 0.0))

    if sign > 0:
        # Sign demo: structural identities survive the flip.
        s = root.substream(1)
        for d, b in ((1, 4), (2, 64), (8, 16)):
            x = s.normal((b, d))
            p = s.normal((b, d)) + 1.0
            n = s.normal((b, d))
            gap = float(np.max(np.abs(_signed_drift(x, p, n, 1.0, sign) + _signed_drift(x, n, p, 1.0, sign))))
            records.append(_record("anti_symmetry", f"sign=grow d={d} B={b} tau=1", gap, ANTISYM_TOL))
            gap = float(np.max(np.abs(_signed_drift(x, p, p, 1.0, sign))))
            records.append(_record("fixed_point", f"sign=grow d={d} B={b} tau=1", gap, 0.0))
        return records

    s = root.substream(2)
    for d in (1, 2, 8):
        for b in (1, 4, 64, 256):
            for tau in (0.1, 1.0, 10.0):
                x = s.normal((b, d))
                p = s.normal((b, d)) + 1.0
                n = s.normal((b, d)) - 0.5
                cfg = DriftConfig(tau=tau)
                gap = float(np.max(np.abs(drift(x, p, n, cfg) + drift(x, n, p, cfg))))
                records.append(_record("anti_symmetry", f"d={d} B={b} tau={tau}", gap, ANTISYM_TOL))

    s = root.substream(3)
    for d, b in ((1, 4), (2, 64), (8, 256)):
        x = s.normal((b, d))
        p = s.normal((b, d))
        gap = float(np.max(np.abs(drift(x, p, p, DriftConfig()))))
        records.append(_record("fixed_point", f"drift P==N d={d} B={b}", gap, 0.0))
        out = s.normal((b, d))
        for k in (0, 1, 3):
            t = lookahead_target(out, out, LookaheadPlan(k=k), DriftConfig())
            gap = float(np.max(np.abs(t - out)))
            records.append(_record("fixed_point", f"lookahead target k={k} d={d} B={b}", gap, 0.0))

    s = root.substream(4)
    for d in (1, 2, 8):
        for b in (1, 4, 64):
            x = s.normal((b, d))
            p = s.normal((b, d)) + 0.7
            qi = b // 2
            rep = verify_rewrite(qi, x, p, DriftConfig())
            records.append(_record("rewrite_identity", f"d={d} B={b} q={qi}", rep.max_abs_gap, REWRITE_TOL))
            split = rep.attraction_part - rep.position_repulsion - rep.extra_term
            gap = float(np.max(np.abs(split - rep.rewritten)))
            records.append(_record("extra_term_split", f"d={d} B={b} q={qi}", gap, REWRITE_TOL))

    s = root.substream(5)
    for d, b in ((2, 64), (8, 32)):
        out = s.normal((b, d))
        p = s.normal((b, d)) + 1.0
        t = lookahead_target(out, p, LookaheadPlan(k=0), DriftConfig())
        ref = out + drift(out, p, out, DriftConfig())
        gap = float(np.max(np.abs(t - ref)))
        records.append(_record("k0_reduction", f"d={d} B={b}", gap, 0.0))

    # Off the fixed point the stage-0 and stage-1 fields differ; the value
    # itself is informational, positivity is the check.
    s = root.substream(6)
    out = s.normal((128, 2))
    p = s.normal((128, 2)) + 1.0
    div = drift_divergence(out, p, DriftConfig())
    records.append(_record("drift_divergence", f"d=2 B=128 value={div:.6f}", 0.0 if div > 0.0 else 1.0, 0.0))

    return records
