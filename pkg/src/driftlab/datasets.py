"""Seeded 2D toy target distributions and the standard-normal noise source.

Every sampler draws exclusively from a `Stream`, in a fixed documented
order, so a (spec, stream state) pair pins each sample batch exactly.

Kinds and their draw protocols (per batch of n points):

  gaussian-mixture-ring
      n mode indices, then a (n, 2) normal block. Point = mode center
      (radius * cos, sin of 2*pi*j/modes) + noise * normal.
  two-moons
      n side indices, n uniform arc positions t in [0, 1), then a (n, 2)
      normal block. Upper moon: radius*(cos(pi t), sin(pi t)); lower:
      radius*(1 - cos(pi t), 0.5 - sin(pi t)); plus noise * normal.
  spiral
      n arm indices, n uniform radial positions t, then a (n, 2) normal
      block. Angle = 3*pi*t + arm offset, point = radius*t*(cos, sin) +
      noise * normal.
  checkerboard
      n column indices in {-extent, ..., extent-1}, n row slot indices,
      then 2n uniforms for in-cell positions. Only unit cells whose
      floor-coordinate parity sums to even are populated; noise is not
      used (support stays crisp).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import atomic_write_bytes
from .rng import Stream

__all__ = ["ToySpec", "KINDS", "sample_data", "sample_noise", "save_csv", "load_csv"]

KINDS = ("gaussian-mixture-ring", "two-moons", "spiral", "checkerboard")


@dataclass(frozen=True)
class ToySpec:
    """Which toy distribution to sample and its shape parameters.

    `seed` is extra dataset-identity entropy: the trainer folds it into
    the derivation of its data stream, so two configs that differ only in
    dataset seed see different draw sequences.
    """

    kind: str = "gaussian-mixture-ring"
    modes: int = 8
    radius: float = 1.0
    noise: float = 0.05
    arms: int = 2
    extent: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; expected one of {KINDS}")
        if self.modes < 1 or self.arms < 1:
            raise ValueError(f"modes and arms must be >= 1, got {self.modes}, {self.arms}")
        if not (self.radius > 0.0 and self.noise > 0.0):
            raise ValueError(f"radius and noise must be > 0, got {self.radius}, {self.noise}")
        if not isinstance(self.extent, int) or self.extent < 1:
            raise ValueError(f"extent must be an integer >= 1, got {self.extent}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"dataset seed must be a nonnegative integer, got {self.seed}")


def sample_noise(dim: int, count: int, stream: Stream) -> np.ndarray:
    """count x dim batch of i.i.d. standard normals."""
    if dim < 1 or count < 1:
        raise ValueError(f"dim and count must be >= 1, got dim={dim}, count={count}")
    return stream.normal((count, dim))


def sample_data(spec: ToySpec, count: int, stream: Stream) -> np.ndarray:
    """count x 2 batch from the toy distribution named by spec.kind."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if spec.kind == "gaussian-mixture-ring":
        j = stream.integers(count, spec.modes)
        ang = (2.0 * np.pi / spec.modes) * j
        centers = np.stack([spec.radius * np.cos(ang), spec.radius * np.sin(ang)], axis=1)
        return centers + spec.noise * stream.normal((count, 2))
    if spec.kind == "two-moons":
        side = stream.integers(count, 2)
        t = stream.uniform(count) * np.pi
        x = np.where(side == 0, np.cos(t), 1.0 - np.cos(t))
        y = np.where(side == 0, np.sin(t), 0.5 - np.sin(t))
        pts = spec.radius * np.stack([x, y], axis=1)
        return pts + spec.noise * stream.normal((count, 2))
    if spec.kind == "spiral":
        arm = stream.integers(count, spec.arms)
        t = stream.uniform(count)
        ang = 3.0 * np.pi * t + (2.0 * np.pi / spec.arms) * arm
        r = spec.radius * t
        pts = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
        return pts + spec.noise * stream.normal((count, 2))
    if spec.kind == "checkerboard":
        e = spec.extent
        col = stream.integers(count, 2 * e) - e
        slot = stream.integers(count, e)
        # Rows sharing the column's parity keep floor(x)+floor(y) even.
        row_base = np.where((col + e) % 2 == 0, -e, -e + 1)
        row = row_base + 2 * slot
        u = stream.uniform(2 * count)
        x = col + u[:count]
        y = row + u[count:]
        return np.stack([x, y], axis=1)
    raise ValueError(f"unknown dataset kind {spec.kind!r}")


def save_csv(path: str, batch: np.ndarray) -> None:
    """Write a batch as CSV with header x0,...,x{d-1}, one point per row."""
    a = np.asarray(batch, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"batch must be 2-D, got shape {a.shape}")
    header = ",".join(f"x{i}" for i in range(a.shape[1]))
    lines = [header]
    for row in a:
        lines.append(",".join(repr(float(v)) for v in row))
    data = "\n".join(lines) + "\n"
    atomic_write_bytes(path, data.encode("ascii"))


def load_csv(path: str) -> np.ndarray:
    """Read a CSV written by save_csv (header line, float rows)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("x0"):
        raise ValueError(f"{path}: missing x0,... header")
    dim = len(lines[0].split(","))
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    if not rows:
        return np.zeros((0, dim), dtype=np.float64)
    out = np.array(rows, dtype=np.float64)
    if out.shape[1] != dim:
        raise ValueError(f"{path}: row width {out.shape[1]} does not match header width {dim}")
    return out


def mode_centers(spec: ToySpec) -> np.ndarray:
    """Ring mode centers; handy for occupancy tests and plots."""
    if spec.kind != "gaussian-mixture-ring":
        raise ValueError("mode_centers is defined for the mixture ring only")
    ang = (2.0 * np.pi / spec.modes) * np.arange(spec.modes)
    return np.stack([spec.radius * np.cos(ang), spec.radius * np.sin(ang)], axis=1)
