"""One-step generator network with hand-rolled reverse-mode gradients.

A small fully connected net maps noise vectors to data-space points:
hidden layers use the silu activation (x * sigmoid(x), a smooth ramp),
the output layer is linear. Everything runs in float64 so the identity
tolerances used elsewhere in the suite carry over to training.

The training loss is the mean over the batch of squared row distances to
a fixed target batch:

    loss = (1/B) * sum_rows ||f(noise_row) - target_row||^2

The target is a constant (no gradient flows into how it was built), so
reverse mode only walks the network: dloss/doutputs = 2 * residual / B,
then standard backprop through the affine layers and activations.

The optimizer is Adam with bias correction; an exponential moving average
of the parameters provides the evaluation weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Stream

__all__ = [
    "TrainingDiverged",
    "GeneratorParams",
    "Gradients",
    "AdamState",
    "EmaParams",
    "init_params",
    "forward",
    "forward_cached",
    "backward",
    "loss_and_grad",
    "init_adam",
    "adam_step",
    "init_ema",
    "ema_update",
]

ACTIVATIONS = ("silu", "softplus")


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient stops being finite."""


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp(-|x|) never overflows; the two branches are the same function.
    e = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def _act(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "silu":
        return z * _sigmoid(z)
    s = np.logaddexp(0.0, z)  # softplus
    return s


def _dact(tag: str, z: np.ndarray) -> np.ndarray:
    s = _sigmoid(z)
    if tag == "silu":
        return s * (1.0 + z * (1.0 - s))
    return s


@dataclass
class GeneratorParams:
    """Layer sizes (noise_dim, hidden..., data_dim) plus live tensors."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "silu"

    def __post_init__(self) -> None:
        if len(self.sizes) < 2 or any(s < 1 for s in self.sizes):
            raise ValueError(f"need at least input and output sizes >= 1, got {self.sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.sizes) - 1:
            raise ValueError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"layer {i} shapes {w.shape}/{b.shape} do not chain {self.sizes}")

    @property
    def noise_dim(self) -> int:
        return self.sizes[0]

    @property
    def data_dim(self) -> int:
        return self.sizes[-1]

    def copy(self) -> "GeneratorParams":
        return GeneratorParams(
            self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activation
        )


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_params(
    sizes: tuple[int, ...], stream: Stream, activation: str = "silu"
) -> GeneratorParams:
    """Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    Draw order is fixed (per layer: weight matrix row-major, then bias) so
    a seed pins the initialization exactly.
    """
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = (stream.uniform(fan_in * fan_out) * 2.0 - 1.0) * bound
        weights.append(w.reshape(fan_in, fan_out))
        biases.append((stream.uniform(fan_out) * 2.0 - 1.0) * bound)
    return GeneratorParams(tuple(sizes), weights, biases, activation)


def _validate_noise(params: GeneratorParams, noise: np.ndarray) -> np.ndarray:
    x = np.asarray(noise, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.noise_dim:
        raise ValueError(f"noise must be B x {params.noise_dim}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("noise contains non-finite entries")
    return x


def forward_cached(params: GeneratorParams, noise: np.ndarray):
    """Forward pass that also returns per-layer (input, preactivation).

    The cache feeds `backward`; callers that need both the outputs and
    gradients this way run a single forward pass per step.
    """
    x = _validate_noise(params, noise)
    cache = []
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        cache.append((h, z))
        h = _act(params.activation, z) if i != last else z
    return h, cache


def forward(params: GeneratorParams, noise: np.ndarray) -> np.ndarray:
    """Map a noise batch to a data-space batch."""
    return forward_cached(params, noise)[0]


def backward(params: GeneratorParams, cache, grad_outputs: np.ndarray) -> Gradients:
    """Exact reverse-mode parameter gradients given dloss/doutputs."""
    g = grad_outputs
    n_layers = len(params.weights)
    grad_w: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in reversed(range(n_layers)):
        h, z = cache[i]
        if i != n_layers - 1:
            g = g * _dact(params.activation, z)
        grad_w[i] = h.T @ g
        grad_b[i] = g.sum(axis=0)
        if i:
            g = g @ params.weights[i].T
    return Gradients(grad_w, grad_b)


def loss_and_grad(
    params: GeneratorParams, noise: np.ndarray, target: np.ndarray
) -> tuple[float, Gradients]:
    """Loss against a constant target batch, plus exact parameter grads."""
    y, cache = forward_cached(params, noise)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != y.shape:
        raise ValueError(f"target shape {t.shape} does not match output shape {y.shape}")
    batch = y.shape[0]
    residual = y - t
    loss = float(np.sum(residual * residual) / batch)
    grads = backward(params, cache, 2.0 * residual / batch)
    return loss, grads


@dataclass
class AdamState:
    """Adam accumulators; step counts completed updates."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_w: list[np.ndarray] | None = None
    v_w: list[np.ndarray] | None = None
    m_b: list[np.ndarray] | None = None
    v_b: list[np.ndarray] | None = None


def init_adam(
    params: GeneratorParams,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step=0,
        m_w=[np.zeros_like(w) for w in params.weights],
        v_w=[np.zeros_like(w) for w in params.weights],
        m_b=[np.zeros_like(b) for b in params.biases],
        v_b=[np.zeros_like(b) for b in params.biases],
    )


def adam_step(params: GeneratorParams, grads: Gradients, state: AdamState) -> None:
    """One bias-corrected Adam update, in place."""
    for g in (*grads.weights, *grads.biases):
        if not np.isfinite(g).all():
            raise TrainingDiverged("non-finite gradient")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for ms, vs, ps, gs in (
        (state.m_w, state.v_w, params.weights, grads.weights),
        (state.m_b, state.v_b, params.biases, grads.biases),
    ):
        for i in range(len(ps)):
            ms[i] = b1 * ms[i] + (1.0 - b1) * gs[i]
            vs[i] = b2 * vs[i] + (1.0 - b2) * gs[i] ** 2
            ps[i] -= state.lr * (ms[i] / bc1) / (np.sqrt(vs[i] / bc2) + state.eps)
            if not np.isfinite(ps[i]).all():
                raise TrainingDiverged("non-finite parameter after update")


@dataclass
class EmaParams:
    """Exponential moving average of the generator parameters."""

    decay: float
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self) -> None:
        if not 0.0 <= self.decay < 1.0:
            raise ValueError(f"decay must be in [0, 1), got {self.decay}")

    def as_params(self, template: GeneratorParams) -> GeneratorParams:
        return GeneratorParams(template.sizes, self.weights, self.biases, template.activation)


def init_ema(params: GeneratorParams, decay: float = 0.999) -> EmaParams:
    return EmaParams(decay, [w.copy() for w in params.weights], [b.copy() for b in params.biases])


def ema_update(ema: EmaParams, params: GeneratorParams) -> None:
    """shadow <- decay * shadow + (1 - decay) * params, in place."""
    d = ema.decay
    for i, w in enumerate(params.weights):
        ema.weights[i] = d * ema.weights[i] + (1.0 - d) * w
    for i, b in enumerate(params.biases):
        ema.biases[i] = d * ema.biases[i] + (1.0 - d) * b
