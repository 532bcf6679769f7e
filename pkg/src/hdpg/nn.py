"""Dense feed-forward networks with analytic backprop, Adam and soft updates.

Parameters live in one contiguous float64 buffer (``flat``) with per-layer
views, so optimizer and target-tracking updates are single vector operations.
Inputs may be a single vector ``(d,)`` or a batch ``(B, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("linear", "tanh", "relu")


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple
    hidden_activation: str = "relu"
    output_activation: str = "linear"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError(f"MlpSpec needs at least 2 layer sizes, got {sizes}")
        if any(s < 1 for s in sizes):
            raise ValueError(f"MlpSpec layer sizes must be >= 1, got {sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @cached_property
    def shapes(self) -> list[tuple[int, int]]:
        """(rows=out, cols=in) for each layer."""
        s = self.layer_sizes
        return [(s[i + 1], s[i]) for i in range(len(s) - 1)]

    @cached_property
    def activations(self) -> tuple:
        return (self.hidden_activation,) * (self.n_layers - 1) + (self.output_activation,)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def n_params(self) -> int:
        return sum(r * c + r for r, c in self.shapes)

    def activation(self, layer: int) -> str:
        return self.activations[layer]


class MlpParams:
    """Weights ``W[l]`` (out x in) and biases ``b[l]`` as views into ``flat``."""

    def __init__(self, spec: MlpSpec, flat: np.ndarray | None = None):
        self.spec = spec
        if flat is None:
            flat = np.zeros(spec.n_params, dtype=np.float64)
        if flat.shape != (spec.n_params,) or flat.dtype != np.float64:
            raise ValueError(
                f"flat buffer must be float64 of length {spec.n_params}, "
                f"got {flat.dtype} {flat.shape}"
            )
        self.flat = flat
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        self._offsets = []
        off = 0
        for rows, cols in spec.shapes:
            self._offsets.append(off)
            self.weights.append(flat[off:off + rows * cols].reshape(rows, cols))
            off += rows * cols
            self.biases.append(flat[off:off + rows])
            off += rows

    def copy(self):
        return type(self)(self.spec, self.flat.copy())

    def zeros_like(self) -> "GradientSet":
        return GradientSet(self.spec)

    def locate(self, index: int) -> str:
        """Human-readable name of the parameter stored at ``flat[index]``."""
        for layer in reversed(range(self.spec.n_layers)):
            if index >= self._offsets[layer]:
                rows, cols = self.spec.shapes[layer]
                kind = "weight" if index - self._offsets[layer] < rows * cols else "bias"
                return f"layer {layer} {kind}"
        raise IndexError(index)

    def all_finite(self) -> bool:
        return bool(np.isfinite(self.flat).all())


class GradientSet(MlpParams):
    """Shape-congruent gradient container for an :class:`MlpParams`."""


@dataclass
class ForwardCache:
    inputs: list = field(default_factory=list)   # input to each layer
    pre: list = field(default_factory=list)      # pre-activations
    post: list = field(default_factory=list)     # post-activations


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name, z, a, g):
    if name == "relu":
        return g * (z > 0.0)
    if name == "tanh":
        return g * (1.0 - a * a)
    return g


def init_mlp(spec: MlpSpec, seed) -> MlpParams:
    """Uniform fan-in init: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0.

    ``seed`` is an int or a ``numpy.random.Generator``.
    """
    if not isinstance(spec, MlpSpec):
        spec = MlpSpec(*spec) if isinstance(spec, tuple) else MlpSpec(spec)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = MlpParams(spec)
    for W in params.weights:
        bound = 1.0 / np.sqrt(W.shape[1])
        W[...] = rng.uniform(-bound, bound, size=W.shape)
    return params


def forward(params: MlpParams, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    n_in = params.spec.layer_sizes[0]
    if x.shape[-1:] != (n_in,) or x.ndim > 2:
        raise ValueError(f"input dimension mismatch: expected (..., {n_in}), got {x.shape}")
    cache = ForwardCache()
    h = x
    for W, b, act in zip(params.weights, params.biases, params.spec.activations):
        cache.inputs.append(h)
        z = h @ W.T
        z += b
        h = _act(act, z)
        cache.pre.append(z)
        cache.post.append(h)
    return h, cache


def backward(params: MlpParams, cache: ForwardCache, output_grad,
             out: GradientSet | None = None, param_grads: bool = True,
             input_grad: bool = True) -> tuple[GradientSet | None, np.ndarray | None]:
    """Reverse-mode gradients of <output_grad, output> w.r.t. parameters and input.

    Batched caches sum the parameter gradient over the batch. When ``out`` is
    given, gradients are accumulated into it. Either half of the result can be
    switched off when the caller does not need it (it is then returned as None).
    """
    spec = params.spec
    if len(cache.pre) != spec.n_layers:
        raise ValueError("forward cache does not match this network")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != cache.post[-1].shape:
        raise ValueError(
            f"output_grad shape {g.shape} does not match output shape {cache.post[-1].shape}"
        )
    grads = None
    if param_grads:
        grads = GradientSet(spec) if out is None else out
        if grads.spec is not spec and grads.spec != spec:
            raise ValueError("gradient accumulator spec mismatch")
    acts = spec.activations
    for layer in range(spec.n_layers - 1, -1, -1):
        dz = _act_grad(acts[layer], cache.pre[layer], cache.post[layer], g)
        if grads is not None:
            h = cache.inputs[layer]
            if dz.ndim == 1:
                grads.weights[layer] += np.outer(dz, h)
                grads.biases[layer] += dz
            else:
                grads.weights[layer] += dz.T @ h
                grads.biases[layer] += dz.sum(axis=0)
        if layer or input_grad:
            g = dz @ params.weights[layer]
        else:
            g = None
    return grads, g


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        n = params.flat.size
        return cls(np.zeros(n), np.zeros(n), **kw)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step,
                         self.beta1, self.beta2, self.eps)


def adam_step(params, grads, state: AdamState, lr: float):
    """Bias-corrected Adam descent step, in place on ``params`` and ``state``.

    Works on anything exposing a ``flat`` buffer and ``locate(index)``.
    """
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if grads.flat.shape != params.flat.shape or state.m.shape != params.flat.shape:
        raise ValueError("Adam: parameter, gradient and state shapes differ")
    g = grads.flat
    bad = ~np.isfinite(g)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise FloatingPointError(f"non-finite gradient entry at {params.locate(i)} (flat index {i})")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * g
    state.v *= b2
    state.v += (1.0 - b2) * (g * g)
    m_hat = state.m / (1.0 - b1 ** state.step)
    v_hat = state.v / (1.0 - b2 ** state.step)
    params.flat -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def soft_update(target, online, tau: float):
    """target <- tau * online + (1 - tau) * target, elementwise."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    if target.flat.shape != online.flat.shape:
        raise ValueError(
            f"soft_update shape mismatch: {target.flat.shape} vs {online.flat.shape}"
        )
    if tau == 1.0:
        target.flat[...] = online.flat
    else:
        target.flat *= 1.0 - tau
        target.flat += tau * online.flat
    return target
