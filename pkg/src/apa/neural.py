"""Small MLP with explicit backpropagation.

Two output heads: "relu_nonneg" (nonnegative urn states, squared-error loss)
and "softmax" (lotteries, cross-entropy loss). No autodiff framework; the
gradients are written out by hand and checked against finite differences in
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

HEADS = ("relu_nonneg", "softmax")
LOSSES = ("squared_error", "cross_entropy")

FORMAT_VERSION = "mlp-v1"


class DivergenceError(RuntimeError):
    """Non-finite values appeared in a parameter update."""


@dataclass
class MlpParams:
    weights: List[np.ndarray]  # weights[l] has shape (fan_in, fan_out)
    biases: List[np.ndarray]
    head: str

    @property
    def layer_sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            head=self.head,
        )


@dataclass
class Gradients:
    dweights: List[np.ndarray]
    dbiases: List[np.ndarray]


def mlp_init(layer_sizes: Sequence[int], head: str, rng: np.random.Generator) -> MlpParams:
    """He-scaled normal weights, zero biases."""
    if head not in HEADS:
        raise ValueError(f"unknown head {head!r}")
    if len(layer_sizes) < 2:
        raise ValueError("need input and output sizes")
    if any(s < 1 for s in layer_sizes):
        raise ValueError("layer sizes must be positive")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases, head=head)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_pass(params: MlpParams, x: np.ndarray):
    """Returns (output, hidden activations, final pre-activation)."""
    acts = [x]
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
        acts.append(h)
    z = h @ params.weights[-1] + params.biases[-1]
    if params.head == "relu_nonneg":
        out = np.maximum(z, 0.0)
    else:
        out = _softmax(z)
    return out, acts, z


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Network output for a single input (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.weights[0].shape[0]:
        raise ValueError("input dimension mismatch")
    out, _, _ = _forward_pass(params, x)
    return out


def grad_loss(params: MlpParams, x: np.ndarray, target: np.ndarray, loss: str):
    """Loss value and exact gradient of the stated loss at (params, x, target).

    Batched inputs average the loss (and gradient) over rows.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    if loss == "cross_entropy" and params.head != "softmax":
        raise ValueError("cross_entropy requires a softmax head")
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
        target = target[None, :]
    if x.shape[-1] != params.weights[0].shape[0]:
        raise ValueError("input dimension mismatch")
    if target.shape[-1] != params.weights[-1].shape[1]:
        raise ValueError("target dimension mismatch")
    n = x.shape[0]

    out, acts, z = _forward_pass(params, x)

    if loss == "squared_error":
        loss_value = float(np.sum((out - target) ** 2) / n)
        dout = 2.0 * (out - target) / n
        if params.head == "relu_nonneg":
            dz = dout * (z > 0.0)
        else:
            # Softmax Jacobian: dz = q * (dout - sum(q * dout)).
            inner = np.sum(out * dout, axis=-1, keepdims=True)
            dz = out * (dout - inner)
    else:
        # Stable cross-entropy: -sum t * log softmax(z) via log-sum-exp.
        zmax = z.max(axis=-1, keepdims=True)
        lse = zmax + np.log(np.exp(z - zmax).sum(axis=-1, keepdims=True))
        log_q = z - lse
        loss_value = float(-np.sum(target * log_q) / n)
        dz = (out - target) / n

    dweights = [np.empty_like(w) for w in params.weights]
    dbiases = [np.empty_like(b) for b in params.biases]
    delta = dz
    for layer in range(len(params.weights) - 1, -1, -1):
        dweights[layer] = acts[layer].T @ delta
        dbiases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer].T) * (acts[layer] > 0.0)
    return loss_value, Gradients(dweights=dweights, dbiases=dbiases)


def sgd_step(params: MlpParams, grads: Gradients, lr: float) -> MlpParams:
    """params - lr * grads, elementwise. Raises on non-finite gradients."""
    if lr < 0:
        raise ValueError("learning rate must be nonnegative")
    for g in grads.dweights + grads.dbiases:
        if not np.all(np.isfinite(g)):
            raise DivergenceError("diverged")
    return MlpParams(
        weights=[w - lr * g for w, g in zip(params.weights, grads.dweights)],
        biases=[b - lr * g for b, g in zip(params.biases, grads.dbiases)],
        head=params.head,
    )


def save_params(params: MlpParams, path: str) -> None:
    """Versioned text format: header line, layer sizes, then row-major values.

    Floats use %.17g so a save/load round-trip is lossless.
    """
    sizes = params.layer_sizes
    with open(path, "w") as fh:
        fh.write(f"{FORMAT_VERSION} {params.head}\n")
        fh.write(" ".join(str(s) for s in sizes) + "\n")
        for w, b in zip(params.weights, params.biases):
            for row in w:
                fh.write(" ".join("%.17g" % v for v in row) + "\n")
            fh.write(" ".join("%.17g" % v for v in b) + "\n")


def load_params(path: str) -> MlpParams:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != FORMAT_VERSION:
            raise ValueError(f"unsupported model file format in {path}")
        head = header[1]
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r} in {path}")
        sizes = [int(s) for s in fh.readline().split()]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            rows = [
                np.array([float(v) for v in fh.readline().split()])
                for _ in range(fan_in)
            ]
            w = np.vstack(rows)
            if w.shape != (fan_in, fan_out):
                raise ValueError(f"malformed model file {path}")
            b = np.array([float(v) for v in fh.readline().split()])
            if b.shape != (fan_out,):
                raise ValueError(f"malformed model file {path}")
            weights.append(w)
            biases.append(b)
    return MlpParams(weights=weights, biases=biases, head=head)
