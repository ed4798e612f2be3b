"""Minimal feed-forward networks with hand-written backpropagation.

Three small architectures are used across the package (a 3-3 generator
head, a 30-10 probabilistic classifier, a 5-5 downstream regressor), all
ReLU-hidden with either a linear or a sigmoid output head, trained by
mini-batch Adam. Binary cross-entropy is computed on logits so training
is stable even when predicted probabilities saturate.

:func:`grad_check` compares the analytic gradient against central finite
differences and is the ground truth the test suite holds backprop to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Rng
from .errors import ContractError, DimensionError

__all__ = ["Mlp", "AdamState", "forward", "forward_batch", "train", "grad_check"]

_HEADS = ("linear", "sigmoid")
_LOSSES = ("mse", "bce")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Mlp:
    """Fully-connected network; ``weights[l]`` has shape (fan_in, fan_out)."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head: str = "linear"

    def __post_init__(self):
        if len(self.sizes) < 2:
            raise ContractError("an Mlp needs at least an input and an output layer")
        if self.head not in _HEADS:
            raise ContractError(f"head must be one of {_HEADS}, got {self.head!r}")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.sizes) - 1:
            raise DimensionError("one weight matrix and bias vector per layer is required")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.sizes[l], self.sizes[l + 1])
            if w.shape != expect or b.shape != (self.sizes[l + 1],):
                raise DimensionError(f"layer {l}: expected shapes {expect} and ({expect[1]},)")

    @classmethod
    def init(cls, sizes, rng: Rng, head: str = "linear", init_limit: float | None = None) -> "Mlp":
        """Fresh network with U(-limit, limit) parameters.

        The default limit is ``1/sqrt(fan_in)`` per layer; passing
        ``init_limit`` overrides it for every layer (used by the synthetic
        outcome generator, which draws all parameters from U(-1, 1)).
        """
        sizes = tuple(int(s) for s in sizes)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = init_limit if init_limit is not None else 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-limit, limit, size=fan_in * fan_out).reshape(fan_in, fan_out))
            biases.append(rng.uniform(-limit, limit, size=fan_out))
        return cls(sizes, weights, biases, head)

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Mlp":
        return Mlp(
            self.sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.head,
        )

    def to_json(self) -> str:
        """Serialize architecture and parameters; round-trips exactly."""
        doc = {
            "sizes": list(self.sizes),
            "head": self.head,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Mlp":
        doc = json.loads(text)
        try:
            return cls(
                sizes=tuple(int(s) for s in doc["sizes"]),
                weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
                biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
                head=doc["head"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"malformed network document: {exc}") from exc


def _affine_stack(net: Mlp, X: np.ndarray):
    """Forward pass keeping activations; returns (activations, final logits)."""
    acts = [X]
    out = X
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        out = out @ w + b
        if l < last:
            out = np.maximum(out, 0.0)
            acts.append(out)
    return acts, out


def forward_batch(net: Mlp, X: np.ndarray) -> np.ndarray:
    """Network outputs for a (n, d) batch; shape (n, out)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.sizes[0]:
        raise DimensionError(f"expected inputs of shape (n, {net.sizes[0]}), got {X.shape}")
    _, logits = _affine_stack(net, X)
    return _sigmoid(logits) if net.head == "sigmoid" else logits


def forward(net: Mlp, x) -> np.ndarray:
    """Network output for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected an input vector, got shape {x.shape}")
    return forward_batch(net, x[None, :])[0]


def _loss_and_logit_grad(net: Mlp, logits: np.ndarray, targets: np.ndarray, loss: str):
    """Loss value and dLoss/dlogits for a batch."""
    m = logits.shape[0]
    if loss == "mse":
        pred = _sigmoid(logits) if net.head == "sigmoid" else logits
        diff = pred - targets
        value = float(np.mean(diff**2))
        grad = (2.0 / diff.size) * diff
        if net.head == "sigmoid":
            grad = grad * pred * (1.0 - pred)
        return value, grad
    # BCE on logits: softplus(z) - t*z, written to avoid overflow for |z| large.
    if net.head != "sigmoid":
        raise ContractError("bce loss requires a sigmoid head")
    if logits.shape[1] != 1:
        raise ContractError("bce loss requires a single output unit")
    value = float(np.mean(np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))))
    grad = (_sigmoid(logits) - targets) / m
    return value, grad


def _backward(net: Mlp, acts: list[np.ndarray], logit_grad: np.ndarray):
    """Gradients for every weight matrix and bias vector."""
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    delta = logit_grad
    for l in range(len(net.weights) - 1, -1, -1):
        grads_w[l] = acts[l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ net.weights[l].T) * (acts[l] > 0.0)
    return grads_w, grads_b


def loss_and_gradients(net: Mlp, X: np.ndarray, targets: np.ndarray, loss: str):
    """One full forward/backward pass; returns (loss, grads_w, grads_b)."""
    if loss not in _LOSSES:
        raise ContractError(f"loss must be one of {_LOSSES}, got {loss!r}")
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(targets, dtype=np.float64)
    if T.ndim == 1:
        T = T[:, None]
    if X.ndim != 2 or T.shape != (X.shape[0], net.sizes[-1]):
        raise DimensionError(
            f"inputs {X.shape} and targets {T.shape} do not match network {net.sizes}"
        )
    if loss == "bce" and not np.all((T == 0.0) | (T == 1.0)):
        raise ContractError("bce targets must be 0 or 1")
    acts, logits = _affine_stack(net, X)
    value, logit_grad = _loss_and_logit_grad(net, logits, T, loss)
    grads_w, grads_b = _backward(net, acts, logit_grad)
    return value, grads_w, grads_b


@dataclass
class AdamState:
    """Adam optimizer state for one network (beta1=0.9, beta2=0.999, eps=1e-8)."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_net(cls, net: Mlp, lr: float = 0.001) -> "AdamState":
        if lr <= 0:
            raise ContractError(f"learning rate must be positive, got {lr}")
        state = cls(lr=float(lr))
        state.m_w = [np.zeros_like(w) for w in net.weights]
        state.v_w = [np.zeros_like(w) for w in net.weights]
        state.m_b = [np.zeros_like(b) for b in net.biases]
        state.v_b = [np.zeros_like(b) for b in net.biases]
        return state

    def _update(self, param, grad, m, v, c1, c2):
        m *= self.beta1
        m += (1.0 - self.beta1) * grad
        v *= self.beta2
        v += (1.0 - self.beta2) * grad**2
        param -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def apply(self, net: Mlp, grads_w, grads_b) -> None:
        self.step += 1
        c1 = 1.0 - self.beta1**self.step
        c2 = 1.0 - self.beta2**self.step
        for l in range(len(net.weights)):
            self._update(net.weights[l], grads_w[l], self.m_w[l], self.v_w[l], c1, c2)
            self._update(net.biases[l], grads_b[l], self.m_b[l], self.v_b[l], c1, c2)


def train(
    net: Mlp,
    X: np.ndarray,
    targets: np.ndarray,
    loss: str,
    adam: AdamState,
    epochs: int,
    batch_size: int,
    rng: Rng,
) -> tuple[Mlp, list[float]]:
    """Mini-batch training; mutates ``net`` in place.

    Batches are drawn from a fresh permutation each epoch. Returns the
    trained network together with the per-epoch mean loss trace. Zero
    epochs is a no-op that leaves the parameters untouched.
    """
    if epochs < 0:
        raise ContractError(f"epochs must be >= 0, got {epochs}")
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    trace: list[float] = []
    T = np.asarray(targets, dtype=np.float64)
    if T.ndim == 1:
        T = T[:, None]
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            value, gw, gb = loss_and_gradients(net, X[idx], T[idx], loss)
            adam.apply(net, gw, gb)
            total += value * idx.shape[0]
        trace.append(total / n)
    return net, trace


def grad_check(
    net: Mlp,
    x,
    target,
    loss: str,
    h: float = 1e-5,
    max_coords: int = 50,
    rng: Rng | None = None,
) -> float:
    """Max relative error between backprop and central finite differences.

    A random subset of ``max_coords`` parameter coordinates is probed
    (all of them when the network is small). The relative error for a
    coordinate is ``|a - n| / (|a| + |n| + 1e-6)``.
    """
    x = np.asarray(x, dtype=np.float64)
    X = x[None, :] if x.ndim == 1 else x
    T = np.asarray(target, dtype=np.float64)
    if T.ndim == 0:
        T = T[None]
    if T.ndim == 1:
        T = T[:, None] if X.shape[0] == T.shape[0] else T[None, :]
    _, grads_w, grads_b = loss_and_gradients(net, X, T, loss)
    params = [(net.weights[l], grads_w[l]) for l in range(len(net.weights))]
    params += [(net.biases[l], grads_b[l]) for l in range(len(net.biases))]
    flat_total = sum(p.size for p, _ in params)
    picker = rng if rng is not None else Rng(0)
    if flat_total > max_coords:
        chosen = np.sort(picker.permutation(flat_total)[:max_coords])
    else:
        chosen = np.arange(flat_total)

    def loss_only() -> float:
        _, logits = _affine_stack(net, X)
        value, _ = _loss_and_logit_grad(net, logits, T, loss)
        return value

    worst = 0.0
    offset = 0
    by_offset = []
    for param, grad in params:
        by_offset.append((offset, param, grad))
        offset += param.size
    for coord in chosen:
        for start, param, grad in by_offset:
            if start <= coord < start + param.size:
                local = np.unravel_index(int(coord) - start, param.shape)
                analytic = float(grad[local])
                original = param[local]
                param[local] = original + h
                up = loss_only()
                param[local] = original - h
                down = loss_only()
                param[local] = original
                numeric = (up - down) / (2.0 * h)
                err = abs(analytic - numeric) / (abs(analytic) + abs(numeric) + 1e-6)
                worst = max(worst, err)
                break
    return worst
