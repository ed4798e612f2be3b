"""Sample reweighting by shuffled-column density-ratio estimation.

The target of the reweighting is the ratio between the product of the
feature marginals and the joint feature density. Both distributions can
be sampled: the joint is the dataset itself, and the product of
marginals is obtained by permuting every feature column independently
(which preserves each marginal while destroying cross-column
dependence). A probabilistic classifier trained to separate the two
samples then yields the ratio through its odds: with balanced classes,

    w(x) = p(shuffled | x) / (1 - p(shuffled | x)) .

Predicted probabilities are clamped away from 0 and 1, the raw ratios
are clipped to ``[1/gamma, gamma]``, and the result is renormalized to
mean 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Rng, WeightVector
from .errors import ContractError, DimensionError
from .nnet import AdamState, Mlp, forward_batch, loss_and_gradients, train

__all__ = ["SrdoConfig", "SrdoResult", "column_shuffle", "srdo_fit", "classifier_bce"]

_PROB_FLOOR = 1e-6


@dataclass(frozen=True)
class SrdoConfig:
    """Hyperparameters for the shuffle-and-classify reweighter."""

    gamma: float = 10.0
    classifier_hidden: tuple[int, int] = (30, 10)
    epochs: int = 100
    batch_size: int = 256
    lr: float = 0.001
    shuffle_seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ContractError(f"gamma must exceed 1, got {self.gamma}")
        if len(self.classifier_hidden) != 2 or any(h < 1 for h in self.classifier_hidden):
            raise ContractError("classifier_hidden must be two positive layer sizes")
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ContractError("lr must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ContractError("validation_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class SrdoResult:
    """Fit output: mean-1 weights, the trained classifier, and diagnostics.

    ``validation_bce`` is the classifier's binary cross-entropy on rows
    held out from training (NaN when the validation fraction is zero);
    hyperparameter selection uses it as the generalization score.
    """

    weights: WeightVector
    classifier: Mlp
    loss_trace: tuple[float, ...]
    clipped_fraction: float
    validation_bce: float


def column_shuffle(features: np.ndarray, rng: Rng) -> np.ndarray:
    """Permute each column independently; marginals kept, dependence broken."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"features must be (n, d), got {X.shape}")
    out = np.empty_like(X)
    for j in range(X.shape[1]):
        out[:, j] = X[rng.permutation(X.shape[0]), j]
    return out


def srdo_fit(dataset: Dataset, cfg: SrdoConfig, rng: Rng) -> SrdoResult:
    """Estimate independence weights for a dataset.

    The column permutations come from a stream seeded by
    ``cfg.shuffle_seed``; the validation split, classifier
    initialization, and batch order come from child streams of ``rng``
    (keys ``val``, ``init``, ``train``). A ``validation_fraction`` share
    of the combined original-plus-shuffled rows is held out of training
    and scored afterwards. Weights are always computed on every original
    row. Deterministic given (dataset, cfg, rng seed).
    """
    X = dataset.features
    n, d = X.shape
    shuffled = column_shuffle(X, Rng(cfg.shuffle_seed))
    inputs = np.vstack([X, shuffled])
    labels = np.concatenate([np.zeros(n), np.ones(n)])
    net = Mlp.init([d, *cfg.classifier_hidden, 1], rng.fork("init"), head="sigmoid")
    adam = AdamState.for_net(net, lr=cfg.lr)
    if cfg.validation_fraction > 0.0:
        perm = rng.fork("val").permutation(2 * n)
        n_val = max(1, int(round(cfg.validation_fraction * 2 * n)))
        val_idx, train_idx = perm[:n_val], perm[n_val:]
    else:
        val_idx = np.empty(0, dtype=np.int64)
        train_idx = np.arange(2 * n)
    _, trace = train(
        net, inputs[train_idx], labels[train_idx], "bce", adam, cfg.epochs, cfg.batch_size, rng.fork("train")
    )
    validation_bce = (
        classifier_bce(net, inputs[val_idx], labels[val_idx]) if val_idx.size else float("nan")
    )
    p = forward_batch(net, X)[:, 0]
    p = np.clip(p, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    raw = p / (1.0 - p)
    clipped = np.clip(raw, 1.0 / cfg.gamma, cfg.gamma)
    return SrdoResult(
        weights=WeightVector.normalized(clipped),
        classifier=net,
        loss_trace=tuple(trace),
        clipped_fraction=float(np.mean(clipped != raw)),
        validation_bce=validation_bce,
    )


def classifier_bce(net: Mlp, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy of a classifier on the given rows.

    Evaluated on logits, so saturated probabilities cost their exact
    penalty instead of a clamped one.
    """
    X = np.asarray(features, dtype=np.float64)
    t = np.asarray(labels, dtype=np.float64)
    if t.shape != (X.shape[0],):
        raise DimensionError("labels must match the number of rows")
    return float(loss_and_gradients(net, X, t, "bce")[0])
