"""Sample reweighting by direct minimization of pairwise dependence.

Finds strictly positive sample weights making every pair of feature
columns uncorrelated under the weighted empirical distribution, by
gradient descent on

    sum_{i != j} cov(X_i, X_j; w)^2
        + lambda_sum * (sum_k w_k - 1)^2
        + lambda_ridge * sum_k w_k^2 ,

where the covariance term uses sum-normalized weights (so it is
invariant to overall scale), the first penalty pins the raw scale, and
the second discourages weight concentration. Positivity is enforced by
a softplus reparameterization ``w = softplus(raw)`` with ``raw`` started
at zero; optimization is full-batch Adam with an analytic gradient. The
returned weights are renormalized to mean 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, WeightVector
from .errors import ContractError, DimensionError, DivergenceError

__all__ = [
    "DwrConfig",
    "DwrResult",
    "dwr_loss",
    "dwr_grad",
    "dwr_fit",
    "dwr_fit_grid",
    "max_abs_weighted_cov",
]


@dataclass(frozen=True)
class DwrConfig:
    """Hyperparameters for the dependence-minimizing reweighter."""

    lambda_sum: float = 0.05
    lambda_ridge: float = 0.05
    lr: float = 0.001
    max_iters: int = 28_000
    grad_tol: float = 1e-6

    def __post_init__(self):
        if self.lambda_sum < 0 or self.lambda_ridge < 0:
            raise ContractError("penalty strengths must be >= 0")
        if self.lr <= 0:
            raise ContractError(f"lr must be positive, got {self.lr}")
        if self.max_iters < 1:
            raise ContractError("max_iters must be >= 1")
        if self.grad_tol < 0:
            raise ContractError("grad_tol must be >= 0")


@dataclass(frozen=True)
class DwrResult:
    """Fit output: mean-1 weights plus convergence diagnostics."""

    weights: WeightVector
    final_loss: float
    iterations: int
    grad_norm: float
    max_abs_cov: float


def _softplus(raw: np.ndarray) -> np.ndarray:
    # log(1 + e^raw), stable on both tails.
    return np.where(raw > 0, raw + np.log1p(np.exp(-np.abs(raw))), np.log1p(np.exp(raw)))


def _sigmoid(raw: np.ndarray) -> np.ndarray:
    out = np.empty_like(raw)
    pos = raw >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-raw[pos]))
    er = np.exp(raw[~pos])
    out[~pos] = er / (1.0 + er)
    return out


def _check(features: np.ndarray, raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=np.float64)
    r = np.asarray(raw, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"features must be (n, d), got {X.shape}")
    if r.shape != (X.shape[0],):
        raise DimensionError(f"raw weights shape {r.shape} does not match {X.shape[0]} rows")
    return X, r


def _loss_terms(X: np.ndarray, raw: np.ndarray, cfg: DwrConfig):
    w = _softplus(raw)
    s = float(w.sum())
    wh = w / s
    m = X.T @ wh
    cov = (X * wh[:, None]).T @ X - np.outer(m, m)
    np.fill_diagonal(cov, 0.0)
    value = float((cov * cov).sum()) + cfg.lambda_sum * (s - 1.0) ** 2 + cfg.lambda_ridge * float(w @ w)
    return w, s, wh, m, cov, value


def dwr_loss(features, raw_weights, cfg: DwrConfig) -> float:
    """Objective value at pre-softplus weights ``raw_weights``."""
    X, raw = _check(features, raw_weights)
    return _loss_terms(X, raw, cfg)[-1]


def dwr_grad(features, raw_weights, cfg: DwrConfig) -> np.ndarray:
    """Analytic gradient of :func:`dwr_loss` with respect to the raw weights."""
    X, raw = _check(features, raw_weights)
    w, s, wh, m, cov, _ = _loss_terms(X, raw, cfg)
    G = 2.0 * cov  # symmetric, zero diagonal
    XG = X @ G
    # d(cov term)/d(normalized weight k) = x_k^T G x_k - 2 x_k^T G m
    g_wh = np.einsum("nd,nd->n", XG, X) - 2.0 * (X @ (G @ m))
    g_w = (g_wh - float(g_wh @ wh)) / s
    g_w += 2.0 * cfg.lambda_sum * (s - 1.0) + 2.0 * cfg.lambda_ridge * w
    return g_w * _sigmoid(raw)


def dwr_fit(dataset: Dataset, cfg: DwrConfig = DwrConfig(), rng=None) -> DwrResult:
    """Optimize the weights for a dataset.

    Deterministic: the raw weights start at zero and the optimization is
    full-batch, so ``rng`` is accepted only for signature uniformity with
    the other fitters and is never consumed. Stops at ``cfg.max_iters``
    or when the gradient infinity-norm falls below ``cfg.grad_tol``;
    raises :class:`DivergenceError` if the loss goes non-finite.
    """
    X = np.ascontiguousarray(dataset.features)
    n, d = X.shape
    raw = np.zeros(n)
    m_state = np.zeros(n)
    v_state = np.zeros(n)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    grad_norm = np.inf
    iterations = 0
    # Reused buffers for the hot loop; only scalars and d-vectors are
    # allocated per iteration.
    w = np.empty(n)
    sig = np.empty(n)
    scratch = np.empty(n)
    WX = np.empty_like(X)
    G = np.empty((d, d))
    B = np.empty_like(X)
    BX = np.empty_like(X)
    for t in range(1, cfg.max_iters + 1):
        # w = softplus(raw), sig = sigmoid(raw) = 1 - exp(-w)
        np.absolute(raw, out=scratch)
        np.negative(scratch, out=scratch)
        np.exp(scratch, out=scratch)
        np.log1p(scratch, out=scratch)
        np.maximum(raw, 0.0, out=w)
        w += scratch
        np.negative(w, out=sig)
        np.exp(sig, out=sig)
        np.subtract(1.0, sig, out=sig)
        s = float(w.sum())
        if not np.isfinite(s):
            raise DivergenceError(t - 1)
        wh = w / s
        m = X.T @ wh
        np.multiply(X, wh[:, None], out=WX)
        np.dot(X.T, WX, out=G)
        G -= np.outer(m, m)
        np.fill_diagonal(G, 0.0)
        np.dot(X, G, out=B)  # row k = x_k^T cov
        np.multiply(B, X, out=BX)
        g_wh = BX.sum(axis=1)
        g_wh -= 2.0 * (B @ m)
        g_wh *= 2.0
        g_w = g_wh  # reuse in place
        g_w -= float(g_wh @ wh)
        g_w /= s
        if cfg.lambda_sum:
            g_w += 2.0 * cfg.lambda_sum * (s - 1.0)
        if cfg.lambda_ridge:
            g_w += (2.0 * cfg.lambda_ridge) * w
        grad = g_w
        grad *= sig
        grad_norm = float(np.max(np.abs(grad)))
        iterations = t
        if grad_norm < cfg.grad_tol:
            break
        m_state *= beta1
        m_state += (1.0 - beta1) * grad
        grad *= grad
        v_state *= beta2
        v_state += (1.0 - beta2) * grad
        step = np.sqrt(v_state / (1.0 - beta2**t))
        step += eps
        np.divide(m_state, step, out=step)
        step *= cfg.lr / (1.0 - beta1**t)
        raw -= step
    value = dwr_loss(X, raw, cfg)
    if not np.isfinite(value):
        raise DivergenceError(iterations)
    weights = WeightVector.normalized(_softplus(raw))
    return DwrResult(
        weights=weights,
        final_loss=value,
        iterations=iterations,
        grad_norm=grad_norm,
        max_abs_cov=max_abs_weighted_cov(X, weights),
    )


def dwr_fit_grid(dataset: Dataset, cfgs, rng=None) -> list[DwrResult]:
    """Fit one weight vector per configuration, sharing the dataset.

    Equivalent to ``[dwr_fit(dataset, c) for c in cfgs]`` up to
    floating-point reassociation (the batched path sums moment products
    in a different order), but runs all optimizations through a single
    vectorized loop, which is several times faster when the
    configurations number a handful. Deterministic; ``rng`` is accepted
    for signature uniformity and never consumed.
    """
    cfgs = list(cfgs)
    if not cfgs:
        return []
    X = np.ascontiguousarray(dataset.features)
    n, d = X.shape
    K = len(cfgs)
    # Row k of P is outer(x_k, x_k) flattened; weighted second moments
    # for every configuration then come from one (K,n) x (n,d^2) GEMM.
    P = (X[:, :, None] * X[:, None, :]).reshape(n, d * d)
    lam_sum = np.array([c.lambda_sum for c in cfgs])[:, None]
    lam_ridge = np.array([c.lambda_ridge for c in cfgs])[:, None]
    lr = np.array([c.lr for c in cfgs])
    tol = np.array([c.grad_tol for c in cfgs])
    horizon = np.array([c.max_iters for c in cfgs])
    raw = np.zeros((K, n))
    m_state = np.zeros((K, n))
    v_state = np.zeros((K, n))
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    iterations = np.zeros(K, dtype=np.int64)
    grad_norm = np.full(K, np.inf)
    active = np.ones(K, dtype=bool)
    w = np.empty((K, n))
    sig = np.empty((K, n))
    scratch = np.empty((K, n))
    diag = slice(0, d * d, d + 1)
    for t in range(1, int(horizon.max()) + 1):
        running = active & (t <= horizon)
        if not running.any():
            break
        np.absolute(raw, out=scratch)
        np.negative(scratch, out=scratch)
        np.exp(scratch, out=scratch)
        np.log1p(scratch, out=scratch)
        np.maximum(raw, 0.0, out=w)
        w += scratch
        np.negative(w, out=sig)
        np.exp(sig, out=sig)
        np.subtract(1.0, sig, out=sig)
        s = w.sum(axis=1)
        if not np.isfinite(s).all():
            raise DivergenceError(t - 1)
        wh = w / s[:, None]
        m = wh @ X  # (K, d)
        covf = wh @ P  # (K, d^2)
        covf -= (m[:, :, None] * m[:, None, :]).reshape(K, d * d)
        covf[:, diag] = 0.0
        q1 = P @ covf.T  # (n, K): x^T cov x per sample per config
        cm = np.matmul(covf.reshape(K, d, d), m[:, :, None])[:, :, 0]
        q2 = X @ cm.T  # (n, K): x^T cov m
        g_wh = (q1 - 2.0 * q2).T
        g_wh *= 2.0
        inner = np.einsum("kn,kn->k", g_wh, wh)
        g_w = g_wh
        g_w -= inner[:, None]
        g_w /= s[:, None]
        g_w += 2.0 * lam_sum * (s - 1.0)[:, None]
        g_w += (2.0 * lam_ridge) * w
        grad = g_w
        grad *= sig
        gn = np.abs(grad).max(axis=1)
        grad_norm[running] = gn[running]
        iterations[running] = t
        newly_done = running & (gn < tol)
        active &= ~newly_done
        running &= ~newly_done
        m_state *= beta1
        m_state += (1.0 - beta1) * grad
        grad *= grad
        v_state *= beta2
        v_state += (1.0 - beta2) * grad
        step = np.sqrt(v_state / (1.0 - beta2**t))
        step += eps
        np.divide(m_state, step, out=step)
        step *= (lr / (1.0 - beta1**t))[:, None]
        step *= running[:, None]
        raw -= step
    results = []
    for k, cfg in enumerate(cfgs):
        value = dwr_loss(X, raw[k], cfg)
        if not np.isfinite(value):
            raise DivergenceError(int(iterations[k]))
        weights = WeightVector.normalized(_softplus(raw[k]))
        results.append(
            DwrResult(
                weights=weights,
                final_loss=value,
                iterations=int(iterations[k]),
                grad_norm=float(grad_norm[k]),
                max_abs_cov=max_abs_weighted_cov(X, weights),
            )
        )
    return results


def max_abs_weighted_cov(features: np.ndarray, weights: WeightVector) -> float:
    """Largest |weighted covariance| over distinct feature pairs."""
    X = np.asarray(features, dtype=np.float64)
    if X.shape[0] != weights.n:
        raise DimensionError("features rows and weights length differ")
    p = weights.weights / weights.weights.sum()
    m = X.T @ p
    cov = (X * p[:, None]).T @ X - np.outer(m, m)
    np.fill_diagonal(cov, 0.0)
    return float(np.max(np.abs(cov)))
