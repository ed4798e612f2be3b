"""Weighted least squares and baselines.

The weighted estimator solves the sample moment system

    Sigma_w beta = E_n[w x y],   Sigma_w = E_n[w x x^T],

with a constant column appended, so the reported coefficients are the
weighted regression slopes plus an explicit intercept. Under weights
that render the features mutually independent, slopes on features
outside the minimal stable set vanish, which is what the selection
procedure exploits.

The lasso is a plain cyclic coordinate-descent implementation operating
on internally standardized features, minimizing

    (1 / 2n) ||y - a - X beta||^2 + alpha ||beta||_1 .
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, WeightVector, solve_spd
from .errors import ContractError, DimensionError

__all__ = ["Coefficients", "wls", "ols", "lasso"]


@dataclass(frozen=True)
class Coefficients:
    """Fitted linear model: one slope per feature plus an intercept."""

    beta: np.ndarray
    intercept: float

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64, copy=True)
        if beta.ndim != 1:
            raise DimensionError(f"beta must be a vector, got shape {beta.shape}")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "intercept", float(self.intercept))

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.beta.shape[0]:
            raise DimensionError(f"features shape {X.shape} does not match beta {self.beta.shape}")
        return X @ self.beta + self.intercept


def wls(dataset: Dataset, weights: WeightVector) -> Coefficients:
    """Weighted least squares with an appended constant column.

    Raises :class:`~stablesel.errors.SingularMatrixError` when the
    weighted second-moment matrix is singular or ill-conditioned.
    """
    if weights.n != dataset.n:
        raise DimensionError(f"weights length {weights.n} does not match dataset rows {dataset.n}")
    n = dataset.n
    xt = np.hstack([dataset.features, np.ones((n, 1))])
    w = weights.weights
    sigma = (xt * w[:, None]).T @ xt / n
    moment = xt.T @ (w * dataset.outcome) / n
    coef = solve_spd(sigma, moment)
    return Coefficients(coef[:-1], coef[-1])


def ols(dataset: Dataset) -> Coefficients:
    """Ordinary least squares (uniform-weight special case)."""
    return wls(dataset, WeightVector.uniform(dataset.n))


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lasso(
    dataset: Dataset,
    alpha: float,
    max_sweeps: int = 10_000,
    tol: float = 1e-8,
) -> Coefficients:
    """L1-penalized regression by cyclic coordinate descent.

    Features are standardized internally (zero mean, unit variance); the
    returned coefficients are on the original scale. Iteration stops when
    the largest coordinate update in a sweep drops below ``tol``.
    """
    if alpha < 0:
        raise ContractError(f"alpha must be >= 0, got {alpha}")
    if max_sweeps < 1:
        raise ContractError("max_sweeps must be >= 1")
    X = dataset.features
    y = dataset.outcome
    n, d = X.shape
    x_mean = X.mean(axis=0)
    x_sd = X.std(axis=0)
    constant = x_sd == 0.0
    x_sd = np.where(constant, 1.0, x_sd)
    Xs = (X - x_mean) / x_sd
    y_mean = float(y.mean())
    resid = y - y_mean  # residual with beta = 0
    col_sq = np.mean(Xs**2, axis=0)  # 1 except for constant columns
    beta_s = np.zeros(d)
    for _ in range(max_sweeps):
        largest = 0.0
        for j in range(d):
            if constant[j]:
                continue
            old = beta_s[j]
            rho = float(Xs[:, j] @ resid) / n + col_sq[j] * old
            new = _soft_threshold(rho, alpha) / col_sq[j]
            if new != old:
                resid -= (new - old) * Xs[:, j]
                beta_s[j] = new
            largest = max(largest, abs(new - old))
        if largest < tol:
            break
    beta = beta_s / x_sd
    beta[constant] = 0.0
    return Coefficients(beta, y_mean - float(x_mean @ beta))
