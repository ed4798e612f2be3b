"""Synthetic covariate-shift benchmark generator.

Covariates split into a stable block S and a noise block V. Stable
features share latent Gaussians (adjacent features correlate at about
0.235), every column is clipped to ``[-clip_bound, clip_bound]``, and the
outcome depends on S alone:

* ``poly``: ``Y = S beta + s1*s2*s3 / 4 + eps``
* ``mlp``:  ``Y = S beta + g([s1, s2, s3]) + eps`` with ``g`` a fixed
  ReLU network (hidden sizes 3 and 3) whose parameters are drawn once
  from U(-1, 1) by a dedicated seed.

Environments are biased by rejection sampling: a candidate row is kept
with probability ``prod_j |r| ** (-10 * |f(s) - sgn(r) * v_j|)`` over the
designated noise columns, which makes those columns spuriously
(anti-)correlated with the outcome at strength controlled by ``r``. Only
the marginal over X changes; ``P(Y | X)`` is shared by all environments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, Rng
from .errors import ContractError, GenerationError
from .nnet import Mlp, forward_batch

__all__ = [
    "GeneratorSpec",
    "EnvironmentSpec",
    "generator_mlp",
    "draw_covariates",
    "noiseless_outcome",
    "outcomes",
    "sample_environment",
    "sample_unbiased",
    "stable_indices",
]

_DEFAULT_BETA = (1.0 / 3.0, -2.0 / 3.0, 1.0, -1.0 / 3.0, 2.0 / 3.0)
_CANDIDATE_BATCH = 8192  # fixed so the draw schedule is a pure function of the seed


@dataclass(frozen=True)
class GeneratorSpec:
    """Ground-truth data-generating process shared by all environments."""

    d_stable: int = 5
    d_noise: int = 5
    beta: tuple[float, ...] = _DEFAULT_BETA
    noise_sd: float = 0.3
    outcome_kind: str = "poly"
    mlp_theta_seed: int = 0
    clip_bound: float = 2.0
    biased_noise: tuple[int, ...] = (3, 4)

    def __post_init__(self):
        if self.d_stable < 3:
            raise ContractError("need at least 3 stable features for the nonlinear term")
        if self.d_noise < 1:
            raise ContractError("need at least one noise feature")
        if len(self.beta) != self.d_stable:
            raise ContractError(f"beta has {len(self.beta)} entries for {self.d_stable} stable features")
        if not self.noise_sd > 0:
            raise ContractError(f"noise_sd must be positive, got {self.noise_sd}")
        if self.outcome_kind not in ("poly", "mlp"):
            raise ContractError(f"outcome_kind must be 'poly' or 'mlp', got {self.outcome_kind!r}")
        if self.clip_bound <= 0:
            raise ContractError("clip_bound must be positive")
        if not self.biased_noise:
            raise ContractError("at least one biased noise column is required")
        for j in self.biased_noise:
            if not 0 <= j < self.d_noise:
                raise ContractError(f"biased noise index {j} out of range for d_noise={self.d_noise}")

    @property
    def d(self) -> int:
        return self.d_stable + self.d_noise


@dataclass(frozen=True)
class EnvironmentSpec:
    """One environment: bias strength r (|r| > 1) and a target sample count."""

    r: float
    n: int
    max_attempts_per_sample: int = 10_000

    def __post_init__(self):
        if not abs(self.r) > 1.0:
            raise ContractError(f"|r| must exceed 1, got {self.r}")
        if self.n < 1:
            raise ContractError(f"n must be >= 1, got {self.n}")
        if self.max_attempts_per_sample < 1:
            raise ContractError("max_attempts_per_sample must be >= 1")


def stable_indices(spec: GeneratorSpec) -> tuple[int, ...]:
    """Column indices of the stable block (the ground-truth selection)."""
    return tuple(range(spec.d_stable))


def generator_mlp(spec: GeneratorSpec) -> Mlp:
    """The fixed nonlinear outcome head, rebuilt identically from its seed."""
    return Mlp.init([3, 3, 3, 1], Rng(spec.mlp_theta_seed), head="linear", init_limit=1.0)


def draw_covariates(spec: GeneratorSpec, n: int, rng: Rng, clip: bool = True) -> np.ndarray:
    """(n, d) covariate rows: correlated stable block, independent noise block.

    ``S_i = 0.8 Z_i + 0.2 Z_{i+1}`` over ``d_stable + 1`` shared latent
    standard normals; V columns are independent standard normals. All
    columns are clipped to ``[-clip_bound, clip_bound]`` unless ``clip`` is disabled
    (kept as a hook so tests can measure pre-clip moments).
    """
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    z = rng.normal(size=n * (spec.d_stable + 1)).reshape(n, spec.d_stable + 1)
    s = 0.8 * z[:, : spec.d_stable] + 0.2 * z[:, 1 : spec.d_stable + 1]
    v = rng.normal(size=n * spec.d_noise).reshape(n, spec.d_noise)
    x = np.hstack([s, v])
    if clip:
        x = np.clip(x, -spec.clip_bound, spec.clip_bound)
    return x


def noiseless_outcome(spec: GeneratorSpec, s: np.ndarray, net: Mlp | None = None) -> np.ndarray:
    """f(S) without observation noise, for (n, d_stable) stable rows."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != spec.d_stable:
        raise ContractError(f"expected stable rows of shape (n, {spec.d_stable}), got {s.shape}")
    linear = s @ np.asarray(spec.beta)
    if spec.outcome_kind == "poly":
        return linear + s[:, 0] * s[:, 1] * s[:, 2] / 4.0
    if net is None:
        net = generator_mlp(spec)
    return linear + forward_batch(net, s[:, :3])[:, 0]


def outcomes(spec: GeneratorSpec, s: np.ndarray, rng: Rng, net: Mlp | None = None) -> np.ndarray:
    """Noisy outcomes ``f(S) + eps`` with ``eps ~ N(0, noise_sd^2)``."""
    f = noiseless_outcome(spec, s, net)
    return f + rng.normal(sd=spec.noise_sd, size=f.shape[0])


def _acceptance_probability(spec: GeneratorSpec, r: float, f: np.ndarray, v: np.ndarray) -> np.ndarray:
    sign = 1.0 if r > 0 else -1.0
    log_p = np.zeros_like(f)
    for j in spec.biased_noise:
        log_p -= 10.0 * np.abs(f - sign * v[:, j]) * np.log(abs(r))
    return np.exp(log_p)


def sample_environment(
    spec: GeneratorSpec, env: EnvironmentSpec, rng: Rng
) -> tuple[Dataset, float]:
    """Rejection-sample one biased environment.

    Returns the accepted dataset together with the realized acceptance
    rate. Raises :class:`GenerationError` when the attempt budget
    (``env.max_attempts_per_sample * env.n`` candidate rows) is exhausted
    first. The candidate stream is consumed in fixed-size batches, so the
    result is a pure function of ``(spec, env, rng seed)``.
    """
    net = generator_mlp(spec) if spec.outcome_kind == "mlp" else None
    budget = env.max_attempts_per_sample * env.n
    kept: list[np.ndarray] = []
    kept_f: list[np.ndarray] = []
    n_kept = 0
    attempts = 0
    while n_kept < env.n:
        if attempts >= budget:
            raise GenerationError(n_kept / attempts, attempts)
        batch = min(_CANDIDATE_BATCH, budget - attempts)
        x = draw_covariates(spec, batch, rng)
        f = noiseless_outcome(spec, x[:, : spec.d_stable], net)
        p = _acceptance_probability(spec, env.r, f, x[:, spec.d_stable :])
        u = rng.uniform(size=batch)
        mask = u < p
        attempts += batch
        if np.any(mask):
            take = x[mask][: env.n - n_kept]
            kept.append(take)
            kept_f.append(f[mask][: take.shape[0]])
            n_kept += take.shape[0]
    x = np.vstack(kept)
    f = np.concatenate(kept_f)
    y = f + rng.normal(sd=spec.noise_sd, size=env.n)
    return Dataset(x, y), n_kept / attempts


def sample_unbiased(spec: GeneratorSpec, n: int, rng: Rng) -> Dataset:
    """Unselected draw from the generating process (no environment bias)."""
    x = draw_covariates(spec, n, rng)
    y = outcomes(spec, x[:, : spec.d_stable], rng, generator_mlp(spec) if spec.outcome_kind == "mlp" else None)
    return Dataset(x, y)
