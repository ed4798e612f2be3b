"""Brute-force ground truth on small discrete joint distributions.

Everything here works by exact summation over a full joint probability
table, so the structural claims the library relies on — the superset
lattice of stable sets, uniqueness of the minimal stable set, its
inclusion in the Markov boundary, and the vanishing of weighted
population regression coefficients outside the minimal stable set —
can be verified without sampling error. Tables are limited to at most
five features with at most five values each, which keeps the 2^d
subset enumeration and the per-subset table scans trivially cheap.

Conventions: a joint over features ``X_1..X_d`` and outcome ``Y`` is
stored as a dense array of cell probabilities with one axis per
feature plus a trailing outcome axis. Feature subsets are exchanged as
frozensets of 0-based column indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .core import Dataset, Rng, solve_spd
from .errors import ContractError, DimensionError, TheoryViolationError
from .regress import Coefficients

__all__ = [
    "DiscreteJoint",
    "cond_expectation",
    "stable_sets",
    "minimal_stable_set",
    "markov_boundary",
    "independence_weights",
    "population_wls",
    "reweighted_joint",
    "sample_joint",
    "random_joint",
    "heteroskedastic_example",
    "joint_from_json",
    "joint_to_json",
]

# Equality tolerance for conditional expectations / distributions on
# renormalized double-precision tables.
_EQ_TOL = 1e-10
_MAX_FEATURES = 5
_MAX_SUPPORT = 5


@dataclass(frozen=True)
class DiscreteJoint:
    """Fully tabulated joint distribution of (X, Y) with positive cells."""

    feature_supports: tuple
    outcome_support: tuple
    probs: np.ndarray

    def __post_init__(self):
        supports = tuple(tuple(float(v) for v in s) for s in self.feature_supports)
        outcome = tuple(float(v) for v in self.outcome_support)
        if not 1 <= len(supports) <= _MAX_FEATURES:
            raise DimensionError(f"need 1..{_MAX_FEATURES} features, got {len(supports)}")
        for j, s in enumerate(supports):
            if not 1 <= len(s) <= _MAX_SUPPORT:
                raise DimensionError(f"feature {j} support size {len(s)} outside 1..{_MAX_SUPPORT}")
            if len(set(s)) != len(s):
                raise ContractError(f"feature {j} support has repeated values")
        if len(set(outcome)) != len(outcome) or not outcome:
            raise ContractError("outcome support must be non-empty with distinct values")
        table = np.asarray(self.probs, dtype=np.float64)
        shape = tuple(len(s) for s in supports) + (len(outcome),)
        if table.shape != shape:
            raise DimensionError(f"probability table shape {table.shape} != {shape}")
        if not np.isfinite(table).all() or (table <= 0).any():
            raise ContractError("every joint cell must be finite and strictly positive")
        table = table / table.sum()  # renormalized once at construction
        table.setflags(write=False)
        object.__setattr__(self, "feature_supports", supports)
        object.__setattr__(self, "outcome_support", outcome)
        object.__setattr__(self, "probs", table)

    @property
    def d(self) -> int:
        return len(self.feature_supports)

    def feature_marginal(self) -> np.ndarray:
        """P(x): outcome axis summed out."""
        return self.probs.sum(axis=-1)

    def cells(self):
        """Iterate (index tuple, value tuple) over the feature grid."""
        sizes = [len(s) for s in self.feature_supports]
        for idx in product(*(range(k) for k in sizes)):
            yield idx, tuple(self.feature_supports[j][i] for j, i in enumerate(idx))


def _subset_key(joint: DiscreteJoint, subset) -> tuple:
    sub = frozenset(int(j) for j in subset)
    if any(j < 0 or j >= joint.d for j in sub):
        raise ContractError(f"subset {sorted(sub)} has indices outside 0..{joint.d - 1}")
    return tuple(sorted(sub))


def cond_expectation(joint: DiscreteJoint, subset) -> dict:
    """Exact E[Y | X_S = s] for every assignment s of the subset.

    Keys are value tuples ordered by ascending feature index; the empty
    subset yields a single entry keyed by the empty tuple holding E[Y].
    """
    cols = _subset_key(joint, subset)
    other = tuple(j for j in range(joint.d) if j not in cols)
    marg = joint.probs.sum(axis=other) if other else joint.probs.copy()
    y = np.asarray(joint.outcome_support)
    mass = marg.sum(axis=-1)
    means = (marg @ y) / mass
    out = {}
    for idx in product(*(range(len(joint.feature_supports[j])) for j in cols)):
        key = tuple(joint.feature_supports[j][i] for j, i in zip(cols, idx))
        out[key] = float(means[idx]) if cols else float(means)
    return out


def _cond_mean_full(joint: DiscreteJoint, subset) -> np.ndarray:
    """E[Y | X_S] broadcast to the full feature grid."""
    cols = set(_subset_key(joint, subset))
    other = tuple(j for j in range(joint.d) if j not in cols)
    marg = joint.probs.sum(axis=other, keepdims=True) if other else joint.probs
    y = np.asarray(joint.outcome_support)
    means = (marg @ y) / marg.sum(axis=-1)
    return np.broadcast_to(means, joint.probs.shape[:-1])


def stable_sets(joint: DiscreteJoint) -> list:
    """All subsets S whose E[Y|X_S] matches E[Y|X] at every support point."""
    full = _cond_mean_full(joint, range(joint.d))
    found = []
    for k in range(joint.d + 1):
        for cols in combinations(range(joint.d), k):
            if np.max(np.abs(_cond_mean_full(joint, cols) - full)) < _EQ_TOL:
                found.append(frozenset(cols))
    return found


def _unique_minimal(sets, what: str) -> frozenset:
    minimal = [s for s in sets if not any(t < s for t in sets)]
    if len(minimal) != 1:
        raise TheoryViolationError(
            f"expected a unique minimal {what}, found {sorted(sorted(m) for m in minimal)}"
        )
    return minimal[0]


def minimal_stable_set(joint: DiscreteJoint) -> frozenset:
    """The unique smallest stable subset; verifies the superset lattice.

    Raises a theory violation if minimality is not unique or if the
    stable family is not exactly the supersets of the minimum — either
    would mean a tolerance or construction bug, since both properties
    are guaranteed for strictly positive tables.
    """
    sets = stable_sets(joint)
    base = _unique_minimal(sets, "stable set")
    lattice = {frozenset(c) for k in range(joint.d + 1) for c in combinations(range(joint.d), k) if base <= frozenset(c)}
    if set(sets) != lattice:
        raise TheoryViolationError(
            f"stable sets are not the supersets of {sorted(base)}: got {sorted(sorted(s) for s in sets)}"
        )
    return base


def _blanket_holds(joint: DiscreteJoint, subset) -> bool:
    """Whether P(Y | X) == P(Y | X_S) everywhere (Y independent of the rest given S)."""
    cols = set(_subset_key(joint, subset))
    other = tuple(j for j in range(joint.d) if j not in cols)
    marg = joint.probs.sum(axis=other, keepdims=True) if other else joint.probs
    cond_s = marg / marg.sum(axis=-1, keepdims=True)
    cond_full = joint.probs / joint.probs.sum(axis=-1, keepdims=True)
    return bool(np.max(np.abs(cond_full - np.broadcast_to(cond_s, cond_full.shape))) < _EQ_TOL)


def markov_boundary(joint: DiscreteJoint) -> frozenset:
    """Smallest subset rendering Y independent of the remaining features.

    Verifies uniqueness of the minimum, the superset lattice of the
    blanket family, and that the minimal stable set is contained in the
    boundary.
    """
    blankets = []
    for k in range(joint.d + 1):
        for cols in combinations(range(joint.d), k):
            if _blanket_holds(joint, cols):
                blankets.append(frozenset(cols))
    boundary = _unique_minimal(blankets, "Markov blanket")
    lattice = {frozenset(c) for k in range(joint.d + 1) for c in combinations(range(joint.d), k) if boundary <= frozenset(c)}
    if set(blankets) != lattice:
        raise TheoryViolationError(
            f"blankets are not the supersets of {sorted(boundary)}: got {sorted(sorted(s) for s in blankets)}"
        )
    if not minimal_stable_set(joint) <= boundary:
        raise TheoryViolationError(
            f"minimal stable set {sorted(minimal_stable_set(joint))} not inside boundary {sorted(boundary)}"
        )
    return boundary


def independence_weights(joint: DiscreteJoint) -> np.ndarray:
    """w(x) = prod_i P(x_i) / P(x), tabulated over the feature grid.

    The reweighted feature distribution P(x)·w(x) factorizes into the
    product of the original marginals, so the features become mutually
    independent while every conditional P(y|x) is left untouched. Both
    facts are re-checked numerically before returning.
    """
    p_x = joint.feature_marginal()
    w = np.ones_like(p_x)
    for j in range(joint.d):
        other = tuple(k for k in range(joint.d) if k != j)
        marg_j = p_x.sum(axis=other)
        shape = [1] * joint.d
        shape[j] = len(joint.feature_supports[j])
        w = w * marg_j.reshape(shape)
    w = w / p_x
    mean_w = float((p_x * w).sum())
    if abs(mean_w - 1.0) > 1e-12:
        raise TheoryViolationError(f"E[w] = {mean_w!r}, expected 1")
    q = p_x * w
    expected = np.ones_like(q)
    for j in range(joint.d):
        other = tuple(k for k in range(joint.d) if k != j)
        marg_j = q.sum(axis=other)
        shape = [1] * joint.d
        shape[j] = len(joint.feature_supports[j])
        expected = expected * marg_j.reshape(shape)
    if np.max(np.abs(q - expected)) > 1e-12:
        raise TheoryViolationError("reweighted feature distribution fails to factorize")
    return w


def reweighted_joint(joint: DiscreteJoint, w: np.ndarray) -> DiscreteJoint:
    """The joint obtained by multiplying cell mass by feature weights w(x)."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != joint.probs.shape[:-1]:
        raise DimensionError(f"weight table shape {w.shape} != {joint.probs.shape[:-1]}")
    return DiscreteJoint(joint.feature_supports, joint.outcome_support, joint.probs * w[..., None])


def population_wls(joint: DiscreteJoint, w: np.ndarray) -> Coefficients:
    """Exact population weighted least squares with an intercept.

    Solves E[w x̃ x̃ᵀ] β = E[w x̃ Y] by direct summation over the table,
    where x̃ appends a constant 1 to the feature vector. Raises the
    singular-matrix error if the weighted design is rank deficient.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != joint.probs.shape[:-1]:
        raise DimensionError(f"weight table shape {w.shape} != {joint.probs.shape[:-1]}")
    d = joint.d
    y = np.asarray(joint.outcome_support)
    sigma = np.zeros((d + 1, d + 1))
    moment = np.zeros(d + 1)
    p_x = joint.feature_marginal()
    ey_x = (joint.probs @ y) / p_x
    for idx, values in joint.cells():
        xt = np.append(values, 1.0)
        mass = w[idx] * p_x[idx]
        sigma += mass * np.outer(xt, xt)
        moment += mass * ey_x[idx] * xt
    coef = solve_spd(sigma, moment)
    return Coefficients(beta=coef[:-1], intercept=float(coef[-1]))


def sample_joint(joint: DiscreteJoint, n: int, rng: Rng) -> tuple:
    """Draw n iid rows by inverse-CDF lookup over the flattened table.

    Returns ``(dataset, cell)`` where ``cell[i]`` is the flat index of
    row i's feature cell, so callers can look exact per-row quantities
    (e.g. the independence weights) up via ``table.reshape(-1)[cell]``.
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    cum = np.cumsum(joint.probs.reshape(-1))
    cum[-1] = 1.0
    raw = np.searchsorted(cum, np.asarray(rng.uniform(size=n)), side="right")
    idx = np.unravel_index(raw, joint.probs.shape)
    x = np.column_stack(
        [np.asarray(joint.feature_supports[j])[idx[j]] for j in range(joint.d)]
    )
    y = np.asarray(joint.outcome_support)[idx[-1]]
    cell = np.ravel_multi_index(idx[:-1], joint.probs.shape[:-1])
    return Dataset(x, y), cell


def _positive_table(rng: Rng, shape) -> np.ndarray:
    """Strictly positive random mass table (iid exponentials, floored)."""
    u = rng.uniform(size=int(np.prod(shape)))
    return (0.05 - np.log1p(-u)).reshape(shape)


def _support_values(rng: Rng, count: int) -> tuple:
    vals = np.sort(rng.uniform(-2.0, 2.0, size=count))
    return tuple(float(v + 0.1 * i) for i, v in enumerate(vals))  # enforce separation


def random_joint(rng: Rng, max_features: int = 4, max_support: int = 3) -> DiscreteJoint:
    """A structured random joint for exercising the enumeration oracle.

    Draws one of three shapes: a generic joint whose outcome conditional
    depends on a random feature subset, a mean-restricted joint whose
    conditional mean depends on a strictly smaller subset than its
    conditional distribution (three-point outcome with a mean-preserving
    spread direction), or a fully independent outcome. Feature marginals
    are always dependent-by-construction random positive tables, so
    independence weighting is non-trivial.
    """
    d = 2 + int(rng.fork("d").uniform() * (max_features - 1))
    sizes = [2 + int(u * (max_support - 1)) for u in rng.fork("sizes").uniform(size=d)]
    supports = tuple(_support_values(rng.fork("support", j), sizes[j]) for j in range(d))
    p_x = _positive_table(rng.fork("margin"), sizes)
    p_x /= p_x.sum()
    kind = rng.fork("kind").uniform()
    if kind < 0.2:
        # Outcome independent of every feature.
        y_vals = _support_values(rng.fork("yvals"), 3)
        q = _positive_table(rng.fork("ycond"), (3,))
        q /= q.sum()
        probs = p_x[..., None] * q
        return DiscreteJoint(supports, y_vals, probs)
    if kind < 0.55:
        # Conditional mean driven by one subset, spread by a disjoint one.
        y_vals = np.array(_support_values(rng.fork("yvals"), 3))
        order = rng.fork("roles").permutation(d)
        n_mean = 1 + int(rng.fork("nmean").uniform() * min(2, d - 1))
        mean_cols = sorted(int(j) for j in order[:n_mean])
        n_sd = 1 + int(rng.fork("nsd").uniform() * min(2, d - n_mean))
        sd_cols = sorted(int(j) for j in order[n_mean:n_mean + n_sd])
        ybar = y_vals.mean()
        span = y_vals[2] - y_vals[0]
        shift = np.array([-1.0 / span, 0.0, 1.0 / span])  # moves the mean by 1
        spread = np.array([y_vals[1] - y_vals[2], y_vals[2] - y_vals[0], y_vals[0] - y_vals[1]])
        spread_cap = 0.15 / np.max(np.abs(spread))
        mean_shape = [sizes[j] if j in mean_cols else 1 for j in range(d)]
        sd_shape = [sizes[j] if j in sd_cols else 1 for j in range(d)]
        mu = ybar + (0.15 * span) * (2.0 * rng.fork("mu").uniform(size=int(np.prod(mean_shape))) - 1.0)
        tt = spread_cap * (2.0 * rng.fork("tt").uniform(size=int(np.prod(sd_shape))) - 1.0)
        mu = mu.reshape(mean_shape)
        tt = tt.reshape(sd_shape)
        cond = (
            np.full(tuple(sizes) + (3,), 1.0 / 3.0)
            + (mu - ybar)[..., None] * shift
            + tt[..., None] * spread
        )
        probs = p_x[..., None] * cond
        return DiscreteJoint(supports, tuple(float(v) for v in y_vals), probs)
    # Generic: conditional distribution depends on a random non-empty subset.
    ky = 2 + int(rng.fork("ky").uniform() * 2)
    y_vals = _support_values(rng.fork("yvals"), ky)
    order = rng.fork("bcols").permutation(d)
    n_dep = 1 + int(rng.fork("ndep").uniform() * d)
    dep_cols = sorted(int(j) for j in order[:n_dep])
    cond_shape = tuple(sizes[j] if j in dep_cols else 1 for j in range(d)) + (ky,)
    cond = _positive_table(rng.fork("ycond"), cond_shape)
    cond = cond / cond.sum(axis=-1, keepdims=True)
    probs = p_x[..., None] * np.broadcast_to(cond, tuple(sizes) + (ky,))
    return DiscreteJoint(supports, y_vals, probs)


def heteroskedastic_example() -> DiscreteJoint:
    """Discrete instance whose stable set is strictly inside the boundary.

    Two features: X1 in {-1, +1} carries the conditional mean
    (E[Y | X1, X2] = X1 exactly); X2 in {1, 2} scales a symmetric,
    mean-preserving spread (Y = X1 with probability 1/2, Y = X1 ± X2
    with probability 1/4 each). The feature marginal makes X1 and X2
    dependent so independence weighting has work to do. The minimal
    stable set is {X1} while the Markov boundary is {X1, X2}.
    """
    x1_vals = (-1.0, 1.0)
    x2_vals = (1.0, 2.0)
    y_vals = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)
    y_index = {v: i for i, v in enumerate(y_vals)}
    # Dependent, strictly positive feature marginal.
    p_x = np.array([[0.35, 0.15], [0.15, 0.35]])
    probs = np.zeros((2, 2, len(y_vals)))
    for i, x1 in enumerate(x1_vals):
        for j, x2 in enumerate(x2_vals):
            cell = np.full(len(y_vals), 1e-9)  # keep all cells strictly positive
            cell[y_index[x1]] += 0.5
            cell[y_index[x1 - x2]] += 0.25
            cell[y_index[x1 + x2]] += 0.25
            probs[i, j] = p_x[i, j] * (cell / cell.sum())
    return DiscreteJoint((x1_vals, x2_vals), y_vals, probs)


def joint_to_json(joint: DiscreteJoint) -> str:
    """Serialize as {feature_supports, outcome_support, probs row-major}."""
    payload = {
        "feature_supports": [list(s) for s in joint.feature_supports],
        "outcome_support": list(joint.outcome_support),
        "probs": [float(v) for v in joint.probs.ravel()],
    }
    return json.dumps(payload, indent=2)


def joint_from_json(text: str) -> DiscreteJoint:
    """Inverse of :func:`joint_to_json`; validates table length."""
    payload = json.loads(text)
    try:
        supports = [list(map(float, s)) for s in payload["feature_supports"]]
        outcome = list(map(float, payload["outcome_support"]))
        flat = np.asarray(payload["probs"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed joint document: {exc}") from exc
    shape = tuple(len(s) for s in supports) + (len(outcome),)
    if flat.size != int(np.prod(shape)):
        raise ContractError(f"probs length {flat.size} != product of support sizes {np.prod(shape)}")
    return DiscreteJoint(tuple(map(tuple, supports)), tuple(outcome), flat.reshape(shape))
