"""Deterministic primitives shared by every other module.

This module owns the four load-bearing contracts of the package:

* :class:`Rng` -- a counter-based pseudo-random generator specified fully
  in this file.  Streams are a pure function of ``(seed, counter)``, so a
  run can be reproduced exactly, and independent substreams are obtained
  by :meth:`Rng.fork` (jump-ahead by seed derivation) rather than by
  sharing mutable state between workers.
* :class:`Dataset` -- an immutable ``(features, outcome)`` pair with a
  delimited on-disk form that round-trips IEEE-754 doubles exactly.
* :class:`WeightVector` -- strictly positive sample weights whose mean is
  pinned to 1, the normalization every consumer in the package assumes.
* :func:`solve_spd` / :func:`min_eigenvalue` -- the only linear-algebra
  entry points used for model fitting, with an explicit ill-conditioning
  contract instead of silent least-squares fallbacks.

Draw accounting for :class:`Rng` (needed when reasoning about stream
alignment in tests): ``uniform`` of k values consumes k counter steps,
``normal`` of k values consumes ``2 * ceil(k / 2)`` steps, and
``permutation(n)`` consumes n steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ContractError, DimensionError, SingularMatrixError

__all__ = [
    "Rng",
    "Dataset",
    "WeightVector",
    "weighted_mean",
    "weighted_cov",
    "solve_spd",
    "min_eigenvalue",
]

# splitmix64 constants. The stream value at counter c is mix64(seed + c * GOLDEN),
# which makes the generator counter-based: any block of outputs can be produced
# directly from its counter range, independent of history.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_INV_2_53 = float(2.0**-53)


def _mix64(z: np.ndarray) -> np.ndarray:
    # Finalizer of splitmix64; operates elementwise on uint64 arrays (wrapping).
    z = (z ^ (z >> np.uint64(30))) * _MIX_1
    z = (z ^ (z >> np.uint64(27))) * _MIX_2
    return z ^ (z >> np.uint64(31))


def _fold_key(seed: int, key: int | str) -> int:
    """Derive a child seed from a parent seed and a stream key."""
    if isinstance(key, str):
        h = _FNV_OFFSET
        for byte in key.encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & _MASK64
        key = h
    block = np.array([(seed ^ key) & _MASK64], dtype=np.uint64)
    mixed = _mix64(_mix64(block + _GOLDEN))
    return int(mixed[0])


class Rng:
    """Counter-based deterministic random stream.

    The same ``(seed, counter)`` always yields the same values, on any
    platform and in any process, because every output is computed from
    64-bit integer mixing plus IEEE-754 double arithmetic only.

    Parameters
    ----------
    seed : int
        Any Python integer; only the low 64 bits matter.
    """

    __slots__ = ("_seed", "_counter")

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._counter = 0

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def counter(self) -> int:
        """Number of raw 64-bit values consumed so far."""
        return self._counter

    def fork(self, *keys: int | str) -> "Rng":
        """Return an independent child stream addressed by ``keys``.

        Forking does not consume draws from the parent, and children with
        distinct key paths have (mixed) unrelated seeds, so parallel
        workers can each own a fork without coordination.
        """
        if not keys:
            raise ContractError("fork requires at least one key")
        seed = self._seed
        for key in keys:
            seed = _fold_key(seed, key)
        return Rng(seed)

    def _raw(self, count: int) -> np.ndarray:
        """Next ``count`` raw uint64 stream values."""
        if count < 0:
            raise ContractError(f"draw count must be >= 0, got {count}")
        start = self._counter + 1
        self._counter += count
        idx = np.arange(start, start + count, dtype=np.uint64)
        return _mix64(np.uint64(self._seed) + idx * _GOLDEN)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | None = None):
        """Doubles in ``[low, high)`` with 53-bit resolution."""
        count = 1 if size is None else int(size)
        base = (self._raw(count) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        out = low + (high - low) * base
        return float(out[0]) if size is None else out

    def normal(self, mean: float = 0.0, sd: float = 1.0, size: int | None = None):
        """Gaussian draws via Box-Muller on consecutive stream pairs."""
        count = 1 if size is None else int(size)
        pairs = (count + 1) // 2
        raw = self._raw(2 * pairs)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1).
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = (2.0 * math.pi) * u2
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        out = mean + sd * z[:count]
        return float(out[0]) if size is None else out

    def permutation(self, n: int) -> np.ndarray:
        """Uniformly random permutation of ``range(n)``."""
        if n < 0:
            raise ContractError(f"permutation length must be >= 0, got {n}")
        return np.argsort(self.uniform(size=n), kind="stable")


def _default_names(d: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(d))


def _frozen_array(values, dtype=np.float64, ndim: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus outcome vector.

    ``features`` has shape ``(n, d)``, ``outcome`` shape ``(n,)``; both are
    finite doubles and are frozen (read-only) after construction.
    """

    features: np.ndarray
    outcome: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        features = _frozen_array(self.features, ndim=2)
        outcome = _frozen_array(self.outcome, ndim=1)
        n, d = features.shape
        if n < 1 or d < 1:
            raise DimensionError(f"dataset must have n >= 1 and d >= 1, got shape {features.shape}")
        if outcome.shape[0] != n:
            raise DimensionError(
                f"outcome length {outcome.shape[0]} does not match feature rows {n}"
            )
        if not np.all(np.isfinite(features)):
            raise ContractError("features contain non-finite values")
        if not np.all(np.isfinite(outcome)):
            raise ContractError("outcome contains non-finite values")
        names = tuple(self.feature_names) if self.feature_names else _default_names(d)
        if len(names) != d:
            raise DimensionError(f"got {len(names)} feature names for {d} features")
        for name in names:
            if not name or "," in name or "\n" in name:
                raise ContractError(f"feature name {name!r} is not a valid column header")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def select(self, indices) -> "Dataset":
        """Dataset restricted to the given feature columns, in the given order."""
        idx = [int(i) for i in indices]
        if not idx:
            raise DimensionError("at least one feature column must be selected")
        for i in idx:
            if not 0 <= i < self.d:
                raise ContractError(f"feature index {i} out of range for d={self.d}")
        return Dataset(
            self.features[:, idx],
            self.outcome,
            tuple(self.feature_names[i] for i in idx),
        )

    def to_csv(self, path, header_comments: tuple[str, ...] = ()) -> None:
        """Write ``<name>,...,y`` rows with exact (shortest round-trip) doubles.

        UTF-8, LF line endings. Lines in ``header_comments`` are emitted
        first, each prefixed with ``# ``.
        """
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for comment in header_comments:
                fh.write(f"# {comment}\n")
            fh.write(",".join(self.feature_names + ("y",)) + "\n")
            for row, y in zip(self.features, self.outcome):
                fh.write(",".join(repr(float(v)) for v in row) + f",{float(y)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        """Inverse of :meth:`to_csv`; comment lines (``#``) are skipped."""
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = [line.rstrip("\n") for line in fh if not line.startswith("#")]
        if not lines:
            raise ContractError(f"{path}: no header row")
        columns = lines[0].split(",")
        if len(columns) < 2 or columns[-1] != "y":
            raise ContractError(f"{path}: header must be '<name>,...,y', got {lines[0]!r}")
        names = tuple(columns[:-1])
        rows = [line.split(",") for line in lines[1:] if line]
        if not rows:
            raise ContractError(f"{path}: no data rows")
        data = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
        if data.shape[1] != len(columns):
            raise DimensionError(f"{path}: row width does not match header")
        return cls(data[:, :-1], data[:, -1], names)


@dataclass(frozen=True)
class WeightVector:
    """Strictly positive sample weights with mean exactly 1 (within 1e-9).

    Use :meth:`normalized` to build one from arbitrary positive raw
    weights; the plain constructor verifies the normalization instead of
    performing it.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.weights, ndim=1)
        if w.shape[0] < 1:
            raise DimensionError("weight vector must be non-empty")
        if not np.all(np.isfinite(w)):
            raise ContractError("weights contain non-finite values")
        if not np.all(w > 0.0):
            raise ContractError("weights must be strictly positive")
        mean = float(np.mean(w))
        if abs(mean - 1.0) > 1e-9:
            raise ContractError(f"weights must have mean 1 (got {mean!r}); use WeightVector.normalized")
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, raw) -> "WeightVector":
        """Scale positive raw weights by their mean so the result has mean 1."""
        arr = np.asarray(raw, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise DimensionError(f"raw weights must be a non-empty vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("raw weights contain non-finite values")
        if not np.all(arr > 0.0):
            raise ContractError("raw weights must be strictly positive")
        return cls(arr / np.mean(arr))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.ones(int(n), dtype=np.float64))


def weighted_mean(values, w: WeightVector) -> float:
    """``(1/n) * sum_i w_i v_i``; equals the arithmetic mean under uniform weights."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"values must be a vector, got shape {v.shape}")
    if v.shape[0] != w.n:
        raise DimensionError(f"values length {v.shape[0]} does not match weights length {w.n}")
    return float(np.mean(w.weights * v))


def weighted_cov(a, b, w: WeightVector) -> float:
    """Weighted covariance with sum-normalized weights.

    With ``p_i = w_i / sum(w)``: ``cov = sum p a b - (sum p a)(sum p b)``.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.ndim != 1 or bv.ndim != 1:
        raise DimensionError("weighted_cov expects two vectors")
    if av.shape[0] != w.n or bv.shape[0] != w.n:
        raise DimensionError(
            f"length mismatch: a={av.shape[0]}, b={bv.shape[0]}, w={w.n}"
        )
    p = w.weights / np.sum(w.weights)
    return float(np.sum(p * av * bv) - np.sum(p * av) * np.sum(p * bv))


def _check_symmetric(mat: np.ndarray, op: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{op} expects a square matrix, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    if float(np.max(np.abs(arr - arr.T))) > 1e-8 * scale:
        raise ContractError(f"{op} expects a symmetric matrix")
    return arr


def solve_spd(mat, rhs) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A``.

    Raises :class:`SingularMatrixError` (carrying the eigenvalue ratio)
    when ``min_eig <= 1e-10 * max_eig``. One step of iterative refinement
    keeps the residual ``||Ax - b||_inf`` within ``1e-8 * (1 + ||b||_inf)``
    over the accepted conditioning range.
    """
    arr = _check_symmetric(mat, "solve_spd")
    b = np.asarray(rhs, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != arr.shape[0]:
        raise DimensionError(f"rhs shape {b.shape} does not match matrix shape {arr.shape}")
    eigs = np.linalg.eigvalsh(arr)
    emin, emax = float(eigs[0]), float(eigs[-1])
    if emax <= 0.0:
        raise SingularMatrixError(0.0, "matrix has no positive eigenvalue")
    ratio = emin / emax
    if ratio <= 1e-10:
        raise SingularMatrixError(ratio)
    factor = cho_factor(arr, lower=True)
    x = cho_solve(factor, b)
    x = x + cho_solve(factor, b - arr @ x)
    return x


def min_eigenvalue(mat) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    arr = _check_symmetric(mat, "min_eigenvalue")
    return float(np.linalg.eigvalsh(arr)[0])
