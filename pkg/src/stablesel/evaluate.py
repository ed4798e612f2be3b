"""Feature scoring, ranking metrics, and downstream-shift evaluation.

The benchmark protocol: score every feature on a single (biased)
training environment, rank by score, then judge the ranking two ways —
directly, by where the truly outcome-generating features land (rank
average and F1 of the top-k set), and indirectly, by training a small
regressor on the selected columns and measuring its error across held-
out environments with different selection bias. A method that keys on
spuriously correlated features pays in both metrics, most visibly in
the spread of its error across environments.

Hyperparameter grids are searched per method with recorded selection
rules: baselines keep the candidate with the best training fit, the
decorrelating reweighter keeps the candidate with the smallest
post-fit maximum absolute weighted covariance, and the shuffle-and-
classify reweighter keeps the candidate whose classifier generalizes
best (lowest held-out cross-entropy). Ties go to the earliest
candidate in grid order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Rng, WeightVector
from .dwr import DwrConfig, dwr_fit_grid
from .errors import ContractError, DimensionError
from .nnet import AdamState, Mlp, forward_batch, train
from .regress import lasso, ols, wls
from .srdo import SrdoConfig, srdo_fit

__all__ = [
    "METHODS",
    "FeatureRanking",
    "EvalReport",
    "HyperGrids",
    "SelectedFit",
    "rank_average",
    "selection_f1",
    "score_features",
    "fit_with_selection",
    "downstream_rmse",
    "evaluate_method",
    "sweep_selection_sizes",
]

METHODS = ("dwr", "srdo", "ols", "lasso", "corr")

_REGRESSOR_HIDDEN = (5, 5)


@dataclass(frozen=True)
class FeatureRanking:
    """Per-feature scores with the induced descending order.

    ``order[0]`` is the index of the highest-scoring feature; ties are
    broken by ascending feature index so rankings are reproducible.
    ``selected_k`` records how many leading features the consumer
    intends to keep.
    """

    scores: np.ndarray
    order: np.ndarray
    selected_k: int

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        order = np.asarray(self.order, dtype=np.int64)
        if scores.ndim != 1 or scores.size == 0:
            raise DimensionError("scores must be a non-empty vector")
        if not np.isfinite(scores).all():
            raise ContractError("scores must be finite")
        if sorted(order.tolist()) != list(range(scores.size)):
            raise ContractError("order must be a permutation of the feature indices")
        ranked = scores[order]
        if not np.all(ranked[:-1] >= ranked[1:]):
            raise ContractError("order must sort scores descending")
        for a, b in zip(order[:-1], order[1:]):
            if scores[a] == scores[b] and a > b:
                raise ContractError("tied scores must break by ascending feature index")
        if not 1 <= self.selected_k <= scores.size:
            raise ContractError(f"selected_k must lie in 1..{scores.size}")
        scores.setflags(write=False)
        order.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "order", order)

    @classmethod
    def from_scores(cls, scores, selected_k: int) -> "FeatureRanking":
        scores = np.asarray(scores, dtype=np.float64)
        order = np.lexsort((np.arange(scores.size), -scores))
        return cls(scores=scores, order=order, selected_k=int(selected_k))

    @property
    def d(self) -> int:
        return int(self.scores.size)

    def top(self, k: int | None = None) -> tuple:
        """Indices of the k leading features (default: ``selected_k``)."""
        k = self.selected_k if k is None else int(k)
        if not 1 <= k <= self.d:
            raise ContractError(f"k must lie in 1..{self.d}")
        return tuple(int(j) for j in self.order[:k])


@dataclass(frozen=True)
class EvalReport:
    """Metrics for one (method, environment, seed) evaluation cell."""

    rank_average: float
    f1: float
    rmse_per_env: dict
    rmse_mean: float
    rmse_std: float

    def __post_init__(self):
        if not 0.0 <= self.f1 <= 1.0:
            raise ContractError(f"f1 must lie in [0, 1], got {self.f1}")
        if not np.isfinite(self.rank_average):
            raise ContractError("rank_average must be finite")


def _truth_set(truth, d: int) -> frozenset:
    t = frozenset(int(j) for j in truth)
    if not t:
        raise ContractError("truth set must be non-empty")
    if any(j < 0 or j >= d for j in t):
        raise ContractError(f"truth indices must lie in 0..{d - 1}")
    return t


def rank_average(ranking: FeatureRanking, truth) -> float:
    """Mean 1-based position of the truth features in the order."""
    t = _truth_set(truth, ranking.d)
    position = {int(j): i + 1 for i, j in enumerate(ranking.order)}
    return float(np.mean([position[j] for j in sorted(t)]))


def selection_f1(ranking: FeatureRanking, truth, k: int) -> float:
    """F1 between the top-k selection and the truth set."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    t = _truth_set(truth, ranking.d)
    chosen = set(ranking.top(min(k, ranking.d)))
    overlap = len(chosen & t)
    if overlap == 0:
        return 0.0
    precision = overlap / len(chosen)
    recall = overlap / len(t)
    return 2.0 * precision * recall / (precision + recall)


def _correlation_scores(dataset: Dataset) -> np.ndarray:
    X = dataset.features
    y = dataset.outcome
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    num = xc.T @ yc
    den = np.sqrt((xc * xc).sum(axis=0) * float(yc @ yc))
    scores = np.zeros(X.shape[1])
    ok = den > 0
    scores[ok] = np.abs(num[ok] / den[ok])
    return scores


def score_features(method: str, dataset: Dataset, hyper, rng: Rng, selected_k: int = 5) -> FeatureRanking:
    """Rank features for one method at a fixed hyperparameter setting.

    Scores are absolute regression coefficients — weighted for the two
    reweighting methods (fit, then weighted least squares), plain
    otherwise — except the correlation baseline, which scores by
    |Pearson correlation| with the outcome. ``hyper`` is the method's
    config object (reweighters), the penalty strength (lasso), or None.
    """
    method = method.lower()
    if method == "dwr":
        result = dwr_fit_grid(dataset, [hyper if hyper is not None else DwrConfig()])[0]
        scores = np.abs(wls(dataset, result.weights).beta)
    elif method == "srdo":
        cfg = hyper if hyper is not None else SrdoConfig()
        result = srdo_fit(dataset, cfg, rng)
        scores = np.abs(wls(dataset, result.weights).beta)
    elif method == "ols":
        scores = np.abs(ols(dataset).beta)
    elif method == "lasso":
        alpha = 0.001 if hyper is None else float(hyper)
        scores = np.abs(lasso(dataset, alpha).beta)
    elif method == "corr":
        scores = _correlation_scores(dataset)
    else:
        raise ContractError(f"unknown method {method!r}; expected one of {METHODS}")
    return FeatureRanking.from_scores(scores, selected_k=min(selected_k, dataset.d))


@dataclass(frozen=True)
class HyperGrids:
    """Candidate hyperparameters searched per method."""

    dwr: tuple = tuple(
        DwrConfig(lambda_sum=a, lambda_ridge=b) for a in (0.02, 0.05, 0.1) for b in (0.02, 0.05, 0.1)
    )
    srdo_gammas: tuple = (5.0, 10.0, 20.0)
    lasso_alphas: tuple = (0.0003, 0.001, 0.01, 0.1)
    srdo_template: SrdoConfig = SrdoConfig()


@dataclass(frozen=True)
class SelectedFit:
    """Winning candidate of a per-method grid search."""

    method: str
    hyper_label: str
    ranking: FeatureRanking
    weights: WeightVector | None
    diagnostics: dict


def fit_with_selection(
    method: str, dataset: Dataset, grids: HyperGrids, rng: Rng, selected_k: int = 5
) -> SelectedFit:
    """Run one method's grid and keep the winner under its selection rule.

    Rules (ties to the earliest candidate): decorrelating reweighter —
    smallest post-fit max |weighted covariance|; shuffle-and-classify
    reweighter — smallest held-out classifier cross-entropy, with each
    candidate drawing its shuffle and training streams from its own
    child of ``rng``; lasso — best (lowest) training mean squared
    error; plain least squares and the correlation baseline have no
    grid.
    """
    method = method.lower()
    if method == "dwr":
        results = dwr_fit_grid(dataset, grids.dwr)
        best = min(range(len(results)), key=lambda k: (results[k].max_abs_cov, k))
        chosen, res = grids.dwr[best], results[best]
        ranking = FeatureRanking.from_scores(
            np.abs(wls(dataset, res.weights).beta), selected_k=min(selected_k, dataset.d)
        )
        return SelectedFit(
            method=method,
            hyper_label=f"lambda_sum={chosen.lambda_sum:g},lambda_ridge={chosen.lambda_ridge:g}",
            ranking=ranking,
            weights=res.weights,
            diagnostics={"max_abs_cov": res.max_abs_cov, "iterations": res.iterations},
        )
    if method == "srdo":
        fits = []
        for gi, gamma in enumerate(grids.srdo_gammas):
            crng = rng.fork("srdo", gi)
            cfg_fields = {
                "gamma": float(gamma),
                "classifier_hidden": grids.srdo_template.classifier_hidden,
                "epochs": grids.srdo_template.epochs,
                "batch_size": grids.srdo_template.batch_size,
                "lr": grids.srdo_template.lr,
                "shuffle_seed": crng.fork("shuffle").seed,
                "validation_fraction": grids.srdo_template.validation_fraction,
            }
            cfg = SrdoConfig(**cfg_fields)
            fits.append((cfg, srdo_fit(dataset, cfg, crng.fork("fit"))))
        best = min(range(len(fits)), key=lambda k: (fits[k][1].validation_bce, k))
        cfg, res = fits[best]
        ranking = FeatureRanking.from_scores(
            np.abs(wls(dataset, res.weights).beta), selected_k=min(selected_k, dataset.d)
        )
        return SelectedFit(
            method=method,
            hyper_label=f"gamma={cfg.gamma:g}",
            ranking=ranking,
            weights=res.weights,
            diagnostics={
                "validation_bce": res.validation_bce,
                "clipped_fraction": res.clipped_fraction,
            },
        )
    if method == "lasso":
        fits = []
        for alpha in grids.lasso_alphas:
            coef = lasso(dataset, float(alpha))
            resid = dataset.outcome - coef.predict(dataset.features)
            fits.append((float(alpha), coef, float(resid @ resid) / dataset.n))
        best = min(range(len(fits)), key=lambda k: (fits[k][2], k))
        alpha, coef, mse = fits[best]
        ranking = FeatureRanking.from_scores(np.abs(coef.beta), selected_k=min(selected_k, dataset.d))
        return SelectedFit(
            method=method,
            hyper_label=f"alpha={alpha:g}",
            ranking=ranking,
            weights=None,
            diagnostics={"train_mse": mse},
        )
    if method in ("ols", "corr"):
        ranking = score_features(method, dataset, None, rng, selected_k=selected_k)
        return SelectedFit(method=method, hyper_label="", ranking=ranking, weights=None, diagnostics={})
    raise ContractError(f"unknown method {method!r}; expected one of {METHODS}")


def downstream_rmse(
    train_data: Dataset,
    tests,
    selected,
    rng: Rng,
    *,
    epochs: int = 200,
    batch_size: int = 256,
    net: Mlp | None = None,
):
    """Train a small regressor on the selected columns; score every test env.

    Returns ``(rmse_per_env, rmse_mean, rmse_std)`` where the map keys
    are the environments' labels in the order given. The regressor is a
    two-hidden-layer (5, 5) network with a linear head; ``net`` and
    ``epochs`` exist so tests can substitute a fixed predictor (for
    example a zero-initialized output layer with zero epochs). The
    standard deviation is the population formula across environments.
    """
    cols = sorted(set(int(j) for j in selected))
    if not cols:
        raise ContractError("selected column set must be non-empty")
    sub = train_data.select(cols)
    if net is None:
        net = Mlp.init([len(cols), *_REGRESSOR_HIDDEN, 1], rng.fork("init"), head="linear")
    adam = AdamState.for_net(net, lr=0.001)
    net, _ = train(net, sub.features, sub.outcome, "mse", adam, epochs, batch_size, rng.fork("batches"))
    rmse_per_env = {}
    for label, env in tests:
        pred = forward_batch(net, env.features[:, cols])[:, 0]
        err = pred - env.outcome
        rmse_per_env[label] = float(np.sqrt(np.mean(err * err)))
    values = np.array(list(rmse_per_env.values()))
    return rmse_per_env, float(values.mean()), float(values.std())


def evaluate_method(
    method: str,
    train_data: Dataset,
    tests,
    truth,
    grids: HyperGrids,
    rng: Rng,
    *,
    selected_k: int = 5,
    regressor_epochs: int = 200,
) -> tuple[EvalReport, SelectedFit]:
    """Full evaluation of one method on one training environment."""
    fit = fit_with_selection(method, train_data, grids, rng, selected_k=selected_k)
    rmse_per_env, rmse_mean, rmse_std = downstream_rmse(
        train_data, tests, fit.ranking.top(), rng.fork("regressor"), epochs=regressor_epochs
    )
    report = EvalReport(
        rank_average=rank_average(fit.ranking, truth),
        f1=selection_f1(fit.ranking, truth, fit.ranking.selected_k),
        rmse_per_env=rmse_per_env,
        rmse_mean=rmse_mean,
        rmse_std=rmse_std,
    )
    return report, fit


def sweep_selection_sizes(
    ranking: FeatureRanking,
    train_data: Dataset,
    tests,
    rng: Rng,
    *,
    epochs: int = 200,
):
    """Downstream error as the number of kept leading features varies.

    Returns one ``(k, rmse_mean, rmse_std)`` row per k = 1..d, each
    trained from its own child stream so rows are independent of one
    another.
    """
    rows = []
    for k in range(1, ranking.d + 1):
        _, mean, std = downstream_rmse(
            train_data, tests, ranking.top(k), rng.fork("k", k), epochs=epochs
        )
        rows.append((k, mean, std))
    return rows
