"""Shuffle-and-classify reweighter (density-ratio estimation)."""

import math

import numpy as np
import pytest

from stablesel import (
    ContractError,
    Dataset,
    Mlp,
    Rng,
    SrdoConfig,
    classifier_bce,
    max_abs_weighted_cov,
    srdo_fit,
)


def _correlated_dataset(n=400, rho=0.9, seed=0):
    rng = Rng(seed)
    z = np.asarray(rng.fork("z").normal(size=2 * n)).reshape(n, 2)
    x1 = z[:, 0]
    x2 = rho * z[:, 0] + math.sqrt(1 - rho * rho) * z[:, 1]
    return Dataset(np.column_stack([x1, x2]), np.zeros(n))


def test_config_contracts():
    with pytest.raises(ContractError):
        SrdoConfig(gamma=1.0)
    with pytest.raises(ContractError):
        SrdoConfig(epochs=0)
    with pytest.raises(ContractError):
        SrdoConfig(validation_fraction=1.0)
    with pytest.raises(ContractError):
        SrdoConfig(classifier_hidden=(4,))


def test_fit_outputs_normalized_clipped_weights():
    cfg = SrdoConfig(gamma=5.0, epochs=10)
    res = srdo_fit(_correlated_dataset(), cfg, Rng(1))
    w = res.weights.weights
    assert float(w.mean()) == pytest.approx(1.0, abs=1e-9)
    assert np.all(w > 0)
    # mean-1 renormalization can only shrink the clip window by a
    # bounded factor: all weights stay within gamma^2 of the bounds
    assert np.all(w <= cfg.gamma**2) and np.all(w >= cfg.gamma**-2)
    assert 0.0 <= res.clipped_fraction <= 1.0


def test_fit_is_deterministic():
    cfg = SrdoConfig(epochs=5)
    a = srdo_fit(_correlated_dataset(), cfg, Rng(2))
    b = srdo_fit(_correlated_dataset(), cfg, Rng(2))
    assert np.array_equal(a.weights.weights, b.weights.weights)
    assert a.validation_bce == b.validation_bce
    assert a.loss_trace == b.loss_trace


def test_different_shuffle_seed_changes_fit():
    ds = _correlated_dataset()
    a = srdo_fit(ds, SrdoConfig(epochs=5, shuffle_seed=0), Rng(3))
    b = srdo_fit(ds, SrdoConfig(epochs=5, shuffle_seed=1), Rng(3))
    assert not np.array_equal(a.weights.weights, b.weights.weights)


def test_loss_trace_shows_learning():
    res = srdo_fit(_correlated_dataset(n=600), SrdoConfig(epochs=40), Rng(4))
    trace = res.loss_trace
    assert len(trace) == 40
    # the classifier must beat the ln 2 coin-flip plateau by the end
    assert trace[-1] < math.log(2.0) - 0.02
    assert trace[-1] < trace[0]


def test_weights_reduce_dependence():
    # Reweighting by the estimated ratio should cut the weighted
    # covariance between the strongly coupled columns by at least half.
    ds = _correlated_dataset(n=800, rho=0.9)
    res = srdo_fit(ds, SrdoConfig(epochs=60), Rng(5))
    from stablesel import WeightVector

    base = max_abs_weighted_cov(ds.features, WeightVector.uniform(ds.n))
    after = max_abs_weighted_cov(ds.features, res.weights)
    assert after < 0.5 * base


def test_validation_bce_reported_and_finite():
    res = srdo_fit(_correlated_dataset(), SrdoConfig(epochs=5), Rng(6))
    assert np.isfinite(res.validation_bce)
    none = srdo_fit(
        _correlated_dataset(), SrdoConfig(epochs=5, validation_fraction=0.0), Rng(6)
    )
    assert math.isnan(none.validation_bce)


def test_validation_rows_are_excluded_from_training():
    # With a validation split the classifier trains on fewer rows, so
    # the fit must differ from the no-split fit.
    ds = _correlated_dataset()
    a = srdo_fit(ds, SrdoConfig(epochs=5, validation_fraction=0.0), Rng(7))
    b = srdo_fit(ds, SrdoConfig(epochs=5, validation_fraction=0.2), Rng(7))
    assert not np.array_equal(a.weights.weights, b.weights.weights)


def test_classifier_bce_matches_hand_value():
    # A sigmoid net with all-zero parameters predicts probability 1/2
    # for every row: cross-entropy is exactly ln 2.
    net = Mlp(
        [2, 3, 1],
        [np.zeros((2, 3)), np.zeros((3, 1))],
        [np.zeros(3), np.zeros(1)],
        head="sigmoid",
    )
    X = np.array([[1.0, 2.0], [-1.0, 0.5]])
    labels = np.array([1.0, 0.0])
    assert classifier_bce(net, X, labels) == pytest.approx(math.log(2.0), abs=1e-12)


def test_gamma_clip_is_respected_before_normalization():
    # With a tiny gamma nearly everything clips, so the weight spread
    # collapses toward uniform.
    ds = _correlated_dataset(n=500, rho=0.95)
    tight = srdo_fit(ds, SrdoConfig(gamma=1.1, epochs=30), Rng(8))
    loose = srdo_fit(ds, SrdoConfig(gamma=20.0, epochs=30), Rng(8))
    assert tight.clipped_fraction > loose.clipped_fraction
    assert float(np.std(tight.weights.weights)) < float(np.std(loose.weights.weights))
