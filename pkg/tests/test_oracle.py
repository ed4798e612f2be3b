"""Exact discrete-distribution oracle for the identifiability claims."""

import numpy as np
import pytest

from stablesel import ContractError, DimensionError, Rng, TheoryViolationError, WeightVector, wls
from stablesel.oracle import (
    DiscreteJoint,
    cond_expectation,
    heteroskedastic_example,
    independence_weights,
    joint_from_json,
    joint_to_json,
    markov_boundary,
    minimal_stable_set,
    population_wls,
    random_joint,
    reweighted_joint,
    sample_joint,
    stable_sets,
)


def _xor_like_joint():
    # Y depends on X1 only; X2 is correlated with X1 but carries no
    # extra information about Y: E[Y|X1=1] = 2, E[Y|X1=-1] = -2.
    p = np.zeros((2, 2, 2))
    # axes: x1 in {-1, 1}, x2 in {0, 1}, y in {-2, 2}
    p[0, 0] = (0.30, 0.0)
    p[0, 1] = (0.20, 0.0)
    p[1, 0] = (0.0, 0.20)
    p[1, 1] = (0.0, 0.30)
    p = np.maximum(p, 1e-12)  # strictly positive cells
    return DiscreteJoint(((-1.0, 1.0), (0.0, 1.0)), (-2.0, 2.0), p)


def _product_joint():
    # X1 and X2 independent; Y = X1 deterministic (up to tiny mass).
    p = np.zeros((2, 2, 2))
    for i, x1 in enumerate((-1.0, 1.0)):
        for j in range(2):
            for k, y in enumerate((-1.0, 1.0)):
                p[i, j, k] = 0.25 * (1e-9 if y != x1 else 1.0)
    return DiscreteJoint(((-1.0, 1.0), (5.0, 7.0)), (-1.0, 1.0), p)


def test_joint_construction_normalizes_once():
    j = _xor_like_joint()
    assert j.probs.sum() == pytest.approx(1.0, abs=1e-15)
    assert j.d == 2


def test_joint_rejects_nonpositive_and_bad_shapes():
    with pytest.raises(ContractError):
        DiscreteJoint(((0.0, 1.0),), (0.0,), np.array([[0.5], [0.0]]))
    with pytest.raises(DimensionError):
        DiscreteJoint(((0.0, 1.0),), (0.0,), np.ones((3, 1)))
    with pytest.raises(ContractError):
        DiscreteJoint(((0.0, 0.0),), (0.0,), np.ones((2, 1)))  # repeated support value


def test_cond_expectation_hand_values():
    j = _xor_like_joint()
    e1 = cond_expectation(j, [0])
    assert e1[(-1.0,)] == pytest.approx(-2.0, abs=1e-9)
    assert e1[(1.0,)] == pytest.approx(2.0, abs=1e-9)
    # marginal mean: P(x1=1) = 0.5, so E[Y] = 0
    e0 = cond_expectation(j, [])
    assert e0[()] == pytest.approx(0.0, abs=1e-9)


def test_stable_sets_lattice_on_hand_instance():
    j = _xor_like_joint()
    sets = stable_sets(j)
    assert minimal_stable_set(j) == frozenset({0})
    assert set(sets) == {frozenset({0}), frozenset({0, 1})}


def test_markov_boundary_hand_instance():
    # X2 adds no information about Y beyond X1 in this construction.
    assert markov_boundary(_xor_like_joint()) == frozenset({0})


def test_independence_weights_hand_value():
    # p(x1, x2) = [[0.4, 0.1], [0.1, 0.4]]: both marginals are (1/2, 1/2),
    # so w = 0.25 / p -> 0.625 on the diagonal, 2.5 off it.
    p = np.array([[[0.4], [0.1]], [[0.1], [0.4]]])
    j = DiscreteJoint(((-1.0, 1.0), (-1.0, 1.0)), (0.0,), p)
    w = independence_weights(j)
    assert np.allclose(w, [[0.625, 2.5], [2.5, 0.625]], atol=1e-12)


def test_independence_weights_trivial_on_product_joint():
    w = independence_weights(_product_joint())
    assert np.allclose(w, 1.0, atol=1e-9)


def test_reweighting_preserves_conditionals():
    # Reweighting acts on the feature law only: P(y | x) is untouched.
    j = _xor_like_joint()
    w = independence_weights(j)
    tilted = reweighted_joint(j, w)
    orig = j.probs / j.probs.sum(axis=-1, keepdims=True)
    new = tilted.probs / tilted.probs.sum(axis=-1, keepdims=True)
    assert np.max(np.abs(orig - new)) < 1e-12


def test_population_wls_exact_linear_model():
    j = _product_joint()
    coef = population_wls(j, np.ones((2, 2)))
    assert coef.beta[0] == pytest.approx(1.0, abs=1e-6)
    assert abs(coef.beta[1]) < 1e-6
    assert abs(coef.intercept) < 1e-6


def test_population_wls_zeroes_outside_minimal_set():
    j = _xor_like_joint()
    w = independence_weights(j)
    coef = population_wls(j, w)
    assert abs(coef.beta[1]) < 1e-10  # X2 is outside the minimal stable set
    assert abs(coef.beta[0]) > 1e-6


def test_heteroskedastic_example_sets():
    j = heteroskedastic_example()
    assert minimal_stable_set(j) == frozenset({0})
    assert markov_boundary(j) == frozenset({0, 1})


def test_heteroskedastic_example_weighted_coefficients():
    j = heteroskedastic_example()
    coef = population_wls(j, independence_weights(j))
    # the discretization leaves the lead coefficient ~7e-9 from exactly 1
    assert coef.beta[0] == pytest.approx(1.0, abs=1e-6)
    assert abs(coef.beta[1]) < 1e-10


def test_random_joint_is_valid_and_deterministic():
    for seed in range(20):
        a = random_joint(Rng(seed))
        b = random_joint(Rng(seed))
        assert a.feature_supports == b.feature_supports
        assert np.array_equal(a.probs, b.probs)
        assert 1 <= a.d <= 4
        assert np.all(a.probs > 0)
        for s in a.feature_supports:
            assert len(s) <= 3


def test_random_joint_lattice_properties_hold():
    # A compressed version of the oracle acceptance sweep.
    for i in range(25):
        j = random_joint(Rng(1000).fork("inst", i))
        minimal = minimal_stable_set(j)  # raises on any lattice violation
        boundary = markov_boundary(j)
        assert minimal <= boundary


def test_sample_joint_matches_distribution():
    j = _xor_like_joint()
    ds, cell = sample_joint(j, 40_000, Rng(9))
    assert ds.n == 40_000 and ds.d == 2
    # empirical cell frequencies approach the feature marginal
    p_x = j.feature_marginal().reshape(-1)
    freq = np.bincount(cell, minlength=p_x.size) / ds.n
    assert np.max(np.abs(freq - p_x)) < 0.01
    # rows decode their cell index
    v1 = np.asarray(j.feature_supports[0])[cell // 2]
    assert np.array_equal(ds.features[:, 0], v1)


def test_sample_joint_deterministic_and_bounded():
    j = heteroskedastic_example()
    a, ca = sample_joint(j, 500, Rng(4))
    b, cb = sample_joint(j, 500, Rng(4))
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(ca, cb)
    with pytest.raises(DimensionError):
        sample_joint(j, 0, Rng(0))


def test_empirical_wls_approaches_population_solution():
    # The sampling bridge: empirical weighted least squares with exact
    # oracle weights converges on the oracle's population coefficients.
    j = heteroskedastic_example()
    w_table = independence_weights(j)
    target = population_wls(j, w_table)
    ds, cell = sample_joint(j, 30_000, Rng(12))
    w = WeightVector.normalized(w_table.reshape(-1)[cell])
    fit = wls(ds, w)
    assert np.allclose(fit.beta, target.beta, atol=0.05)
    assert fit.intercept == pytest.approx(target.intercept, abs=0.05)


def test_json_roundtrip_exact():
    j = random_joint(Rng(77))
    back = joint_from_json(joint_to_json(j))
    assert back.feature_supports == j.feature_supports
    assert back.outcome_support == j.outcome_support
    assert np.array_equal(back.probs, j.probs)


def test_json_rejects_malformed():
    with pytest.raises(ContractError):
        joint_from_json("{}")


def test_theory_violation_error_is_catchable():
    assert issubclass(TheoryViolationError, Exception)
