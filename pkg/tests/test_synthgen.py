"""Synthetic covariate-shift benchmark generator."""

import numpy as np
import pytest

from stablesel import (
    ContractError,
    Dataset,
    EnvironmentSpec,
    GenerationError,
    GeneratorSpec,
    Rng,
    sample_environment,
    sample_unbiased,
    stable_indices,
)
from stablesel.synthgen import draw_covariates, generator_mlp, noiseless_outcome, outcomes


def test_spec_defaults_and_stable_indices():
    spec = GeneratorSpec()
    assert spec.d == 10
    assert stable_indices(spec) == (0, 1, 2, 3, 4)


def test_spec_contracts():
    with pytest.raises(ContractError):
        GeneratorSpec(d_stable=2)
    with pytest.raises(ContractError):
        GeneratorSpec(beta=(1.0, 2.0))  # wrong length
    with pytest.raises(ContractError):
        GeneratorSpec(noise_sd=0.0)
    with pytest.raises(ContractError):
        GeneratorSpec(outcome_kind="cubic")
    with pytest.raises(ContractError):
        GeneratorSpec(biased_noise=(9,))  # out of range for d_noise=5


def test_environment_spec_requires_bias():
    with pytest.raises(ContractError):
        EnvironmentSpec(r=1.0, n=10)
    with pytest.raises(ContractError):
        EnvironmentSpec(r=0.5, n=10)
    EnvironmentSpec(r=-1.5, n=10)  # negative bias is legal


def test_covariates_shape_and_clipping():
    spec = GeneratorSpec()
    x = draw_covariates(spec, 500, Rng(0))
    assert x.shape == (500, 10)
    assert np.max(np.abs(x)) <= spec.clip_bound


def test_stable_block_has_chain_correlation():
    # S_i = 0.8 Z_i + 0.2 Z_{i+1} gives corr(S_i, S_{i+1}) =
    # 0.16 / 0.68 ~= 0.2353 between adjacent stable columns, and
    # (near) zero between stable and noise columns.
    spec = GeneratorSpec()
    x = draw_covariates(spec, 60_000, Rng(1), clip=False)
    c = np.corrcoef(x, rowvar=False)
    expect = 0.16 / 0.68
    for i in range(4):
        assert c[i, i + 1] == pytest.approx(expect, abs=0.02)
    assert abs(c[0, 2]) < 0.02  # non-adjacent stable columns share no latent
    assert abs(c[0, 7]) < 0.02  # noise block independent of stable block


def test_noiseless_outcome_poly_hand_value():
    spec = GeneratorSpec()
    s = np.array([[1.0, 2.0, -1.0, 0.5, 0.0]])
    linear = float(s[0] @ np.asarray(spec.beta))
    expect = linear + (1.0 * 2.0 * -1.0) / 4.0
    assert noiseless_outcome(spec, s)[0] == pytest.approx(expect, abs=1e-12)


def test_noiseless_outcome_mlp_uses_frozen_net():
    spec = GeneratorSpec(outcome_kind="mlp")
    s = np.array([[0.5, -0.5, 1.0, 0.0, 0.0]])
    a = noiseless_outcome(spec, s)
    b = noiseless_outcome(spec, s, net=generator_mlp(spec))
    assert np.array_equal(a, b)
    # a different frozen-net seed changes the function
    other = GeneratorSpec(outcome_kind="mlp", mlp_theta_seed=1)
    assert noiseless_outcome(other, s)[0] != a[0]


def test_outcome_noise_level():
    spec = GeneratorSpec()
    s = np.zeros((20_000, 5))
    y = outcomes(spec, s, Rng(2))
    assert abs(float(np.std(y)) - spec.noise_sd) < 0.01


def test_sample_environment_deterministic():
    spec = GeneratorSpec()
    env = EnvironmentSpec(r=2.0, n=200)
    a, rate_a = sample_environment(spec, env, Rng(7))
    b, rate_b = sample_environment(spec, env, Rng(7))
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.outcome, b.outcome)
    assert rate_a == rate_b


def test_sample_environment_shapes_and_rate():
    ds, rate = sample_environment(GeneratorSpec(), EnvironmentSpec(r=2.0, n=300), Rng(3))
    assert isinstance(ds, Dataset)
    assert ds.n == 300 and ds.d == 10
    assert 0.0 < rate <= 1.0


def test_bias_strength_lowers_acceptance():
    spec = GeneratorSpec()
    rates = []
    for r in (1.5, 2.0, 3.0):
        _, rate = sample_environment(spec, EnvironmentSpec(r=r, n=150), Rng(11))
        rates.append(rate)
    assert rates[0] > rates[1] > rates[2]


def test_selection_induces_spurious_correlation_with_sign():
    # Selection couples the biased noise columns to the outcome signal:
    # positively for r > 0 and negatively for r < 0; the un-biased noise
    # columns stay uncoupled.
    spec = GeneratorSpec()
    pos, _ = sample_environment(spec, EnvironmentSpec(r=2.5, n=2000), Rng(5))
    neg, _ = sample_environment(spec, EnvironmentSpec(r=-2.5, n=2000), Rng(5))

    def corr(ds, col):
        f = ds.outcome
        v = ds.features[:, col]
        return float(np.corrcoef(f, v)[0, 1])

    for j in spec.biased_noise:
        assert corr(pos, spec.d_stable + j) > 0.3
        assert corr(neg, spec.d_stable + j) < -0.3
    assert abs(corr(pos, spec.d_stable + 0)) < 0.12  # unbiased noise column


def test_unbiased_sample_has_no_spurious_correlation():
    spec = GeneratorSpec()
    ds = sample_unbiased(spec, 4000, Rng(6))
    for j in spec.biased_noise:
        c = float(np.corrcoef(ds.outcome, ds.features[:, spec.d_stable + j])[0, 1])
        assert abs(c) < 0.06


def test_generation_error_carries_diagnostics():
    # An attempt budget of 1 per sample cannot satisfy the acceptance
    # step at strong bias, so the failure path must trigger.
    spec = GeneratorSpec()
    env = EnvironmentSpec(r=3.0, n=50, max_attempts_per_sample=1)
    with pytest.raises(GenerationError) as err:
        sample_environment(spec, env, Rng(0))
    assert err.value.attempts == 50
    assert 0.0 <= err.value.acceptance_rate < 1.0
