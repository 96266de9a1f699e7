import math

import numpy as np
import pytest
import scipy.stats

import oracles
from kickchain import models
from kickchain.errors import CapacityError, ParameterError
from kickchain.models import SpinChainParams


def default_params(L, seed=0):
    return SpinChainParams.with_disorder(L, np.random.default_rng(seed))


def max_diff(a, b):
    return float(np.max(np.abs(a - b)))


def test_sample_disorder_degenerate_and_deterministic():
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(models.sample_disorder(5, 0.6, 0.0, rng), np.full(5, 0.6))
    a = models.sample_disorder(7, 0.6, math.pi / 4, np.random.default_rng(42))
    b = models.sample_disorder(7, 0.6, math.pi / 4, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ParameterError):
        models.sample_disorder(0, 0.6, 1.0, rng)


def test_sample_disorder_mean():
    h = models.sample_disorder(10**6, 0.6, math.pi / 4, np.random.default_rng(1))
    assert abs(h.mean() - 0.6) < 3 * (math.pi / 4) / 1000


def test_params_defaults_and_validation():
    p = default_params(4)
    assert (p.J, p.b, p.g, p.h_mean, p.h_std) == (math.pi / 4, math.pi / 4, math.pi / 4, 0.6, math.pi / 4)
    with pytest.raises(ParameterError):
        SpinChainParams(L=3, h=(0.0, 0.0))
    with pytest.raises(ParameterError):
        SpinChainParams(L=2, h=(0.0, float("nan")))


def test_derived_rng_depends_on_every_key():
    draws = {
        key: models.derive_rng(*key).standard_normal()
        for key in [(1, "kfim", 8, 0), (2, "kfim", 8, 0), (1, "cnn", 8, 0), (1, "kfim", 10, 0), (1, "kfim", 8, 1)]
    }
    assert len(set(draws.values())) == len(draws)
    assert models.derive_rng(1, "kfim", 8, 0).standard_normal() == draws[(1, "kfim", 8, 0)]


def test_kfim_zero_parameters_is_identity():
    p = SpinChainParams(L=2, h=(0, 0), J=0, b=0)
    np.testing.assert_allclose(models.build_kfim(p).matrix, np.eye(4), atol=1e-15)


def test_kfim_matches_expm_oracle_at_l2():
    p = default_params(2)
    assert max_diff(models.build_kfim(p).matrix, oracles.kfim(p)) < 1e-12


def test_kfim_self_dual_flag():
    assert models.build_kfim(default_params(3)).metadata["self_dual"]
    p = SpinChainParams(L=3, h=(0.1, 0.2, 0.3), b=0.3)
    assert not models.build_kfim(p).metadata["self_dual"]


@pytest.mark.parametrize("builder", [models.build_cnn, models.build_cnnnn])
def test_x_chains_zero_parameters_are_identity(builder):
    p = SpinChainParams(L=4, h=(0,) * 4, J=0, g=0)
    np.testing.assert_allclose(builder(p).matrix, np.eye(16), atol=1e-14)


def test_cnn_matches_oracle_and_differs_from_kfim():
    p = default_params(3, seed=5)
    U = models.build_cnn(p).matrix
    assert max_diff(U, oracles.cnn(p)) < 1e-10
    assert max_diff(U, models.build_kfim(p).matrix) > 0.1


def test_cnnnn_matches_oracle_and_differs_from_cnn():
    p = default_params(4, seed=6)
    U = models.build_cnnnn(p).matrix
    assert max_diff(U, oracles.cnn(p, nnnn=True)) < 1e-10
    assert max_diff(U, models.build_cnn(p).matrix) > 0.1


@pytest.mark.parametrize("L", [2, 3, 4])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_chain_builders_match_oracles(L, seed):
    p = default_params(L, seed)
    assert max_diff(models.build_kfim(p).matrix, oracles.kfim(p)) < 1e-10
    assert max_diff(models.build_cnn(p).matrix, oracles.cnn(p)) < 1e-10
    assert max_diff(models.build_cnnnn(p).matrix, oracles.cnn(p, nnnn=True)) < 1e-10


def test_operator_order_is_pinned():
    p = default_params(3, seed=9)
    L = p.L
    Uz = oracles.expm_hermitian(oracles.hz(p.J, p.h, L))
    swapped_kfim = oracles.expm_hermitian(oracles.hx_kfim(p.b, L)) @ Uz
    swapped_cnn = Uz @ oracles.expm_hermitian(oracles.hx_chain(p.g, L))
    assert max_diff(models.build_kfim(p).matrix, swapped_kfim) > 0.1
    assert max_diff(models.build_cnn(p).matrix, swapped_cnn) > 0.1


@pytest.mark.parametrize("model", models.MODELS)
def test_builders_unitary_and_deterministic(model):
    a = models.build(model, 6, models.derive_rng(3, model, 6, 0))
    b = models.build(model, 6, models.derive_rng(3, model, 6, 0))
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.unitarity_residual() < 1e-10


@pytest.mark.parametrize("model", models.MODELS)
def test_gauge_symmetrizes_chain_operators(model):
    op = models.build(model, 5, np.random.default_rng(2))
    if op.gauge is None:
        assert model == models.TENSOR_RMT
        return
    S = op.gauge.conj()[:, None] * op.matrix * op.gauge[None, :]
    assert max_diff(S, S.T) < 1e-13


def test_capacity_error_names_limit():
    with pytest.raises(CapacityError, match="L=4"):
        models.build_kfim(default_params(5), max_L=4)
    with pytest.raises(CapacityError):
        models.build_tensor_rmt(5, np.random.default_rng(0), max_L=4)


def test_unknown_model():
    with pytest.raises(ParameterError):
        models.build("ising", 4, np.random.default_rng(0))


def test_tensor_rmt_unitarity_and_degenerate_factors():
    op = models.build_tensor_rmt(6, np.random.default_rng(0))
    assert op.unitarity_residual() < 1e-12
    U = models.tensor_rmt_from_factors([np.eye(2)] * 4, np.zeros(16))
    np.testing.assert_array_equal(U, np.eye(16))


def test_tensor_rmt_matches_kronecker_oracle():
    rng = np.random.default_rng(4)
    factors = [models.haar_cue_2x2(rng) for _ in range(3)]
    xi = rng.uniform(-math.pi, math.pi, 8)
    assert max_diff(models.tensor_rmt_from_factors(factors, xi), oracles.tensor_rmt(factors, xi)) < 1e-12


def test_tensor_rmt_first_factor_moment():
    rng = np.random.default_rng(5)
    vals = [abs(models.haar_cue_2x2(rng)[0, 0]) ** 2 for _ in range(10**4)]
    assert abs(np.mean(vals) - 0.5) < 0.02


def test_haar_2x2_moments_and_eigenphases():
    rng = np.random.default_rng(6)
    mats = [models.haar_cue_2x2(rng) for _ in range(10**4)]
    assert max(max_diff(u.conj().T @ u, np.eye(2)) for u in mats) < 1e-12
    p = np.array([abs(u[0, 0]) ** 2 for u in mats])
    assert p.mean() == pytest.approx(0.5, rel=0.05)
    assert p.var() == pytest.approx(1 / 12, rel=0.05)
    phases = np.concatenate([np.angle(np.linalg.eigvals(u)) for u in mats])
    ks = scipy.stats.kstest(phases, scipy.stats.uniform(loc=-math.pi, scale=2 * math.pi).cdf).statistic
    assert ks < 0.02
