import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kickchain import entanglement as ent
from kickchain import models, spectra
from kickchain.errors import ContractError, ParameterError
from kickchain.hilbert import Bipartition, HilbertSpace


def random_unit(N, rng):
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return v / np.linalg.norm(v)


def bell():
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    return v


SPLIT_2x2 = Bipartition(2, 1)


def test_product_state_spectrum():
    np.testing.assert_allclose(ent.reduced_density_spectrum(np.eye(4)[0], SPLIT_2x2), [1, 0])


def test_bell_state():
    p = ent.reduced_density_spectrum(bell(), SPLIT_2x2)
    np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-15)
    assert abs(ent.von_neumann_entropy(p) - math.log(2)) < 1e-12
    assert abs(ent.linear_entropy(p) - 0.5) < 1e-12


@pytest.mark.parametrize("L1,L", [(1, 4), (2, 4), (3, 6), (2, 7)])
def test_svd_and_density_matrix_routes_agree(L1, L):
    split = Bipartition(L, L1)
    v = random_unit(split.N, np.random.default_rng(L1 * 10 + L))
    via_svd = ent.reduced_density_spectrum(v, split)
    via_rho = np.sort(np.linalg.eigvalsh(ent.reduced_density_matrix(v, split)))[::-1]
    assert via_svd.size == split.N1
    assert abs(via_svd.sum() - 1) < 1e-10
    np.testing.assert_allclose(via_svd, np.clip(via_rho, 0, None), atol=1e-10)


def test_spectrum_contracts():
    with pytest.raises(ContractError):
        ent.reduced_density_spectrum(np.ones(4), SPLIT_2x2)
    with pytest.raises(ParameterError):
        ent.reduced_density_spectrum(np.ones(8) / math.sqrt(8), SPLIT_2x2)


def test_entropy_values():
    assert ent.von_neumann_entropy([1, 0, 0, 0]) == 0.0
    assert ent.von_neumann_entropy(np.full(16, 1 / 16)) == pytest.approx(math.log(16), abs=1e-12)
    assert ent.von_neumann_entropy([0.5, 0.5]) == pytest.approx(0.693147, abs=1e-6)
    assert ent.linear_entropy([1, 0]) == 0.0
    assert ent.linear_entropy(np.full(8, 1 / 8)) == pytest.approx(1 - 1 / 8, abs=1e-15)
    with pytest.raises(ContractError):
        ent.von_neumann_entropy([1.1, -0.1])
    with pytest.raises(ContractError):
        ent.linear_entropy([0.3, 0.3])


def test_eigenstate_entropies_of_identity_are_zero():
    d = spectra.eigendecompose_unitary(np.eye(4, dtype=complex))
    np.testing.assert_allclose(ent.eigenstate_entropies(d, SPLIT_2x2).values, 0.0, atol=1e-12)


def test_global_phase_invariance():
    op = models.build(models.KFIM, 6, np.random.default_rng(0))
    d = spectra.eigendecompose_unitary(op)
    split = op.space.split()
    a = ent.eigenstate_entropies(d, split).values
    d.vectors = d.vectors * np.exp(1j * np.random.default_rng(1).uniform(0, 6, 64))[None, :]
    b = ent.eigenstate_entropies(d, split).values
    assert np.max(np.abs(a - b)) < 1e-9


def test_kfim_l10_mean_near_page_value():
    op = models.build(models.KFIM, 10, models.derive_rng(0, models.KFIM, 10, 0))
    d = spectra.eigendecompose_unitary(op)
    values = ent.eigenstate_entropies(d, op.space.split()).values
    assert abs(values.mean() - (math.log(32) - 0.5)) < 0.1


def test_page_average():
    assert ent.page_average_coe(256, 256) == pytest.approx(5.04517, abs=1e-5)
    assert ent.page_average_coe(64, 64) == pytest.approx(3.65888, abs=1e-5)
    assert ent.page_average_coe(1, 8) == -1 / 16
    with pytest.raises(ParameterError):
        ent.page_average_coe(8, 4)


def test_random_state_bounds_and_determinism():
    a = ent.sample_random_state_entropies(2, 2, 1000, rng=np.random.default_rng(3))
    assert np.all((a.values >= 0) & (a.values <= math.log(2) + 1e-15))
    b = ent.sample_random_state_entropies(2, 2, 1000, rng=np.random.default_rng(3))
    np.testing.assert_array_equal(a.values, b.values)
    lin = ent.sample_random_state_entropies(4, 4, 500, kind=ent.LINEAR, rng=np.random.default_rng(3))
    assert np.all((lin.values >= 0) & (lin.values <= 1 - 1 / 4 + 1e-15))


def test_real_gaussian_mean_near_page_value():
    s = ent.sample_random_state_entropies(64, 64, 10**4, ent.REAL_GAUSSIAN, rng=np.random.default_rng(5))
    assert abs(s.values.mean() - 3.65888) < 0.02


def test_complex_states_are_more_entangled_than_real():
    rng = np.random.default_rng(6)
    real = ent.sample_random_state_entropies(8, 8, 4000, ent.REAL_GAUSSIAN, rng=rng).values.mean()
    cplx = ent.sample_random_state_entropies(8, 8, 4000, ent.COMPLEX_GAUSSIAN, rng=rng).values.mean()
    assert cplx > real
    with pytest.raises(ParameterError):
        ent.sample_random_state_entropies(8, 8, 10, "goe", rng=rng)


def test_coe_matrix_symmetric_unitary():
    M = ent.sample_coe_matrix(128, np.random.default_rng(7))
    assert np.max(np.abs(M - M.T)) < 1e-12
    assert np.max(np.abs(M.conj().T @ M - np.eye(128))) < 1e-12


def test_coe_eigenvectors_match_real_gaussian_baseline():
    coe = ent.coe_eigenvector_entropies(16, 16, 40, np.random.default_rng(8))
    gauss = ent.sample_random_state_entropies(16, 16, 20000, rng=np.random.default_rng(9))
    diff = abs(coe.values.mean() - gauss.values.mean())
    assert diff < 2 * math.hypot(coe.mean_stderr(), gauss.mean_stderr())


def test_block_stderr():
    s = ent.EntropySamples(np.array([1.0, 1.0, 3.0, 3.0]), SPLIT_2x2, blocks=np.array([0, 0, 1, 1]))
    np.testing.assert_allclose(s.block_means(), [1, 3])
    assert s.mean_stderr() == pytest.approx(1.0)
    one = ent.EntropySamples(np.ones(4), SPLIT_2x2, blocks=np.zeros(4))
    assert one.mean_stderr() is None


@settings(max_examples=30, deadline=None)
@given(L=st.integers(2, 7), data=st.data())
def test_entropy_bounds_and_subsystem_symmetry(L, data):
    L1 = data.draw(st.integers(1, L - 1))
    seed = data.draw(st.integers(0, 2**32 - 1))
    split = Bipartition(L, L1)
    v = random_unit(split.N, np.random.default_rng(seed))
    s1 = ent.von_neumann_entropy(ent.reduced_density_spectrum(v, split))
    # swap the two halves: subsystem 2 becomes the row index
    swapped = v.reshape(split.N1, split.N2).T.reshape(-1)
    s2 = ent.von_neumann_entropy(ent.reduced_density_spectrum(swapped, Bipartition(L, L - L1)))
    assert abs(s1 - s2) < 1e-9
    assert -1e-15 <= s1 <= math.log(min(split.N1, split.N2)) + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    split = HilbertSpace(6).split(2)
    v = random_unit(split.N, rng)
    A, B = models.haar_unitary(split.N1, rng), models.haar_unitary(split.N2, rng)
    w = np.kron(A, B) @ v
    before = ent.von_neumann_entropy(ent.reduced_density_spectrum(v, split))
    after = ent.von_neumann_entropy(ent.reduced_density_spectrum(w, split))
    assert abs(before - after) < 1e-9
