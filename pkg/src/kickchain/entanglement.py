"""Bipartite entanglement of pure states and random-matrix baselines.

Schmidt spectra come from singular values of the state reshaped to
``(N1, N2)`` rather than from an explicit reduced density matrix; squaring
small singular values loses less than diagonalizing ``rho_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError
from .hilbert import Bipartition
from .models import haar_unitary

VON_NEUMANN = "von_neumann"
LINEAR = "linear"
REAL_GAUSSIAN = "real_gaussian"
COMPLEX_GAUSSIAN = "complex_gaussian"

ZERO_CUTOFF = 1e-14
_NORM_TOL = 1e-10
# states per batched SVD; fixed so sampled streams do not depend on memory
_CHUNK = 2048


@dataclass
class EntropySamples:
    """Entropy values with the realization each value came from.

    ``blocks[i]`` labels the independent unit (disorder realization or
    sampled matrix) of ``values[i]``; i.i.d. samples get one block each.
    """

    values: np.ndarray
    split: Bipartition
    kind: str = VON_NEUMANN
    blocks: np.ndarray | None = None
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.blocks is None:
            self.blocks = np.arange(self.values.size)
        self.blocks = np.asarray(self.blocks)

    def __len__(self):
        return self.values.size

    def block_means(self) -> np.ndarray:
        labels, inverse = np.unique(self.blocks, return_inverse=True)
        sums = np.bincount(inverse, weights=self.values, minlength=labels.size)
        return sums / np.bincount(inverse, minlength=labels.size)

    def mean_stderr(self) -> float | None:
        """Standard error of the mean from per-block means; ``None`` for one block."""
        means = self.block_means()
        if means.size < 2:
            return None
        return float(np.std(means, ddof=1) / math.sqrt(means.size))

    @classmethod
    def concatenate(cls, parts, source=None) -> "EntropySamples":
        parts = list(parts)
        first = parts[0]
        for p in parts[1:]:
            if p.split != first.split or p.kind != first.kind:
                raise ParameterError("cannot pool samples with different bipartition or kind")
        return cls(
            np.concatenate([p.values for p in parts]), first.split, first.kind,
            np.concatenate([p.blocks for p in parts]), dict(source or first.source),
        )


def _schmidt_batch(states: np.ndarray, split: Bipartition) -> np.ndarray:
    """Squared singular values for a stack of states ``(m, N)``, rows sorted descending."""
    m = states.shape[0]
    sv = np.linalg.svd(states.reshape(m, split.N1, split.N2), compute_uv=False)
    p = sv * sv
    p[p < ZERO_CUTOFF] = 0.0
    if split.N1 > p.shape[1]:
        p = np.pad(p, ((0, 0), (0, split.N1 - p.shape[1])))
    return p


def reduced_density_spectrum(state, split: Bipartition) -> np.ndarray:
    """Eigenvalues of the subsystem-1 reduced density matrix, length ``N1``, descending."""
    state = np.asarray(state)
    if state.shape != (split.N,):
        raise ParameterError(f"state of shape {state.shape} does not match N={split.N}")
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > _NORM_TOL:
        raise ContractError(f"state norm {norm} differs from 1")
    return _schmidt_batch(state[None, :], split)[0]


def reduced_density_matrix(state, split: Bipartition) -> np.ndarray:
    """``rho_1 = M M^dagger`` with ``M`` the ``(N1, N2)`` reshaped state."""
    M = np.asarray(state).reshape(split.N1, split.N2)
    return M @ M.conj().T


def _check_probabilities(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < -1e-12):
        raise ContractError("spectrum has negative entries")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > 1e-8):
        raise ContractError("spectrum does not sum to one")
    return np.clip(p, 0.0, None)


def _vn_rows(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > ZERO_CUTOFF, p, 1.0)
    return np.clip(-np.sum(np.where(p > ZERO_CUTOFF, p * np.log(safe), 0.0), axis=-1), 0.0, None)


def _linear_rows(p: np.ndarray) -> np.ndarray:
    return 1.0 - np.sum(p * p, axis=-1)


_ENTROPIES = {VON_NEUMANN: _vn_rows, LINEAR: _linear_rows}


def von_neumann_entropy(spectrum) -> float:
    """``-sum p ln p`` in nats, with ``0 ln 0 = 0``."""
    return float(_vn_rows(_check_probabilities(spectrum)))


def linear_entropy(spectrum) -> float:
    """``1 - sum p^2``."""
    return float(_linear_rows(_check_probabilities(spectrum)))


def _entropy_fn(kind: str):
    try:
        return _ENTROPIES[kind]
    except KeyError:
        raise ParameterError(f"unknown entropy kind {kind!r}") from None


def state_entropies(states: np.ndarray, split: Bipartition, kind: str = VON_NEUMANN) -> np.ndarray:
    """Entropy of every column of ``states`` (shape ``(N, m)``)."""
    fn = _entropy_fn(kind)
    states = np.asarray(states)
    out = np.empty(states.shape[1])
    for lo in range(0, states.shape[1], _CHUNK):
        batch = np.ascontiguousarray(states[:, lo:lo + _CHUNK].T)
        p = _schmidt_batch(batch, split)
        out[lo:lo + _CHUNK] = fn(p / p.sum(axis=1, keepdims=True))
    return out


def eigenstate_entropies(decomp, split: Bipartition, kind: str = VON_NEUMANN, *, block=0,
                         source: dict | None = None) -> EntropySamples:
    values = state_entropies(decomp.vectors, split, kind)
    return EntropySamples(values, split, kind, np.full(values.size, block), dict(source or {}))


def page_average_coe(N1: int, N2: int) -> float:
    """Large-``N1`` average entropy ``ln N1 - N1 / (2 N2)`` of random states.

    Only asymptotically exact for ``1 << N1 <= N2``; small dimensions
    should use a Monte Carlo baseline instead.
    """
    if N1 < 1 or N2 < 1:
        raise ParameterError("dimensions must be positive")
    if N1 > N2:
        raise ParameterError(f"need N1 <= N2, got N1={N1}, N2={N2}; swap the arguments")
    return math.log(N1) - N1 / (2.0 * N2)


def sample_random_states(N: int, count: int, ensemble: str, rng: np.random.Generator) -> np.ndarray:
    """``(count, N)`` array of normalized Gaussian random states."""
    if ensemble == REAL_GAUSSIAN:
        x = rng.standard_normal((count, N))
    elif ensemble == COMPLEX_GAUSSIAN:
        x = rng.standard_normal((count, N)) + 1j * rng.standard_normal((count, N))
    else:
        raise ParameterError(f"unknown random-state ensemble {ensemble!r}")
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample_random_state_entropies(N1: int, N2: int, count: int, ensemble: str = REAL_GAUSSIAN,
                                  kind: str = VON_NEUMANN, rng: np.random.Generator | None = None,
                                  source: dict | None = None) -> EntropySamples:
    """Entropies of ``count`` i.i.d. random states of dimension ``N1 * N2``.

    Real Gaussian states share the statistics of COE eigenvectors and are
    the default reference.
    """
    if count < 1:
        raise ParameterError("count must be at least 1")
    rng = np.random.default_rng() if rng is None else rng
    split = Bipartition.from_dims(N1, N2)
    fn = _entropy_fn(kind)
    values = np.empty(count)
    for lo in range(0, count, _CHUNK):
        n = min(_CHUNK, count - lo)
        p = _schmidt_batch(sample_random_states(split.N, n, ensemble, rng), split)
        values[lo:lo + n] = fn(p)
    meta = {"ensemble": ensemble, "N1": N1, "N2": N2, "count": count}
    meta.update(source or {})
    return EntropySamples(values, split, kind, source=meta)


def sample_coe_matrix(N: int, rng: np.random.Generator) -> np.ndarray:
    """COE matrix ``W^T W`` with ``W`` Haar-distributed on U(N)."""
    if N < 2:
        raise ParameterError("need N >= 2")
    W = haar_unitary(N, rng)
    return W.T @ W


def coe_eigenvector_entropies(N1: int, N2: int, matrices: int, rng: np.random.Generator,
                              kind: str = VON_NEUMANN) -> EntropySamples:
    """Eigenvector entropies of sampled COE matrices; one block per matrix."""
    from .spectra import eigendecompose_unitary

    split = Bipartition.from_dims(N1, N2)
    parts = []
    for k in range(matrices):
        decomp = eigendecompose_unitary(sample_coe_matrix(split.N, rng))
        parts.append(eigenstate_entropies(decomp, split, kind, block=k))
    return EntropySamples.concatenate(parts, source={"ensemble": "coe_matrices", "matrices": matrices})
