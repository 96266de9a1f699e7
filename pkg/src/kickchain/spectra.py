"""Eigendecomposition of unitary operators and nearest-neighbor spacing statistics.

Dense diagonalization of a general complex matrix is several times slower
than a Hermitian one, so :func:`eigendecompose_unitary` never calls
``eig``. For a unitary ``U`` the matrix

    K = (exp(-i t) U + exp(i t) U^dagger) / 2

is Hermitian, commutes with ``U`` and has eigenvalues ``cos(phi - t)``.
When ``U`` is complex symmetric (possibly after a diagonal gauge change) its
real and imaginary parts are commuting real symmetric matrices and ``K`` is
real, which is another factor of four cheaper. The map ``phi -> cos(phi - t)``
is two-to-one, so eigenvectors of ``K`` are only eigenvectors of ``U`` away
from (near-)coincident values of ``K``. Such clusters are resolved by a Schur
decomposition of ``U`` compressed onto the cluster subspace, which also
leaves the vectors orthonormal inside genuinely degenerate phase clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ComputationError, ContractError, ParameterError

# Fixed rotation for K; any angle works, an irrational one avoids coincidences
# with symmetric test spectra.
_ROTATION = 0.6180339887498949
# Eigenvalues of K closer than this fraction of the mean spacing 2/N form a cluster.
CLUSTER_FRACTION = 0.1
_SYMMETRY_TOL = 1e-12


@dataclass
class SpectralDecomposition:
    phases: np.ndarray
    vectors: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.phases.size


@dataclass
class SpacingSample:
    spacings: np.ndarray
    metadata: dict = field(default_factory=dict)


def wrap_phase(phi: np.ndarray) -> np.ndarray:
    """Map angles to ``[-pi, pi)``."""
    out = np.mod(np.asarray(phi, dtype=float) + math.pi, 2 * math.pi) - math.pi
    # mod can round up to exactly 2 pi
    return np.where(out >= math.pi, out - 2 * math.pi, out)


def _unpack(op):
    if hasattr(op, "matrix"):
        return np.asarray(op.matrix), getattr(op, "gauge", None), dict(getattr(op, "metadata", {}), model=op.model)
    return np.asarray(op), None, {}


def _symmetric_form(U: np.ndarray, gauge):
    if gauge is not None:
        S = np.conj(gauge)[:, None] * U * gauge[None, :]
    else:
        S = U
    if np.max(np.abs(S - S.T)) <= _SYMMETRY_TOL:
        return S
    return None


def _rotated_parts(S: np.ndarray, real: bool):
    """``(K, K')`` with ``K = Re(e^{-it} S)`` and ``K' = Im(e^{-it} S)`` in the Hermitian sense."""
    c, s = math.cos(_ROTATION), math.sin(_ROTATION)
    if real:
        A, B = S.real, S.imag
        return c * A + s * B, c * B - s * A
    R = np.exp(-1j * _ROTATION) * S
    Rh = R.conj().T
    return 0.5 * (R + Rh), -0.5j * (R - Rh)


def _clusters(values: np.ndarray, gap: float):
    """Index ranges ``[start, stop)`` of runs with consecutive gaps below ``gap``."""
    breaks = np.flatnonzero(np.diff(values) >= gap) + 1
    bounds = np.concatenate(([0], breaks, [values.size]))
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b - a > 1]


def eigendecompose_unitary(op, *, cluster_gap: float | None = None) -> SpectralDecomposition:
    """Eigenphases in ``[-pi, pi)`` (sorted) and orthonormal eigenvectors of a unitary.

    ``op`` is a :class:`~kickchain.models.FloquetOperator` or a square array.
    A ``gauge`` attribute, when present, is used to reach a symmetric form.
    """
    U, gauge, meta = _unpack(op)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {U.shape}")
    S = _symmetric_form(U, gauge)
    real = S is not None
    if not real:
        S, gauge = U, None
    K, Kp = _rotated_parts(S, real)
    try:
        lam, X = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise ComputationError(f"eigh failed for operator {meta}: {exc}") from exc
    KpX = Kp @ X
    sines = np.einsum("ij,ij->j", X.conj(), KpX).real
    phases = _ROTATION + np.arctan2(sines, lam)

    if cluster_gap is None:
        cluster_gap = CLUSTER_FRACTION * 2.0 / lam.size
    clusters = _clusters(lam, cluster_gap)
    if clusters:
        # S = exp(i t) (K + i K'); reuses K' X and keeps every product contiguous
        cols = np.concatenate([np.arange(a, b) for a, b in clusters])
        Xc = X[:, cols]
        SX = np.exp(1j * _ROTATION) * (K @ Xc + 1j * KpX[:, cols])
        where = {c: k for k, c in enumerate(cols)}
    X = X.astype(complex)
    for start, stop in clusters:
        sel = [where[c] for c in range(start, stop)]
        block = Xc[:, sel].conj().T @ SX[:, sel]
        T, Z = scipy.linalg.schur(block, output="complex")
        X[:, start:stop] = Xc[:, sel] @ Z
        phases[start:stop] = np.angle(np.diagonal(T))

    phases = wrap_phase(phases)
    order = np.argsort(phases, kind="stable")
    V = X[:, order]
    if gauge is not None:
        V = gauge[:, None] * V
    meta["method"] = "real-symmetric" if real else "hermitian"
    return SpectralDecomposition(phases[order], V, meta)


def decomposition_residuals(U, decomp: SpectralDecomposition) -> dict:
    """Eigen-equation, orthonormality and reconstruction errors (max abs)."""
    U = np.asarray(getattr(U, "matrix", U))
    V = decomp.vectors
    ev = np.exp(1j * decomp.phases)
    UV = U @ V
    eig_res = np.max(np.linalg.norm(UV - V * ev[None, :], axis=0))
    ortho = np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1])))
    recon = np.max(np.abs((V * ev[None, :]) @ V.conj().T - U))
    return {"eigen_residual": float(eig_res), "orthonormality": float(ortho), "reconstruction": float(recon)}


def eigenphases(op) -> np.ndarray:
    """Sorted eigenphases only (same algorithm, vectors discarded)."""
    return eigendecompose_unitary(op).phases


def unfolded_spacings(phases, metadata: dict | None = None) -> SpacingSample:
    """Cyclic spacings ``N / (2 pi) (phi_{n+1} - phi_n)`` with ``phi_{N+1} = phi_1 + 2 pi``."""
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or phases.size == 0:
        raise ParameterError("need a nonempty 1-d phase vector")
    if np.any(np.diff(phases) < 0):
        raise ContractError("phases must be sorted ascending")
    if phases[0] < -math.pi or phases[-1] >= math.pi:
        raise ContractError("phases must lie in [-pi, pi)")
    N = phases.size
    gaps = np.diff(np.append(phases, phases[0] + 2 * math.pi))
    return SpacingSample(gaps * (N / (2 * math.pi)), dict(metadata or {}))


def wigner_surmise(s):
    """COE spacing density ``(pi/2) s exp(-pi s^2 / 4)``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterError("spacing must be nonnegative")
    out = 0.5 * math.pi * s * np.exp(-0.25 * math.pi * s * s)
    return out if out.ndim else float(out)


def wigner_cdf(s):
    s = np.asarray(s, dtype=float)
    out = -np.expm1(-0.25 * math.pi * np.clip(s, 0.0, None) ** 2)
    return out if out.ndim else float(out)


def spacing_ks_distance(sample) -> float:
    """Kolmogorov-Smirnov distance between the empirical spacing CDF and the surmise CDF."""
    s = np.sort(np.asarray(getattr(sample, "spacings", sample), dtype=float).ravel())
    if s.size == 0:
        raise ParameterError("empty spacing sample")
    n = s.size
    cdf = wigner_cdf(s)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def pool_spacings(samples) -> SpacingSample:
    return SpacingSample(np.concatenate([x.spacings for x in samples]))
