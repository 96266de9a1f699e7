"""Bit-indexed spin-1/2 Hilbert spaces and fast tensor-product transforms.

Basis convention used throughout the package: site ``j`` (1-based, ``1..L``)
lives on bit ``L - j`` of the basis index, so site 1 is the most significant
bit. A zero bit means spin up (eigenvalue ``+1``), a one bit spin down
(``-1``). With this ordering ``np.kron(A_1, A_2, ..., A_L)`` acts with
``A_j`` on site ``j``.

All couplings are periodic: ``j + 1`` and ``j + 3`` wrap modulo ``L``.

Vector arguments may carry trailing axes; the first axis is always the
Hilbert-space index. This lets a whole matrix (columns = states) be pushed
through a transform in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

CNN = "cnn"
CNNNN = "cnnnn"

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class HilbertSpace:
    """Tensor product of ``L`` spin-1/2 sites, dimension ``N = 2**L``."""

    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ParameterError(f"need an integer L >= 2, got {self.L!r}")

    @property
    def N(self) -> int:
        return 1 << self.L

    def spin_values(self) -> np.ndarray:
        """``(N, L)`` array of ``+1/-1``; column ``j - 1`` is site ``j``."""
        idx = np.arange(self.N)[:, None]
        shifts = self.L - 1 - np.arange(self.L)[None, :]
        return 1 - 2 * ((idx >> shifts) & 1)

    def split(self, L1: int | None = None) -> "Bipartition":
        return Bipartition.for_space(self, L1)


@dataclass(frozen=True)
class Bipartition:
    """Cut between sites ``1..L1`` (subsystem 1) and ``L1+1..L`` (subsystem 2).

    Because site 1 is the most significant bit, reshaping a state vector to
    ``(N1, N2)`` in C order puts subsystem 1 on the rows.
    """

    L: int
    L1: int

    def __post_init__(self):
        if not 0 < self.L1 < self.L:
            raise ParameterError(f"cut L1={self.L1} must lie strictly inside 1..{self.L}")

    @classmethod
    def for_space(cls, space: HilbertSpace, L1: int | None = None) -> "Bipartition":
        if L1 is None:
            L1 = space.L // 2
        return cls(space.L, L1)

    @classmethod
    def from_dims(cls, N1: int, N2: int) -> "Bipartition":
        L1, L2 = _log2(N1), _log2(N2)
        return cls(L1 + L2, L1)

    @property
    def N(self) -> int:
        return 1 << self.L

    @property
    def N1(self) -> int:
        return 1 << self.L1

    @property
    def N2(self) -> int:
        return 1 << (self.L - self.L1)


def _log2(n: int) -> int:
    n = int(n)
    if n < 1 or n & (n - 1):
        raise DimensionError(f"dimension {n} is not a power of two")
    return n.bit_length() - 1


def num_sites(state: np.ndarray) -> int:
    """Number of spins encoded by the leading axis of ``state``."""
    return _log2(np.shape(state)[0])


def _ring_energies(space: HilbertSpace, field: np.ndarray, couplings: dict[int, float]) -> np.ndarray:
    """``sum_j field_j s_j + sum_{d, j} c_d s_j s_{j+d}`` on the periodic ring."""
    s = space.spin_values().astype(float)
    energy = s @ np.asarray(field, dtype=float)
    for offset, strength in couplings.items():
        if strength != 0.0:
            energy += strength * np.sum(s * np.roll(s, -offset, axis=1), axis=1)
    return energy


def z_energies(J: float, h, space: HilbertSpace) -> np.ndarray:
    """Diagonal of ``H^z = J sum s_j s_{j+1} + sum h_j s_j`` in the z basis."""
    h = np.asarray(h, dtype=float)
    if h.shape != (space.L,):
        raise ParameterError(f"disorder field has shape {h.shape}, expected ({space.L},)")
    return _ring_energies(space, h, {1: float(J)})


def diagonal_z_phases(params, space: HilbertSpace) -> np.ndarray:
    """``exp(-i E_z)`` for every basis state; ``params`` needs ``J`` and ``h``."""
    return np.exp(-1j * z_energies(params.J, params.h, space))


def x_energies(g: float, space: HilbertSpace, variant: str) -> np.ndarray:
    """Diagonal of the C_NN / C_NNNN x-Hamiltonian in the Hadamard-rotated basis.

    Bit value 0 in the rotated basis is the ``sigma^x = +1`` eigenstate.
    """
    half = 0.5 * float(g)
    field = np.full(space.L, half)
    if variant == CNN:
        couplings = {1: half}
    elif variant == CNNNN:
        couplings = {1: half, 3: half * 2.0 / 3.0}
    else:
        raise ParameterError(f"unknown x-coupling variant {variant!r}")
    return _ring_energies(space, field, couplings)


def diagonal_x_phases(params, space: HilbertSpace, variant: str) -> np.ndarray:
    return np.exp(-1j * x_energies(params.g, space, variant))


def _check_gate(gate: np.ndarray) -> np.ndarray:
    gate = np.asarray(gate)
    if gate.shape != (2, 2):
        raise ParameterError(f"single-site gate must be 2x2, got {gate.shape}")
    if np.max(np.abs(gate.conj().T @ gate - np.eye(2))) > 1e-12:
        raise ParameterError("single-site gate is not unitary")
    return gate


def _apply_on_bit(state: np.ndarray, gate: np.ndarray, bit: int, L: int) -> np.ndarray:
    """Mix amplitude pairs that differ in ``bit`` (stride ``2**bit``)."""
    stride = 1 << bit
    tail = state.shape[1:]
    view = state.reshape((1 << (L - bit - 1), 2, stride) + tail)
    lo, hi = view[:, 0], view[:, 1]
    out = np.empty(view.shape, dtype=np.result_type(state, gate))
    for row in (0, 1):
        np.multiply(lo, gate[row, 0], out=out[:, row])
        out[:, row] += gate[row, 1] * hi
    return out.reshape(state.shape)


def apply_site_gates(state: np.ndarray, gates) -> np.ndarray:
    """Apply ``gates[0] ⊗ gates[1] ⊗ ... ⊗ gates[L-1]`` (one gate per site)."""
    state = np.asarray(state)
    L = num_sites(state)
    if len(gates) != L:
        raise ParameterError(f"got {len(gates)} gates for {L} sites")
    for site, gate in enumerate(gates, start=1):
        state = _apply_on_bit(state, _check_gate(gate), L - site, L)
    return state


def apply_uniform_single_site(state: np.ndarray, gate: np.ndarray) -> np.ndarray:
    """Apply ``gate`` to every site, i.e. ``gate^{⊗L} |state>``."""
    state = np.asarray(state)
    L = num_sites(state)
    gate = _check_gate(gate)
    for bit in range(L):
        state = _apply_on_bit(state, gate, bit, L)
    return state


def fwht(state: np.ndarray) -> np.ndarray:
    """Normalized Walsh-Hadamard transform ``H^{⊗L}``; it is its own inverse."""
    state = np.asarray(state)
    L = num_sites(state)
    for bit in range(L):
        state = _apply_on_bit(state, _HADAMARD, bit, L)
    return state
