"""Dense Floquet operators for the kicked chains and the tensor-product random model.

Every builder pushes the identity matrix through the fast transforms of
:mod:`kickchain.hilbert`, so column ``k`` of the result is ``U |k>``.

The chain operators are products of a diagonal phase and a complex symmetric
matrix. Each chain builder records a diagonal ``gauge`` such that
``diag(gauge)^* U diag(gauge)`` is complex symmetric; the eigensolver uses it
to work with real symmetric matrices.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .errors import CapacityError, ParameterError
from .hilbert import HilbertSpace

KFIM = "kfim"
CNN = hilbert.CNN
CNNNN = hilbert.CNNNN
TENSOR_RMT = "trm"
MODELS = (KFIM, CNN, CNNNN, TENSOR_RMT)

DENSE_LIMIT = 14

DEFAULT_J = math.pi / 4
DEFAULT_B = math.pi / 4
DEFAULT_G = math.pi / 4
DEFAULT_H_MEAN = 0.6
DEFAULT_H_STD = math.pi / 4


def derive_seed_sequence(master_seed: int, tag: str, L: int, index: int) -> np.random.SeedSequence:
    """Seed for one task, hashed from ``(master_seed, tag, L, index)``.

    ``SeedSequence`` mixes the spawn key with a fixed hash, and PCG64 is
    specified bit-exactly, so the stream is the same on every platform.
    """
    key = (zlib.crc32(tag.encode()), int(L), int(index))
    return np.random.SeedSequence(int(master_seed), spawn_key=key)


def derived_seed(master_seed: int, tag: str, L: int, index: int) -> int:
    """64-bit integer fingerprint of the derived stream, for metadata headers."""
    return int(derive_seed_sequence(master_seed, tag, L, index).generate_state(1, np.uint64)[0])


def derive_rng(master_seed: int, tag: str, L: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(master_seed, tag, L, index)))


def sample_disorder(L: int, h_mean: float, h_std: float, rng: np.random.Generator) -> np.ndarray:
    """``L`` independent normal draws with mean ``h_mean`` and std ``h_std``."""
    if L < 1:
        raise ParameterError(f"need L >= 1, got {L}")
    if not h_std >= 0:
        raise ParameterError(f"h_std must be nonnegative, got {h_std}")
    return h_mean + h_std * rng.standard_normal(L)


@dataclass(frozen=True)
class SpinChainParams:
    L: int
    h: tuple
    J: float = DEFAULT_J
    b: float = DEFAULT_B
    g: float = DEFAULT_G
    h_mean: float = DEFAULT_H_MEAN
    h_std: float = DEFAULT_H_STD
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(x) for x in self.h))
        if len(self.h) != self.L:
            raise ParameterError(f"disorder field has {len(self.h)} entries for L={self.L}")
        values = (self.J, self.b, self.g, self.h_mean, self.h_std) + self.h
        if not all(math.isfinite(v) for v in values):
            raise ParameterError("all chain parameters must be finite")

    @classmethod
    def with_disorder(cls, L: int, rng: np.random.Generator, *, seed=None, **overrides) -> "SpinChainParams":
        h_mean = overrides.get("h_mean", DEFAULT_H_MEAN)
        h_std = overrides.get("h_std", DEFAULT_H_STD)
        h = sample_disorder(L, h_mean, h_std, rng)
        return cls(L=L, h=tuple(h), seed=seed, **overrides)

    @property
    def self_dual(self) -> bool:
        return math.isclose(self.J, math.pi / 4) and math.isclose(self.b, math.pi / 4)

    def to_dict(self) -> dict:
        return {
            "L": self.L, "J": self.J, "b": self.b, "g": self.g,
            "h_mean": self.h_mean, "h_std": self.h_std, "h": list(self.h), "seed": self.seed,
        }


@dataclass
class FloquetOperator:
    matrix: np.ndarray
    model: str
    space: HilbertSpace
    params: SpinChainParams | None = None
    gauge: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.space.N

    def unitarity_residual(self) -> float:
        U = self.matrix
        return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def _check_capacity(L: int, max_L: int) -> HilbertSpace:
    if L > max_L:
        raise CapacityError(f"L={L} exceeds the dense limit of L={max_L} (N={1 << max_L})")
    return HilbertSpace(L)


def x_rotation(b: float) -> np.ndarray:
    """``exp(-i b sigma^x)``."""
    return np.array([[math.cos(b), -1j * math.sin(b)], [-1j * math.sin(b), math.cos(b)]])


def build_kfim(params: SpinChainParams, *, max_L: int = DENSE_LIMIT) -> FloquetOperator:
    """``U = exp(-i H^z) exp(-i H^x)``: transverse kick first, then z phases."""
    space = _check_capacity(params.L, max_L)
    energies = hilbert.z_energies(params.J, params.h, space)
    U = hilbert.apply_uniform_single_site(np.eye(space.N, dtype=complex), x_rotation(params.b))
    U *= np.exp(-1j * energies)[:, None]
    return FloquetOperator(
        U, KFIM, space, params,
        gauge=np.exp(-0.5j * energies),
        metadata={"self_dual": params.self_dual},
    )


def _build_x_chain(params: SpinChainParams, variant: str, max_L: int) -> FloquetOperator:
    # exp(-i H^x) = W diag(exp(-i E_x)) W with W the Walsh-Hadamard transform
    space = _check_capacity(params.L, max_L)
    z = hilbert.z_energies(params.J, params.h, space)
    x_phases = hilbert.diagonal_x_phases(params, space, variant)
    U = np.diag(np.exp(-1j * z))
    U = hilbert.fwht(U)
    U *= x_phases[:, None]
    U = hilbert.fwht(U)
    return FloquetOperator(U, variant, space, params, gauge=np.exp(0.5j * z))


def build_cnn(params: SpinChainParams, *, max_L: int = DENSE_LIMIT) -> FloquetOperator:
    """``U = exp(-i H^x_CNN) exp(-i H^z)``: z phases first, then the x part."""
    return _build_x_chain(params, CNN, max_L)


def build_cnnnn(params: SpinChainParams, *, max_L: int = DENSE_LIMIT) -> FloquetOperator:
    return _build_x_chain(params, CNNNN, max_L)


def haar_cue_2x2(rng: np.random.Generator) -> np.ndarray:
    return haar_unitary(2, rng)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix.

    Columns of ``Q`` are rescaled by the phases of ``diag(R)`` so the
    distribution does not depend on LAPACK's sign convention.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def tensor_rmt_from_factors(factors, xi) -> np.ndarray:
    """``diag(exp(i xi)) (U_1 ⊗ ... ⊗ U_L)`` as a dense matrix."""
    xi = np.asarray(xi, dtype=float)
    U = hilbert.apply_site_gates(np.eye(xi.size, dtype=complex), factors)
    U *= np.exp(1j * xi)[:, None]
    return U


def build_tensor_rmt(L: int, rng: np.random.Generator, *, max_L: int = DENSE_LIMIT) -> FloquetOperator:
    """Random diagonal phases times a tensor product of ``L`` CUE(2) factors."""
    space = _check_capacity(L, max_L)
    factors = [haar_cue_2x2(rng) for _ in range(L)]
    xi = rng.uniform(-math.pi, math.pi, size=space.N)
    return FloquetOperator(tensor_rmt_from_factors(factors, xi), TENSOR_RMT, space)


def build(model: str, L: int, rng: np.random.Generator, *, seed=None, max_L: int = DENSE_LIMIT,
          **overrides) -> FloquetOperator:
    """Draw one disorder realization of ``model`` from ``rng`` and build it."""
    if model == TENSOR_RMT:
        op = build_tensor_rmt(L, rng, max_L=max_L)
        op.metadata["seed"] = seed
        return op
    builders = {KFIM: build_kfim, CNN: build_cnn, CNNNN: build_cnnnn}
    if model not in builders:
        raise ParameterError(f"unknown model {model!r}; choose from {MODELS}")
    _check_capacity(L, max_L)
    params = SpinChainParams.with_disorder(L, rng, seed=seed, **overrides)
    return builders[model](params, max_L=max_L)
