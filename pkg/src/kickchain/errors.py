"""Exception hierarchy shared by all kickchain modules."""

from __future__ import annotations


class KickchainError(Exception):
    """Base class for all errors raised by kickchain."""


class ParameterError(KickchainError, ValueError):
    """Invalid or inconsistent input parameters."""


class DimensionError(KickchainError, ValueError):
    """Array length is not a power of two or does not match the Hilbert space."""


class ContractError(KickchainError, ValueError):
    """A documented precondition on the input (norm, ordering, sign) is violated."""


class CapacityError(KickchainError, MemoryError):
    """Requested system size exceeds the configured dense-matrix limit."""


class ComputationError(KickchainError, RuntimeError):
    """A numerical routine failed (e.g. eigensolver did not converge)."""


class DegenerateDistributionError(KickchainError, ValueError):
    """A statistic needs a nonzero spread but the sample has none."""


class PartialReportError(KickchainError):
    """Some (model, L) cells required for a report are missing."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"missing report cells: {self.missing}")
