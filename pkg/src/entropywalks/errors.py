"""Exception types raised across the package.

Every error is a ValueError subclass so generic callers can catch broadly,
while tests can pin the specific contract violation.
"""


class EntropyWalksError(ValueError):
    """Base class for all package errors."""


# subset densities
class EmptySupport(EntropyWalksError):
    pass


class ArityMismatch(EntropyWalksError):
    pass


class NegativeWeight(EntropyWalksError):
    pass


class DuplicateKey(EntropyWalksError):
    pass


class NegativeCoordinate(EntropyWalksError):
    pass


class NonpositiveField(EntropyWalksError):
    pass


class ZeroMassCondition(EntropyWalksError):
    pass


class ArityOutOfRange(EntropyWalksError):
    pass


# kernels and walks
class ZeroMassRow(EntropyWalksError):
    pass


class StateSpaceTooLarge(EntropyWalksError):
    pass


class MoveBudgetExceeded(EntropyWalksError):
    pass


class InvalidStart(EntropyWalksError):
    pass


class DimensionMismatch(EntropyWalksError):
    pass


# divergences and functionals
class NegativeFunction(EntropyWalksError):
    pass


class NonReversibleKernel(EntropyWalksError):
    pass


class DegenerateBase(EntropyWalksError):
    pass


class EllTooLarge(EntropyWalksError):
    pass


class NotErgodic(EntropyWalksError):
    pass


class IterationCapExceeded(EntropyWalksError):
    pass


class NonpositiveRho(EntropyWalksError):
    pass


class SupportMismatch(EntropyWalksError):
    pass


# certification
class InfeasibleMarginal(EntropyWalksError):
    pass


class NoConvergence(EntropyWalksError):
    pass


class NumericalBreakdown(EntropyWalksError):
    pass


class ContractionNotCertified(EntropyWalksError):
    pass


# Ising models
class NormTooLarge(EntropyWalksError):
    pass


class AsymmetricMatrix(EntropyWalksError):
    pass


# experiment runner
class ConfigParseError(EntropyWalksError):
    pass


class InputNotFound(EntropyWalksError):
    pass
