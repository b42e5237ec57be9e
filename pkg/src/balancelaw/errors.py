"""Exception hierarchy shared by all balancelaw modules."""


class BalanceLawError(Exception):
    """Base class for every error raised by this package."""


class QuadratureFailure(BalanceLawError):
    pass


class NonFiniteSample(BalanceLawError):
    pass


class DimensionMismatch(BalanceLawError):
    pass


class GridMismatch(BalanceLawError):
    pass


class UnresolvedScale(BalanceLawError):
    """Mollifier scale too small to be represented on the grid."""


class CflViolation(BalanceLawError):
    pass


class NonFiniteState(BalanceLawError):
    pass


class InsufficientPadding(BalanceLawError):
    """Padded domain too small for the finite propagation cone."""


class NoContraction(BalanceLawError):
    pass


class NegativeInput(BalanceLawError):
    pass


class SchemeMismatch(BalanceLawError):
    pass


class ConfigError(BalanceLawError):
    pass
