"""Exception types. Every error carries a machine-readable ``code`` so harness
reports and exit paths can name the failure without parsing messages."""

from __future__ import annotations


class TernstabError(Exception):
    code = "ERROR"


class DimensionMismatch(TernstabError, ValueError):
    code = "DIMENSION_MISMATCH"


class IdentityCheckError(TernstabError):
    """A candidate identity element failed one of the three unit equations."""

    code = "IDENTITY_CHECK_FAILED"

    def __init__(self, message, worst_index, residual):
        super().__init__(message)
        self.worst_index = int(worst_index)
        self.residual = float(residual)


class DivergentControlError(TernstabError, ArithmeticError):
    """Control-function series terms stopped decaying; the majorant diverges."""

    code = "CONTROL_DIVERGENT"


class NonConvergenceError(TernstabError, RuntimeError):
    """Doubling iteration hit its cap or produced non-finite values."""

    code = "NONCONVERGENT"

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class EmptyDerivationSpaceError(TernstabError):
    code = "EMPTY_DERIVATION_SPACE"


class ConfigError(TernstabError, ValueError):
    code = "CONFIG_INVALID"
