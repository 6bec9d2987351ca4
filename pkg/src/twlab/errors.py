"""Exception hierarchy shared by all modules."""


class TwlabError(Exception):
    """Base class for library errors."""


class SizeError(TwlabError, ValueError):
    """Requested dimension exceeds the configured dense maximum."""


class ContractError(TwlabError, ValueError):
    """Input violates a documented precondition (e.g. non-Hermitian matrix)."""


class ModeError(TwlabError, ValueError):
    """Operation called for the wrong boundary kind."""


class DomainError(TwlabError, ValueError):
    """Argument at a pole or outside the domain of a closed form."""


class NumericalError(TwlabError, ArithmeticError):
    """A numerical step failed (singular matrix, overflow)."""


class DegeneracyError(TwlabError, RuntimeError):
    """State is not an eigenvector of the requested operator."""


class RefinementError(TwlabError, RuntimeError):
    """Degenerate block could not be diagonalized within tolerance."""


class ConditioningError(TwlabError, RuntimeError):
    """Fit or linear solve is rank deficient or ill conditioned."""


class RootQualityError(TwlabError, RuntimeError):
    def __init__(self, message, root=None):
        super().__init__(message)
        self.root = root


class ClassificationError(TwlabError, RuntimeError):
    """Roots could not be organised into the expected string pattern."""


class SingularityError(TwlabError, ArithmeticError):
    """Root equations evaluated at a pole (root collision)."""


class ConsistencyError(TwlabError, RuntimeError):
    """Derived quantity failed a consistency check."""


class ConfigError(TwlabError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
