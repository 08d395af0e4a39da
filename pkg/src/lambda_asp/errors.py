"""Exception hierarchy shared by all modules."""


class LambdaASPError(Exception):
    """Base class for errors raised by this package."""


class DomainError(LambdaASPError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ConfigurationError(LambdaASPError, ValueError):
    """Model or run parameters violate their documented constraints."""


class NoRootError(LambdaASPError, ArithmeticError):
    """A root-finding problem has no solution in the requested bracket."""


class SizeError(LambdaASPError, ValueError):
    """A dense/exact solver was asked for a state space above its guard."""


class NumericalCheckError(LambdaASPError, ArithmeticError):
    """A post-computation consistency check (normalization, balance) failed."""
