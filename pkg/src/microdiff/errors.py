"""Exception hierarchy shared by all modules."""


class MicrodiffError(Exception):
    """Base class for all library errors."""


class LevelMismatch(MicrodiffError):
    """Operands live at different levels / primes / dimensions."""


class IntegralityViolation(MicrodiffError):
    """An exactly computed constant that must be a p-adic integer is not.

    This signals an implementation bug, never bad user input.
    """


class NotHomogeneous(MicrodiffError):
    """A symbol that must be homogeneous is not."""


class NotIntegral(MicrodiffError):
    """Reduction mod p^i requested for a non p-integral object."""


class ZeroOperator(MicrodiffError):
    """Operation undefined on the zero operator."""


class SearchBoundExceeded(MicrodiffError):
    """A bounded search ran out of budget without a decision."""


class BudgetExhausted(MicrodiffError):
    """An Ore witness search exhausted its budget (not a nonexistence proof)."""


class IncompatibleLocalizer(MicrodiffError):
    """Micro-operators presented over different localizers."""


class NotInvertibleAtSymbol(MicrodiffError):
    """The principal symbol is not a unit on the requested chart."""


class SymbolMismatch(MicrodiffError):
    """The principal symbol is not supported by this localizer."""


class DegreeZeroLocalizer(MicrodiffError):
    """Localizer symbols must have degree >= 1."""


class BoundsExhausted(MicrodiffError):
    """Standard-basis completion hit its bounds; partial data attached."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ExprSyntaxError(MicrodiffError):
    """Expression parse error, carrying a source span."""

    def __init__(self, message, span=None):
        super().__init__(message)
        self.span = span
