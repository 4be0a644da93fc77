"""Exception hierarchy shared by every module."""


class FFAlignError(Exception):
    """Base class for all errors raised by ffalign."""


class FieldError(FFAlignError, ValueError):
    pass


class NotPrime(FieldError):
    pass


class DegreeTooLarge(FieldError):
    pass


class FieldTooLarge(FieldError):
    pass


class NonMonic(FieldError):
    pass


class NoNonResidue(FieldError):
    pass


class CtxMismatch(FieldError):
    pass


class ParseError(FFAlignError, ValueError):
    pass


class DivisionByZero(FFAlignError, ZeroDivisionError):
    pass


class LinAlgError(FFAlignError, ValueError):
    pass


class DimensionMismatch(LinAlgError):
    pass


class NonSquare(LinAlgError):
    pass


class Inconsistent(LinAlgError):
    pass


class Underdetermined(LinAlgError):
    pass


class ChannelError(FFAlignError, ValueError):
    pass


class FullyConnected(ChannelError):
    pass


class ZeroCoefficient(ChannelError):
    pass


class ZeroH(ChannelError):
    pass


class Infeasible(FFAlignError):
    pass


class ConditionsNotMet(FFAlignError):
    pass


class SearchExhausted(FFAlignError):
    pass


class VerificationFailed(FFAlignError):
    pass


class DecodeAmbiguous(FFAlignError):
    pass


class TooLargeForExhaustive(FFAlignError):
    pass
