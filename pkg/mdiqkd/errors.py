"""
Exceptions raised by mdiqkd.

Everything derives from MdiqkdError so callers (the command line front end in
particular) can tell a failed simulation apart from a programming error.
"""


class MdiqkdError(Exception):
    """
    Base class for all errors raised by this package.
    """


class UsageError(MdiqkdError, ValueError):
    """
    Bad arguments or configuration: mismatched fields, indices out of range,
    incompatible protocol / adversary combinations and so on.
    """


class FieldDomainError(MdiqkdError, ArithmeticError):
    """
    An operation undefined on its input, such as inverting zero.
    """


class ValidationError(MdiqkdError, ValueError):
    """
    A mathematical object failed validation (a reducible modulus, a
    non-orthonormal basis, a non-unitary matrix, an unnormalised state).
    """


class CapabilityError(MdiqkdError):
    """
    The request is well formed but beyond what a module supports (usually a
    dimension cap).
    """


class ProtocolOrderError(MdiqkdError):
    """
    A protocol transcript was used out of order, or an attack needs
    information that is not public at the time it would have to be used.
    """


class ErrorCorrectionFailed(MdiqkdError):
    """
    Alice's and Bob's keys still disagree after the last error correction
    pass. Sessions abort when this is raised.
    """
