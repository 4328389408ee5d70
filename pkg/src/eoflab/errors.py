"""Exception hierarchy shared by every eoflab module."""


class EoflabError(Exception):
    """Base class for all library errors."""


class LayoutError(EoflabError, ValueError):
    """Factor layout does not match the operand."""


class PositivityError(EoflabError, ValueError):
    """Operator has an eigenvalue below the clipping threshold."""


class TraceError(EoflabError, ValueError):
    pass


class HermiticityError(EoflabError, ValueError):
    pass


class NormalizationError(EoflabError, ValueError):
    pass


class SizeError(EoflabError, ValueError):
    """Total Hilbert space dimension exceeds the configured cap."""


class ParameterError(EoflabError, ValueError):
    pass


class ConstraintError(EoflabError, ValueError):
    """Weights and mixing coefficients do not satisfy the family constraints."""


class DegeneracyError(EoflabError, ValueError):
    """Two kets are linearly dependent, or a combination vanishes."""


class SupportError(EoflabError, ValueError):
    pass


class CertificateError(EoflabError):
    """An operation required a passing pair certificate and did not get one."""


class PreconditionError(EoflabError):
    pass
