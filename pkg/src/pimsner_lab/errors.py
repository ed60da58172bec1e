"""Exception hierarchy shared by every module."""


class PimsnerLabError(Exception):
    """Base class for all library errors."""


class StructuralError(PimsnerLabError):
    """Shapes, parents or spaces do not fit together."""


class PositivityError(PimsnerLabError):
    """An element expected to be positive is not (within tolerance)."""


class ArgumentError(PimsnerLabError, ValueError):
    """A scalar argument is outside its allowed range."""


class DegenerateOperatorError(PimsnerLabError):
    """Every block of the requested operator falls past the cutoff."""


class InfeasibleError(PimsnerLabError):
    """The requested exact construction does not exist."""


class CutoffError(PimsnerLabError):
    """The Fock truncation is too small for the requested computation."""


class WitnessError(PimsnerLabError):
    """A supplied unitary-equivalence witness fails its checks."""


class UnsupportedError(PimsnerLabError):
    """The input is valid but outside what the library can compute."""


class ConsistencyError(PimsnerLabError):
    """An internal invariant was violated (signals a bug, not bad input)."""


class InputError(PimsnerLabError):
    """Malformed or contradictory user input (task files, declarations)."""


class FactLookupError(PimsnerLabError, KeyError):
    """Requested fact id is unknown."""
