"""Exception hierarchy shared by all modules."""


class SRHarmonicError(Exception):
    """Base class for every error raised by the package."""


class InputError(SRHarmonicError, ValueError):
    """Malformed or inconsistent input (shape mismatch, bad matrix, parse failure)."""


class UnsupportedGroupError(InputError):
    """Group arithmetic requested on an algebra that is not nilpotent of step <= 2."""


class HorizontalityError(InputError):
    """A form that must take values in the horizontal subspace does not.

    ``max_component`` carries the largest offending quotient coordinate.
    """

    def __init__(self, message, max_component):
        super().__init__(message)
        self.max_component = float(max_component)


class NoCertificateSpaceError(InputError):
    """The annihilator of the horizontal subspace is trivial."""


class AssemblyTooLargeError(InputError):
    """Assembled operator would exceed the configured size guard."""


class NumericalError(SRHarmonicError, RuntimeError):
    """A numerical routine failed (rank computation, solver breakdown)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = dict(report or {})


class DivergenceError(NumericalError):
    """An integrated trajectory produced non-finite values."""
