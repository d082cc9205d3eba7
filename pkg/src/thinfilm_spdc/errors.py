"""Exception hierarchy shared by the physics and the command-line layers."""


class SpdcError(Exception):
    """Base class for all errors raised by thinfilm_spdc."""


class ResonancePoleError(SpdcError, ArithmeticError):
    """A Fabry-Perot denominator vanished (lossless guided-mode pole)."""

    def __init__(self, message, q=None, omega=None, thickness=None):
        super().__init__(message)
        self.q = q
        self.omega = omega
        self.thickness = thickness


class MaterialLookupError(SpdcError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown material"


class OracleDivergenceError(SpdcError):
    """The quadrature oracle did not converge between refinement levels."""


class UndefinedStateError(SpdcError, ValueError):
    """All amplitudes vanish, so no normalized polarization state exists."""


class ReconstructionError(SpdcError, ValueError):
    """Tomographic inversion produced a non-physical density matrix."""


class IncompleteProfileError(SpdcError, ValueError):
    """A profile does not bracket its half maximum on both sides of the peak."""


class NoPropagatingIdlerError(SpdcError, ValueError):
    """The angle relation requires |sin(theta_i)| > 1."""


class ConfigError(SpdcError, ValueError):
    """Configuration validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
