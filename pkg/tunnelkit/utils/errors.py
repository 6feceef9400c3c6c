"""
Exception hierarchy shared by all modules
"""


class TunnelkitError(Exception):
    """Base class for domain errors"""


class ConfigError(TunnelkitError, ValueError):
    """Invalid, unknown or inconsistent configuration"""


class UnitError(TunnelkitError, KeyError):
    """Unknown quantity kind"""

    def __str__(self):
        return str(self.args[0]) if self.args else ''


class NonConfiningTrapError(TunnelkitError, ValueError):
    """Barrier slope does not exceed effective gravity (a_b <= 0)"""


class GeometryError(TunnelkitError, RuntimeError):
    """Critical points of the potential could not be bracketed or refined"""


class EmptyRegionError(TunnelkitError, ValueError):
    """Region selects no grid points or carries no norm"""


class NumericalError(TunnelkitError, RuntimeError):
    """Instability or non-finite values during a computation"""


class ConvergenceError(NumericalError):
    """Iteration did not converge within its step budget"""


class FitError(NumericalError):
    """Degenerate or non-converging fit"""
