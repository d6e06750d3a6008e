"""Exception taxonomy shared by all subdiff modules.

``ParameterError`` covers configuration/domain mistakes (caller bugs); the
remaining classes flag numerical failures discovered at run time.
"""


class SubdiffError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SubdiffError, ValueError):
    """An argument lies outside its mathematical domain."""


class InsufficientPathError(SubdiffError):
    """A simulated subordinator path does not cover the requested horizon."""


class DivergenceError(SubdiffError):
    """The forward state became non-finite during integration."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class GainSingularityError(SubdiffError):
    """The regulator feedback gain hit a singular denominator."""

    def __init__(self, message: str, e_t: float):
        super().__init__(message)
        self.e_t = e_t


class QuadratureError(SubdiffError):
    """An integrand could not be integrated against the jump measure."""


class RegressionRankError(SubdiffError):
    """Cross-sectional regression was attempted with a degenerate design."""


class OptimizerDivergedError(SubdiffError):
    """Hamiltonian optimization ran away on an unbounded control set."""


class MonteCarloError(SubdiffError):
    """A Monte Carlo run violated its divergence budget."""
