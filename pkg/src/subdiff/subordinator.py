"""Stable subordinators and their first-passage inverses (the time change).

``D`` is a driftless one-sided alpha-stable subordinator with Laplace
transform ``E[exp(-lam * D(t))] = exp(-t * (scale * lam)**alpha)``; the time
change is its right-continuous first-passage inverse
``E_t = inf{tau > 0 : D(tau) > t}``.  Paths of ``D`` are discretized on an
operational-time grid and inverted onto a real-time grid, preserving the
plateau structure of ``E`` exactly (plateaus sit where ``D`` jumps over an
interval).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .errors import InsufficientPathError, ParameterError

__all__ = [
    "StableParams",
    "OperationalGrid",
    "SubordinatorPath",
    "InversePath",
    "stable_increments",
    "simulate_subordinator",
    "simulate_covering_path",
    "invert_subordinator",
    "inverse_on_grid",
    "inverse_moment",
]


@dataclass(frozen=True)
class StableParams:
    """Stability index and scale of the one-sided stable law.

    The Laplace exponent is ``phi(lam) = (scale * lam)**alpha``; only this
    family is implemented, but samplers accept the descriptor so other
    Laplace exponents can be added behind the same interface.
    """

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.scale > 0.0:
            raise ParameterError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class OperationalGrid:
    """Uniform grid in operational time tau."""

    step: float
    n_steps: int

    def __post_init__(self):
        if not self.step > 0.0:
            raise ParameterError(f"step must be positive, got {self.step}")
        if self.n_steps < 1:
            raise ParameterError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def tau(self) -> np.ndarray:
        return self.step * np.arange(self.n_steps + 1)


@dataclass
class SubordinatorPath:
    """Discretized subordinator: ``d_values[k] = D(tau[k])``, D(0) = 0."""

    tau: np.ndarray
    d_values: np.ndarray

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.d_values = np.asarray(self.d_values, dtype=float)
        if self.tau.shape != self.d_values.shape:
            raise ParameterError("tau and d_values must have equal length")
        if self.d_values[0] != 0.0:
            raise ParameterError("subordinator paths must start at D(0) = 0")
        if np.any(np.diff(self.d_values) < 0.0):
            raise ParameterError("subordinator paths must be nondecreasing")


@dataclass
class InversePath:
    """Time change ``E`` sampled on a real-time grid.

    ``e_values`` is nondecreasing; consecutive equal values are genuine
    plateaus, i.e. intervals jumped over by the underlying subordinator.
    """

    t_grid: np.ndarray
    e_values: np.ndarray

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.e_values = np.asarray(self.e_values, dtype=float)
        if self.t_grid.shape != self.e_values.shape:
            raise ParameterError("t_grid and e_values must have equal length")
        if self.e_values[0] < 0.0 or np.any(np.diff(self.e_values) < 0.0):
            raise ParameterError("inverse paths must be nonnegative and nondecreasing")


def stable_increments(params: StableParams, step: float, size: int,
                      rng: np.random.Generator) -> np.ndarray:
    """I.i.d. increments of D over operational steps of length ``step``.

    Uses the Chambers-Mallows-Stuck construction of the one-sided stable
    law: with U ~ Uniform(0, pi) and W ~ Exp(1),

        S = sin(alpha U) / sin(U)^(1/alpha) * (sin((1-alpha) U) / W)^((1-alpha)/alpha)

    satisfies E[exp(-lam S)] = exp(-lam**alpha), and the increment is
    ``scale * step**(1/alpha) * S`` by self-similarity.
    """
    if step <= 0.0:
        raise ParameterError(f"step must be positive, got {step}")
    a = params.alpha
    u = rng.uniform(0.0, np.pi, size)
    w = rng.exponential(1.0, size)
    s = np.sin(a * u) / np.sin(u) ** (1.0 / a) * (np.sin((1.0 - a) * u) / w) ** ((1.0 - a) / a)
    return params.scale * step ** (1.0 / a) * s


def simulate_subordinator(params: StableParams, grid: OperationalGrid,
                          rng: np.random.Generator) -> SubordinatorPath:
    """Simulate D on the given operational grid (n_steps + 1 points)."""
    inc = stable_increments(params, grid.step, grid.n_steps, rng)
    d = np.empty(grid.n_steps + 1)
    d[0] = 0.0
    np.cumsum(inc, out=d[1:])
    return SubordinatorPath(tau=grid.tau, d_values=d)


def simulate_covering_path(params: StableParams, step: float, t_max: float,
                           rng: np.random.Generator, initial_steps: int = 64,
                           max_doublings: int = 48) -> SubordinatorPath:
    """Simulate D far enough that ``D(tau_end) > t_max``.

    D(tau_end) is random, so a fixed operational grid can undershoot the
    horizon; the grid is extended by doubling until it covers ``t_max``.
    """
    if t_max < 0.0:
        raise ParameterError(f"t_max must be nonnegative, got {t_max}")
    n = max(int(initial_steps), 1)
    blocks = [stable_increments(params, step, n, rng)]
    total = float(blocks[0].sum())
    doublings = 0
    while total <= t_max:
        if doublings >= max_doublings:
            raise InsufficientPathError(
                f"subordinator failed to cover horizon {t_max} after "
                f"{doublings} grid doublings")
        extra = stable_increments(params, step, n, rng)
        blocks.append(extra)
        total += float(extra.sum())
        n *= 2
        doublings += 1
    inc = np.concatenate(blocks)
    d = np.empty(inc.size + 1)
    d[0] = 0.0
    np.cumsum(inc, out=d[1:])
    tau = step * np.arange(inc.size + 1)
    return SubordinatorPath(tau=tau, d_values=d)


def invert_subordinator(path: SubordinatorPath, t_grid: np.ndarray) -> InversePath:
    """First-passage inversion onto a real-time grid.

    ``e_values[i] = tau[k]`` for the smallest ``k`` with
    ``d_values[k] > t_grid[i]``; no interpolation, so plateaus of E are
    represented exactly.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ParameterError("t_grid must be a nonempty 1-d array")
    if np.any(t_grid < 0.0) or np.any(np.diff(t_grid) < 0.0):
        raise ParameterError("t_grid must be sorted and nonnegative")
    if t_grid[-1] >= path.d_values[-1]:
        raise InsufficientPathError(
            f"horizon {t_grid[-1]} exceeds simulated subordinator range "
            f"{path.d_values[-1]}; extend the operational grid")
    idx = np.searchsorted(path.d_values, t_grid, side="right")
    return InversePath(t_grid=t_grid, e_values=path.tau[idx])


def inverse_on_grid(params: StableParams, t_grid: np.ndarray, op_step: float,
                    rng: np.random.Generator) -> InversePath:
    """Simulate a covering subordinator path and invert it onto ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    path = simulate_covering_path(params, op_step, float(t_grid[-1]), rng)
    return invert_subordinator(path, t_grid)


def inverse_moment(n: int, t: float, alpha: float) -> float:
    """Analytic moment ``E[E_t**n] = n! * t**(n alpha) / Gamma(1 + n alpha)``.

    This is the inverse Laplace transform of ``n! / (s * phi(s)**n)`` for
    ``phi(s) = s**alpha`` (unit scale).
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ParameterError(f"moment order must be an integer >= 1, got {n}")
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return math.factorial(n) * t ** (n * alpha) / float(_gamma(1.0 + n * alpha))
