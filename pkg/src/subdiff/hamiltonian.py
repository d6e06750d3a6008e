"""Hamiltonians of the maximum principle and their optimization in u.

Two variants: the ``simple`` Hamiltonian for dynamics carrying no dt drift
(all costs against dE), and the ``general`` one for dynamics with a dt drift,
where the dE-weighted block is multiplied by the caller-supplied discrete
rate ``de_dt = dE/dt`` (this module never differentiates the time change).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import OptimizerDivergedError, ParameterError
from .forward_sde import ControlProblem
from .levy_noise import measure_integral

__all__ = [
    "AdjointTriple",
    "hamiltonian_simple",
    "hamiltonian_general",
    "maximize_hamiltonian",
    "terminal_adjoint",
    "concavity_spot_check",
]

_SCAN_POINTS = 64
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class AdjointTriple:
    """Adjoint processes along a path grid.

    ``p`` and ``q`` are arrays aligned with the grid; ``r`` maps a step index
    to the jump integrand in ``z`` at that step (both worked problems yield
    closed forms linear in ``z``; a per-step polynomial in ``z`` is the
    general fallback).
    """

    p: np.ndarray
    q: np.ndarray
    r: Callable[[int], Callable[[np.ndarray], np.ndarray]]

    def __post_init__(self):
        if self.p.shape != self.q.shape:
            raise ParameterError("adjoint p and q must align with one grid")

    def r_at(self, i: int) -> Callable[[np.ndarray], np.ndarray]:
        return self.r(i)


def hamiltonian_simple(problem: ControlProblem, t: float, e: float, x: float,
                       u: float, p: float, q: float,
                       r: Callable[[np.ndarray], np.ndarray]) -> float:
    """``H = g + p b + q sigma + integral gamma(.., z) r(z) nu(dz)``."""
    jump = measure_integral(problem.jump_spec,
                            lambda z: problem.gamma(t, e, x, u, z) * r(z))
    return float(problem.g(t, e, x, u) + p * problem.b(t, e, x, u)
                 + q * problem.sigma(t, e, x, u) + jump)


def hamiltonian_general(problem: ControlProblem, t: float, e: float, x: float,
                        u: float, p: float, q: float,
                        r: Callable[[np.ndarray], np.ndarray],
                        de_dt: float) -> float:
    """Hamiltonian for dynamics with a dt drift.

    ``H = (p mu + f) + (p b + q sigma + g) de_dt + (integral gamma r dnu) de_dt``
    with ``de_dt >= 0`` the discrete ratio dE/dt supplied by the caller.
    """
    if de_dt < 0.0:
        raise ParameterError(f"de_dt must be nonnegative, got {de_dt}")
    out = problem.mu(t, e, x, u) * p + problem.f(t, e, x, u)
    if de_dt != 0.0:
        jump = measure_integral(problem.jump_spec,
                                lambda z: problem.gamma(t, e, x, u, z) * r(z))
        out += (p * problem.b(t, e, x, u) + q * problem.sigma(t, e, x, u)
                + problem.g(t, e, x, u) + jump) * de_dt
    return float(out)


def _bracket_unbounded(fn, lo: float, hi: float):
    """Expand a symmetric bracket until the best value is interior."""
    width = max(1.0, abs(lo), abs(hi))
    a = lo if np.isfinite(lo) else -width
    b = hi if np.isfinite(hi) else width
    for _ in range(64):
        grid = np.linspace(a, b, _SCAN_POINTS)
        vals = fn(grid)
        k = int(np.argmax(vals))
        interior = (0 < k < grid.size - 1)
        at_free_edge = (k == 0 and not np.isfinite(lo)) or \
                       (k == grid.size - 1 and not np.isfinite(hi))
        if interior or not at_free_edge:
            return grid, vals
        if k == 0:
            a = a - 4.0 * (b - a)
            a = max(a, lo) if np.isfinite(lo) else a
        else:
            b = b + 4.0 * (b - a)
            b = min(b, hi) if np.isfinite(hi) else b
    raise OptimizerDivergedError(
        "Hamiltonian keeps improving toward an unbounded control; "
        "no optimizer exists on U")


def maximize_hamiltonian(problem: ControlProblem, state: Sequence[float],
                         adjoint: Sequence, sense: str = "max",
                         tol: float = 1e-8,
                         de_dt: Optional[float] = None) -> tuple[float, float]:
    """Optimize H over the control set at one (t, E, x) point.

    ``adjoint`` is ``(p, q, r)`` with ``r`` a callable in ``z``.  Coarse
    64-point scan followed by golden-section refinement; ties break toward
    the smaller control.  When ``de_dt`` is given the general Hamiltonian is
    optimized, otherwise the simple one.

    Unbounded control sets require ``problem.unimodal_hamiltonian`` (an
    expanding bracket search is then used; if the objective keeps improving
    outward an :class:`OptimizerDivergedError` is raised).
    """
    if sense not in ("max", "min"):
        raise ParameterError(f"sense must be 'max' or 'min', got {sense!r}")
    t, e, x = state
    p, q, r = adjoint
    sign = 1.0 if sense == "max" else -1.0

    if de_dt is None:
        def h_of(u):
            return hamiltonian_simple(problem, t, e, x, u, p, q, r)
    else:
        def h_of(u):
            return hamiltonian_general(problem, t, e, x, u, p, q, r, de_dt)

    def objective(grid):
        return np.array([sign * h_of(float(v)) for v in np.atleast_1d(grid)])

    lo, hi = problem.control_set
    bounded = np.isfinite(lo) and np.isfinite(hi)
    if bounded:
        grid = np.linspace(lo, hi, _SCAN_POINTS)
        vals = objective(grid)
    else:
        if not problem.unimodal_hamiltonian:
            raise ParameterError(
                "unbounded control set: declare unimodal_hamiltonian on the "
                "problem or supply finite bounds")
        grid, vals = _bracket_unbounded(objective, lo, hi)

    k = int(np.argmax(vals))  # first occurrence = smaller u on ties
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]
    # golden-section on [a, b]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = float(objective(c)[0])
    fd = float(objective(d)[0])
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(objective(c)[0])
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(objective(d)[0])
    u_star = 0.5 * (a + b)
    return float(u_star), float(h_of(u_star))


def terminal_adjoint(problem: ControlProblem, x_t: float) -> float:
    """Terminal condition of the adjoint equation: ``p(T) = h_x(X(T))``."""
    return float(problem.h_x(x_t))


def concavity_spot_check(problem: ControlProblem, adjoint: Sequence,
                         x_grid: np.ndarray, t: float = 0.0, e: float = 0.0,
                         sense: str = "max", de_dt: Optional[float] = None,
                         tol: float = 1e-8) -> tuple[bool, float]:
    """Numerical spot check of the curvature hypothesis on ``x -> opt_u H``.

    For ``sense="max"`` checks concavity (second differences <= tol); for
    ``sense="min"`` checks convexity.  Diagnostic only: a pass is evidence,
    not a proof, of the hypothesis the sufficiency theorems assume.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 3:
        raise ParameterError("need at least 3 grid points for second differences")
    vals = np.array([maximize_hamiltonian(problem, (t, e, xx), adjoint, sense,
                                          de_dt=de_dt)[1] for xx in x_grid])
    sign = 1.0 if sense == "max" else -1.0
    second = sign * (vals[2:] - 2.0 * vals[1:-1] + vals[:-2])
    worst = float(np.max(second))
    return bool(worst <= tol), worst
