"""Euler integration of the controlled time-changed SDE.

State update per real-time step (left-endpoint coefficients, matching the
left-limit convention of the dynamics):

    X[i+1] = X[i] + mu*dt + b*dE + sigma*dB_E + (jump sum - dE * compensator)

with every coefficient evaluated at ``(t_i, E_i, X_i, u_i)``.  Also provides
the generators L1/L2 of the associated martingale problem and a residual
checker for the change-of-variables identity they satisfy.

Coefficient functions must broadcast over numpy arrays in ``e``, ``x`` and
``u``; all built-in problems do.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceError, ParameterError
from .levy_noise import (JumpMeasureSpec, NoiseBundle, StepJumps,
                         measure_integral, measure_integral_rows)
from .subordinator import InversePath

__all__ = [
    "ControlProblem",
    "ControlSignal",
    "ControlledPath",
    "SmoothFn",
    "simulate_forward",
    "simulate_forward_stacked",
    "StackedNoise",
    "stack_bundles",
    "generator_l1",
    "generator_l2",
    "ito_residual",
    "coarsen_bundle",
]

_FD_REL_STEP = 1e-5  # central-difference step is _FD_REL_STEP * max(1, |arg|)


def _check_derivative_pair(h, h_x):
    for x in (-2.0, -0.5, 0.0, 1.0, 3.0):
        eps = _FD_REL_STEP * max(1.0, abs(x))
        cd = (h(x + eps) - h(x - eps)) / (2.0 * eps)
        scale = max(1.0, abs(h_x(x)))
        if abs(cd - h_x(x)) > 1e-5 * scale:
            raise ParameterError(
                f"h_x is not the derivative of h near x={x}: "
                f"central difference {cd}, declared {h_x(x)}")


@dataclass
class ControlProblem:
    """Coefficients, costs, and control set of one control problem.

    Dynamics: ``dX = mu dt + b dE + sigma dB_E + integral gamma dN~(dE, dy)``
    with running costs ``f`` (against dt) and ``g`` (against dE), terminal
    cost ``h`` with derivative ``h_x``.  ``control_set`` is a closed interval
    (either bound may be infinite).  ``lipschitz_K`` is the declared
    x-Lipschitz constant of the coefficients; ``sense`` says whether the
    performance functional is maximized or minimized.

    Coefficient signatures: ``mu/b/sigma/f/g(t, e, x, u)``,
    ``gamma(t, e, x, u, y)``, ``h/h_x(x)``.
    """

    mu: Callable
    b: Callable
    sigma: Callable
    gamma: Callable
    f: Callable
    g: Callable
    h: Callable
    h_x: Callable
    control_set: tuple = (-np.inf, np.inf)
    jump_spec: JumpMeasureSpec = field(default_factory=JumpMeasureSpec)
    lipschitz_K: float = 0.0
    sense: str = "max"
    unimodal_hamiltonian: bool = False

    def __post_init__(self):
        lo, hi = self.control_set
        if not lo < hi:
            raise ParameterError(f"control_set must satisfy lo < hi, got {self.control_set}")
        if self.sense not in ("max", "min"):
            raise ParameterError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if self.lipschitz_K < 0.0:
            raise ParameterError("lipschitz_K must be nonnegative")
        _check_derivative_pair(self.h, self.h_x)


@dataclass
class ControlSignal:
    """Feedback law ``u(t, E, x)`` or a per-step value array (RCLL on the grid)."""

    kind: str
    fn: Optional[Callable] = None
    values: Optional[np.ndarray] = None

    @classmethod
    def feedback(cls, fn: Callable) -> "ControlSignal":
        return cls(kind="feedback", fn=fn)

    @classmethod
    def from_path(cls, values: np.ndarray) -> "ControlSignal":
        return cls(kind="path", values=np.asarray(values, dtype=float))

    @classmethod
    def constant(cls, value: float) -> "ControlSignal":
        return cls.feedback(lambda t, e, x: np.broadcast_to(float(value), np.shape(x)))

    def at(self, i: int, t: float, e, x) -> np.ndarray:
        """Control values at step ``i``, broadcast to the shape of ``x``."""
        if self.kind == "feedback":
            out = self.fn(t, e, x)
        else:
            idx = min(i, self.values.shape[-1] - 1)
            out = self.values[..., idx]
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x))


@dataclass
class ControlledPath:
    """One trajectory of the controlled state with its time change."""

    t_grid: np.ndarray
    e_values: np.ndarray
    x_values: np.ndarray
    u_values: np.ndarray
    stopped_at: Optional[int] = None

    def __post_init__(self):
        n = self.t_grid.size
        for arr in (self.e_values, self.x_values, self.u_values):
            if arr.shape != (n,):
                raise ParameterError("path arrays must align with the time grid")


@dataclass
class StackedNoise:
    """Column-stacked ensemble of bundles sharing one real-time grid."""

    t_grid: np.ndarray
    e: np.ndarray          # (P, N+1)
    delta_e: np.ndarray    # (P, N)
    delta_b: np.ndarray    # (P, N)
    jump_values: np.ndarray   # flat, grouped by step
    jump_paths: np.ndarray    # path index per jump
    jump_offsets: np.ndarray  # step i owns jump_values[off[i]:off[i+1]]
    spec: JumpMeasureSpec

    @property
    def n_paths(self) -> int:
        return self.e.shape[0]

    @property
    def n_steps(self) -> int:
        return self.delta_e.shape[1]

    def jumps_at(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.jump_offsets[i], self.jump_offsets[i + 1])
        return self.jump_values[sl], self.jump_paths[sl]


def stack_bundles(bundles: Sequence[NoiseBundle]) -> StackedNoise:
    """Stack per-path bundles; all paths must share the same t grid."""
    if not bundles:
        raise ParameterError("need at least one noise bundle")
    t_grid = bundles[0].t_grid
    for b in bundles[1:]:
        if b.t_grid.shape != t_grid.shape or not np.array_equal(b.t_grid, t_grid):
            raise ParameterError("all bundles must share one real-time grid")
        if b.spec != bundles[0].spec:
            raise ParameterError("all bundles must share one jump measure")
    n_steps = t_grid.size - 1
    e = np.stack([b.e_values for b in bundles])
    de = np.stack([b.delta_e for b in bundles])
    db = np.stack([b.delta_b for b in bundles])

    vals, steps, paths = [], [], []
    for p, b in enumerate(bundles):
        k = b.jumps.values.size
        if k:
            vals.append(b.jumps.values)
            steps.append(np.repeat(np.arange(n_steps), b.jumps.counts))
            paths.append(np.full(k, p, dtype=np.int64))
    offsets = np.zeros(n_steps + 1, dtype=np.int64)
    if vals:
        vals = np.concatenate(vals)
        steps = np.concatenate(steps)
        paths = np.concatenate(paths)
        order = np.argsort(steps, kind="stable")
        vals, steps, paths = vals[order], steps[order], paths[order]
        np.cumsum(np.bincount(steps, minlength=n_steps), out=offsets[1:])
    else:
        vals = np.empty(0)
        paths = np.empty(0, dtype=np.int64)
    return StackedNoise(t_grid=t_grid, e=e, delta_e=de, delta_b=db,
                        jump_values=vals, jump_paths=paths, jump_offsets=offsets,
                        spec=bundles[0].spec)


def _validate_control_values(u: np.ndarray, control_set: tuple):
    lo, hi = control_set
    if u.size and (np.any(u < lo - 1e-12) or np.any(u > hi + 1e-12)):
        raise ParameterError("control values leave the admissible set U")


def _compensator_rows(gamma, t, e, x, u, spec: JumpMeasureSpec) -> np.ndarray:
    """Per-path ``integral gamma(t, E, x, u, y) nu(dy)`` on shared quadrature nodes."""
    e = np.asarray(e, dtype=float)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return measure_integral_rows(
        spec, lambda y: gamma(t, e[:, None], x[:, None], u[:, None], y[None, :]),
        x.shape[0])


def simulate_forward_stacked(problem: ControlProblem, control: ControlSignal,
                             stacked: StackedNoise, x0: float,
                             stop_rule: Optional[Callable] = None):
    """Vectorized Euler scheme over a stacked ensemble.

    Returns ``(x, u, stopped_at, diverged_at)`` where ``x, u`` have shape
    (P, N+1), ``stopped_at[p]`` is the index at which the stop rule fired
    (-1 if it never fired) and ``diverged_at[p]`` the step whose update made
    the state non-finite (-1 if none).  State freezes and the control reads 0
    once a path stops or diverges.
    """
    if stacked.spec != problem.jump_spec:
        raise ParameterError("noise was sampled under a different jump measure "
                             "than the problem declares")
    P, N = stacked.n_paths, stacked.n_steps
    t = stacked.t_grid
    x = np.empty((P, N + 1))
    u = np.zeros((P, N + 1))
    x[:, 0] = x0
    stopped_at = np.full(P, -1, dtype=np.int64)
    diverged_at = np.full(P, -1, dtype=np.int64)
    active = np.ones(P, dtype=bool)
    if stop_rule is not None:
        hit = np.broadcast_to(np.asarray(stop_rule(t[0], stacked.e[:, 0], x[:, 0]),
                                         dtype=bool), (P,))
        stopped_at[hit] = 0
        active &= ~hit
    has_jumps = problem.jump_spec.total_mass > 0.0

    for i in range(N):
        dt = t[i + 1] - t[i]
        xi = x[:, i]
        ei = stacked.e[:, i]
        ui = control.at(i, t[i], ei, xi)
        _validate_control_values(ui[active], problem.control_set)
        u[:, i] = np.where(active, ui, 0.0)

        de = stacked.delta_e[:, i]
        db = stacked.delta_b[:, i]
        drift = problem.mu(t[i], ei, xi, ui) * dt \
            + problem.b(t[i], ei, xi, ui) * de \
            + problem.sigma(t[i], ei, xi, ui) * db

        jump_term = np.zeros(P)
        if has_jumps:
            yv, yp = stacked.jumps_at(i)
            if yv.size:
                contrib = problem.gamma(t[i], ei[yp], xi[yp], ui[yp], yv)
                np.add.at(jump_term, yp, contrib)
            if np.any(de != 0.0):
                jump_term -= de * _compensator_rows(problem.gamma, t[i], ei, xi, ui,
                                                    problem.jump_spec)

        x_next = np.where(active, xi + drift + jump_term, xi)
        bad = active & ~np.isfinite(x_next)
        if np.any(bad):
            diverged_at[bad] = i
            active &= ~bad
            x_next = np.where(bad, xi, x_next)
        x[:, i + 1] = x_next

        if stop_rule is not None and np.any(active):
            hit = active & np.broadcast_to(np.asarray(
                stop_rule(t[i + 1], stacked.e[:, i + 1], x_next), dtype=bool), (P,))
            stopped_at[hit] = i + 1
            active &= ~hit

    uN = control.at(N, t[N], stacked.e[:, N], x[:, N])
    u[:, N] = np.where(active, uN, 0.0)
    return x, u, stopped_at, diverged_at


def simulate_forward(problem: ControlProblem, control: ControlSignal,
                     bundle: NoiseBundle, x0: float,
                     stop_rule: Optional[Callable] = None) -> ControlledPath:
    """Integrate a single path; raises :class:`DivergenceError` on blow-up."""
    if not np.isfinite(x0):
        raise ParameterError("x0 must be finite")
    stacked = stack_bundles([bundle])
    x, u, stopped, diverged = simulate_forward_stacked(problem, control, stacked,
                                                       x0, stop_rule)
    if diverged[0] >= 0:
        raise DivergenceError(f"state became non-finite at step {diverged[0]}",
                              step=int(diverged[0]))
    stopped_at = int(stopped[0]) if stopped[0] >= 0 else None
    return ControlledPath(t_grid=stacked.t_grid, e_values=stacked.e[0],
                          x_values=x[0], u_values=u[0], stopped_at=stopped_at)


@dataclass
class SmoothFn:
    """Scalar function of ``(t1, t2, x)`` with optional analytic partials.

    Missing partials fall back to central differences with relative step
    ``1e-5 * max(1, |arg|)``.
    """

    value: Callable
    d_t1: Optional[Callable] = None
    d_t2: Optional[Callable] = None
    d_x: Optional[Callable] = None
    d_xx: Optional[Callable] = None

    def _fd(self, which: int, t1, t2, x):
        args = [t1, t2, x]
        eps = _FD_REL_STEP * max(1.0, float(np.max(np.abs(np.asarray(args[which])))))
        hi = list(args)
        lo = list(args)
        hi[which] = args[which] + eps
        lo[which] = args[which] - eps
        return (self.value(*hi) - self.value(*lo)) / (2.0 * eps)

    def t1(self, t1, t2, x):
        return self.d_t1(t1, t2, x) if self.d_t1 else self._fd(0, t1, t2, x)

    def t2(self, t1, t2, x):
        return self.d_t2(t1, t2, x) if self.d_t2 else self._fd(1, t1, t2, x)

    def x(self, t1, t2, x):
        return self.d_x(t1, t2, x) if self.d_x else self._fd(2, t1, t2, x)

    def xx(self, t1, t2, x):
        if self.d_xx:
            return self.d_xx(t1, t2, x)
        eps = _FD_REL_STEP * max(1.0, float(np.max(np.abs(np.asarray(x)))))
        return (self.value(t1, t2, x + eps) - 2.0 * self.value(t1, t2, x)
                + self.value(t1, t2, x - eps)) / (eps * eps)


def generator_l1(F: SmoothFn, problem: ControlProblem, point: Sequence[float],
                 u: float = 0.0) -> float:
    """Time-drift generator ``L1 F = F_t1 + F_x * mu`` at ``point=(t1, t2, x)``.

    Coefficients are frozen at control value ``u`` (the generator setting is
    uncontrolled; built-in problems ignore ``u`` where appropriate).
    """
    t1, t2, x = point
    return float(F.t1(t1, t2, x) + F.x(t1, t2, x) * problem.mu(t1, t2, x, u))


def generator_l2(F: SmoothFn, problem: ControlProblem, point: Sequence[float],
                 u: float = 0.0) -> float:
    """Time-change generator at ``point=(t1, t2, x)``:

    ``L2 F = F_t2 + F_x b + (1/2) F_xx sigma^2
    + integral [F(x + gamma(y)) - F(x) - F_x gamma(y)] nu(dy)``.
    """
    t1, t2, x = point
    fx = F.x(t1, t2, x)
    out = F.t2(t1, t2, x) + fx * problem.b(t1, t2, x, u) \
        + 0.5 * F.xx(t1, t2, x) * problem.sigma(t1, t2, x, u) ** 2

    def integrand(y):
        g = problem.gamma(t1, t2, x, u, y)
        return F.value(t1, t2, x + g) - F.value(t1, t2, x) - fx * g

    out += measure_integral(problem.jump_spec, integrand)
    return float(out)


def ito_residual(F: SmoothFn, problem: ControlProblem, path: ControlledPath,
                 bundle: NoiseBundle, u: float = 0.0) -> float:
    """Grid residual of the change-of-variables identity for ``F``.

    Computes ``F(T, E_T, X_T) - F(t_0, E_0, X_0)`` minus the discretized
    right-hand side (L1 against dt, L2 against dE, Brownian and compensated
    jump martingale terms from the same bundle).  Identically zero for
    ``F = x`` by construction of the Euler scheme.
    """
    t = path.t_grid
    e = path.e_values
    x = path.x_values
    n = t.size - 1
    lhs = F.value(t[n], e[n], x[n]) - F.value(t[0], e[0], x[0])
    rhs = 0.0
    spec = problem.jump_spec
    for i in range(n):
        dt = t[i + 1] - t[i]
        de = bundle.delta_e[i]
        point = (t[i], e[i], x[i])
        rhs += generator_l1(F, problem, point, u) * dt
        rhs += generator_l2(F, problem, point, u) * de
        rhs += F.x(*point) * problem.sigma(t[i], e[i], x[i], u) * bundle.delta_b[i]
        yv = bundle.jumps.at(i)
        jump_mart = 0.0
        if yv.size:
            g = problem.gamma(t[i], e[i], x[i], u, yv)
            jump_mart += float(np.sum(F.value(t[i], e[i], x[i] + g)
                                      - F.value(t[i], e[i], x[i])))
        if de != 0.0 and spec.total_mass > 0.0:
            def integrand(y):
                g = problem.gamma(t[i], e[i], x[i], u, y)
                return F.value(t[i], e[i], x[i] + g) - F.value(t[i], e[i], x[i])
            jump_mart -= de * measure_integral(spec, integrand)
        rhs += jump_mart
    return float(lhs - rhs)


def coarsen_bundle(bundle: NoiseBundle, factor: int) -> NoiseBundle:
    """Merge ``factor`` consecutive steps (for grid-refinement comparisons).

    Increments add; jumps keep their sizes and move to the enclosing coarse
    step, so the coarse bundle is the fine noise seen on the coarse grid.
    """
    n = bundle.delta_e.size
    if factor < 1 or n % factor:
        raise ParameterError(f"step count {n} is not divisible by factor {factor}")
    t = bundle.t_grid[::factor]
    e = bundle.e_values[::factor]
    de = bundle.delta_e.reshape(-1, factor).sum(axis=1)
    db = bundle.delta_b.reshape(-1, factor).sum(axis=1)
    counts = bundle.jumps.counts.reshape(-1, factor).sum(axis=1)
    jumps = StepJumps.from_counts(counts, bundle.jumps.values)
    inverse = InversePath(t_grid=t, e_values=e)
    return NoiseBundle(inverse=inverse, delta_e=de, delta_b=db, jumps=jumps,
                       spec=bundle.spec)
