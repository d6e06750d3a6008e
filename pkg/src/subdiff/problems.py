"""The two built-in control problems with closed-form optimal policies.

Linear regulator (no dt drift, quadratic costs against dE, terminal
``lam * X(T)^2``, minimization): the optimal feedback is ``u* = -h(E_t) X``
where the gain solves the Riccati equation ``h' = h^2 - 1`` backward from
``h(E_T) = 2 lam`` along the time change; the adjoint triple is
``p = h X, q = h sigma, r(z) = h z``.

Consumption problem (dt drift ``-u``, multiplicative time-changed noise,
reward ``integral exp(-delta t) u^2 dt`` up to bankruptcy): the stationary
policy is ``u* = exp(exp(delta t)/(2 delta) + delta t) X / 2`` with
``p = h(t) X`` for ``h(t) = exp(exp(delta t)/(2 delta))``, and
``q = 2 exp(-delta t) u* sigma``, ``r(z) = 2 exp(-delta t) u* theta z``.
The reward is quadratic and unbounded over unconstrained controls, so the
policy is verified through its stationarity condition, not global optimality.

Since the whole path of the time change is measurable at time zero under the
enlarged filtration, the regulator gain may depend on ``E_T``; policies are
evaluated after the inverse path has been simulated in full.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GainSingularityError, ParameterError
from .forward_sde import (ControlProblem, ControlSignal, ControlledPath,
                          simulate_forward)
from .hamiltonian import AdjointTriple
from .levy_noise import (JumpMeasureSpec, make_bundle, standard_normal_measure)
from .rng import master_stream

__all__ = [
    "RegulatorConfig",
    "ConsumptionConfig",
    "regulator_gain",
    "regulator_problem",
    "regulator_control",
    "regulator_policy",
    "consumption_gain",
    "consumption_problem",
    "consumption_control",
    "consumption_policy",
    "consumption_stop_rule",
    "FigureTable",
    "FIGURE_PRESETS",
    "reproduce_figure",
    "flat_fraction",
]


@dataclass(frozen=True)
class RegulatorConfig:
    """Linear regulator parameters (figures use lam=-1/2, sigma=1, x0=-0.01)."""

    lam: float
    sigma: float
    x0: float
    alpha: float
    horizon: float = 1.0
    jump_spec: JumpMeasureSpec = field(default_factory=standard_normal_measure)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.horizon <= 0.0:
            raise ParameterError("horizon must be positive")


@dataclass(frozen=True)
class ConsumptionConfig:
    """Consumption problem parameters (figure 5 uses delta=-0.001, sigma=theta=1)."""

    delta: float
    sigma: float
    theta: float
    x0: float
    alpha: float
    horizon: float = 1.0
    jump_spec: JumpMeasureSpec = field(default_factory=standard_normal_measure)

    def __post_init__(self):
        if self.delta == 0.0:
            raise ParameterError("delta must be nonzero (policy formula is singular)")
        if self.x0 <= 0.0:
            raise ParameterError("initial wealth x0 must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.horizon <= 0.0:
            raise ParameterError("horizon must be positive")

    @property
    def b_drift(self) -> float:
        """Drift coefficient ``-(sigma^2 + theta^2 * int z^2 nu(dz)) / 2``.

        Always recomputed from the inputs so it cannot drift out of sync.
        """
        m2 = self.jump_spec.second_moment
        return -(self.sigma ** 2 + self.theta ** 2 * m2) / 2.0


def regulator_gain(e_t, e_T, lam: float):
    """Riccati gain along the time change.

    Solves ``h'(s) = h(s)^2 - 1`` backward from ``h(E_T) = 2 lam``:

        h = ((2 lam + 1) + (2 lam - 1) exp(2(e_t - e_T)))
            / ((2 lam + 1) - (2 lam - 1) exp(2(e_t - e_T)))

    For ``lam = -1/2`` the formula collapses to ``h = -1`` identically.
    Accepts scalars or arrays; raises :class:`GainSingularityError` where the
    denominator vanishes (possible for ``lam < -1/2``).
    """
    a = 2.0 * lam - 1.0
    b = 2.0 * lam + 1.0
    e_b, eT_b = np.broadcast_arrays(np.asarray(e_t, dtype=float),
                                    np.asarray(e_T, dtype=float))
    z = np.exp(2.0 * (e_b - eT_b))
    den = b - a * z
    # den = 2 at e_t = e_T and must stay positive on the way back; den <= 0
    # means the backward Riccati flow blew up before reaching this point
    scale = max(abs(a), abs(b), 1.0)
    bad = den <= 1e-12 * scale
    if np.any(bad):
        offending = float(np.atleast_1d(e_b)[np.argmax(np.atleast_1d(bad))])
        raise GainSingularityError(
            f"regulator gain singular at E_t = {offending} (lam = {lam})",
            e_t=offending)
    out = (b + a * z) / den
    return out if out.ndim else float(out)


def regulator_problem(config: RegulatorConfig) -> ControlProblem:
    """Dynamics ``dX = u dE + sigma dB_E + int z dN~`` with quadratic costs."""
    sigma = config.sigma
    return ControlProblem(
        mu=lambda t, e, x, u: np.zeros_like(np.asarray(x, dtype=float)),
        b=lambda t, e, x, u: u,
        sigma=lambda t, e, x, u: np.broadcast_to(sigma, np.shape(x)),
        gamma=lambda t, e, x, u, y: np.broadcast_to(y, np.broadcast_shapes(
            np.shape(x), np.shape(y))),
        f=lambda t, e, x, u: np.zeros_like(np.asarray(x, dtype=float)),
        g=lambda t, e, x, u: (x * x + u * u) / 2.0,
        h=lambda x: config.lam * x * x,
        h_x=lambda x: 2.0 * config.lam * x,
        control_set=(-np.inf, np.inf),
        jump_spec=config.jump_spec,
        lipschitz_K=0.0,  # b, sigma, gamma carry no x dependence
        sense="min",
        unimodal_hamiltonian=True,
    )


def regulator_control(config: RegulatorConfig, e_T) -> ControlSignal:
    """Optimal feedback ``u*(t) = -h(E_t) X(t)``.

    ``e_T`` is the terminal time-change value (scalar for a single path,
    array aligned with the ensemble for stacked simulation); it is known at
    time zero under the enlarged filtration.
    """
    lam = config.lam
    return ControlSignal.feedback(lambda t, e, x: -regulator_gain(e, e_T, lam) * x)


def regulator_policy(config: RegulatorConfig,
                     path: ControlledPath) -> tuple[ControlSignal, AdjointTriple]:
    """Closed-form control and adjoint triple along a simulated path."""
    e = path.e_values
    h = regulator_gain(e, float(e[-1]), config.lam)
    u_star = -h * path.x_values
    p = h * path.x_values
    q = h * config.sigma

    def r(i: int):
        hi = h[i]
        return lambda z: hi * z

    return ControlSignal.from_path(u_star), AdjointTriple(p=p, q=q, r=r)


def consumption_gain(t, delta: float):
    """``h(t) = exp(exp(delta t) / (2 delta))`` solving ``h' = (h/2) e^(delta t)``."""
    if delta == 0.0:
        raise ParameterError("delta must be nonzero (gain is singular)")
    t = np.asarray(t, dtype=float)
    out = np.exp(np.exp(delta * t) / (2.0 * delta))
    return out if out.ndim else float(out)


def consumption_problem(config: ConsumptionConfig) -> ControlProblem:
    """Dynamics ``dX = -u dt + X (b dE + sigma dB_E + theta int z dN~)``."""
    sigma, theta, delta = config.sigma, config.theta, config.delta
    b = config.b_drift
    m2 = config.jump_spec.second_moment
    # squared-sum Lipschitz constant: |db|^2 + |dsigma|^2 + int |dgamma|^2 dnu <= K |dx|^2
    lipschitz = b * b + sigma * sigma + theta * theta * m2
    return ControlProblem(
        mu=lambda t, e, x, u: -u,
        b=lambda t, e, x, u: b * x,
        sigma=lambda t, e, x, u: sigma * x,
        gamma=lambda t, e, x, u, y: theta * x * y,
        f=lambda t, e, x, u: np.exp(-delta * t) * u * u,
        g=lambda t, e, x, u: np.zeros_like(np.asarray(x, dtype=float)),
        h=lambda x: 0.0,
        h_x=lambda x: 0.0,
        control_set=(-np.inf, np.inf),
        jump_spec=config.jump_spec,
        lipschitz_K=lipschitz,
        sense="max",
        unimodal_hamiltonian=False,
    )


def consumption_control(config: ConsumptionConfig) -> ControlSignal:
    """Stationary-point policy ``u*(t) = exp(e^{delta t}/(2 delta) + delta t) X/2``."""
    delta = config.delta
    return ControlSignal.feedback(
        lambda t, e, x: np.exp(np.exp(delta * t) / (2.0 * delta) + delta * t) * x / 2.0)


def consumption_stop_rule(t, e, x):
    """Bankruptcy: stop at the first time the wealth is non-positive."""
    return np.asarray(x) <= 0.0


def consumption_policy(config: ConsumptionConfig,
                       path: ControlledPath) -> tuple[ControlSignal, AdjointTriple]:
    """Closed-form control and adjoint triple along a simulated path."""
    t = path.t_grid
    x = path.x_values
    delta, sigma, theta = config.delta, config.sigma, config.theta
    h = consumption_gain(t, delta)
    u_star = h * np.exp(delta * t) * x / 2.0
    p = h * x
    q = 2.0 * np.exp(-delta * t) * u_star * sigma
    r_coef = 2.0 * np.exp(-delta * t) * u_star * theta

    def r(i: int):
        ci = r_coef[i]
        return lambda z: ci * z

    return ControlSignal.from_path(u_star), AdjointTriple(p=p, q=q, r=r)


def flat_fraction(e_values: np.ndarray) -> float:
    """Fraction of grid steps on which the time change does not move."""
    de = np.diff(np.asarray(e_values, dtype=float))
    return float(np.mean(de == 0.0))


@dataclass
class FigureTable:
    """One reproduced sample trajectory: columns t, E_t, X, u_star."""

    name: str
    preset: dict
    t: np.ndarray
    e: np.ndarray
    x: np.ndarray
    u_star: np.ndarray
    stopped_at: Optional[int] = None

    HEADER = ("t", "E_t", "X", "u_star")

    def rows(self):
        for k in range(self.t.size):
            yield (self.t[k], self.e[k], self.x[k], self.u_star[k])


FIGURE_PRESETS: dict[str, dict] = {
    "fig2": {"problem": "regulator", "lam": -0.5, "sigma": 1.0, "x0": -0.01, "alpha": 0.9},
    "fig3": {"problem": "regulator", "lam": -0.5, "sigma": 1.0, "x0": -0.01, "alpha": 0.7},
    "fig4": {"problem": "regulator", "lam": -0.5, "sigma": 1.0, "x0": -0.01, "alpha": 0.5},
    "fig5": {"problem": "consumption", "delta": -0.001, "sigma": 1.0, "theta": 1.0,
             "x0": 1.0, "alpha": 0.9},
}


def reproduce_figure(which: str, seed: int, n_steps: int = 1000,
                     horizon: float = 1.0) -> FigureTable:
    """Emit one optimally controlled sample trajectory for a figure preset."""
    if which not in FIGURE_PRESETS:
        raise ParameterError(f"unknown figure {which!r}; choose from "
                             f"{sorted(FIGURE_PRESETS)}")
    preset = dict(FIGURE_PRESETS[which])
    rng = master_stream(seed)
    t_grid = np.linspace(0.0, horizon, n_steps + 1)

    if preset["problem"] == "regulator":
        config = RegulatorConfig(lam=preset["lam"], sigma=preset["sigma"],
                                 x0=preset["x0"], alpha=preset["alpha"],
                                 horizon=horizon)
        bundle = make_bundle(config.alpha, t_grid, config.jump_spec, rng)
        control = regulator_control(config, float(bundle.e_values[-1]))
        path = simulate_forward(regulator_problem(config), control, bundle, config.x0)
    else:
        config = ConsumptionConfig(delta=preset["delta"], sigma=preset["sigma"],
                                   theta=preset["theta"], x0=preset["x0"],
                                   alpha=preset["alpha"], horizon=horizon)
        bundle = make_bundle(config.alpha, t_grid, config.jump_spec, rng)
        path = simulate_forward(consumption_problem(config),
                                consumption_control(config), bundle, config.x0,
                                stop_rule=consumption_stop_rule)
    return FigureTable(name=which, preset=preset, t=path.t_grid, e=path.e_values,
                       x=path.x_values, u_star=path.u_values,
                       stopped_at=path.stopped_at)
