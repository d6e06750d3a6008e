"""Driving noise of the time-changed dynamics.

Per real-time step the bundle carries the time-change increment ``dE``, a
conditionally Gaussian increment ``dB_E ~ N(0, dE)``, and the jumps of a
finite-activity Poisson random measure run in operational time (count
``Poisson(total_mass * dE)``, sizes i.i.d. from the jump-size law restricted
to ``|y| < c``).  Steps with ``dE = 0`` are frozen: no diffusion, no jumps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf, erfinv

from .errors import ParameterError, QuadratureError
from .subordinator import InversePath

__all__ = [
    "DiscreteJumps",
    "JumpMeasureSpec",
    "standard_normal_measure",
    "measure_integral",
    "measure_integral_rows",
    "StepJumps",
    "NoiseBundle",
    "sample_noise",
    "default_op_step",
    "make_bundle",
    "compensated_integral",
]

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(64)
_GH_WEIGHTS = _GH_WEIGHTS / math.sqrt(2.0 * math.pi)  # weights for N(0,1) expectations
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True)
class DiscreteJumps:
    """Finitely supported jump-size distribution."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.size == 0 or v.shape != p.shape:
            raise ParameterError("discrete jump law needs matching values/probs")
        if np.any(p < 0.0) or not np.isclose(p.sum(), 1.0):
            raise ParameterError("discrete jump probabilities must be >= 0 and sum to 1")


@dataclass(frozen=True)
class JumpMeasureSpec:
    """Finite-activity jump measure ``nu`` restricted to ``{0 < |y| < c}``.

    ``nu(dy) = total_mass * P(dy)`` where ``P`` is the size distribution
    (``"standard_normal"`` or a :class:`DiscreteJumps`) conditioned on
    ``|y| < truncation_c``.
    """

    sampler: str | DiscreteJumps = "standard_normal"
    total_mass: float = 1.0
    truncation_c: float = math.inf

    def __post_init__(self):
        if isinstance(self.sampler, str) and self.sampler != "standard_normal":
            raise ParameterError(f"unknown jump sampler {self.sampler!r}")
        if not (np.isfinite(self.total_mass) and self.total_mass >= 0.0):
            raise ParameterError("total_mass must be finite and >= 0 (finite activity only)")
        if not self.truncation_c > 0.0:
            raise ParameterError("truncation_c must be positive (may be inf)")

    @property
    def second_moment(self) -> float:
        """``integral of y^2 nu(dy)`` over the truncated support."""
        return measure_integral(self, lambda y: y * y)


def standard_normal_measure(total_mass: float = 1.0) -> JumpMeasureSpec:
    return JumpMeasureSpec("standard_normal", total_mass, math.inf)


def _discrete_support(spec: JumpMeasureSpec) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(spec.sampler.values, dtype=float)
    p = np.asarray(spec.sampler.probs, dtype=float)
    keep = np.abs(v) < spec.truncation_c
    v, p = v[keep], p[keep]
    if p.sum() <= 0.0:
        raise ParameterError("jump truncation removed the whole discrete support")
    return v, p / p.sum()


def measure_integral(spec: JumpMeasureSpec, fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """``integral of fn(y) nu(dy)``.

    Gauss-Hermite (64 nodes) against the normal density, Gauss-Legendre on
    ``[-c, c]`` when truncated, exact summation for discrete laws.  Exactness
    for polynomial integrands up to high degree makes this the closed form
    for all moment integrals used by the worked problems.
    """
    if spec.total_mass == 0.0:
        return 0.0
    if isinstance(spec.sampler, DiscreteJumps):
        v, p = _discrete_support(spec)
        vals = np.asarray(fn(v), dtype=float)
        out = float(np.dot(p, vals))
    elif math.isinf(spec.truncation_c):
        vals = np.asarray(fn(_GH_NODES), dtype=float)
        out = float(np.dot(_GH_WEIGHTS, vals))
    else:
        c = spec.truncation_c
        y = c * _GL_NODES  # map [-1,1] -> [-c,c]
        density = np.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)
        norm = float(erf(c / math.sqrt(2.0)))
        vals = np.asarray(fn(y), dtype=float)
        out = float(np.dot(_GL_WEIGHTS * c, vals * density)) / norm
    if not np.isfinite(out):
        raise QuadratureError("integrand is not integrable against the jump measure")
    return spec.total_mass * out


def measure_integral_rows(spec: JumpMeasureSpec, fn_rows: Callable[[np.ndarray], np.ndarray],
                          n_rows: int) -> np.ndarray:
    """Row-wise version of :func:`measure_integral`.

    ``fn_rows(y)`` must map quadrature nodes ``y`` of shape (K,) to a matrix
    of shape (n_rows, K); the integral against ``nu`` is taken along each row
    (used to evaluate state-dependent compensators for a whole ensemble at
    once).
    """
    if spec.total_mass == 0.0:
        return np.zeros(n_rows)
    if isinstance(spec.sampler, DiscreteJumps):
        v, p = _discrete_support(spec)
        out = np.asarray(fn_rows(v), dtype=float) @ p
    elif math.isinf(spec.truncation_c):
        out = np.asarray(fn_rows(_GH_NODES), dtype=float) @ _GH_WEIGHTS
    else:
        c = spec.truncation_c
        y = c * _GL_NODES
        density = np.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)
        norm = float(erf(c / math.sqrt(2.0)))
        out = np.asarray(fn_rows(y), dtype=float) @ (_GL_WEIGHTS * c * density) / norm
    out = np.broadcast_to(out, (n_rows,))
    if not np.all(np.isfinite(out)):
        raise QuadratureError("integrand is not integrable against the jump measure")
    return spec.total_mass * out


def _sample_sizes(spec: JumpMeasureSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    if size == 0:
        return np.empty(0)
    if isinstance(spec.sampler, DiscreteJumps):
        v, p = _discrete_support(spec)
        return rng.choice(v, size=size, p=p)
    if math.isinf(spec.truncation_c):
        return rng.standard_normal(size)
    # inverse-CDF sampling of the truncated normal keeps draws deterministic
    c = spec.truncation_c
    lo = 0.5 * (1.0 + erf(-c / math.sqrt(2.0)))
    hi = 0.5 * (1.0 + erf(c / math.sqrt(2.0)))
    u = rng.uniform(lo, hi, size)
    return math.sqrt(2.0) * erfinv(2.0 * u - 1.0)


@dataclass
class StepJumps:
    """Jump sizes grouped by grid step (ragged, stored flat)."""

    values: np.ndarray
    offsets: np.ndarray  # length n_steps + 1; step i owns values[offsets[i]:offsets[i+1]]

    @classmethod
    def from_counts(cls, counts: np.ndarray, values: np.ndarray) -> "StepJumps":
        offsets = np.zeros(counts.size + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return cls(values=np.asarray(values, dtype=float), offsets=offsets)

    @property
    def n_steps(self) -> int:
        return self.offsets.size - 1

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def at(self, i: int) -> np.ndarray:
        return self.values[self.offsets[i]:self.offsets[i + 1]]


@dataclass
class NoiseBundle:
    """Per-step noise increments along one inverse-subordinator path."""

    inverse: InversePath
    delta_e: np.ndarray
    delta_b: np.ndarray
    jumps: StepJumps
    spec: JumpMeasureSpec

    def __post_init__(self):
        n = self.inverse.t_grid.size - 1
        if self.delta_e.shape != (n,) or self.delta_b.shape != (n,):
            raise ParameterError("delta_e/delta_b must have one entry per grid step")
        if self.jumps.n_steps != n:
            raise ParameterError("jump container does not match the grid")
        flat = self.delta_e == 0.0
        if np.any(self.delta_b[flat] != 0.0) or np.any(self.jumps.counts[flat] > 0):
            raise ParameterError("frozen steps (dE = 0) must carry no noise")

    @property
    def t_grid(self) -> np.ndarray:
        return self.inverse.t_grid

    @property
    def e_values(self) -> np.ndarray:
        return self.inverse.e_values


def sample_noise(inverse: InversePath, spec: JumpMeasureSpec,
                 rng: np.random.Generator) -> NoiseBundle:
    """Draw ``dB_E`` and Poisson jumps conditionally on the time change.

    Draw order is fixed (Gaussians, then counts, then sizes) so a given
    stream always yields the same bundle.
    """
    delta_e = np.diff(inverse.e_values)
    delta_b = rng.standard_normal(delta_e.size) * np.sqrt(delta_e)
    counts = rng.poisson(spec.total_mass * delta_e) if spec.total_mass > 0.0 \
        else np.zeros(delta_e.size, dtype=np.int64)
    sizes = _sample_sizes(spec, int(counts.sum()), rng)
    return NoiseBundle(inverse=inverse, delta_e=delta_e, delta_b=delta_b,
                       jumps=StepJumps.from_counts(counts, sizes), spec=spec)


def default_op_step(alpha: float, horizon: float, n_steps: int) -> float:
    """Operational resolution: half the mean time-change increment per step."""
    from .subordinator import inverse_moment
    return inverse_moment(1, horizon, alpha) / (2.0 * n_steps)


def make_bundle(alpha: float, t_grid: np.ndarray, spec: JumpMeasureSpec,
                rng: np.random.Generator, op_step: float | None = None) -> NoiseBundle:
    """Simulate the time change and all driving noise for one path on ``t_grid``."""
    from .subordinator import StableParams, inverse_on_grid
    t_grid = np.asarray(t_grid, dtype=float)
    if op_step is None:
        op_step = default_op_step(alpha, float(t_grid[-1]), t_grid.size - 1)
    inverse = inverse_on_grid(StableParams(alpha), t_grid, op_step, rng)
    return sample_noise(inverse, spec, rng)


def compensated_integral(gamma: Callable, state: Sequence[float], step_jumps: np.ndarray,
                         delta_e: float, spec: JumpMeasureSpec) -> float:
    """One step of ``integral gamma dN~``: jump sum minus the compensator.

    Returns ``sum_j gamma(t, E, x, u, y_j) - delta_e * integral gamma(..., y) nu(dy)``.
    """
    t, e, x, u = state
    jump_sum = 0.0
    step_jumps = np.asarray(step_jumps, dtype=float)
    if step_jumps.size:
        jump_sum = float(np.sum(gamma(t, e, x, u, step_jumps)))
    compensator = measure_integral(spec, lambda y: gamma(t, e, x, u, y)) if delta_e != 0.0 else 0.0
    return jump_sum - delta_e * compensator
