"""Monte Carlo estimation of performance functionals and control comparisons.

Per path the performance is the left-endpoint Riemann sum

    J = sum f(t_i, E_i, X_i, u_i) dt + sum g(t_i, E_i, X_i, u_i) dE + h(X_end)

accumulated up to the stop index when a stop rule fires.  Path ``i`` always
draws its noise from the stream ``(master_seed, i)``, so competing controls
evaluated with the same seed see identical noise (common random numbers) and
paired differences are meaningful at much smaller sample sizes than
independent estimates.

Divergent paths are excluded and counted; more than 1% exclusions fails the
run.  Aggregation is a deterministic reduction in path order, so serial and
worker-parallel runs agree bit-exactly (cap workers with the SUBDIFF_THREADS
environment variable; 0 or unset picks a machine-dependent default).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MonteCarloError, ParameterError
from .forward_sde import (ControlProblem, ControlSignal, StackedNoise,
                          simulate_forward_stacked, stack_bundles)
from .levy_noise import JumpMeasureSpec, NoiseBundle, make_bundle
from .rng import path_stream

__all__ = [
    "TimeGrid",
    "PerformanceEstimate",
    "ComparisonRow",
    "ComparisonReport",
    "resolve_workers",
    "sample_ensemble",
    "estimate_performance",
    "compare_controls",
    "perturbation_family",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform real-time grid on [0, T]."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ParameterError("horizon must be positive")
        if self.n_steps < 1:
            raise ParameterError("n_steps must be >= 1")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)


@dataclass
class PerformanceEstimate:
    """Monte Carlo estimate of J(u) with its standard error."""

    mean: float
    stderr: float
    n_paths: int
    sense: str
    n_excluded: int = 0
    per_path: Optional[np.ndarray] = None


@dataclass
class ComparisonRow:
    control_id: str
    mean: float
    stderr: float
    paired_diff_vs_base: float
    paired_stderr: float
    verdict: str


@dataclass
class ComparisonReport:
    base_id: str
    sense: str
    n_paths: int
    n_excluded: int
    rows: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(r.verdict == "PASS" for r in self.rows if r.control_id != self.base_id)


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: explicit argument, else SUBDIFF_THREADS (0 = auto)."""
    if requested is None:
        raw = os.environ.get("SUBDIFF_THREADS", "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ParameterError(f"SUBDIFF_THREADS must be an integer, got {raw!r}")
    if requested < 0:
        raise ParameterError("worker count must be >= 0")
    if requested == 0:
        return min(os.cpu_count() or 1, 8)
    return requested


def sample_ensemble(alpha: float, grid: TimeGrid, spec: JumpMeasureSpec,
                    master_seed: int, n_paths: int,
                    op_step: Optional[float] = None,
                    workers: Optional[int] = None) -> list[NoiseBundle]:
    """Noise bundles for paths 0..n_paths-1, one stream per path index.

    The result is independent of the worker count: path ``i`` is always
    generated from ``path_stream(master_seed, i)`` and returned in order.
    """
    if n_paths < 1:
        raise ParameterError("n_paths must be >= 1")
    t = grid.t

    def build(i: int) -> NoiseBundle:
        return make_bundle(alpha, t, spec, path_stream(master_seed, i), op_step)

    n_workers = resolve_workers(workers)
    if n_workers <= 1 or n_paths < 64:
        return [build(i) for i in range(n_paths)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(build, range(n_paths), chunksize=64))


def _path_costs(problem: ControlProblem, stacked: StackedNoise, x: np.ndarray,
                u: np.ndarray, stopped_at: np.ndarray) -> np.ndarray:
    """Left-endpoint cost sums per path, honoring stop indices."""
    P, N = stacked.n_paths, stacked.n_steps
    t = stacked.t_grid
    end = np.where(stopped_at >= 0, stopped_at, N)
    j = np.zeros(P)
    for i in range(N):
        live = end > i
        if not np.any(live):
            break
        dt = t[i + 1] - t[i]
        ei = stacked.e[:, i]
        fi = np.broadcast_to(np.asarray(
            problem.f(t[i], ei, x[:, i], u[:, i]), dtype=float), (P,))
        gi = np.broadcast_to(np.asarray(
            problem.g(t[i], ei, x[:, i], u[:, i]), dtype=float), (P,))
        j[live] += fi[live] * dt + gi[live] * stacked.delta_e[live, i]
    x_end = x[np.arange(P), end]
    j += np.broadcast_to(np.asarray(problem.h(x_end), dtype=float), (P,))
    return j


def _evaluate_on_ensemble(problem: ControlProblem, control: ControlSignal,
                          stacked: StackedNoise, x0: float,
                          stop_rule: Optional[Callable]) -> tuple[np.ndarray, np.ndarray]:
    x, u, stopped_at, diverged_at = simulate_forward_stacked(
        problem, control, stacked, x0, stop_rule)
    good = diverged_at < 0
    j = _path_costs(problem, stacked, x, u, stopped_at)
    return j, good


def _check_exclusions(n_bad: int, n_paths: int):
    if n_bad > 0.01 * n_paths:
        raise MonteCarloError(
            f"{n_bad} of {n_paths} paths diverged (> 1% divergence budget)")


def estimate_performance(problem: ControlProblem, control: ControlSignal,
                         x0: float, alpha: float, grid: TimeGrid,
                         n_paths: int, master_seed: int,
                         stop_rule: Optional[Callable] = None,
                         op_step: Optional[float] = None,
                         workers: Optional[int] = None,
                         ensemble: Optional[Sequence[NoiseBundle]] = None,
                         keep_paths: bool = False) -> PerformanceEstimate:
    """Estimate J(u) over ``n_paths`` seeded paths.

    Passing a prebuilt ``ensemble`` (from :func:`sample_ensemble`) skips
    noise generation and guarantees common random numbers across calls.
    """
    if ensemble is None:
        ensemble = sample_ensemble(alpha, grid, problem.jump_spec, master_seed,
                                   n_paths, op_step, workers)
    elif len(ensemble) != n_paths:
        raise ParameterError("prebuilt ensemble size does not match n_paths")
    stacked = stack_bundles(list(ensemble))
    j, good = _evaluate_on_ensemble(problem, control, stacked, x0, stop_rule)
    n_bad = int(np.sum(~good))
    _check_exclusions(n_bad, n_paths)
    vals = j[good]
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return PerformanceEstimate(mean=mean, stderr=stderr, n_paths=int(vals.size),
                               sense=problem.sense, n_excluded=n_bad,
                               per_path=(j if keep_paths else None))


def compare_controls(problem: ControlProblem, base: ControlSignal,
                     alternatives: Sequence[ControlSignal], x0: float,
                     alpha: float, grid: TimeGrid, n_paths: int,
                     master_seed: int, labels: Optional[Sequence[str]] = None,
                     stop_rule: Optional[Callable] = None,
                     op_step: Optional[float] = None,
                     workers: Optional[int] = None,
                     ensemble: Optional[Sequence[NoiseBundle]] = None) -> ComparisonReport:
    """Evaluate every control on identical noise and test the optimal ordering.

    For a minimization problem the base passes against an alternative when
    ``J(alt) - J(base)`` exceeds twice its paired standard error (reversed
    for maximization).  Paths that diverge under any control are excluded
    from every comparison, and count against the 1% budget.  A prebuilt
    ``ensemble`` may be supplied when controls close over per-path noise
    features (e.g. gains depending on E_T).
    """
    if ensemble is None:
        ensemble = sample_ensemble(alpha, grid, problem.jump_spec, master_seed,
                                   n_paths, op_step, workers)
    elif len(ensemble) != n_paths:
        raise ParameterError("prebuilt ensemble size does not match n_paths")
    stacked = stack_bundles(list(ensemble))
    controls = [base, *alternatives]
    if labels is None:
        labels = ["base"] + [f"alt{k}" for k in range(len(alternatives))]
    elif len(labels) != len(controls):
        raise ParameterError("need one label per control including the base")

    per_path = []
    good = np.ones(len(ensemble), dtype=bool)
    for c in controls:
        j, ok = _evaluate_on_ensemble(problem, c, stacked, x0, stop_rule)
        per_path.append(j)
        good &= ok
    n_bad = int(np.sum(~good))
    _check_exclusions(n_bad, n_paths)

    sign = -1.0 if problem.sense == "max" else 1.0  # ordering: sign*(J_alt - J_base) >= 0
    report = ComparisonReport(base_id=labels[0], sense=problem.sense,
                              n_paths=int(np.sum(good)), n_excluded=n_bad)
    base_vals = per_path[0][good]
    for label, j in zip(labels, per_path):
        vals = j[good]
        mean = float(np.mean(vals))
        stderr = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        d = vals - base_vals
        pd_mean = float(np.mean(d))
        pd_stderr = float(np.std(d, ddof=1) / np.sqrt(d.size)) if d.size > 1 else 0.0
        if label == labels[0]:
            verdict = "BASE"
        else:
            verdict = "PASS" if sign * pd_mean >= 2.0 * pd_stderr else "FAIL"
        report.rows.append(ComparisonRow(control_id=label, mean=mean, stderr=stderr,
                                         paired_diff_vs_base=pd_mean,
                                         paired_stderr=pd_stderr, verdict=verdict))
    return report


def perturbation_family(base: ControlSignal, horizon: float,
                        shifts: Sequence[float] = (0.1, -0.1, 0.5, -0.5),
                        scalings: Sequence[float] = (0.75, 1.25),
                        truncate_after: Optional[float] = None) -> tuple[list, list]:
    """Standard admissible perturbations of a feedback control.

    Constant shifts, proportional scalings, and optionally a time truncation
    (control forced to zero after the given time).  Returns (labels, controls).
    """
    if base.kind != "feedback":
        raise ParameterError("perturbation family needs a feedback base control")
    fn = base.fn
    labels, controls = [], []
    for s in shifts:
        labels.append(f"shift{s:+g}")
        controls.append(ControlSignal.feedback(
            lambda t, e, x, s=s: fn(t, e, x) + s))
    for k in scalings:
        labels.append(f"scale{k:g}")
        controls.append(ControlSignal.feedback(
            lambda t, e, x, k=k: k * fn(t, e, x)))
    if truncate_after is not None:
        labels.append(f"truncate@{truncate_after:g}")
        controls.append(ControlSignal.feedback(
            lambda t, e, x, c=truncate_after: np.where(t <= c, fn(t, e, x), 0.0)))
    return labels, controls
