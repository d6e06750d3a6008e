"""Command-line front end: experiment orchestration, CSV/SVG emission.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(divergence, singular gain, failed quadrature/regression), 4 when a
``--check`` acceptance verification fails.

Every run that produces artifacts echoes its effective configuration to
``<out>/config.echo.toml``; rerunning the same subcommand with
``--config <echo>`` reproduces the outputs bit-exactly (explicit flags
override file values, which override built-in defaults).
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np
import tomli

from . import bsde as bsde_mod
from . import mc, problems
from .errors import (DivergenceError, GainSingularityError, InsufficientPathError,
                     MonteCarloError, OptimizerDivergedError, ParameterError,
                     QuadratureError, RegressionRankError)
from .forward_sde import (ControlSignal, SmoothFn, ito_residual,
                          simulate_forward, stack_bundles)
from .levy_noise import make_bundle, standard_normal_measure
from .plotting import svg_line_plot
from .rng import master_stream, path_stream
from .subordinator import (OperationalGrid, StableParams, inverse_moment,
                           invert_subordinator, simulate_covering_path,
                           simulate_subordinator)

_NUMERICAL_ERRORS = (DivergenceError, GainSingularityError, QuadratureError,
                     RegressionRankError, OptimizerDivergedError,
                     MonteCarloError, InsufficientPathError)


class CheckFailure(Exception):
    """Raised when a --check verification does not hold."""


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: str, header, rows) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {path}")
    return path


def write_svg(path: str, content: str) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(content)
    print(f"wrote {path}")
    return path


def _toml_literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    s = str(v).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def echo_config(out_dir: str, command: tuple[str, ...], params: dict) -> str:
    path = os.path.join(out_dir, "config.echo.toml")
    with open(path, "w", newline="\n") as fh:
        fh.write(f'command = "{" ".join(command)}"\n')
        fh.write(f"[{'.'.join(command)}]\n")
        for key in sorted(params):
            fh.write(f"{key} = {_toml_literal(params[key])}\n")
    print(f"wrote {path}")
    return path


def load_config(path: str, command: tuple[str, ...]) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ParameterError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ParameterError(f"malformed config {path}: {exc}")
    node = data
    for part in command:
        node = node.get(part, {})
        if not isinstance(node, dict):
            raise ParameterError(f"config table [{'.'.join(command)}] is malformed")
    return dict(node)


def resolve_params(args: argparse.Namespace, command: tuple[str, ...],
                   defaults: dict) -> dict:
    """Effective parameters: explicit flags > config file > defaults."""
    from_file = load_config(args.config, command) if getattr(args, "config", None) else {}
    params = dict(defaults)
    for k, v in from_file.items():
        if k not in defaults:
            raise ParameterError(f"unknown config key {k!r} for command "
                                 f"{' '.join(command)}")
        params[k] = v
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    # normalize numeric types so echoes round-trip exactly
    for k, v in params.items():
        if isinstance(defaults[k], float) and isinstance(v, int):
            params[k] = float(v)
    return params


def _prepare_out(params: dict) -> Optional[str]:
    out = params.get("out")
    if out:
        os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_subordinator_simulate(args) -> int:
    defaults = dict(alpha=0.9, scale=1.0, step=0.01, steps=1000, seed=0,
                    T=0.0, out="", plot=False)
    p = resolve_params(args, ("subordinator", "simulate"), defaults)
    out = _prepare_out(p)
    if not out:
        raise ParameterError("subordinator simulate needs --out")
    params = StableParams(p["alpha"], p["scale"])
    rng = master_stream(p["seed"])
    path = simulate_subordinator(params, OperationalGrid(p["step"], p["steps"]), rng)
    write_csv(os.path.join(out, "subordinator.csv"), ("tau", "d"),
              zip(path.tau, path.d_values))
    if p["T"] > 0.0:
        cover = simulate_covering_path(params, p["step"], p["T"], rng)
        t_grid = np.linspace(0.0, p["T"], p["steps"] + 1)
        inverse = invert_subordinator(cover, t_grid)
        write_csv(os.path.join(out, "inverse.csv"), ("t", "e"),
                  zip(inverse.t_grid, inverse.e_values))
        if p["plot"]:
            write_svg(os.path.join(out, "inverse.svg"),
                      svg_line_plot(inverse.t_grid, {"E_t": inverse.e_values},
                                    "inverse time change", "t", "E_t"))
    if p["plot"]:
        write_svg(os.path.join(out, "subordinator.svg"),
                  svg_line_plot(path.tau, {"D": path.d_values},
                                "stable subordinator", "tau", "D"))
    echo_config(out, ("subordinator", "simulate"), p)
    return 0


def cmd_subordinator_moments(args) -> int:
    defaults = dict(alpha=0.9, t=1.0, n=1, out="")
    p = resolve_params(args, ("subordinator", "moments"), defaults)
    value = inverse_moment(p["n"], p["t"], p["alpha"])
    print(f"E[E_t^{p['n']}] at t={_fmt(p['t'])}, alpha={_fmt(p['alpha'])}: "
          f"{format(value, '.6g')}")
    out = _prepare_out(p)
    if out:
        write_csv(os.path.join(out, "moments.csv"), ("n", "t", "alpha", "value"),
                  [(p["n"], p["t"], p["alpha"], value)])
        echo_config(out, ("subordinator", "moments"), p)
    return 0


def _build_problem(p: dict):
    if p["problem"] == "regulator":
        config = problems.RegulatorConfig(lam=p["lam"], sigma=p["sigma"],
                                          x0=p["x0"], alpha=p["alpha"],
                                          horizon=p["T"])
        return config, problems.regulator_problem(config), None
    if p["problem"] == "consumption":
        config = problems.ConsumptionConfig(delta=p["delta"], sigma=p["sigma"],
                                            theta=p["theta"], x0=p["x0"],
                                            alpha=p["alpha"], horizon=p["T"])
        return config, problems.consumption_problem(config), problems.consumption_stop_rule
    raise ParameterError(f"unknown problem {p['problem']!r}")


def _control_for(config, kind: str, bundle=None, e_T=None):
    if kind == "optimal":
        if isinstance(config, problems.RegulatorConfig):
            eT = e_T if e_T is not None else float(bundle.e_values[-1])
            return problems.regulator_control(config, eT)
        return problems.consumption_control(config)
    if kind == "zero":
        return ControlSignal.constant(0.0)
    if kind.startswith("const:"):
        return ControlSignal.constant(float(kind.split(":", 1)[1]))
    raise ParameterError(f"unknown control {kind!r}")


def cmd_sde(args) -> int:
    defaults = dict(problem="regulator", control="optimal", alpha=0.9, T=1.0,
                    steps=500, seed=0, x0=float("nan"), lam=-0.5, sigma=1.0,
                    delta=-0.001, theta=1.0, out="", plot=False)
    p = resolve_params(args, ("sde",), defaults)
    if np.isnan(p["x0"]):
        p["x0"] = -0.01 if p["problem"] == "regulator" else 1.0
    out = _prepare_out(p)
    if not out:
        raise ParameterError("sde needs --out")
    config, problem, stop_rule = _build_problem(p)
    rng = master_stream(p["seed"])
    t_grid = np.linspace(0.0, p["T"], p["steps"] + 1)
    bundle = make_bundle(p["alpha"], t_grid, problem.jump_spec, rng)
    control = _control_for(config, p["control"], bundle=bundle)
    path = simulate_forward(problem, control, bundle, p["x0"], stop_rule)
    write_csv(os.path.join(out, "path.csv"), ("t", "E_t", "X", "u"),
              zip(path.t_grid, path.e_values, path.x_values, path.u_values))
    if path.stopped_at is not None:
        print(f"stopped at index {path.stopped_at} "
              f"(t = {_fmt(path.t_grid[path.stopped_at])})")
    if p["plot"]:
        write_svg(os.path.join(out, "path.svg"),
                  svg_line_plot(path.t_grid, {"X": path.x_values,
                                              "u": path.u_values,
                                              "E_t": path.e_values},
                                f"{p['problem']} sample path", "t"))
    echo_config(out, ("sde",), p)
    return 0


def _ito_rms(alpha: float, T: float, n_steps: int, n_paths: int, seed: int) -> float:
    """RMS residual of the x^2 identity for sigma-only dynamics."""
    spec = standard_normal_measure(0.0)
    problem = problems.ControlProblem(
        mu=lambda t, e, x, u: 0.0, b=lambda t, e, x, u: 0.0,
        sigma=lambda t, e, x, u: np.broadcast_to(1.0, np.shape(x)),
        gamma=lambda t, e, x, u, y: np.broadcast_to(0.0, np.broadcast_shapes(
            np.shape(x), np.shape(y))),
        f=lambda t, e, x, u: 0.0, g=lambda t, e, x, u: 0.0,
        h=lambda x: 0.0, h_x=lambda x: 0.0, jump_spec=spec)
    F = SmoothFn(value=lambda t1, t2, x: x * x,
                 d_t1=lambda t1, t2, x: 0.0, d_t2=lambda t1, t2, x: 0.0,
                 d_x=lambda t1, t2, x: 2.0 * x, d_xx=lambda t1, t2, x: 2.0)
    t_grid = np.linspace(0.0, T, n_steps + 1)
    op_step = T ** alpha / (4.0 * n_steps)
    zero = ControlSignal.constant(0.0)
    acc = 0.0
    for i in range(n_paths):
        bundle = make_bundle(alpha, t_grid, spec, path_stream(seed, i), op_step)
        path = simulate_forward(problem, zero, bundle, 0.0)
        acc += ito_residual(F, problem, path, bundle) ** 2
    return float(np.sqrt(acc / n_paths))


def cmd_ito_check(args) -> int:
    defaults = dict(alpha=0.9, T=1.0, steps=50, paths=1000, seed=0, out="",
                    check=False, plot=False)
    p = resolve_params(args, ("ito-check",), defaults)
    out = _prepare_out(p)
    rms_coarse = _ito_rms(p["alpha"], p["T"], p["steps"], p["paths"], p["seed"])
    rms_fine = _ito_rms(p["alpha"], p["T"], 2 * p["steps"], p["paths"], p["seed"] + 1)
    ratio = rms_coarse / rms_fine
    print(f"rms residual: {rms_coarse:.6g} (dt) -> {rms_fine:.6g} (dt/2), "
          f"ratio {ratio:.3f}")
    if out:
        write_csv(os.path.join(out, "ito_check.csv"),
                  ("n_steps", "rms_residual"),
                  [(p["steps"], rms_coarse), (2 * p["steps"], rms_fine)])
        echo_config(out, ("ito-check",), p)
    if p["check"] and not ratio >= 1.3:
        raise CheckFailure(f"refinement ratio {ratio:.3f} < 1.3")
    return 0


def _bsde_case(name: str, horizon: float):
    if name == "constant":
        return bsde_mod.BsdeSpec(driver=lambda t, e, x, u: np.zeros_like(
            np.asarray(x, dtype=float)), lipschitz_l_mu=0.0,
            terminal=lambda b: 1.0, horizon=horizon)
    if name == "brownian":
        return bsde_mod.BsdeSpec(driver=lambda t, e, x, u: np.zeros_like(
            np.asarray(x, dtype=float)), lipschitz_l_mu=0.0,
            terminal=lambda b: float(np.sum(b.delta_b)), horizon=horizon)
    if name == "linear":
        return bsde_mod.BsdeSpec(driver=lambda t, e, x, u: 0.5 * x,
                                 lipschitz_l_mu=0.5, terminal=lambda b: 1.0,
                                 horizon=horizon)
    raise ParameterError(f"unknown bsde case {name!r}")


def _bsde_oracle(name: str, stacked_e, delta_b):
    if name == "constant":
        return np.ones_like(stacked_e), np.zeros(delta_b.shape)
    if name == "brownian":
        w = np.concatenate([np.zeros((delta_b.shape[0], 1)),
                            np.cumsum(delta_b, axis=1)], axis=1)
        return w, np.ones(delta_b.shape)
    if name == "linear":
        x = np.exp(0.5 * (stacked_e[:, -1][:, None] - stacked_e))
        return x, np.zeros(delta_b.shape)
    raise ParameterError(f"unknown bsde case {name!r}")


def cmd_bsde(args) -> int:
    defaults = dict(case="brownian", alpha=0.9, T=1.0, steps=50, paths=1000,
                    degree=2, max_iter=10, tol=1e-6, seed=0, out="",
                    check=False, plot=False)
    p = resolve_params(args, ("bsde",), defaults)
    out = _prepare_out(p)
    spec = _bsde_case(p["case"], p["T"])
    grid = mc.TimeGrid(p["T"], p["steps"])
    ensemble = mc.sample_ensemble(p["alpha"], grid, standard_normal_measure(0.0),
                                  p["seed"], p["paths"])
    solution, history = bsde_mod.picard_solve(spec, ensemble, p["degree"],
                                              p["max_iter"], p["tol"])
    stacked = stack_bundles(ensemble)
    x_oracle, u_oracle = _bsde_oracle(p["case"], stacked.e, stacked.delta_b)
    rms_x = float(np.sqrt(np.mean((solution.x_paths - x_oracle) ** 2)))
    rms_u = float(np.sqrt(np.mean((solution.u_paths - u_oracle) ** 2)))
    print(f"picard: {solution.n} iterations, converged={solution.converged}, "
          f"rms_x={rms_x:.4g}, rms_u={rms_u:.4g}")
    if out:
        write_csv(os.path.join(out, "bsde_history.csv"),
                  ("iteration", "diff_norm"),
                  [(k + 2, v) for k, v in enumerate(history)])
        t = grid.t
        write_csv(os.path.join(out, "bsde_solution.csv"),
                  ("t", "x_mean", "u_mean"),
                  zip(t, solution.x_paths.mean(axis=0),
                      np.append(solution.u_paths.mean(axis=0), np.nan)))
        if p["plot"] and history:
            write_svg(os.path.join(out, "bsde_history.svg"),
                      svg_line_plot(np.arange(2, 2 + len(history)),
                                    {"diff_norm": np.asarray(history)},
                                    "picard contraction", "iteration"))
        echo_config(out, ("bsde",), p)
    if p["check"]:
        if not solution.converged:
            raise CheckFailure("picard iteration did not converge")
        if rms_x > 0.05 or rms_u > 0.05:
            raise CheckFailure(f"rms error too large: x {rms_x:.4g}, u {rms_u:.4g}")
    return 0


def cmd_example(args) -> int:
    defaults = dict(figure="fig2", seed=7, steps=1000, T=1.0, out="",
                    plot=False, lam=float("nan"))
    p = resolve_params(args, ("example",), defaults)
    out = _prepare_out(p)
    if not out:
        raise ParameterError("example needs --out")
    if not np.isnan(p["lam"]):
        # exploratory override of the printed preset
        preset = dict(problems.FIGURE_PRESETS[p["figure"]])
        if preset["problem"] != "regulator":
            raise ParameterError("--lam only applies to regulator figures")
        config = problems.RegulatorConfig(lam=p["lam"], sigma=preset["sigma"],
                                          x0=preset["x0"], alpha=preset["alpha"],
                                          horizon=p["T"])
        rng = master_stream(p["seed"])
        t_grid = np.linspace(0.0, p["T"], p["steps"] + 1)
        bundle = make_bundle(config.alpha, t_grid, config.jump_spec, rng)
        control = problems.regulator_control(config, float(bundle.e_values[-1]))
        path = simulate_forward(problems.regulator_problem(config), control,
                                bundle, config.x0)
        table = problems.FigureTable(name=p["figure"], preset=preset,
                                     t=path.t_grid, e=path.e_values,
                                     x=path.x_values, u_star=path.u_values)
    else:
        table = problems.reproduce_figure(p["figure"], p["seed"], p["steps"], p["T"])
    write_csv(os.path.join(out, f"{table.name}.csv"), table.HEADER, table.rows())
    if table.stopped_at is not None:
        print(f"stopped at index {table.stopped_at}")
    if p["plot"]:
        write_svg(os.path.join(out, f"{table.name}.svg"),
                  svg_line_plot(table.t, {"u_star": table.u_star, "E_t": table.e},
                                f"{table.name}: optimal control sample", "t"))
    echo_config(out, ("example",), p)
    return 0


def cmd_evaluate_estimate(args) -> int:
    defaults = dict(example="regulator", alpha=0.9, T=1.0, steps=200,
                    paths=2000, seed=0, out="", control="optimal", plot=False)
    p = resolve_params(args, ("evaluate", "estimate"), defaults)
    out = _prepare_out(p)
    cfg_params = dict(problem=p["example"], lam=-0.5, sigma=1.0, delta=-0.001,
                      theta=1.0, alpha=p["alpha"], T=p["T"],
                      x0=-0.01 if p["example"] == "regulator" else 1.0)
    config, problem, stop_rule = _build_problem(cfg_params)
    grid = mc.TimeGrid(p["T"], p["steps"])
    ensemble = mc.sample_ensemble(p["alpha"], grid, problem.jump_spec,
                                  p["seed"], p["paths"])
    e_T = np.array([b.e_values[-1] for b in ensemble])
    control = _control_for(config, p["control"], e_T=e_T)
    est = mc.estimate_performance(problem, control, cfg_params["x0"], p["alpha"],
                                  grid, p["paths"], p["seed"], stop_rule,
                                  ensemble=ensemble)
    print(f"J({p['control']}) = {est.mean:.6g} +- {est.stderr:.3g} "
          f"({est.n_paths} paths, {est.n_excluded} excluded, sense={est.sense})")
    if out:
        write_csv(os.path.join(out, "estimate.csv"),
                  ("control_id", "mean", "stderr", "n_paths", "n_excluded", "sense"),
                  [(p["control"], est.mean, est.stderr, est.n_paths,
                    est.n_excluded, est.sense)])
        echo_config(out, ("evaluate", "estimate"), p)
    return 0


def cmd_evaluate_compare(args) -> int:
    defaults = dict(example="regulator", alpha=0.9, T=1.0, steps=200,
                    paths=10000, seed=1, out="", check=False, plot=False)
    p = resolve_params(args, ("evaluate", "compare"), defaults)
    if p["example"] != "regulator":
        raise ParameterError("ordering comparison is defined for the regulator example")
    out = _prepare_out(p)
    config = problems.RegulatorConfig(lam=-0.5, sigma=1.0, x0=-0.01,
                                      alpha=p["alpha"], horizon=p["T"])
    problem = problems.regulator_problem(config)
    grid = mc.TimeGrid(p["T"], p["steps"])
    ensemble = mc.sample_ensemble(p["alpha"], grid, problem.jump_spec,
                                  p["seed"], p["paths"])
    e_T = np.array([b.e_values[-1] for b in ensemble])
    base = problems.regulator_control(config, e_T)
    labels, alts = mc.perturbation_family(base, p["T"])
    labels = ["optimal"] + labels + ["zero"]
    alts = alts + [ControlSignal.constant(0.0)]
    report = mc.compare_controls(problem, base, alts, config.x0, p["alpha"],
                                 grid, p["paths"], p["seed"], labels,
                                 ensemble=ensemble)
    for row in report.rows:
        print(f"{row.control_id:>12}: J = {row.mean:.6g} +- {row.stderr:.3g}  "
              f"diff {row.paired_diff_vs_base:+.6g} +- {row.paired_stderr:.3g}  "
              f"{row.verdict}")
    if out:
        write_csv(os.path.join(out, "compare.csv"),
                  ("control_id", "mean", "stderr", "paired_diff_vs_base",
                   "paired_stderr", "verdict"),
                  [(r.control_id, r.mean, r.stderr, r.paired_diff_vs_base,
                    r.paired_stderr, r.verdict) for r in report.rows])
        echo_config(out, ("evaluate", "compare"), p)
    if p["check"] and not report.all_pass:
        raise CheckFailure("optimality ordering violated for at least one control")
    return 0


# ------------------------------------------------------------------ parser

def _add_common(sp, *names):
    flags = {
        "seed": lambda: sp.add_argument("--seed", type=int),
        "alpha": lambda: sp.add_argument("--alpha", type=float),
        "paths": lambda: sp.add_argument("--paths", type=int),
        "steps": lambda: sp.add_argument("--steps", type=int),
        "T": lambda: sp.add_argument("--T", type=float),
        "out": lambda: sp.add_argument("--out", type=str),
        "plot": lambda: sp.add_argument("--plot", action="store_const", const=True),
        "check": lambda: sp.add_argument("--check", action="store_const", const=True),
        "config": lambda: sp.add_argument("--config", type=str),
    }
    for n in names:
        flags[n]()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subdiff",
        description="Simulation and verification toolkit for controlled "
                    "SDEs under inverse-stable time changes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sub = sub.add_parser("subordinator", help="simulate D/E or print moments")
    ssub = p_sub.add_subparsers(dest="action", required=True)
    s_sim = ssub.add_parser("simulate")
    _add_common(s_sim, "seed", "alpha", "steps", "T", "out", "plot", "config")
    s_sim.add_argument("--scale", type=float)
    s_sim.add_argument("--step", type=float, help="operational-time resolution")
    s_sim.set_defaults(handler=cmd_subordinator_simulate)
    s_mom = ssub.add_parser("moments")
    _add_common(s_mom, "alpha", "out", "config")
    s_mom.add_argument("--t", type=float)
    s_mom.add_argument("--n", type=int)
    s_mom.set_defaults(handler=cmd_subordinator_moments)

    p_sde = sub.add_parser("sde", help="forward-simulate a built-in problem")
    _add_common(p_sde, "seed", "alpha", "steps", "T", "out", "plot", "config")
    p_sde.add_argument("--problem", choices=("regulator", "consumption"))
    p_sde.add_argument("--control", type=str,
                       help="optimal | zero | const:<value>")
    p_sde.add_argument("--x0", type=float)
    p_sde.add_argument("--lam", type=float)
    p_sde.add_argument("--sigma", type=float)
    p_sde.add_argument("--delta", type=float)
    p_sde.add_argument("--theta", type=float)
    p_sde.set_defaults(handler=cmd_sde)

    p_ito = sub.add_parser("ito-check", help="grid-refinement check of the "
                                             "change-of-variables residual")
    _add_common(p_ito, "seed", "alpha", "steps", "T", "paths", "out", "check",
                "plot", "config")
    p_ito.set_defaults(handler=cmd_ito_check)

    p_bsde = sub.add_parser("bsde", help="Picard-solve a built-in backward case")
    _add_common(p_bsde, "seed", "alpha", "steps", "T", "paths", "out", "check",
                "plot", "config")
    p_bsde.add_argument("--case", choices=("constant", "brownian", "linear"))
    p_bsde.add_argument("--degree", type=int)
    p_bsde.add_argument("--max-iter", dest="max_iter", type=int)
    p_bsde.add_argument("--tol", type=float)
    p_bsde.set_defaults(handler=cmd_bsde)

    p_ex = sub.add_parser("example", help="reproduce a figure trajectory")
    p_ex.add_argument("figure", choices=sorted(problems.FIGURE_PRESETS))
    _add_common(p_ex, "seed", "steps", "T", "out", "plot", "config")
    p_ex.add_argument("--lam", type=float, help="override the preset gain parameter")
    p_ex.set_defaults(handler=cmd_example)

    p_ev = sub.add_parser("evaluate", help="Monte Carlo performance tools")
    esub = p_ev.add_subparsers(dest="action", required=True)
    e_est = esub.add_parser("estimate")
    _add_common(e_est, "seed", "alpha", "steps", "T", "paths", "out", "plot", "config")
    e_est.add_argument("--example", choices=("regulator", "consumption"))
    e_est.add_argument("--control", type=str)
    e_est.set_defaults(handler=cmd_evaluate_estimate)
    e_cmp = esub.add_parser("compare")
    _add_common(e_cmp, "seed", "alpha", "steps", "T", "paths", "out", "check",
                "plot", "config")
    e_cmp.add_argument("--example", choices=("regulator",))
    e_cmp.set_defaults(handler=cmd_evaluate_compare)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
