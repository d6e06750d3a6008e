"""Euler scheme, generators, and the change-of-variables residual."""
import numpy as np
import pytest

from subdiff import (ControlProblem, ControlSignal, DivergenceError, ParameterError,
                     SmoothFn, StableParams, coarsen_bundle, generator_l1,
                     generator_l2, inverse_on_grid, ito_residual, sample_noise,
                     simulate_forward, stack_bundles, standard_normal_measure)
from subdiff.forward_sde import simulate_forward_stacked
from subdiff.levy_noise import make_bundle
from subdiff.rng import master_stream, path_stream

NO_JUMP = standard_normal_measure(0.0)


def constant_coeff(value):
    return lambda t, e, x, u: np.broadcast_to(float(value), np.shape(x))


def make_problem(mu=0.0, b=0.0, sigma=0.0, gamma_fn=None, spec=NO_JUMP, **kw):
    if gamma_fn is None:
        gamma_fn = lambda t, e, x, u, y: np.broadcast_to(
            0.0, np.broadcast_shapes(np.shape(x), np.shape(y)))
    return ControlProblem(
        mu=mu if callable(mu) else constant_coeff(mu),
        b=b if callable(b) else constant_coeff(b),
        sigma=sigma if callable(sigma) else constant_coeff(sigma),
        gamma=gamma_fn,
        f=constant_coeff(0.0), g=constant_coeff(0.0),
        h=lambda x: 0.0, h_x=lambda x: 0.0,
        jump_spec=spec, **kw)


def make_test_bundle(alpha=0.9, n=100, seed=1, horizon=1.0, spec=NO_JUMP):
    t = np.linspace(0.0, horizon, n + 1)
    return make_bundle(alpha, t, spec, master_stream(seed))


ZERO = ControlSignal.constant(0.0)


def test_zero_coefficients_keep_state_constant():
    bundle = make_test_bundle(seed=2)
    path = simulate_forward(make_problem(), ZERO, bundle, x0=1.7)
    assert np.all(path.x_values == 1.7)


def test_constant_dt_drift_integrates_exactly():
    bundle = make_test_bundle(seed=3)
    path = simulate_forward(make_problem(mu=1.0), ZERO, bundle, x0=0.5)
    assert np.allclose(path.x_values, 0.5 + path.t_grid, atol=1e-12)


def test_unit_de_drift_integrates_to_time_change():
    bundle = make_test_bundle(seed=4)
    path = simulate_forward(make_problem(b=1.0), ZERO, bundle, x0=0.25)
    expected = 0.25 + path.e_values - path.e_values[0]
    assert np.allclose(path.x_values, expected, atol=1e-12)


def test_divergence_raises_with_step_index():
    # explosive multiplicative dE drift overflows quickly
    bundle = make_test_bundle(seed=5, n=50)
    problem = make_problem(b=lambda t, e, x, u: 1e12 * x * x)
    with pytest.raises(DivergenceError) as err:
        simulate_forward(problem, ZERO, bundle, x0=10.0)
    assert err.value.step >= 0


def test_control_values_validated_against_set():
    bundle = make_test_bundle(seed=6, n=20)
    problem = make_problem(control_set=(0.0, 1.0))
    with pytest.raises(ParameterError):
        simulate_forward(problem, ControlSignal.constant(2.0), bundle, x0=0.0)


def test_stop_rule_freezes_state():
    bundle = make_test_bundle(seed=7, n=50)
    problem = make_problem(mu=-1.0)
    path = simulate_forward(problem, ZERO, bundle, x0=0.055,
                            stop_rule=lambda t, e, x: np.asarray(x) <= 0.0)
    k = path.stopped_at
    assert k is not None and path.x_values[k] <= 0.0
    assert np.all(path.x_values[k:] == path.x_values[k])
    assert np.all(path.u_values[k:] == 0.0)


def test_generators_closed_forms():
    x_sq = SmoothFn(value=lambda t1, t2, x: x * x)
    ident = SmoothFn(value=lambda t1, t2, x: x)
    point = (0.3, 0.2, 1.5)
    # F = x, mu = 0 -> L1 = 0
    assert generator_l1(ident, make_problem(), point) == pytest.approx(0.0, abs=1e-9)
    # F = x^2, sigma = 1 -> L2 = 1
    assert generator_l2(x_sq, make_problem(sigma=1.0), point) == pytest.approx(
        1.0, abs=1e-8)
    # F = x^2, gamma(y) = y against unit-mass standard normal: jump term = 1
    problem = make_problem(gamma_fn=lambda t, e, x, u, y: y,
                           spec=standard_normal_measure(1.0))
    assert generator_l2(x_sq, problem, point) == pytest.approx(1.0, abs=1e-8)
    # F = t1 -> L1 = 1
    t_only = SmoothFn(value=lambda t1, t2, x: t1)
    assert generator_l1(t_only, make_problem(), point) == pytest.approx(1.0, abs=1e-9)


def test_ito_residual_identity_for_state_function():
    # F = x reproduces the scheme identically, jumps included
    spec = standard_normal_measure(2.0)
    bundle = make_test_bundle(seed=8, n=80, spec=spec)
    problem = make_problem(b=1.0, sigma=0.7,
                           gamma_fn=lambda t, e, x, u, y: y, spec=spec)
    path = simulate_forward(problem, ZERO, bundle, x0=-0.2)
    ident = SmoothFn(value=lambda t1, t2, x: x,
                     d_t1=lambda *a: 0.0, d_t2=lambda *a: 0.0,
                     d_x=lambda *a: 1.0, d_xx=lambda *a: 0.0)
    assert abs(ito_residual(ident, problem, path, bundle)) < 1e-10


def test_ito_residual_time_function_exact():
    bundle = make_test_bundle(seed=9, n=40)
    problem = make_problem()
    path = simulate_forward(problem, ZERO, bundle, x0=0.0)
    t_only = SmoothFn(value=lambda t1, t2, x: t1, d_t1=lambda *a: 1.0,
                      d_t2=lambda *a: 0.0, d_x=lambda *a: 0.0, d_xx=lambda *a: 0.0)
    assert abs(ito_residual(t_only, problem, path, bundle)) < 1e-12


def test_ito_residual_refines_for_quadratic():
    # F = x^2, sigma-only dynamics: RMS residual drops by >= 1.3 per halving
    problem = make_problem(sigma=1.0)
    x_sq = SmoothFn(value=lambda t1, t2, x: x * x, d_t1=lambda *a: 0.0,
                    d_t2=lambda *a: 0.0, d_x=lambda t1, t2, x: 2 * x,
                    d_xx=lambda *a: 2.0)

    def rms(n_steps, seed, n_paths=300):
        t = np.linspace(0.0, 1.0, n_steps + 1)
        acc = 0.0
        for i in range(n_paths):
            b = make_bundle(0.9, t, NO_JUMP, path_stream(seed, i),
                            op_step=1.0 / (4 * n_steps))
            p = simulate_forward(problem, ZERO, b, x0=0.0)
            acc += ito_residual(x_sq, problem, p, b) ** 2
        return np.sqrt(acc / n_paths)

    assert rms(40, 11) / rms(80, 12) >= 1.3


def test_strong_refinement_against_common_noise():
    # dX = X dE: coarse vs fine solutions driven by the same refined noise
    problem = make_problem(b=lambda t, e, x, u: x)

    def gap(n_fine, seed, n_paths=100):
        t_fine = np.linspace(0.0, 1.0, n_fine + 1)
        diffs = np.empty(n_paths)
        for i in range(n_paths):
            fine = make_bundle(0.8, t_fine, NO_JUMP, path_stream(seed, i),
                               op_step=0.25 / n_fine)
            coarse = coarsen_bundle(fine, 2)
            xf = simulate_forward(problem, ZERO, fine, 1.0).x_values[-1]
            xc = simulate_forward(problem, ZERO, coarse, 1.0).x_values[-1]
            diffs[i] = xf - xc
        return np.sqrt(np.mean(diffs ** 2))

    assert gap(128, 21) < gap(32, 21)


def test_lipschitz_stability_bound():
    # identical noise, two starting points: growth bounded by exp(K(T + E_T))
    k1, k2 = 0.5, 0.8
    problem = make_problem(mu=lambda t, e, x, u: k1 * x,
                           b=lambda t, e, x, u: k2 * x, sigma=0.3,
                           lipschitz_K=k2 ** 2)
    bundle = make_test_bundle(seed=13, n=200, alpha=0.8)
    xa = simulate_forward(problem, ZERO, bundle, 1.0).x_values
    xb = simulate_forward(problem, ZERO, bundle, 1.5).x_values
    diff = np.abs(xa - xb)
    kappa = max(k1, k2)
    t_span = bundle.t_grid[-1] - bundle.t_grid[0]
    e_span = bundle.e_values[-1] - bundle.e_values[0]
    assert diff.max() <= 0.5 * np.exp(kappa * (t_span + e_span)) + 1e-12


def test_stacked_matches_single_path():
    spec = standard_normal_measure(1.5)
    bundles = [make_bundle(0.85, np.linspace(0, 1, 61), spec, path_stream(5, i))
               for i in range(4)]
    problem = make_problem(mu=0.2, b=lambda t, e, x, u: 0.5 * x, sigma=0.4,
                           gamma_fn=lambda t, e, x, u, y: 0.1 * x * y, spec=spec)
    control = ControlSignal.feedback(lambda t, e, x: 0.3 * x)
    stacked = stack_bundles(bundles)
    xs, us, _, _ = simulate_forward_stacked(problem, control, stacked, 1.0)
    for i, b in enumerate(bundles):
        path = simulate_forward(problem, control, b, 1.0)
        assert np.allclose(path.x_values, xs[i], atol=1e-12)
        assert np.allclose(path.u_values, us[i], atol=1e-12)


def test_bundle_spec_mismatch_is_rejected():
    bundle = make_test_bundle(seed=1, spec=standard_normal_measure(1.0))
    problem = make_problem(spec=standard_normal_measure(2.0))
    with pytest.raises(ParameterError):
        simulate_forward(problem, ZERO, bundle, 0.0)
