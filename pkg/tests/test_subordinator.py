"""Law and inversion tests for the stable subordinator and its inverse."""
import numpy as np
import pytest
from scipy.special import gamma as gamma_fn
from scipy.stats import levy

from subdiff import (InversePath, OperationalGrid, ParameterError, StableParams,
                     SubordinatorPath, InsufficientPathError, inverse_moment,
                     inverse_on_grid, invert_subordinator, simulate_covering_path,
                     simulate_subordinator, stable_increments)
from subdiff.rng import master_stream, path_stream


def test_params_domain():
    with pytest.raises(ParameterError):
        StableParams(alpha=1.0)
    with pytest.raises(ParameterError):
        StableParams(alpha=0.0)
    with pytest.raises(ParameterError):
        StableParams(alpha=0.5, scale=0.0)
    with pytest.raises(ParameterError):
        OperationalGrid(step=0.0, n_steps=10)
    with pytest.raises(ParameterError):
        OperationalGrid(step=0.1, n_steps=0)


def test_path_starts_at_zero_and_is_nondecreasing():
    rng = master_stream(11)
    path = simulate_subordinator(StableParams(0.7), OperationalGrid(0.01, 500), rng)
    assert path.d_values[0] == 0.0
    assert np.all(np.diff(path.d_values) > 0.0)  # stable increments are a.s. positive
    assert path.tau.size == 501


@pytest.mark.parametrize("alpha", [0.5, 0.9])
def test_laplace_transform_of_d1(alpha):
    # E[exp(-lam * D(1))] = exp(-lam**alpha); D(1) is a single unit-time draw
    rng = master_stream(101)
    d1 = stable_increments(StableParams(alpha), 1.0, 20_000, rng)
    for lam in (0.5, 1.0, 2.0):
        samples = np.exp(-lam * d1)
        se = samples.std(ddof=1) / np.sqrt(samples.size)
        assert abs(samples.mean() - np.exp(-lam ** alpha)) < 3.0 * se


def test_scale_parameter_enters_laplace_exponent():
    # E[exp(-lam D(t))] = exp(-t (c lam)^alpha)
    alpha, c, lam, t = 0.6, 2.0, 0.7, 1.0
    rng = master_stream(5)
    d = stable_increments(StableParams(alpha, scale=c), t, 40_000, rng)
    samples = np.exp(-lam * d)
    se = samples.std(ddof=1) / np.sqrt(samples.size)
    assert abs(samples.mean() - np.exp(-t * (c * lam) ** alpha)) < 3.0 * se


def test_half_stable_increment_median_matches_levy_oracle():
    # ORACLE: for alpha = 1/2 the unit-time draw has the Levy(scale=1/2)
    # law (E exp(-lam S) = exp(-sqrt(lam))); its median by inverse CDF:
    oracle = levy.ppf(0.5, scale=0.5)
    assert abs(oracle - 1.0990546691588663) < 1e-12  # frozen from the oracle
    rng = master_stream(42)
    dt = 0.01
    inc = stable_increments(StableParams(0.5), dt, 40_000, rng)
    med = np.median(inc / dt ** 2)
    # stderr of a sample median ~ 1/(2 f(m) sqrt(n)) with f the Levy density
    f_med = levy.pdf(oracle, scale=0.5)
    se_med = 1.0 / (2.0 * f_med * np.sqrt(inc.size))
    assert abs(med - oracle) < 4.0 * se_med


def test_invert_identity_double():
    # deterministic test double D(tau) = tau: E_t = t up to grid resolution
    step = 0.01
    tau = step * np.arange(2001)
    path = SubordinatorPath(tau=tau, d_values=tau.copy())
    t_grid = np.linspace(0.0, 10.0, 101)
    inv = invert_subordinator(path, t_grid)
    assert np.all(np.abs(inv.e_values - t_grid) <= step + 1e-12)
    assert np.all(np.diff(inv.e_values) >= 0.0)


def test_invert_jump_produces_plateau():
    # D jumps from a to a+J at tau*: E_t = tau* for all t in [a, a+J)
    tau = np.array([0.0, 1.0, 2.0, 3.0])
    d = np.array([0.0, 2.0, 2.5, 10.0])  # jump over (2.5, 10.0] at tau = 3
    path = SubordinatorPath(tau=tau, d_values=d)
    t_grid = np.array([2.6, 4.0, 7.0, 9.9])
    inv = invert_subordinator(path, t_grid)
    assert np.all(inv.e_values == 3.0)


def test_invert_requires_covering_path():
    path = SubordinatorPath(tau=np.array([0.0, 1.0]), d_values=np.array([0.0, 0.5]))
    with pytest.raises(InsufficientPathError):
        invert_subordinator(path, np.array([0.0, 0.6]))
    with pytest.raises(ParameterError):
        invert_subordinator(path, np.array([-0.1, 0.2]))


def test_covering_path_extends_automatically():
    rng = master_stream(3)
    # alpha=0.9 from a tiny initial block must still cover t=5
    path = simulate_covering_path(StableParams(0.9), 0.01, 5.0, rng, initial_steps=4)
    assert path.d_values[-1] > 5.0


def test_inverse_mean_matches_moment_oracle():
    alpha, t_star = 0.9, 1.0
    t_grid = np.array([0.0, t_star])
    vals = np.empty(4000)
    for i in range(vals.size):
        inv = inverse_on_grid(StableParams(alpha), t_grid, 0.005, path_stream(17, i))
        vals[i] = inv.e_values[-1]
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - inverse_moment(1, t_star, alpha)) < 3.0 * se


def test_inverse_moment_values():
    # n=2, t=1, alpha=0.5: 2! * 1 / Gamma(2) = 2 exactly
    assert inverse_moment(2, 1.0, 0.5) == pytest.approx(2.0, abs=1e-14)
    # n=1, t=1, alpha=0.9: 1/Gamma(1.9), numerical Gamma oracle
    assert inverse_moment(1, 1.0, 0.9) == pytest.approx(1.0 / gamma_fn(1.9), abs=1e-14)
    assert inverse_moment(1, 1.0, 0.9) == pytest.approx(1.0398, abs=2e-4)
    # alpha -> 1 the mean approaches t (Gamma(2) = 1)
    assert inverse_moment(1, 2.5, 0.999) == pytest.approx(2.5, rel=5e-3)


def test_inverse_moment_domain():
    for bad in [(0, 1.0, 0.5), (1, -1.0, 0.5), (1, 1.0, 1.0), (1, 1.0, 0.0)]:
        with pytest.raises(ParameterError):
            inverse_moment(*bad)


def test_plateau_fraction_decreases_with_alpha():
    # matched horizon and grid: time changes freeze more for smaller alpha
    t_grid = np.linspace(0.0, 1.0, 201)
    fracs = {}
    for alpha in (0.5, 0.9):
        vals = np.empty(150)
        for i in range(vals.size):
            inv = inverse_on_grid(StableParams(alpha), t_grid, 0.002,
                                  path_stream(23, i))
            vals[i] = np.mean(np.diff(inv.e_values) == 0.0)
        fracs[alpha] = (vals.mean(), vals.std(ddof=1) / np.sqrt(vals.size))
    gap = fracs[0.5][0] - fracs[0.9][0]
    se = np.hypot(fracs[0.5][1], fracs[0.9][1])
    assert gap > 3.0 * se
