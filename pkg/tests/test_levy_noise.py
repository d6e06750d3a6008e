"""Noise bundle sampling and compensated jump integration."""
import numpy as np
import pytest

from subdiff import (DiscreteJumps, InversePath, JumpMeasureSpec, ParameterError,
                     StableParams, compensated_integral, inverse_moment,
                     inverse_on_grid, measure_integral, sample_noise,
                     standard_normal_measure)
from subdiff.levy_noise import make_bundle
from subdiff.rng import master_stream, path_stream


def _inverse(alpha=0.9, n=100, seed=1, horizon=1.0):
    t = np.linspace(0.0, horizon, n + 1)
    return inverse_on_grid(StableParams(alpha), t, 0.002, master_stream(seed))


def test_spec_validation():
    with pytest.raises(ParameterError):
        JumpMeasureSpec(total_mass=-1.0)
    with pytest.raises(ParameterError):
        JumpMeasureSpec(total_mass=np.inf)
    with pytest.raises(ParameterError):
        JumpMeasureSpec(truncation_c=0.0)
    with pytest.raises(ParameterError):
        JumpMeasureSpec(sampler="cauchy")
    with pytest.raises(ParameterError):
        DiscreteJumps(values=(1.0, 2.0), probs=(0.5, 0.6))


def test_flat_steps_carry_no_noise():
    inv = InversePath(t_grid=np.array([0.0, 0.5, 1.0, 1.5]),
                      e_values=np.array([0.1, 0.1, 0.4, 0.4]))
    bundle = sample_noise(inv, standard_normal_measure(5.0), master_stream(2))
    assert bundle.delta_b[0] == 0.0 and bundle.delta_b[2] == 0.0
    assert bundle.jumps.at(0).size == 0 and bundle.jumps.at(2).size == 0


def test_brownian_variance_is_time_change():
    # Var(sum dB | E path) = sum dE = E_T - E_0 by construction
    inv = _inverse(seed=5)
    spec = standard_normal_measure(0.0)
    total = inv.e_values[-1] - inv.e_values[0]
    sums = np.empty(3000)
    for i in range(sums.size):
        sums[i] = sample_noise(inv, spec, path_stream(7, i)).delta_b.sum()
    var = sums.var(ddof=1)
    se = var * np.sqrt(2.0 / (sums.size - 1))  # chi-square variance of variance
    assert abs(var - total) < 4.0 * se
    assert np.allclose(np.diff(inv.e_values), sample_noise(
        inv, spec, master_stream(0)).delta_e)


def test_expected_jump_count_matches_moment_oracle():
    # E[#jumps on [0,T]] = total_mass * E[E_T]; alpha=0.9, T=1
    alpha, mass = 0.9, 1.0
    t = np.linspace(0.0, 1.0, 51)
    counts = np.empty(4000)
    for i in range(counts.size):
        b = make_bundle(alpha, t, standard_normal_measure(mass), path_stream(31, i))
        counts[i] = b.jumps.values.size
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - mass * inverse_moment(1, 1.0, alpha)) < 3.0 * se


def test_pooled_increments_are_gaussian():
    # dB/sqrt(dE) pooled over moving steps: kurtosis ~ 3
    pooled = []
    inv = _inverse(seed=9, n=200)
    for i in range(200):
        b = sample_noise(inv, standard_normal_measure(0.0), path_stream(13, i))
        live = b.delta_e > 0
        pooled.append(b.delta_b[live] / np.sqrt(b.delta_e[live]))
    z = np.concatenate(pooled)
    kurt = np.mean(z ** 4) / np.mean(z ** 2) ** 2
    se = np.sqrt(24.0 / z.size)  # asymptotic se of sample kurtosis under normality
    assert abs(kurt - 3.0) < 4.0 * se


def test_martingale_property_of_compensated_integral():
    # gamma(y) = y against a symmetric measure: totals average to zero
    spec = standard_normal_measure(2.0)
    gamma = lambda t, e, x, u, y: y
    totals = np.empty(2000)
    t = np.linspace(0.0, 1.0, 51)
    for i in range(totals.size):
        b = make_bundle(0.8, t, spec, path_stream(3, i))
        acc = 0.0
        for k in range(b.delta_e.size):
            acc += compensated_integral(gamma, (t[k], b.e_values[k], 0.0, 0.0),
                                        b.jumps.at(k), b.delta_e[k], spec)
        totals[i] = acc
    se = totals.std(ddof=1) / np.sqrt(totals.size)
    assert abs(totals.mean()) < 3.0 * se


def test_compensated_integral_closed_forms():
    spec = standard_normal_measure(1.0)
    state = (0.0, 0.3, 1.5, 0.0)
    # gamma == 0 -> 0
    assert compensated_integral(lambda t, e, x, u, y: 0.0 * y, state,
                                np.array([0.4, -0.2]), 0.5, spec) == 0.0
    # gamma(y) = y: compensator vanishes by symmetry; output is the jump sum
    out = compensated_integral(lambda t, e, x, u, y: y, state,
                               np.array([0.4, -0.2]), 0.5, spec)
    assert out == pytest.approx(0.2, abs=1e-12)
    # gamma(y) = y^2: compensator per step is delta_e * int y^2 nu(dy) = delta_e
    out = compensated_integral(lambda t, e, x, u, y: y ** 2, state,
                               np.array([]), 0.5, spec)
    assert out == pytest.approx(-0.5, abs=1e-12)


def test_measure_integral_quadrature_and_discrete():
    spec = standard_normal_measure(3.0)
    assert measure_integral(spec, lambda y: y ** 2) == pytest.approx(3.0, abs=1e-10)
    assert measure_integral(spec, lambda y: y ** 3) == pytest.approx(0.0, abs=1e-10)
    assert measure_integral(spec, lambda y: y ** 4) == pytest.approx(9.0, abs=1e-9)
    assert spec.second_moment == pytest.approx(3.0, abs=1e-10)
    disc = JumpMeasureSpec(DiscreteJumps(values=(-1.0, 2.0), probs=(0.5, 0.5)),
                           total_mass=2.0)
    assert measure_integral(disc, lambda y: y) == pytest.approx(1.0, abs=1e-14)
    assert disc.second_moment == pytest.approx(5.0, abs=1e-14)


def test_truncated_normal_sampling_and_integral():
    spec = JumpMeasureSpec("standard_normal", total_mass=1.0, truncation_c=1.0)
    # all sampled sizes respect |y| < c
    inv = _inverse(seed=21)
    b = sample_noise(inv, spec, master_stream(4))
    if b.jumps.values.size:
        assert np.all(np.abs(b.jumps.values) < 1.0)
    # int y^2 over truncated, renormalized normal: 1 - 2 c phi(c) / (2 Phi(c) - 1)
    c = 1.0
    phi = np.exp(-0.5 * c * c) / np.sqrt(2 * np.pi)
    from scipy.stats import norm
    expected = 1.0 - 2.0 * c * phi / (2.0 * norm.cdf(c) - 1.0)
    assert measure_integral(spec, lambda y: y ** 2) == pytest.approx(expected, abs=1e-8)
