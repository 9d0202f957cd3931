import math

import numpy as np
import pytest

from cascade_laser.analytic import steady_moments, transient_moments
from cascade_laser.dynamics import (
    decay_envelopes,
    integrate_moment_equations,
    integrate_moments,
    noise_strengths,
    sample_trajectories,
)
from cascade_laser.errors import StepSizeError, ThresholdError, UnsupportedPhaseError
from cascade_laser.model import LaserParams, compute_coefficients

from conftest import rel_err

SQUEEZED = LaserParams(1000.0, 0.2, 0.012, 0.0)
UNDRIVEN = LaserParams(0.33, 0.2, 0.0, 0.3)
# strongly antisqueezed point whose minus-quadrature noise strength is negative
NEGATIVE_NOISE = LaserParams(0.1, 0.2, 1.0, 1.0)


def rk4_step(p):
    c = compute_coefficients(p)
    return 0.01 / max(c.lambda_plus, c.mu, 1.0)


def test_zero_gain_stays_zero(backend):
    series = integrate_moments(LaserParams(0.0, 0.2, 1.0, 0.3), 10.0, 0.01, backend=backend)
    assert np.all(series.alpha_sq == 0) and np.all(series.occupancy == 0)
    assert np.all(series.mean_alpha == 0)


@pytest.mark.parametrize(
    "params",
    [LaserParams(0.33, 0.2, 1.0, 0.0), SQUEEZED, LaserParams(0.5, 0.3, 2.0, 0.8), LaserParams(0.1, 1.0, 3.0, -0.5)],
)
def test_ode_reaches_steady_state(params, backend):
    c = compute_coefficients(params)
    t_final = 40.0 / c.lambda_minus
    final = integrate_moments(params, t_final, rk4_step(params), backend=backend).final
    ss = steady_moments(params)
    assert rel_err(final.alpha_sq_plus, ss.alpha_sq_plus) < 1e-8
    assert rel_err(final.alpha_sq_minus, ss.alpha_sq_minus) < 1e-8
    assert abs(final.mean_alpha) == 0.0


def test_ode_matches_transient_along_the_way():
    p = LaserParams(0.33, 0.2, 1.0, 0.0)
    c = compute_coefficients(p)
    series = integrate_moments(p, 5.0 / c.lambda_minus, rk4_step(p), stride=50)
    for k in range(1, len(series)):
        ref = transient_moments(p, series.t[k])
        assert rel_err(series.alpha_sq_plus[k], ref.alpha_sq_plus) < 1e-8
        assert rel_err(series.alpha_sq_minus[k], ref.alpha_sq_minus) < 1e-8
    assert np.all(series.occupancy >= -1e-9)


@pytest.mark.parametrize("params", [LaserParams(0.33, 0.2, 1.0, 0.0), LaserParams(0.5, 0.3, 2.0, 0.8)])
def test_convergence_order(params):
    c = compute_coefficients(params)
    lam = max(c.lambda_plus, c.lambda_minus)
    t_final = 5.0 / c.lambda_minus
    ref = transient_moments(params, t_final).alpha_sq_plus
    errs = [
        rel_err(integrate_moments(params, t_final, h / lam).final.alpha_sq_plus, ref)
        for h in (0.5, 0.25, 0.125)
    ]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4.0) < 0.3), orders


def test_linearity_in_sources():
    base = integrate_moment_equations(0.5, 0.1, 0.3, 0.2, 30.0, 0.01).final
    doubled = integrate_moment_equations(0.5, 0.1, 0.6, 0.4, 30.0, 0.01).final
    assert np.isclose(doubled.alpha_sq_plus, 2 * base.alpha_sq_plus, rtol=1e-13)
    assert np.isclose(doubled.alpha_sq_minus, 2 * base.alpha_sq_minus, rtol=1e-13)


def test_nonzero_initial_mean_decays_by_envelopes():
    c = compute_coefficients(LaserParams(0.33, 0.2, 1.0, 0.5))
    t = 3.0
    series = integrate_moment_equations(c.mu, c.beta, 0.0, 0.0, t, 0.001, initial=(1.0 + 0.5j, 0.0, 0.0))
    a_plus, a_minus = decay_envelopes(c, t)
    alpha0 = 1.0 + 0.5j
    expected = a_plus * alpha0 + a_minus * alpha0.conjugate()
    assert np.isclose(series.final.mean_alpha, expected, rtol=1e-10)


def test_step_size_errors():
    p = LaserParams(0.33, 0.2, 1.0, 0.0)
    c = compute_coefficients(p)
    with pytest.raises(StepSizeError):
        integrate_moments(p, 10.0, 1.1 / c.lambda_plus)
    with pytest.raises(StepSizeError):
        integrate_moments(p, 10.0, 0.0)
    with pytest.raises(UnsupportedPhaseError):
        integrate_moments(p.with_(theta=1.0), 10.0, 0.01)


def test_backends_agree():
    from cascade_laser._backend import available_backends

    if len(available_backends()) < 2:
        pytest.skip("compiled backend not built")
    p = LaserParams(0.5, 0.3, 2.0, 0.8)
    runs = [integrate_moments(p, 20.0, 0.01, stride=10, backend=b) for b in ("compiled", "python")]
    assert np.allclose(runs[0].alpha_sq, runs[1].alpha_sq, rtol=1e-13, atol=0)
    assert np.allclose(runs[0].occupancy, runs[1].occupancy, rtol=1e-13, atol=0)


@pytest.mark.parametrize("stride", [1, 7, 64])
def test_terminal_row_is_final_time(stride, backend):
    p = LaserParams(0.33, 0.2, 1.0, 0.0)
    series = integrate_moments(p, 3.0, 0.01, stride=stride, backend=backend)
    assert series.t[-1] == pytest.approx(3.0, abs=1e-12)
    ref = transient_moments(p, 3.0)
    assert rel_err(series.final.alpha_sq_plus, ref.alpha_sq_plus) < 1e-8


def test_rows_layout():
    series = integrate_moments(LaserParams(0.33, 0.2, 1.0, 0.0), 1.0, 0.01, stride=10)
    rows = list(series.rows())
    assert len(rows) == len(series) == 11
    assert len(rows[0]) == len(series.COLUMNS)
    assert rows[0][0] == 0.0


def test_decay_envelope_examples():
    c = compute_coefficients(LaserParams(0.33, 0.2, 1.0, 0.5))
    assert decay_envelopes(c, 0.0) == (1.0, 0.0)
    c0 = compute_coefficients(LaserParams(0.33, 0.2, 0.0, 0.5))
    assert decay_envelopes(c0, 7.0)[1] == 0.0
    from dataclasses import replace

    fake = replace(c, lambda_minus=0.5, lambda_plus=1.5)
    a_plus, a_minus = decay_envelopes(fake, 2.0)
    assert np.isclose(a_plus, 0.5 * (math.exp(-0.5) + math.exp(-1.5)))
    assert np.isclose(a_minus, 0.5 * (math.exp(-0.5) - math.exp(-1.5)))


def test_noise_strength_values():
    s_plus, s_minus = noise_strengths(compute_coefficients(SQUEEZED))
    assert s_plus > 0 and s_minus > 0
    assert np.isclose(s_minus, 23.78, rtol=1e-3)
    _, s_minus = noise_strengths(compute_coefficients(NEGATIVE_NOISE))
    assert s_minus < 0


def test_silent_point_has_no_noise():
    stats = sample_trajectories(LaserParams(0.5, 0.2, 0.0, 1.0), 100, 5.0, seed=1)
    assert stats.noise_sq_plus == 0.0 and stats.noise_sq_minus == 0.0
    assert stats.alpha_sq_plus == 0.0 and stats.alpha_sq_minus == 0.0


@pytest.mark.parametrize("params", [UNDRIVEN, SQUEEZED, NEGATIVE_NOISE])
def test_sampler_matches_analytic(params):
    c = compute_coefficients(params)
    t_final = 30.0 / c.lambda_minus
    stats = sample_trajectories(params, 10_000, t_final, seed=7)
    ref = transient_moments(params, t_final)
    z_plus, z_minus = stats.z_scores(ref.alpha_sq_plus, ref.alpha_sq_minus)
    assert abs(z_plus) < 3 and abs(z_minus) < 3


def test_imaginary_noise_reproduces_negative_moment():
    c = compute_coefficients(NEGATIVE_NOISE)
    stats = sample_trajectories(NEGATIVE_NOISE, 10_000, 30.0 / c.lambda_minus, seed=3)
    assert stats.noise_sq_minus < 0
    assert steady_moments(NEGATIVE_NOISE).alpha_sq_minus < 0
    assert stats.alpha_sq_minus < 0


def test_sampler_means_vanish():
    c = compute_coefficients(UNDRIVEN)
    stats = sample_trajectories(UNDRIVEN, 4000, 30.0 / c.lambda_minus, seed=11)
    assert abs(stats.mean_alpha_plus) < 3 * stats.mean_alpha_plus_se
    assert abs(stats.mean_alpha_minus) < 3 * stats.mean_alpha_minus_se


def test_seed_determinism_and_worker_independence():
    kw = dict(n_traj=3000, t_final=5.0, seed=42, chunk_size=500)
    a = sample_trajectories(UNDRIVEN, **kw)
    b = sample_trajectories(UNDRIVEN, **kw)
    c = sample_trajectories(UNDRIVEN, workers=3, **kw)
    for other in (b, c):
        assert a.alpha_sq_plus == other.alpha_sq_plus
        assert a.alpha_sq_minus_se == other.alpha_sq_minus_se
    d = sample_trajectories(UNDRIVEN, **dict(kw, seed=43))
    assert d.alpha_sq_plus != a.alpha_sq_plus


def test_standard_error_scaling():
    small = sample_trajectories(UNDRIVEN, 2000, 20.0, seed=5)
    large = sample_trajectories(UNDRIVEN, 4000, 20.0, seed=6)
    ratio = small.alpha_sq_plus_se / large.alpha_sq_plus_se
    assert math.sqrt(2) / 1.5 < ratio < math.sqrt(2) * 1.5


def test_recorded_series():
    stats = sample_trajectories(UNDRIVEN, 500, 2.0, step=0.01, seed=1, record_every=50)
    assert stats.times.shape == (5,) and stats.series.shape == (5, 4)
    assert stats.series[0, 0] == 0.0
    assert stats.series[-1, 0] == stats.alpha_sq_plus


def test_sampler_errors():
    with pytest.raises(ThresholdError):
        sample_trajectories(LaserParams(0.99, 0.2, 3.5, 1.0), 10, 1.0)
    with pytest.raises(StepSizeError):
        sample_trajectories(UNDRIVEN, 10, 1.0, step=10.0)
    with pytest.raises(ValueError):
        sample_trajectories(UNDRIVEN, 0, 1.0)
