import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_laser.analytic import (
    QuadratureMoments,
    closed_form_alpha_sq,
    closed_form_mean_photon,
    closed_form_variances,
    mean_photon_balanced_literal,
    mean_photon_special,
    squeezing_percent,
    steady_moments,
    steady_quadrature,
    transient_moments,
    variance_balanced,
    variance_balanced_literal,
    variance_ground,
    variance_undriven,
)
from cascade_laser.errors import ThresholdError, UnsupportedPhaseError
from cascade_laser.model import LaserParams, compute_coefficients, max_stable_gain

from conftest import conditioning, laser_params, rel_err

HEADLINE = LaserParams(1000.0, 0.2, 0.012, 0.0)
ONSET = (3.0 + math.sqrt(17.0)) / 2.0

# 40-digit mpmath evaluations of the coefficient-level moments, frozen.
FROZEN = [
    (HEADLINE, 163.9678525584388, 0.017190930957897287, 40.496260872349173),
    (LaserParams(0.33, 0.2, 1.0, 0.5), 1.5493558269906423, 0.94290354800876846, 0.12306484374985268),
    (LaserParams(0.5, 0.2, 1.0, 0.3), 1.9147022248461956, 0.83024465675498629, 0.18623672040029548),
    (LaserParams(0.99, 0.2, 10.5, 1.0), 196.78183962264151, 0.65615925906372323, 48.859499720426308),
]


@pytest.mark.parametrize("params, var_plus, var_minus, nbar", FROZEN)
def test_frozen_steady_values(params, var_plus, var_minus, nbar):
    m = steady_moments(params)
    assert np.isclose(m.var_plus, var_plus, rtol=1e-11)
    assert np.isclose(m.var_minus, var_minus, rtol=1e-11)
    assert np.isclose(m.mean_photon, nbar, rtol=1e-11)


def test_headline_squeezing():
    m = steady_moments(HEADLINE)
    assert m.var_minus == pytest.approx(0.0172, abs=5e-5)
    assert squeezing_percent(m.var_minus) == pytest.approx(98.3, abs=0.05)


def test_ground_far_drive_minus_quadrature():
    # at A = 0.99 the plus quadrature is unstable at this drive, the squeezed one is not
    p = LaserParams(0.99, 0.2, 10.1, 1.0)
    with pytest.raises(ThresholdError):
        steady_moments(p)
    var_minus = 1.0 - steady_quadrature(p, "minus")
    assert np.isclose(var_minus, 0.65544654782082872, rtol=1e-11)
    assert var_minus == pytest.approx(0.655, abs=0.01)


def test_steady_quadrature_matches_full_steady_state():
    p = LaserParams(0.33, 0.2, 1.0, 0.5)
    m = steady_moments(p)
    assert steady_quadrature(p, "plus") == m.alpha_sq_plus
    assert steady_quadrature(p, "minus") == m.alpha_sq_minus
    with pytest.raises(ValueError):
        steady_quadrature(p, "sideways")


@pytest.mark.parametrize("a, kappa", [(0.1, 0.2), (5.0, 1.0), (1000.0, 0.2)])
def test_ground_undriven_is_vacuum(a, kappa):
    m = steady_moments(LaserParams(a, kappa, 0.0, 1.0))
    assert m.var_plus == 1.0 and m.var_minus == 1.0
    assert m.mean_photon == 0.0


def test_mean_photon_undriven_balanced():
    assert steady_moments(LaserParams(0.3, 0.2, 0.0, 0.0)).mean_photon == pytest.approx(0.75, abs=1e-15)


def test_threshold_and_phase_errors():
    with pytest.raises(ThresholdError) as info:
        steady_moments(LaserParams(0.99, 0.2, 3.5, 1.0))
    assert info.value.lambda_minus < 0.0
    with pytest.raises(UnsupportedPhaseError):
        steady_moments(LaserParams(0.3, 0.2, 1.0, 0.0, theta=0.5))


def test_stored_relations_exact():
    m = steady_moments(LaserParams(0.5, 0.2, 1.0, 0.3))
    assert m.var_plus == 1.0 + m.alpha_sq_plus
    assert m.var_minus == 1.0 - m.alpha_sq_minus
    assert m.mean_photon == (m.alpha_sq_plus - m.alpha_sq_minus) / 4.0
    assert QuadratureMoments.from_alpha_sq(0.2, 0.1).as_dict()["var_minus"] == 0.9


@settings(max_examples=400)
@given(laser_params())
def test_route_equivalence(p):
    m = steady_moments(p)
    plus, minus = closed_form_alpha_sq(p)
    vp, vm = closed_form_variances(p)
    tol = 1e-10 * conditioning(p)
    assert abs(m.alpha_sq_plus - plus) <= tol * max(abs(plus), 1.0)
    assert abs(m.alpha_sq_minus - minus) <= tol * max(abs(minus), 1.0)
    assert abs(m.var_plus - vp) <= tol * max(abs(vp), 1.0)
    assert abs(m.var_minus - vm) <= tol * max(abs(m.alpha_sq_minus), 1.0)
    n4 = closed_form_mean_photon(p)
    assert abs(m.mean_photon - n4) <= tol * max(abs(m.alpha_sq_plus), abs(m.alpha_sq_minus), 1.0)


@settings(max_examples=300)
@given(laser_params(omega=0.0))
def test_reduction_undriven(p):
    vp, vm = variance_undriven(p.gain_a, p.kappa, p.eta)
    m = steady_moments(p)
    tol = 1e-12 * conditioning(p) * max(vp, 1.0)
    assert abs(m.var_plus - vp) <= tol
    assert abs(m.var_minus - vm) <= tol
    n = mean_photon_special(p.gain_a, p.kappa, "undriven", eta=p.eta)
    assert abs(m.mean_photon - n) <= 100 * tol


@settings(max_examples=300)
@given(laser_params(eta=1.0))
def test_reduction_ground(p):
    vp, vm = variance_ground(p.gain_a, p.kappa, p.omega)
    m = steady_moments(p)
    scale = max(abs(m.alpha_sq_plus), abs(m.alpha_sq_minus), 1.0) * conditioning(p)
    assert abs(m.var_plus - vp) <= 1e-12 * scale
    assert abs(m.var_minus - vm) <= 1e-12 * scale
    n = mean_photon_special(p.gain_a, p.kappa, "ground", omega=p.omega)
    assert abs(m.mean_photon - n) <= 1e-10 * scale


@settings(max_examples=300)
@given(laser_params(eta=0.0))
def test_reduction_balanced(p):
    vp, vm = variance_balanced(p.gain_a, p.kappa, p.omega)
    m = steady_moments(p)
    scale = max(abs(m.alpha_sq_plus), abs(m.alpha_sq_minus), 1.0) * conditioning(p)
    assert abs(m.var_plus - vp) <= 1e-12 * scale
    assert abs(m.var_minus - vm) <= 1e-12 * scale
    n = mean_photon_special(p.gain_a, p.kappa, "balanced", omega=p.omega)
    assert abs(m.mean_photon - n) <= 1e-10 * scale


def test_undriven_examples():
    _, vm = variance_undriven(1000.0, 0.2, 0.02)
    assert vm == pytest.approx(0.0198, abs=1e-4)
    assert variance_undriven(7.0, 0.3, 1.0) == (1.0, 1.0)
    assert variance_undriven(1000.0, 0.2, 0.0)[1] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ThresholdError):
        variance_undriven(0.3, 0.2, -1.0)


def test_ground_examples():
    assert variance_ground(0.5, 0.2, 0.0) == (1.0, 1.0)
    # squeezing sets in exactly at the onset drive, independent of gain
    for a in (0.05, 0.2):
        assert variance_ground(a, 0.2, ONSET * 0.999)[1] > 1.0
        assert variance_ground(a, 0.2, ONSET * 1.001)[1] < 1.0
        assert variance_ground(a, 0.2, ONSET)[1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ThresholdError):
        variance_ground(0.99, 0.2, 10.1)


def test_balanced_examples():
    assert variance_balanced(1000.0, 0.2, 0.012)[1] == pytest.approx(0.0172, abs=5e-5)
    assert variance_balanced(123.0, 0.2, 0.0)[1] == pytest.approx(1.0, abs=1e-12)


def test_balanced_literal_discrepancy():
    # the printed special case does not reproduce the general formula
    general = variance_balanced(1000.0, 0.2, 0.012)[1]
    literal = variance_balanced_literal(1000.0, 0.2, 0.012)[1]
    assert literal == pytest.approx(0.761, abs=1e-3)
    assert literal - general > 0.1


def test_balanced_photon_literal_discrepancy():
    general = mean_photon_special(0.3, 0.2, "balanced", omega=1.0)
    literal = mean_photon_balanced_literal(0.3, 0.2, 1.0)
    assert general == pytest.approx(steady_moments(LaserParams(0.3, 0.2, 1.0, 0.0)).mean_photon)
    assert abs(literal - general) > 0.1


def test_mean_photon_special_examples():
    assert mean_photon_special(0.3, 0.2, "undriven", eta=1.0) == 0.0
    with pytest.raises(ThresholdError):
        mean_photon_special(0.3, 0.2, "undriven", eta=-1.0)
    # the ground-state case at A = 0.99 needs a drive inside the stable region
    n = mean_photon_special(0.99, 0.2, "ground", omega=10.5)
    assert n > 0.0 and math.isfinite(n)
    assert np.isclose(n, 48.859499720426308, rtol=1e-10)
    with pytest.raises(ValueError):
        mean_photon_special(0.3, 0.2, "sideways")


@settings(max_examples=100)
@given(st.floats(0.01, 5.0), st.floats(0.0, 20.0), st.floats(-1.0, 1.0))
def test_vacuum_limit(kappa, omega, eta):
    m = steady_moments(LaserParams(0.0, kappa, omega, eta))
    assert m.var_plus == 1.0 and m.var_minus == 1.0 and m.mean_photon == 0.0


@pytest.mark.parametrize("omega, eta", [(0.0, -0.3), (5.0, 0.0), (10.5, 1.0), (2.0, -0.4)])
def test_monotone_divergence(omega, eta):
    a_max = max_stable_gain(0.2, omega, eta)
    margins = 10.0 ** -np.arange(1, 9)
    vp = [steady_moments(LaserParams(a_max * (1 - m), 0.2, omega, eta)).var_plus for m in margins]
    nb = [steady_moments(LaserParams(a_max * (1 - m), 0.2, omega, eta)).mean_photon for m in margins]
    assert np.all(np.diff(vp) > 0) and np.all(np.diff(nb) > 0)
    assert vp[-1] > 1e6


def test_positivity_on_grid():
    for a in (0.1, 0.33, 1.0, 10.0):
        for omega in np.linspace(0.0, 20.0, 41):
            for eta in np.linspace(-1.0, 1.0, 21):
                p = LaserParams(a, 0.2, float(omega), float(eta))
                c = compute_coefficients(p)
                if c.lambda_minus <= 0.0:
                    continue
                m = steady_moments(p)
                assert m.mean_photon >= -1e-12
                assert m.var_plus > 0.0 and m.var_minus > 0.0


@pytest.mark.parametrize("params", [LaserParams(0.33, 0.2, 1.0, 0.5), HEADLINE, LaserParams(0.1, 1.0, 3.0, -0.5)])
def test_transient_limits(params):
    m0 = transient_moments(params, 0.0)
    assert (m0.var_plus, m0.var_minus, m0.mean_photon) == (1.0, 1.0, 0.0)
    c = compute_coefficients(params)
    late = transient_moments(params, 40.0 / c.lambda_minus)
    ss = steady_moments(params)
    assert rel_err(late.alpha_sq_plus, ss.alpha_sq_plus) < 1e-15 * 10
    assert abs(late.alpha_sq_minus - ss.alpha_sq_minus) <= 1e-15 * abs(ss.alpha_sq_minus) * 10


def test_transient_one_lifetime():
    p = LaserParams(0.33, 0.2, 1.0, 0.0)
    c = compute_coefficients(p)
    m = transient_moments(p, 1.0 / c.lambda_minus)
    assert np.isclose(m.alpha_sq_plus, steady_moments(p).alpha_sq_plus * (1 - math.exp(-1)), rtol=1e-14)


def test_transient_above_threshold_flagged():
    p = LaserParams(0.99, 0.2, 3.5, 1.0)
    m = transient_moments(p, 5.0)
    assert not m.converges and math.isfinite(m.var_plus)
    with pytest.raises(ValueError):
        transient_moments(p, -1.0)
