"""Closed-form quadrature moments, variances and mean photon number.

Two independent evaluation routes are provided for the steady state: the
coefficient route (moments written through C, F and the decay rates) used
by :func:`steady_moments`, and the eta-parametrized polynomial route in
:func:`closed_form_alpha_sq` / :func:`closed_form_variances` /
:func:`closed_form_mean_photon`. Agreement between the two is a test
invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ThresholdError, UnsupportedPhaseError
from .model import LaserParams, compute_coefficients

__all__ = [
    "QuadratureMoments",
    "steady_moments",
    "steady_quadrature",
    "transient_moments",
    "closed_form_alpha_sq",
    "closed_form_variances",
    "closed_form_mean_photon",
    "variance_undriven",
    "variance_ground",
    "variance_balanced",
    "variance_balanced_literal",
    "mean_photon_special",
    "mean_photon_balanced_literal",
    "squeezing_percent",
]


@dataclass(frozen=True)
class QuadratureMoments:
    """Normal-ordered quadrature moments and the observables built on them.

    ``converges`` is False only for transient values evaluated above
    threshold, where no steady state is approached.
    """

    alpha_sq_plus: float
    alpha_sq_minus: float
    var_plus: float
    var_minus: float
    mean_photon: float
    converges: bool = True

    @classmethod
    def from_alpha_sq(cls, plus, minus, converges=True):
        return cls(
            alpha_sq_plus=plus,
            alpha_sq_minus=minus,
            var_plus=1.0 + plus,
            var_minus=1.0 - minus,
            mean_photon=(plus - minus) / 4.0,
            converges=converges,
        )

    def as_dict(self):
        return {
            "alpha_sq_plus": self.alpha_sq_plus,
            "alpha_sq_minus": self.alpha_sq_minus,
            "var_plus": self.var_plus,
            "var_minus": self.var_minus,
            "mean_photon": self.mean_photon,
        }


def squeezing_percent(var_minus: float) -> float:
    """Noise reduction below the vacuum level, in percent."""
    return (1.0 - var_minus) * 100.0


def _require_real_phase(params):
    if params.theta != 0.0:
        raise UnsupportedPhaseError(
            f"closed forms require theta = 0, got {params.theta!r}; use the Fock oracle"
        )


def _sources(coeffs):
    # steady <alpha_+^2> * lambda_minus and <alpha_-^2> * lambda_plus
    scale = -2.0 * coeffs.gain_a / coeffs.b
    return scale * (coeffs.c_f - coeffs.c), scale * (coeffs.c_f + coeffs.c)


def steady_moments(params: LaserParams) -> QuadratureMoments:
    _require_real_phase(params)
    coeffs = compute_coefficients(params)
    lm, lp = coeffs.lambda_minus, coeffs.lambda_plus
    if not (lm > 0.0 and lp > 0.0):
        raise ThresholdError(
            f"no steady state: lambda_minus={lm:.6g}, lambda_plus={lp:.6g}",
            lambda_minus=lm,
            lambda_plus=lp,
        )
    src_plus, src_minus = _sources(coeffs)
    return QuadratureMoments.from_alpha_sq(src_plus / lm, src_minus / lp)


def steady_quadrature(params: LaserParams, which: str) -> float:
    """Steady <alpha_+^2> (``which='plus'``) or <alpha_-^2> (``'minus'``).

    The two quadratures relax independently, so each needs only its own
    decay rate to be positive: lambda_minus for 'plus', lambda_plus for
    'minus'. Useful for tracking the squeezed quadrature right up to and
    past the point where the other one loses its steady state.
    """
    _require_real_phase(params)
    coeffs = compute_coefficients(params)
    src_plus, src_minus = _sources(coeffs)
    if which == "plus":
        rate, src = coeffs.lambda_minus, src_plus
    elif which == "minus":
        rate, src = coeffs.lambda_plus, src_minus
    else:
        raise ValueError(f"which must be 'plus' or 'minus', got {which!r}")
    if not rate > 0.0:
        raise ThresholdError(
            f"quadrature {which!r} has no steady state (rate {rate:.6g})",
            lambda_minus=coeffs.lambda_minus,
            lambda_plus=coeffs.lambda_plus,
        )
    return src / rate


def _saturation(rate, t):
    # (1 - exp(-rate t)) / rate, continuous through rate = 0
    if rate == 0.0:
        return t
    return -math.expm1(-rate * t) / rate


def transient_moments(params: LaserParams, t: float) -> QuadratureMoments:
    """Moments at time ``t`` for a cavity starting in the vacuum.

    Above threshold the expression is still evaluated (it is finite for any
    finite t) and the result carries ``converges=False``.
    """
    _require_real_phase(params)
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    coeffs = compute_coefficients(params)
    lm, lp = coeffs.lambda_minus, coeffs.lambda_plus
    src_plus, src_minus = _sources(coeffs)
    return QuadratureMoments.from_alpha_sq(
        src_plus * _saturation(lm, t),
        src_minus * _saturation(lp, t),
        converges=bool(lm > 0.0 and lp > 0.0),
    )


def _chi(a, kappa, omega, eta):
    w = omega
    root = math.sqrt((1.0 - eta) * (1.0 + eta))
    base = kappa * (1.0 + w * w) * (1.0 + w * w / 4.0) + a * (
        (1.0 - w * w / 2.0) * eta + root * 1.5 * w
    )
    drive = a * 0.5 * w * (1.0 + w * w)
    return base - drive, base + drive


def _brackets(omega, eta):
    w = omega
    root = math.sqrt((1.0 - eta) * (1.0 + eta))
    first = 0.5 * w * (1.0 - 3.0 * eta + w * w) + root * (1.0 - w * w / 2.0)
    second = 1.0 - eta + 0.5 * w * w * (2.0 + eta) - root * 1.5 * w
    return first, second


def closed_form_alpha_sq(params: LaserParams):
    """Steady (<alpha_+^2>, <alpha_-^2>) from the eta-parametrized polynomials."""
    _require_real_phase(params)
    a = params.gain_a
    chi_p, chi_m = _chi(a, params.kappa, params.omega, params.eta)
    if not (chi_p > 0.0 and chi_m > 0.0):
        raise ThresholdError(f"no steady state: chi_plus={chi_p:.6g}, chi_minus={chi_m:.6g}")
    first, second = _brackets(params.omega, params.eta)
    return a * (first + second) / chi_p, a * (first - second) / chi_m


def closed_form_variances(params: LaserParams):
    """(var_plus, var_minus) written directly as 1 +/- first/chi + second/chi."""
    _require_real_phase(params)
    a = params.gain_a
    chi_p, chi_m = _chi(a, params.kappa, params.omega, params.eta)
    if not (chi_p > 0.0 and chi_m > 0.0):
        raise ThresholdError(f"no steady state: chi_plus={chi_p:.6g}, chi_minus={chi_m:.6g}")
    first, second = _brackets(params.omega, params.eta)
    return (
        1.0 + a * first / chi_p + a * second / chi_p,
        1.0 - a * first / chi_m + a * second / chi_m,
    )


def closed_form_mean_photon(params: LaserParams) -> float:
    """Steady mean photon number as the printed four-term expression."""
    _require_real_phase(params)
    a = params.gain_a
    w = params.omega
    eta = params.eta
    chi_p, chi_m = _chi(a, params.kappa, w, eta)
    if not (chi_p > 0.0 and chi_m > 0.0):
        raise ThresholdError(f"no steady state: chi_plus={chi_p:.6g}, chi_minus={chi_m:.6g}")
    root = math.sqrt((1.0 - eta) * (1.0 + eta))
    drive = 0.5 * w * (1.0 - 3.0 * eta) + 0.5 * w**3
    pop = 1.0 - eta + 0.5 * w * w * (2.0 + eta)
    return (
        -a * (drive - pop) / (4.0 * chi_m)
        + a * root * (0.5 * w * w - 1.0 - 1.5 * w) / (4.0 * chi_m)
        + a * (drive + pop) / (4.0 * chi_p)
        - a * root * (0.5 * w * w - 1.0 + 1.5 * w) / (4.0 * chi_p)
    )


def variance_undriven(a: float, kappa: float, eta: float):
    """(var_plus, var_minus) without external drive."""
    denom = a * eta + kappa
    if not denom > 0.0:
        raise ThresholdError(f"no steady state: A*eta + kappa = {denom:.6g}")
    root = math.sqrt((1.0 - eta) * (1.0 + eta))
    return (kappa + a * (1.0 + root)) / denom, (kappa + a * (1.0 - root)) / denom


def _chi_ground(a, kappa, omega):
    w = omega
    base = kappa * (1.0 + w * w) * (1.0 + w * w / 4.0) + a * (1.0 - w * w / 2.0)
    drive = a * 0.5 * w * (1.0 + w * w)
    return base - drive, base + drive


def variance_ground(a: float, kappa: float, omega: float):
    """(var_plus, var_minus) when every atom starts in the bottom level."""
    chi_p, chi_m = _chi_ground(a, kappa, omega)
    if not (chi_p > 0.0 and chi_m > 0.0):
        raise ThresholdError(f"no steady state: chi'_plus={chi_p:.6g}")
    w = omega
    odd = w - 0.5 * w**3
    even = 1.5 * w * w
    return 1.0 - a * (odd - even) / chi_p, 1.0 + a * (odd + even) / chi_m


def _chi_balanced(a, kappa, omega):
    w = omega
    base = kappa * (1.0 + w * w) * (1.0 + w * w / 4.0) + a * 1.5 * w
    drive = a * 0.5 * w * (1.0 + w * w)
    return base - drive, base + drive


def variance_balanced(a: float, kappa: float, omega: float):
    """(var_plus, var_minus) for equal initial populations (eta = 0).

    Uses the general steady-state brackets at eta = 0 over the printed
    eta = 0 denominators; see :func:`variance_balanced_literal` for the
    printed special-case numerator, which disagrees.
    """
    chi_p, chi_m = _chi_balanced(a, kappa, omega)
    if not (chi_p > 0.0 and chi_m > 0.0):
        raise ThresholdError(f"no steady state: chi''_plus={chi_p:.6g}")
    first, second = _brackets(omega, 0.0)
    return (
        1.0 + a * first / chi_p + a * second / chi_p,
        1.0 - a * first / chi_m + a * second / chi_m,
    )


def variance_balanced_literal(a: float, kappa: float, omega: float):
    """The eta = 0 special case exactly as printed (kept for comparison only)."""
    chi_p, chi_m = _chi_balanced(a, kappa, omega)
    if not (chi_p > 0.0 and chi_m > 0.0):
        raise ThresholdError(f"no steady state: chi''_plus={chi_p:.6g}")
    w = omega
    first = 0.5 * w * (0.5 * w * w - 2.0 - w) + 1.0
    second = 1.0 + w * w - 1.5 * w
    return (
        1.0 + a * first / chi_p + a * second / chi_p,
        1.0 - a * first / chi_m + a * second / chi_m,
    )


def mean_photon_special(a, kappa, which, *, omega=0.0, eta=None):
    """Steady mean photon number in one of the three special cases.

    ``which`` is 'undriven' (needs ``eta``; omega is zero), 'ground'
    (eta = 1) or 'balanced' (eta = 0).
    """
    if which == "undriven":
        if eta is None:
            raise ValueError("the undriven case needs eta")
        denom = a * eta + kappa
        if not denom > 0.0:
            raise ThresholdError(f"no steady state: A*eta + kappa = {denom:.6g}")
        return a * (1.0 - eta) / (2.0 * denom)
    w = omega
    if which == "ground":
        chi_p, chi_m = _chi_ground(a, kappa, w)
        if not (chi_p > 0.0 and chi_m > 0.0):
            raise ThresholdError(f"no steady state: chi'_plus={chi_p:.6g}")
        odd = -w + 0.5 * w**3
        even = 1.5 * w * w
        return -a * (odd - even) / (4.0 * chi_m) + a * (odd + even) / (4.0 * chi_p)
    if which == "balanced":
        chi_p, chi_m = _chi_balanced(a, kappa, w)
        if not (chi_p > 0.0 and chi_m > 0.0):
            raise ThresholdError(f"no steady state: chi''_plus={chi_p:.6g}")
        first, second = _brackets(w, 0.0)
        return a * (first + second) / (4.0 * chi_p) - a * (first - second) / (4.0 * chi_m)
    raise ValueError(f"unknown special case {which!r}")


def mean_photon_balanced_literal(a, kappa, omega):
    """The eta = 0 mean photon number exactly as printed (comparison only)."""
    chi_p, chi_m = _chi_balanced(a, kappa, omega)
    w = omega
    head = 0.5 * w * (1.0 + w * w + w)
    return (
        -a * (head - 1.5 * w + w * w) / (4.0 * chi_m)
        + a * (head - 2.0 - (1.5 * w + w * w)) / (4.0 * chi_p)
    )
