"""Parameters, initial atomic superposition and derived rate coefficients.

All rates are measured in units of the atomic decay rate gamma, so the
drive strength ``omega`` is the dimensionless ratio Omega/gamma.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from .errors import DomainError, UnsupportedPhaseError

__all__ = [
    "LaserParams",
    "InitialAtomState",
    "CoefficientSet",
    "GeneratorCoefficients",
    "StabilityReport",
    "derive_initial_state",
    "compute_coefficients",
    "generator_coefficients",
    "check_threshold",
    "max_stable_gain",
]


@dataclass(frozen=True)
class LaserParams:
    """The five physical knobs of the driven cascade laser.

    Attributes
    ----------
    gain_a : float
        Linear gain coefficient A (injection rate and atom-field coupling
        folded together), units of gamma.
    kappa : float
        Cavity damping constant, units of gamma.
    omega : float
        Drive amplitude ratio Omega/gamma.
    eta : float
        Population parameter; top-level population is (1 - eta)/2.
    theta : float
        Phase of the initial top/bottom coherence, radians.
    """

    gain_a: float
    kappa: float
    omega: float
    eta: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("gain_a", "kappa", "omega", "eta", "theta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if not -1.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [-1, 1], got {self.eta!r}")
        if self.kappa <= 0.0:
            raise DomainError(f"kappa must be positive, got {self.kappa!r}")
        if self.gain_a < 0.0:
            raise DomainError(f"gain_a must be non-negative, got {self.gain_a!r}")
        if self.omega < 0.0:
            raise DomainError(f"omega must be non-negative, got {self.omega!r}")

    def with_(self, **changes) -> "LaserParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class InitialAtomState:
    """Populations and coherence of the injected top/bottom superposition."""

    rho_aa: float
    rho_cc: float
    rho_ac: complex


def derive_initial_state(eta: float, theta: float = 0.0) -> InitialAtomState:
    if not -1.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [-1, 1], got {eta!r}")
    rho_aa = (1.0 - eta) / 2.0
    rho_cc = (1.0 + eta) / 2.0
    modulus = math.sqrt(rho_aa * rho_cc)
    if theta == 0.0:
        rho_ac = complex(modulus, 0.0)
    else:
        rho_ac = modulus * cmath.exp(1j * theta)
    return InitialAtomState(rho_aa, rho_cc, rho_ac)


@dataclass(frozen=True)
class CoefficientSet:
    """Derived coefficient algebra for a real initial coherence.

    ``c_e`` and ``c_f`` are the two anomalous (phase-sensitive) coefficients;
    ``mu`` is the drift rate, ``beta`` the anomalous coupling and
    ``lambda_minus``/``lambda_plus`` the decay rates of the two quadratures.
    ``chi_plus``/``chi_minus`` are the denominators of the steady moments,
    equal to ``b * lambda_minus`` and ``b * lambda_plus``.
    """

    b: float
    c: float
    d: float
    c_e: float
    c_f: float
    mu: float
    beta: float
    lambda_minus: float
    lambda_plus: float
    chi_plus: float
    chi_minus: float
    gain_a: float
    kappa: float


def _bracket_terms(omega, rho_aa, rho_cc, rho_ac):
    w = omega
    w2 = w * w
    q = 1.0 + w2 / 4.0
    p = 1.0 - w2 / 2.0
    b = (1.0 + w2) * q
    c = rho_aa * q - rho_ac * 1.5 * w + rho_cc * 0.75 * w2
    d = rho_aa * 0.75 * w2 + rho_ac * 1.5 * w + rho_cc * q
    c_e = -rho_aa * 0.5 * w * p - rho_ac * p + rho_cc * w * q
    c_f = -rho_aa * w * q - rho_ac * p + rho_cc * 0.5 * w * p
    return b, c, d, c_e, c_f


def compute_coefficients(params: LaserParams) -> CoefficientSet:
    """Evaluate B, C, D, E, F and the rates built from them.

    Only defined for ``theta == 0``; for a complex coherence use
    :func:`generator_coefficients` (experimental) with the Fock oracle.
    """
    if params.theta != 0.0:
        raise UnsupportedPhaseError(
            f"closed-form coefficients require theta = 0, got {params.theta!r}"
        )
    atoms = derive_initial_state(params.eta)
    b, c, d, c_e, c_f = _bracket_terms(
        params.omega, atoms.rho_aa, atoms.rho_cc, atoms.rho_ac.real
    )
    a = params.gain_a
    kappa = params.kappa
    mu = a / b * (d - c) + kappa
    beta = a / (2.0 * b) * (c_e - c_f)
    lambda_minus = mu - 2.0 * beta
    lambda_plus = mu + 2.0 * beta

    w = params.omega
    eta = params.eta
    root = math.sqrt((1.0 - eta) * (1.0 + eta))
    common = kappa * b + a * ((1.0 - w * w / 2.0) * eta + root * 1.5 * w)
    drive = a * 0.5 * w * (1.0 + w * w)
    return CoefficientSet(
        b=b,
        c=c,
        d=d,
        c_e=c_e,
        c_f=c_f,
        mu=mu,
        beta=beta,
        lambda_minus=lambda_minus,
        lambda_plus=lambda_plus,
        chi_plus=common - drive,
        chi_minus=common + drive,
        gain_a=a,
        kappa=kappa,
    )


@dataclass(frozen=True)
class GeneratorCoefficients:
    """Rates multiplying each block of the cavity master equation.

    ``gain`` multiplies the photon-emission term, ``loss`` the damping term
    (cavity loss included), ``squeeze_e``/``squeeze_f`` the two anomalous
    terms. Anomalous rates are complex when theta != 0.
    """

    gain: float
    loss: float
    squeeze_e: complex
    squeeze_f: complex


def generator_coefficients(params: LaserParams) -> GeneratorCoefficients:
    """Master-equation rates for any coherence phase.

    For theta != 0 the complex coherence is inserted directly into the
    bracket formulas. Gain and loss keep only their real part, the
    anomalous rates stay complex and are paired with their conjugates by
    the Liouvillian so that Hermiticity is preserved. This extension is
    experimental: no closed form exists to check it against.
    """
    atoms = derive_initial_state(params.eta, params.theta)
    rho_ac = atoms.rho_ac if params.theta != 0.0 else atoms.rho_ac.real
    b, c, d, c_e, c_f = _bracket_terms(params.omega, atoms.rho_aa, atoms.rho_cc, rho_ac)
    a = params.gain_a
    gain = (a * c / (2.0 * b)).real
    loss = ((a * d / b).real + params.kappa) / 2.0
    return GeneratorCoefficients(
        gain=float(gain),
        loss=float(loss),
        squeeze_e=complex(a * c_e / (2.0 * b)),
        squeeze_f=complex(a * c_f / (2.0 * b)),
    )


@dataclass(frozen=True)
class StabilityReport:
    below_threshold: bool
    lambda_minus: float
    lambda_plus: float
    margin: float


def check_threshold(coeffs: CoefficientSet) -> StabilityReport:
    lm, lp = coeffs.lambda_minus, coeffs.lambda_plus
    return StabilityReport(
        below_threshold=bool(lm > 0.0 and lp > 0.0),
        lambda_minus=lm,
        lambda_plus=lp,
        margin=min(lm, lp),
    )


def max_stable_gain(kappa: float, omega: float, eta: float) -> float:
    """Largest gain A for which both quadrature rates stay positive.

    Both rates are affine in A with intercept kappa, so the boundary is
    kappa / (slope) when the slope is negative and infinite otherwise.
    Returns ``math.inf`` when no finite threshold exists.
    """
    unit = compute_coefficients(LaserParams(1.0, kappa, omega, eta))
    slope = min(unit.lambda_minus, unit.lambda_plus) - kappa
    if slope >= 0.0:
        return math.inf
    return -kappa / slope
