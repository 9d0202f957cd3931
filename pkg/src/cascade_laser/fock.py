"""Brute-force master-equation oracle in a truncated photon-number basis.

The density matrix is stored on Fock levels 0..n_max and integrated with
fixed-step RK4. All ladder operators are the truncated matrices, which
keeps the trace exactly conserved by the generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import get_backend
from .analytic import QuadratureMoments
from .errors import ConvergenceError, DimensionError, ThresholdError
from .model import LaserParams, compute_coefficients, generator_coefficients

__all__ = [
    "TruncatedDensityMatrix",
    "OracleResult",
    "vacuum",
    "thermal",
    "diagonal",
    "apply_liouvillian",
    "evolve",
    "stable_step",
    "field_moments",
    "quadrature_moments",
    "steady_state",
    "choose_n_max",
    "snapshot_rows",
]

TAIL_WIDTH = 3  # levels n_max-2..n_max count as the tail


@dataclass
class TruncatedDensityMatrix:
    n_max: int
    entries: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if self.entries.shape != (self.n_max + 1, self.n_max + 1):
            raise DimensionError(
                f"entries shape {self.entries.shape} does not match n_max={self.n_max}"
            )

    @property
    def populations(self):
        return self.entries.diagonal().real.copy()

    def trace(self):
        return complex(np.trace(self.entries))

    def hermiticity_error(self):
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def min_eigenvalue(self):
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def tail_population(self):
        return float(self.populations[-TAIL_WIDTH:].sum())

    def copy(self):
        return TruncatedDensityMatrix(self.n_max, self.entries.copy(), self.t)


def vacuum(n_max: int) -> TruncatedDensityMatrix:
    rho = np.zeros((n_max + 1, n_max + 1), dtype=np.complex128)
    rho[0, 0] = 1.0
    return TruncatedDensityMatrix(n_max, rho)


def diagonal(populations) -> TruncatedDensityMatrix:
    p = np.asarray(populations, dtype=float)
    return TruncatedDensityMatrix(len(p) - 1, np.diag(p).astype(np.complex128))


def thermal(n_max: int, nbar: float) -> TruncatedDensityMatrix:
    """Thermal state renormalized on the truncated space."""
    n = np.arange(n_max + 1)
    p = (nbar / (1.0 + nbar)) ** n
    return diagonal(p / p.sum())


def _rates(params):
    g = generator_coefficients(params)
    return g.gain, g.loss, g.squeeze_e, g.squeeze_f


def stable_step(params: LaserParams, n_max: int) -> float:
    """A step comfortably inside the RK4 stability region for this truncation."""
    gain, loss, e, f = _rates(params)
    spread = 2.0 * (abs(gain) + abs(loss) + abs(e) + abs(f)) * (n_max + 1)
    return min(0.05, 1.0 / spread)


def apply_liouvillian(params: LaserParams, rho: TruncatedDensityMatrix, backend=None):
    """Return d(rho)/dt as a :class:`TruncatedDensityMatrix` at the same time."""
    if not isinstance(rho, TruncatedDensityMatrix):
        rho = np.asarray(rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {rho.shape}")
        rho = TruncatedDensityMatrix(rho.shape[0] - 1, rho)
    gain, loss, e, f = _rates(params)
    out = get_backend(backend).liouvillian(rho.entries, gain, loss, e, f)
    return TruncatedDensityMatrix(rho.n_max, out, rho.t)


def evolve(params: LaserParams, rho0: TruncatedDensityMatrix, t_final: float,
           step: float | None = None, backend=None) -> TruncatedDensityMatrix:
    """Integrate the master equation for a duration ``t_final``.

    Returns a new matrix; check ``tail_population()`` against a tolerance
    to decide whether the truncation was adequate.
    """
    if step is None:
        step = stable_step(params, rho0.n_max)
    if step <= 0.0:
        raise ValueError("step must be positive")
    nsteps = max(0, math.ceil(t_final / step - 1e-9))
    rho = rho0.copy()
    if nsteps:
        gain, loss, e, f = _rates(params)
        get_backend(backend).rk4_evolve(rho.entries, gain, loss, e, f, t_final / nsteps, nsteps)
    rho.t = rho0.t + t_final
    return rho


def field_moments(rho: TruncatedDensityMatrix):
    """(<a>, <a^2>, <a^dag a>) of a truncated state."""
    r = rho.entries
    n = np.arange(rho.n_max + 1)
    s = np.sqrt(n[1:])
    mean_a = np.sum(s * np.diagonal(r, offset=-1))
    a_sq = np.sum(s[:-1] * s[1:] * np.diagonal(r, offset=-2)) if rho.n_max >= 2 else 0.0
    occ = float(np.sum(n * r.diagonal().real))
    return complex(mean_a), complex(a_sq), occ


def quadrature_moments(rho: TruncatedDensityMatrix) -> QuadratureMoments:
    """Quadrature variances of ``a^dag + a`` and ``i(a^dag - a)`` plus n-bar."""
    mean_a, a_sq, occ = field_moments(rho)
    var_plus = 1.0 + 2.0 * occ + 2.0 * a_sq.real - (2.0 * mean_a.real) ** 2
    var_minus = 1.0 + 2.0 * occ - 2.0 * a_sq.real - (2.0 * mean_a.imag) ** 2
    return QuadratureMoments(
        alpha_sq_plus=var_plus - 1.0,
        alpha_sq_minus=1.0 - var_minus,
        var_plus=var_plus,
        var_minus=var_minus,
        mean_photon=occ,
    )


@dataclass
class OracleResult:
    moments: QuadratureMoments
    rho: TruncatedDensityMatrix
    n_max: int
    tail_population: float
    converged: bool
    stationary: bool
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float
    history: list = field(default_factory=list)

    @property
    def heisenberg_product(self):
        return self.moments.var_plus * self.moments.var_minus

    def diagnostics(self):
        return {
            "n_max": self.n_max,
            "t": self.rho.t,
            "tail_population": self.tail_population,
            "converged": self.converged,
            "stationary": self.stationary,
            "trace_error": self.trace_error,
            "hermiticity_error": self.hermiticity_error,
            "min_eigenvalue": self.min_eigenvalue,
        }


def choose_n_max(params: LaserParams) -> int:
    """Initial truncation: 10 + 8 n-bar when a closed form exists, else 40."""
    if params.theta == 0.0:
        from .analytic import steady_moments

        try:
            nbar = steady_moments(params).mean_photon
        except ThresholdError:
            return 40
        return int(math.ceil(10.0 + 8.0 * max(nbar, 0.0)))
    return 40


def _run_to_stationarity(params, n_max, tol, max_time, chunk, backend):
    rho = vacuum(n_max)
    step = stable_step(params, n_max)
    prev = None
    history = []
    while rho.t < max_time:
        rho = evolve(params, rho, chunk, step=step, backend=backend)
        _, a_sq, occ = field_moments(rho)
        cur = np.array([occ, a_sq.real, a_sq.imag])
        history.append((rho.t, occ, a_sq))
        if prev is not None:
            scale = max(np.abs(cur).max(), 1e-300)
            rate = np.abs(cur - prev).max() / scale / chunk
            if rate < tol:
                return rho, True, history
        prev = cur
    return rho, False, history


def steady_state(params: LaserParams, n_max: int | None = None, tol: float = 1e-8,
                 tail_tol: float = 1e-10, max_time: float | None = None,
                 max_n_max: int = 320, require_converged: bool = True,
                 backend=None) -> OracleResult:
    """Long-time integration from the vacuum until the field moments stop moving.

    Stationarity means the relative change of (n-bar, <a^2>) per unit time
    falls below ``tol``. When ``n_max`` is not given it starts from
    :func:`choose_n_max` and doubles until the tail population is below
    ``tail_tol`` (capped at ``max_n_max``). Raises
    :class:`ConvergenceError` (carrying ``.result``) if either criterion
    fails and ``require_converged`` is set.
    """
    chunk = 1.0
    if params.theta == 0.0:
        c = compute_coefficients(params)
        if not (c.lambda_minus > 0.0 and c.lambda_plus > 0.0):
            raise ThresholdError(
                "no normalizable steady state above threshold",
                lambda_minus=c.lambda_minus, lambda_plus=c.lambda_plus,
            )
        slowest = min(c.lambda_minus, c.lambda_plus)
        chunk = min(max(0.5 / slowest, 0.5), 20.0)
        if max_time is None:
            max_time = 80.0 / slowest + 10.0
    elif max_time is None:
        max_time = 2000.0

    auto = n_max is None
    size = choose_n_max(params) if auto else int(n_max)
    while True:
        rho, stationary, history = _run_to_stationarity(params, size, tol, max_time, chunk, backend)
        tail = rho.tail_population()
        if tail <= tail_tol or not auto or size >= max_n_max:
            break
        size = min(2 * size, max_n_max)

    result = OracleResult(
        moments=quadrature_moments(rho),
        rho=rho,
        n_max=size,
        tail_population=tail,
        converged=bool(stationary and tail <= tail_tol),
        stationary=stationary,
        trace_error=abs(rho.trace() - 1.0),
        hermiticity_error=rho.hermiticity_error(),
        min_eigenvalue=rho.min_eigenvalue(),
        history=history,
    )
    if require_converged and not result.converged:
        err = ConvergenceError(
            f"oracle did not converge (stationary={stationary}, tail={tail:.3g}, n_max={size})"
        )
        err.result = result
        raise err
    return result


def snapshot_rows(rho: TruncatedDensityMatrix):
    """CSV rows of (n, population) for debugging exports."""
    for n, p in enumerate(rho.populations):
        yield n, p
