"""Time-domain engines: deterministic moment equations and a Langevin sampler.

The moment integrator advances (<alpha>, <alpha^2>, <alpha* alpha>) with a
fixed-step RK4 scheme. The sampler evolves the two quadrature variables
alpha_+ = alpha* + alpha and alpha_- = alpha* - alpha, which decouple for a
real initial coherence, as independent linear stochastic processes

    d alpha_+/- = -(lambda_-/+ / 2) alpha_+/- dt + s_+/- dW_+/-,

with s_+/-^2 = -2A (F -/+ C) / B. A negative s^2 is a legitimate feature of
the normal-ordered representation; it is realized with an imaginary noise
amplitude on a complex trajectory so that the ensemble second moment keeps
the correct (negative) sign.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import get_backend
from .errors import StepSizeError, ThresholdError, UnsupportedPhaseError
from .model import CoefficientSet, LaserParams, compute_coefficients

__all__ = [
    "MomentState",
    "MomentSeries",
    "EnsembleStats",
    "integrate_moments",
    "integrate_moment_equations",
    "sample_trajectories",
    "noise_strengths",
    "decay_envelopes",
]


@dataclass(frozen=True)
class MomentState:
    mean_alpha: complex
    alpha_sq: complex
    occupancy: float
    t: float

    @property
    def alpha_sq_plus(self):
        return 2.0 * self.alpha_sq.real + 2.0 * self.occupancy

    @property
    def alpha_sq_minus(self):
        return 2.0 * self.alpha_sq.real - 2.0 * self.occupancy


@dataclass(frozen=True)
class MomentSeries:
    """Moment time series sampled every ``stride`` integration steps."""

    t: np.ndarray
    mean_alpha: np.ndarray
    alpha_sq: np.ndarray
    occupancy: np.ndarray
    step: float

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i):
        return MomentState(
            complex(self.mean_alpha[i]), complex(self.alpha_sq[i]),
            float(self.occupancy[i]), float(self.t[i]),
        )

    @property
    def final(self) -> MomentState:
        return self[-1]

    @property
    def alpha_sq_plus(self):
        return 2.0 * self.alpha_sq.real + 2.0 * self.occupancy

    @property
    def alpha_sq_minus(self):
        return 2.0 * self.alpha_sq.real - 2.0 * self.occupancy

    def rows(self):
        """CSV rows: t, Re/Im <alpha>, Re/Im <alpha^2>, <alpha* alpha>."""
        for i in range(len(self.t)):
            yield (
                self.t[i], self.mean_alpha[i].real, self.mean_alpha[i].imag,
                self.alpha_sq[i].real, self.alpha_sq[i].imag, self.occupancy[i],
            )

    COLUMNS = ("t", "mean_alpha_re", "mean_alpha_im", "alpha_sq_re", "alpha_sq_im", "occupancy")


def _split_steps(t_final, step):
    if step <= 0.0:
        raise StepSizeError(f"step must be positive, got {step!r}")
    if t_final < 0.0:
        raise ValueError(f"t_final must be non-negative, got {t_final!r}")
    nsteps = max(1, math.ceil(t_final / step - 1e-9))
    return nsteps, t_final / nsteps


def integrate_moment_equations(mu, beta, src_sq, src_occ, t_final, step,
                               stride=1, initial=None, backend=None) -> MomentSeries:
    """RK4 on the linear moment system with explicit rates and sources.

    ``src_sq`` is the constant source of <alpha^2> and ``src_occ`` that of
    <alpha* alpha>. The actual step is ``t_final / ceil(t_final / step)``.
    """
    bound = max(abs(mu - 2.0 * beta), abs(mu + 2.0 * beta))
    if bound > 0.0 and step > 1.0 / bound:
        raise StepSizeError(f"step {step:g} exceeds stability bound {1.0 / bound:g}")
    nsteps, h = _split_steps(t_final, step)
    stride = max(1, int(stride))
    if initial is None:
        y0 = np.zeros(5)
    else:
        m, s, n = initial
        y0 = np.array([m.real, m.imag, s.real, s.imag, n], dtype=float)
    out = get_backend(backend).moment_rk4(
        np.ascontiguousarray(y0), float(mu), float(beta), float(src_sq),
        float(src_occ), float(h), int(nsteps), stride,
    )
    t = np.arange(out.shape[0]) * (h * stride)
    t[-1] = nsteps * h  # the terminal row is always t_final
    return MomentSeries(
        t=t,
        mean_alpha=out[:, 0] + 1j * out[:, 1],
        alpha_sq=out[:, 2] + 1j * out[:, 3],
        occupancy=out[:, 4],
        step=h,
    )


def integrate_moments(params: LaserParams, t_final: float, step: float,
                      stride: int = 1, backend=None) -> MomentSeries:
    """Integrate the moment equations from the cavity vacuum."""
    if params.theta != 0.0:
        raise UnsupportedPhaseError("moment equations are implemented for theta = 0 only")
    c = compute_coefficients(params)
    return integrate_moment_equations(
        c.mu, c.beta,
        src_sq=-c.gain_a * c.c_f / c.b,
        src_occ=c.gain_a * c.c / c.b,
        t_final=t_final, step=step, stride=stride, backend=backend,
    )


def noise_strengths(coeffs: CoefficientSet):
    """Per-unit-time noise variances (s_+^2, s_-^2) of the quadrature processes."""
    scale = -2.0 * coeffs.gain_a / coeffs.b
    return scale * (coeffs.c_f - coeffs.c), scale * (coeffs.c_f + coeffs.c)


def _amplitude(noise_sq):
    if noise_sq >= 0.0:
        return complex(math.sqrt(noise_sq), 0.0)
    return complex(0.0, math.sqrt(-noise_sq))


@dataclass(frozen=True)
class EnsembleStats:
    """Ensemble estimates of the quadrature moments with standard errors."""

    n_traj: int
    seed: int
    t_final: float
    step: float
    alpha_sq_plus: float
    alpha_sq_minus: float
    alpha_sq_plus_se: float
    alpha_sq_minus_se: float
    mean_alpha_plus: complex
    mean_alpha_minus: complex
    mean_alpha_plus_se: float
    mean_alpha_minus_se: float
    noise_sq_plus: float
    noise_sq_minus: float
    times: np.ndarray | None = None
    series: np.ndarray | None = None

    def z_scores(self, alpha_sq_plus, alpha_sq_minus):
        """Standardized deviations of the estimates from reference values."""

        def z(est, ref, se):
            if se == 0.0:
                return 0.0 if est == ref else math.inf
            return (est - ref) / se

        return (
            z(self.alpha_sq_plus, alpha_sq_plus, self.alpha_sq_plus_se),
            z(self.alpha_sq_minus, alpha_sq_minus, self.alpha_sq_minus_se),
        )

    SERIES_COLUMNS = (
        "t", "alpha_sq_plus", "alpha_sq_plus_se", "alpha_sq_minus", "alpha_sq_minus_se",
    )


def _run_chunk(seed_seq, size, nsteps, h, decay, amps, record_every):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    xp = np.zeros(size, dtype=np.complex128)
    xm = np.zeros(size, dtype=np.complex128)
    dp, dm = decay
    ap, am = amps[0] * math.sqrt(h), amps[1] * math.sqrt(h)
    nrec = nsteps // record_every + 1 if record_every else 0
    rec = np.zeros((nrec, 4))
    for k in range(1, nsteps + 1):
        xp = xp * dp + ap * rng.standard_normal(size)
        xm = xm * dm + am * rng.standard_normal(size)
        if record_every and k % record_every == 0:
            sp = (xp * xp).real
            sm = (xm * xm).real
            rec[k // record_every] = (sp.sum(), (sp * sp).sum(), sm.sum(), (sm * sm).sum())
    sp = (xp * xp).real
    sm = (xm * xm).real
    sums = np.array([
        sp.sum(), (sp * sp).sum(), sm.sum(), (sm * sm).sum(),
    ])
    first = np.array([xp.sum(), (np.abs(xp) ** 2).sum(), xm.sum(), (np.abs(xm) ** 2).sum()])
    return sums, first, rec


def _mean_se(total, total_sq, n):
    mean = total / n
    if n < 2:
        return mean, 0.0
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def sample_trajectories(params: LaserParams, n_traj: int, t_final: float,
                        step: float | None = None, seed: int = 0,
                        chunk_size: int = 1024, workers: int = 1,
                        record_every: int = 0) -> EnsembleStats:
    """Euler-Maruyama ensemble of the quadrature Langevin equations.

    Trajectories are split into fixed-size chunks, each with its own
    generator spawned from ``seed``, so results do not depend on
    ``workers``. ``step`` defaults to 0.01 / max(lambda_-, lambda_+).
    With ``record_every > 0`` the estimates are also kept every that many
    steps in ``times``/``series``.
    """
    if params.theta != 0.0:
        raise UnsupportedPhaseError("the quadrature sampler needs theta = 0")
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    c = compute_coefficients(params)
    lm, lp = c.lambda_minus, c.lambda_plus
    if not (lm > 0.0 and lp > 0.0):
        raise ThresholdError("sampling needs a steady state", lambda_minus=lm, lambda_plus=lp)
    lam_max = max(lm, lp)
    if step is None:
        step = 0.01 / lam_max
    if step > 1.0 / lam_max:
        raise StepSizeError(f"step {step:g} exceeds stability bound {1.0 / lam_max:g}")
    nsteps, h = _split_steps(t_final, step)
    s_plus, s_minus = noise_strengths(c)
    decay = (1.0 - 0.5 * lm * h, 1.0 - 0.5 * lp * h)
    amps = (_amplitude(s_plus), _amplitude(s_minus))

    sizes = [chunk_size] * (n_traj // chunk_size)
    if n_traj % chunk_size:
        sizes.append(n_traj % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(children[i], sizes[i], nsteps, h, decay, amps, record_every) for i in range(len(sizes))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _run_chunk(*job), jobs))
    else:
        results = [_run_chunk(*job) for job in jobs]

    sums = np.zeros(4)
    first = np.zeros(4, dtype=np.complex128)
    rec = None
    for chunk_sums, chunk_first, chunk_rec in results:
        sums = sums + chunk_sums
        first = first + chunk_first
        rec = chunk_rec if rec is None else rec + chunk_rec

    sq_p, sq_p_se = _mean_se(sums[0], sums[1], n_traj)
    sq_m, sq_m_se = _mean_se(sums[2], sums[3], n_traj)
    mean_p = first[0] / n_traj
    mean_m = first[2] / n_traj
    _, mean_p_se = _mean_se(abs(first[0]), first[1].real, n_traj)
    _, mean_m_se = _mean_se(abs(first[2]), first[3].real, n_traj)

    times = series = None
    if record_every:
        times = np.arange(rec.shape[0]) * h * record_every
        series = np.empty((rec.shape[0], 4))
        for i, row in enumerate(rec):
            series[i, 0], series[i, 1] = _mean_se(row[0], row[1], n_traj)
            series[i, 2], series[i, 3] = _mean_se(row[2], row[3], n_traj)

    return EnsembleStats(
        n_traj=n_traj, seed=seed, t_final=t_final, step=h,
        alpha_sq_plus=float(sq_p), alpha_sq_minus=float(sq_m),
        alpha_sq_plus_se=sq_p_se, alpha_sq_minus_se=sq_m_se,
        mean_alpha_plus=complex(mean_p), mean_alpha_minus=complex(mean_m),
        mean_alpha_plus_se=mean_p_se, mean_alpha_minus_se=mean_m_se,
        noise_sq_plus=s_plus, noise_sq_minus=s_minus,
        times=times, series=series,
    )


def decay_envelopes(coeffs: CoefficientSet, t: float):
    """Coefficients (a_+(t), a_-(t)) of alpha(0) and alpha*(0) in the formal solution."""
    slow = math.exp(-coeffs.lambda_minus * t / 2.0)
    fast = math.exp(-coeffs.lambda_plus * t / 2.0)
    return 0.5 * (slow + fast), 0.5 * (slow - fast)
