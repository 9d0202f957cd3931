"""Pure numpy versions of the compiled kernels, same signatures and semantics."""
import numpy as np


def _sqrt_table(N):
    return np.sqrt(np.arange(N + 2, dtype=float))


def _rhs(rho, out, s, gain, loss, e, f):
    N = rho.shape[0]
    n = np.arange(N, dtype=float)
    aad = n + 1.0
    aad[-1] = 0.0
    pair = e + f
    out[...] = -(gain * (aad[:, None] + aad[None, :]) + loss * (n[:, None] + n[None, :])) * rho
    # a^dag rho a
    out[1:, 1:] += 2.0 * gain * np.outer(s[1:N], s[1:N]) * rho[:-1, :-1]
    # a rho a^dag
    out[:-1, :-1] += 2.0 * loss * np.outer(s[1:N], s[1:N]) * rho[1:, 1:]
    # a^dag rho a^dag
    out[1:, :-1] += pair * np.outer(s[1:N], s[1:N]) * rho[:-1, 1:]
    # a rho a
    out[:-1, 1:] += np.conj(pair) * np.outer(s[1:N], s[1:N]) * rho[1:, :-1]
    if N > 2:
        two = s[1:N - 1] * s[2:N]
        # a^2 rho and rho a^dag^2
        out[:-2, :] -= np.conj(e) * two[:, None] * rho[2:, :]
        out[:, :-2] -= e * two[None, :] * rho[:, 2:]
        # a^dag^2 rho and rho a^2
        out[2:, :] -= f * two[:, None] * rho[:-2, :]
        out[:, 2:] -= np.conj(f) * two[None, :] * rho[:, :-2]
    return out


def liouvillian(rho, gain, loss, e, f):
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    out = np.empty_like(rho)
    return _rhs(rho, out, _sqrt_table(rho.shape[0]), gain, loss, complex(e), complex(f))


def rk4_evolve(rho, gain, loss, e, f, h, nsteps):
    N = rho.shape[0]
    s = _sqrt_table(N)
    e = complex(e)
    f = complex(f)
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    for _ in range(nsteps):
        _rhs(rho, k1, s, gain, loss, e, f)
        _rhs(rho + 0.5 * h * k1, k2, s, gain, loss, e, f)
        _rhs(rho + 0.5 * h * k2, k3, s, gain, loss, e, f)
        _rhs(rho + h * k3, k4, s, gain, loss, e, f)
        rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _moment_step_map(mu, beta, src_sq, src_occ, h):
    # y = (Re<a>, Im<a>, Re<a^2>, Im<a^2>, <a*a>, 1); the system is linear with
    # constant coefficients, so one RK4 step is a fixed 6x6 matrix
    J = np.zeros((6, 6))
    J[0, 0] = -0.5 * mu + beta
    J[1, 1] = -0.5 * mu - beta
    J[2, 2] = J[3, 3] = J[4, 4] = -mu
    J[2, 4] = J[4, 2] = 2.0 * beta
    J[2, 5] = src_sq
    J[4, 5] = src_occ
    eye = np.eye(6)
    k1 = J
    k2 = J @ (eye + 0.5 * h * k1)
    k3 = J @ (eye + 0.5 * h * k2)
    k4 = J @ (eye + h * k3)
    return eye + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def moment_rk4(y0, mu, beta, src_sq, src_occ, h, nsteps, stride):
    extra = 1 if nsteps % stride else 0
    out = np.empty((nsteps // stride + 1 + extra, 5))
    step_map = _moment_step_map(mu, beta, src_sq, src_occ, h)
    jump = np.linalg.matrix_power(step_map, stride)
    y = np.append(np.asarray(y0, dtype=float), 1.0)
    out[0] = y[:5]
    for row in range(1, nsteps // stride + 1):
        y = jump @ y
        out[row] = y[:5]
    if extra:
        y = np.linalg.matrix_power(step_map, nsteps % stride) @ y
        out[-1] = y[:5]
    return out
