# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: truncated-Fock Liouvillian and fixed-step RK4."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef double complex cplx


cdef inline cplx _conj(cplx z) nogil:
    return z.real - 1j * z.imag


cdef void _rhs(const cplx[:, ::1] rho, cplx[:, ::1] out, const double[::1] s,
               double gain, double loss, cplx e, cplx f) noexcept nogil:
    cdef Py_ssize_t N = rho.shape[0]
    cdef Py_ssize_t n, m
    cdef cplx pair = e + f
    cdef cplx pair_c = _conj(pair)
    cdef cplx e_c = _conj(e)
    cdef cplx f_c = _conj(f)
    cdef double aad_n, aad_m
    cdef cplx r, acc
    for n in range(N):
        aad_n = <double>(n + 1) if n < N - 1 else 0.0
        for m in range(N):
            aad_m = <double>(m + 1) if m < N - 1 else 0.0
            r = rho[n, m]
            acc = -(gain * (aad_n + aad_m) + loss * <double>(n + m)) * r
            if n >= 1 and m >= 1:
                acc = acc + 2.0 * gain * s[n] * s[m] * rho[n - 1, m - 1]
            if n + 1 < N and m + 1 < N:
                acc = acc + 2.0 * loss * s[n + 1] * s[m + 1] * rho[n + 1, m + 1]
            if n >= 1 and m + 1 < N:
                acc = acc + pair * (s[n] * s[m + 1]) * rho[n - 1, m + 1]
            if n + 1 < N and m >= 1:
                acc = acc + pair_c * (s[n + 1] * s[m]) * rho[n + 1, m - 1]
            if n + 2 < N:
                acc = acc - e_c * (s[n + 1] * s[n + 2]) * rho[n + 2, m]
            if m + 2 < N:
                acc = acc - e * (s[m + 1] * s[m + 2]) * rho[n, m + 2]
            if n >= 2:
                acc = acc - f * (s[n] * s[n - 1]) * rho[n - 2, m]
            if m >= 2:
                acc = acc - f_c * (s[m] * s[m - 1]) * rho[n, m - 2]
            out[n, m] = acc


def _sqrt_table(Py_ssize_t N):
    cdef cnp.ndarray[double, ndim=1] s = np.empty(N + 2)
    cdef Py_ssize_t k
    for k in range(N + 2):
        s[k] = sqrt(<double>k)
    return s


def liouvillian(cplx[:, ::1] rho, double gain, double loss, cplx e, cplx f):
    """Time derivative of ``rho`` under the cavity master equation."""
    cdef Py_ssize_t N = rho.shape[0]
    out = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:, ::1] out_v = out
    cdef double[::1] s = _sqrt_table(N)
    with nogil:
        _rhs(rho, out_v, s, gain, loss, e, f)
    return out


def rk4_evolve(cplx[:, ::1] rho, double gain, double loss, cplx e, cplx f,
               double h, Py_ssize_t nsteps):
    """Advance ``rho`` in place by ``nsteps`` classical RK4 steps of size ``h``."""
    cdef Py_ssize_t N = rho.shape[0]
    cdef double[::1] s = _sqrt_table(N)
    cdef cplx[:, ::1] k1 = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:, ::1] k2 = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:, ::1] k3 = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:, ::1] k4 = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((N, N), dtype=np.complex128)
    cdef Py_ssize_t step, i, j
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    with nogil:
        for step in range(nsteps):
            _rhs(rho, k1, s, gain, loss, e, f)
            for i in range(N):
                for j in range(N):
                    tmp[i, j] = rho[i, j] + h2 * k1[i, j]
            _rhs(tmp, k2, s, gain, loss, e, f)
            for i in range(N):
                for j in range(N):
                    tmp[i, j] = rho[i, j] + h2 * k2[i, j]
            _rhs(tmp, k3, s, gain, loss, e, f)
            for i in range(N):
                for j in range(N):
                    tmp[i, j] = rho[i, j] + h * k3[i, j]
            _rhs(tmp, k4, s, gain, loss, e, f)
            for i in range(N):
                for j in range(N):
                    rho[i, j] = rho[i, j] + h6 * (
                        k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])


cdef inline void _moment_rhs(const double* y, double* dy, double mu, double beta,
                             double src_sq, double src_occ) noexcept nogil:
    # y = (Re<a>, Im<a>, Re<a^2>, Im<a^2>, <a*a>)
    dy[0] = -0.5 * mu * y[0] + beta * y[0]
    dy[1] = -0.5 * mu * y[1] - beta * y[1]
    dy[2] = -mu * y[2] + 2.0 * beta * y[4] + src_sq
    dy[3] = -mu * y[3]
    dy[4] = -mu * y[4] + 2.0 * beta * y[2] + src_occ


def moment_rk4(double[::1] y0, double mu, double beta, double src_sq,
               double src_occ, double h, Py_ssize_t nsteps, Py_ssize_t stride):
    """RK4 for the first/second moment equations.

    Returns rows every ``stride`` steps, plus the terminal state when
    ``stride`` does not divide ``nsteps``.
    """
    cdef Py_ssize_t nrows = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    out = np.empty((nrows, 5))
    cdef double[:, ::1] out_v = out
    cdef double y[5]
    cdef double t[5]
    cdef double a1[5]
    cdef double a2[5]
    cdef double a3[5]
    cdef double a4[5]
    cdef Py_ssize_t step, i, row = 0
    for i in range(5):
        y[i] = y0[i]
        out_v[0, i] = y[i]
    with nogil:
        for step in range(1, nsteps + 1):
            _moment_rhs(y, a1, mu, beta, src_sq, src_occ)
            for i in range(5):
                t[i] = y[i] + 0.5 * h * a1[i]
            _moment_rhs(t, a2, mu, beta, src_sq, src_occ)
            for i in range(5):
                t[i] = y[i] + 0.5 * h * a2[i]
            _moment_rhs(t, a3, mu, beta, src_sq, src_occ)
            for i in range(5):
                t[i] = y[i] + h * a3[i]
            _moment_rhs(t, a4, mu, beta, src_sq, src_occ)
            for i in range(5):
                y[i] = y[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])
            if step % stride == 0:
                row += 1
                for i in range(5):
                    out_v[row, i] = y[i]
    if nsteps % stride:
        for i in range(5):
            out_v[nrows - 1, i] = y[i]
    return out
