# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors gatemonlab._kernels._fallback exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, ceil, sqrt

cnp.import_array()


cdef inline double _envelope(double t, double omega, int kind, double width,
                             double sigma, bint on) nogil:
    if kind == 0:
        return omega if on else 0.0
    if t < 0.0 or t > width:
        return 0.0
    cdef double u = (t - 0.5 * width) / sigma
    return omega * exp(-0.5 * u * u)


cdef inline void _rhs(double t, double* r, double* out, double omega, double cphi,
                      double sphi, double detuning, double g1, double g2, double z_eq,
                      int kind, double width, double sigma, bint on) nogil:
    cdef double amp = _envelope(t, omega, kind, width, sigma, on)
    cdef double wx = amp * cphi
    cdef double wy = amp * sphi
    out[0] = wy * r[2] - detuning * r[1] - g2 * r[0]
    out[1] = detuning * r[0] - wx * r[2] - g2 * r[1]
    out[2] = wx * r[1] - wy * r[0] - g1 * (r[2] - z_eq)


def integrate_bloch(double[::1] state0, double[::1] t_out, double dt_max,
                    double omega, double phase, double detuning, double gamma1,
                    double gamma2, double z_eq, int kind, double width, double sigma):
    """Fixed-step RK4 for the rotating-frame Bloch equations.

    Integration starts at t = 0. Steps are split so that every output time
    and the pulse end fall on a step boundary.
    """
    cdef Py_ssize_t n = t_out.shape[0]
    out_arr = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double r[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double tmp[3]
    cdef double cphi = cos(phase), sphi = sin(phase)
    cdef double t = 0.0, target, seg_end, h
    cdef Py_ssize_t k, i, j, nsteps
    cdef bint on
    r[0] = state0[0]; r[1] = state0[1]; r[2] = state0[2]
    with nogil:
        for k in range(n):
            target = t_out[k]
            while t < target:
                seg_end = target
                if t < width and width < target:
                    seg_end = width
                on = 0.5 * (t + seg_end) < width
                nsteps = <Py_ssize_t> ceil((seg_end - t) / dt_max)
                if nsteps < 1:
                    nsteps = 1
                h = (seg_end - t) / nsteps
                for i in range(nsteps):
                    _rhs(t, r, k1, omega, cphi, sphi, detuning, gamma1, gamma2, z_eq,
                         kind, width, sigma, on)
                    for j in range(3):
                        tmp[j] = r[j] + 0.5 * h * k1[j]
                    _rhs(t + 0.5 * h, tmp, k2, omega, cphi, sphi, detuning, gamma1,
                         gamma2, z_eq, kind, width, sigma, on)
                    for j in range(3):
                        tmp[j] = r[j] + 0.5 * h * k2[j]
                    _rhs(t + 0.5 * h, tmp, k3, omega, cphi, sphi, detuning, gamma1,
                         gamma2, z_eq, kind, width, sigma, on)
                    for j in range(3):
                        tmp[j] = r[j] + h * k3[j]
                    _rhs(t + h, tmp, k4, omega, cphi, sphi, detuning, gamma1,
                         gamma2, z_eq, kind, width, sigma, on)
                    for j in range(3):
                        r[j] = r[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                    t = t + h
                t = seg_end
            out[k, 0] = r[0]; out[k, 1] = r[1]; out[k, 2] = r[2]
    return out_arr


def cosine_field(double[::1] v, double[::1] wavenumbers, double[::1] phases,
                 double amplitude):
    """amplitude * sqrt(2/M) * sum_m cos(k_m v + phi_m) at each v."""
    cdef Py_ssize_t n = v.shape[0], m = wavenumbers.shape[0], i, j
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, norm = amplitude * sqrt(2.0 / m) if m > 0 else 0.0
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc = acc + cos(wavenumbers[j] * v[i] + phases[j])
            out[i] = norm * acc
    return out_arr
