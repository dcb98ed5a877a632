"""Pure-Python versions of the compiled kernels in ``_core.pyx``."""
import math

import numpy as np


def _envelope(t, omega, kind, width, sigma, on):
    if kind == 0:
        return omega if on else 0.0
    if t < 0.0 or t > width:
        return 0.0
    u = (t - 0.5 * width) / sigma
    return omega * math.exp(-0.5 * u * u)


def integrate_bloch(state0, t_out, dt_max, omega, phase, detuning, gamma1,
                    gamma2, z_eq, kind, width, sigma):
    cphi, sphi = math.cos(phase), math.sin(phase)

    def rhs(t, x, y, z, on):
        amp = _envelope(t, omega, kind, width, sigma, on)
        wx, wy = amp * cphi, amp * sphi
        return (wy * z - detuning * y - gamma2 * x,
                detuning * x - wx * z - gamma2 * y,
                wx * y - wy * x - gamma1 * (z - z_eq))

    x, y, z = (float(s) for s in state0)
    out = np.empty((len(t_out), 3))
    t = 0.0
    for k, target in enumerate(t_out):
        target = float(target)
        while t < target:
            seg_end = width if (t < width < target) else target
            on = 0.5 * (t + seg_end) < width
            nsteps = max(1, int(math.ceil((seg_end - t) / dt_max)))
            h = (seg_end - t) / nsteps
            for _ in range(nsteps):
                a = rhs(t, x, y, z, on)
                b = rhs(t + 0.5 * h, x + 0.5 * h * a[0], y + 0.5 * h * a[1], z + 0.5 * h * a[2], on)
                c = rhs(t + 0.5 * h, x + 0.5 * h * b[0], y + 0.5 * h * b[1], z + 0.5 * h * b[2], on)
                d = rhs(t + h, x + h * c[0], y + h * c[1], z + h * c[2], on)
                x = x + h / 6.0 * (a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0])
                y = y + h / 6.0 * (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1])
                z = z + h / 6.0 * (a[2] + 2.0 * b[2] + 2.0 * c[2] + d[2])
                t = t + h
            t = seg_end
        out[k] = (x, y, z)
    return out


def cosine_field(v, wavenumbers, phases, amplitude):
    m = len(wavenumbers)
    if m == 0:
        return np.zeros(len(v))
    norm = amplitude * math.sqrt(2.0 / m)
    out = np.empty(len(v))
    for i, vi in enumerate(v):
        acc = 0.0
        for k, p in zip(wavenumbers, phases):
            acc = acc + math.cos(k * vi + p)
        out[i] = norm * acc
    return out
