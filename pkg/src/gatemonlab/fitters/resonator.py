"""Notch-type resonator model and circle fit.

Model (f in GHz, delay in ns)::

    S21 = a e^{i alpha} e^{-2πi f delay} [1 - (Q_l/|Q_e|) e^{i phi} / (1 + 2i Q_l (f/f_r - 1))]

The fit follows the usual circle-fit route: remove the cable delay so the
data lie on a circle, fit that circle algebraically, fit the phase of the
centred data to get f_r and Q_l, read a, alpha and phi off the
off-resonant point, then optionally refine all seven parameters on the
complex data. Q_int uses the diameter-corrected relation
1/Q_int = 1/Q_l - cos(phi)/|Q_e|.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eig
from scipy.ndimage import gaussian_filter1d
from scipy.optimize import least_squares, minimize_scalar

from ..traces import ComplexTrace
from ._lsq import FitResult, levenberg_marquardt, not_converged

PARAM_NAMES = ("f_r", "Q_l", "Q_e_abs", "phi", "a", "alpha", "delay")


def notch_s21(f, f_r, Q_l, Q_e_abs, phi=0.0, a=1.0, alpha=0.0, delay=0.0):
    f = np.asarray(f, dtype=float)
    env = a * np.exp(1j * (alpha - 2.0 * np.pi * f * delay))
    return env * (1.0 - (Q_l / Q_e_abs) * np.exp(1j * phi) / (1.0 + 2j * Q_l * (f / f_r - 1.0)))


def loaded_q(Q_int, Q_e_abs, phi=0.0):
    """Q_l for given internal Q and |Q_e| (inverse of :func:`internal_q`)."""
    return 1.0 / (1.0 / Q_int + math.cos(phi) / Q_e_abs)


def internal_q(Q_l, Q_e_abs, phi=0.0):
    return 1.0 / (1.0 / Q_l - math.cos(phi) / Q_e_abs)


def synthesize_notch_s21(f_r, Q_l, Q_e_abs, phi=0.0, a=1.0, alpha=0.0, delay=0.0,
                         f_axis=None, n_points=1001, span_linewidths=10.0) -> ComplexTrace:
    """Model-exact notch trace. Default axis spans ``span_linewidths`` FWHM."""
    if not (Q_l > 0 and Q_e_abs > 0):
        raise ValueError("Q_l and |Q_e| must be positive")
    if f_axis is None:
        half = 0.5 * span_linewidths * f_r / Q_l
        f_axis = np.linspace(f_r - half, f_r + half, n_points)
    f_axis = np.asarray(f_axis, dtype=float)
    s = notch_s21(f_axis, f_r, Q_l, Q_e_abs, phi, a, alpha, delay)
    return ComplexTrace(f_axis, s, meta={"f_r_GHz": f_r, "Q_l": Q_l, "Q_e_abs": Q_e_abs,
                                         "phi": phi, "a": a, "alpha": alpha, "delay_ns": delay})


def add_complex_noise(trace: ComplexTrace, snr_dB: float, rng) -> ComplexTrace:
    """Circular Gaussian noise with total rms = off-resonant |S21| / 10^(snr/20)."""
    level = np.max(np.abs(trace.s21)) * 10.0 ** (-snr_dB / 20.0)
    noise = (rng.standard_normal(trace.f.size) + 1j * rng.standard_normal(trace.f.size))
    return ComplexTrace(trace.f, trace.s21 + level / math.sqrt(2.0) * noise,
                        np.full(trace.f.size, level**2), dict(trace.meta))


def fit_circle(z):
    """Algebraic (Pratt) circle fit. Returns (xc, yc, r).

    Minimises sum (A|z|^2 + B x + C y + D)^2 subject to B^2 + C^2 - 4AD = 1,
    i.e. the smallest non-negative generalized eigenvalue of (M, B).
    """
    z = np.asarray(z, dtype=complex)
    shift = 0.5 * (z.real.max() + z.real.min()) + 0.5j * (z.imag.max() + z.imag.min())
    zs = z - shift
    scale = np.max(np.abs(zs))
    if not scale > 0:
        raise ValueError("degenerate data: all points coincide")
    zs = zs / scale
    x, y = zs.real, zs.imag
    w = x * x + y * y
    cols = np.column_stack([w, x, y, np.ones_like(x)])
    M = cols.T @ cols
    B = np.array([[0, 0, 0, -2.0], [0, 1.0, 0, 0], [0, 0, 1.0, 0], [-2.0, 0, 0, 0]])
    vals, vecs = eig(M, B)
    vals = vals.real
    ok = np.isfinite(vals) & (vals > -1e-12 * np.max(np.abs(vals[np.isfinite(vals)])))
    if not np.any(ok):
        raise ValueError("degenerate circle fit")
    k = np.flatnonzero(ok)[np.argmin(vals[ok])]
    A, Bc, C, D = vecs[:, k].real
    if abs(A) < 1e-14:
        raise ValueError("degenerate circle fit: points are collinear")
    xc, yc = -Bc / (2 * A), -C / (2 * A)
    r = math.sqrt(Bc * Bc + C * C - 4 * A * D) / (2 * abs(A))
    return xc * scale + shift.real, yc * scale + shift.imag, r * scale


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def _circle_residual(z, norm):
    # not relative to r: that would favour large spurious circles through the tails
    xc, yc, r = fit_circle(z)
    return (np.abs(z - complex(xc, yc)) - r) / norm


def fit_delay(f, z):
    """Cable delay (ns) making the trace circular."""
    phase = np.unwrap(np.angle(z))
    guess = -np.polyfit(f, phase, 1)[0] / (2.0 * np.pi)
    span = f[-1] - f[0]
    norm = np.max(np.abs(z))

    def resid(p):
        return _circle_residual(z * np.exp(2j * np.pi * f * p[0]), norm)

    # the cost has side minima; scan +-half a phase turn across the span first
    grid = guess + np.linspace(-0.5, 0.5, 41) / span
    cost = []
    for d in grid:
        try:
            cost.append(np.sum(resid([d]) ** 2))
        except ValueError:
            cost.append(np.inf)
    i = int(np.argmin(cost))
    step = grid[1] - grid[0]

    def total(d):
        try:
            return float(np.sum(resid([d]) ** 2))
        except ValueError:
            return np.inf

    sol = minimize_scalar(total, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                          options={"xatol": 1e-6 * step})
    return float(sol.x)


def phase_centered(f, f_r, Q_l, theta0):
    return theta0 + 2.0 * np.arctan(2.0 * Q_l * (1.0 - f / f_r))


def _crossing(f, y, level):
    """First frequency where decreasing ``y`` falls through ``level``."""
    idx = np.flatnonzero((y[:-1] >= level) & (y[1:] < level))
    if idx.size == 0:
        return None
    i = idx[0]
    return f[i] + (level - y[i]) * (f[i + 1] - f[i]) / (y[i + 1] - y[i])


def fit_phase(f, zc):
    """Fit theta0 + 2 arctan(2 Q_l (1 - f/f_r)) to the phase of centred data.

    Starting values come from where the smoothed phase crosses the midpoint
    of its end values (f_r) and the midpoint +-π/2 (the half-linewidth points).
    """
    phase = np.unwrap(np.angle(zc))
    smooth = gaussian_filter1d(phase, max(1.0, f.size / 100.0), mode="nearest")
    if smooth[-1] > smooth[0]:
        # phase must fall through the resonance; a rising one means the circle is
        # traversed backwards, which the model cannot produce
        smooth = smooth[::-1].copy()
        fr0 = ql0 = None
    else:
        mid = 0.5 * (smooth[0] + smooth[-1])
        fr0 = _crossing(f, smooth, mid)
        lo, hi = _crossing(f, smooth, mid + 0.5 * np.pi), _crossing(f, smooth, mid - 0.5 * np.pi)
        ql0 = fr0 / (hi - lo) if (fr0 and lo and hi and hi > lo) else None
    if fr0 is None:
        fr0 = f[np.argmin(np.abs(np.gradient(smooth, f)) * -1)]
    if ql0 is None:
        ql0 = max(np.max(np.abs(np.gradient(smooth, f))) * fr0 / 4.0, 1.0)

    def resid(p):
        return _wrap(phase - phase_centered(f, p[0], p[1], p[2]))

    # a few starts; a single one can lock onto a noise step at high Q_l
    starts = [(fr0, ql0)] + [(fc, ql0) for fc in np.quantile(f, [0.3, 0.5, 0.7])]
    best = None
    for fc, q in starts:
        th = float(np.interp(fc, f, phase))
        sol = least_squares(resid, [fc, q, th], method="lm", x_scale="jac",
                            xtol=1e-14, ftol=1e-14, max_nfev=2000)
        fr, ql, _ = sol.x
        if not (f[0] < fr < f[-1]) or ql <= 0 or ql > 1e3 * ql0:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        return float(fr0), -1.0, 0.0
    fr, ql, th = best.x
    return float(fr), float(ql), float(th)


def _q_int_with_error(p, cov):
    ql, qe, phi = p["Q_l"], p["Q_e_abs"], p["phi"]
    inv = 1.0 / ql - math.cos(phi) / qe
    qi = 1.0 / inv
    if cov is None:
        return qi, None
    # d qi / d(ql, qe, phi)
    g = np.zeros(len(PARAM_NAMES))
    g[1] = qi**2 / ql**2
    g[2] = -qi**2 * math.cos(phi) / qe**2
    g[3] = -qi**2 * math.sin(phi) / qe
    return qi, float(math.sqrt(max(g @ cov @ g, 0.0)))


def fit_notch_resonator(trace: ComplexTrace, refine: bool = True,
                        fixed_delay=None) -> FitResult:
    """Estimate (f_r, Q_l, |Q_e|, phi, a, alpha, delay) and Q_int from S21."""
    f, z = trace.f, trace.s21
    if f.size < 20:
        return not_converged(PARAM_NAMES, "need at least 20 points")
    try:
        delay = fit_delay(f, z) if fixed_delay is None else float(fixed_delay)
        zd = z * np.exp(2j * np.pi * f * delay)
        xc, yc, r = fit_circle(zd)
    except ValueError as exc:
        return not_converged(PARAM_NAMES, f"circle fit failed: {exc}")
    zc = complex(xc, yc)
    if not (math.isfinite(r) and r > 1e-6 * abs(zc)):
        return not_converged(PARAM_NAMES, "no resonance dip detected (circle radius ~ 0)")
    fr, ql, theta0 = fit_phase(f, zd - zc)
    if not (f[0] < fr < f[-1]) or ql <= 0:
        return not_converged(PARAM_NAMES, f"phase fit placed f_r={fr:.6g} outside the trace "
                                          f"or Q_l={ql:.3g} <= 0")
    off_res = zc + r * np.exp(1j * (theta0 - np.pi))
    a, alpha = abs(off_res), float(np.angle(off_res))
    phi = float(_wrap(theta0 - np.pi - alpha))
    qe = ql * a / (2.0 * r)
    start = [fr, ql, qe, phi, a, alpha, delay]
    span_lw = (f[-1] - f[0]) * ql / fr
    note = "" if span_lw >= 3 else f"; trace spans only {span_lw:.2g} linewidths"

    if not refine:
        p = dict(zip(PARAM_NAMES, map(float, start)))
        resid = z - notch_s21(f, *start)
        res = FitResult(p, {}, float(np.linalg.norm(resid)), True, 0,
                        "circle fit only, no standard errors" + note)
        res.derived["Q_int"] = _q_int_with_error(p, None)[0]
        return res

    # fit in units where every parameter is O(1): f_r in linewidths from the start value
    offset = np.array([fr, 0, 0, 0, 0, 0, 0], dtype=float)
    scale = np.array([fr / ql, ql, qe, 1.0, a, 1.0, 1.0 / (f[-1] - f[0])])

    def residual(u):
        d = z - notch_s21(f, *(offset + u * scale))
        return np.concatenate([d.real, d.imag])

    u0 = (np.array(start) - offset) / scale
    res = levenberg_marquardt(residual, u0, PARAM_NAMES, x_scale=1.0)
    if not res.converged:
        res.message = "refinement: " + res.message
        return res
    u = np.array(list(res.params.values()))
    res.params = dict(zip(PARAM_NAMES, map(float, offset + u * scale)))
    if res.params["Q_l"] <= 0 or res.params["Q_e_abs"] <= 0 or res.params["a"] <= 0:
        return not_converged(PARAM_NAMES, "refinement reached non-physical Q_l, |Q_e| or a",
                             res.residual_norm, res.params)
    res.stderr = {k: v * s for (k, v), s in zip(res.stderr.items(), scale)}
    res.covariance = res.covariance * np.outer(scale, scale)
    res.params["phi"] = float(_wrap(res.params["phi"]))
    res.params["alpha"] = float(_wrap(res.params["alpha"]))
    qi, qi_err = _q_int_with_error(res.params, res.covariance)
    res.derived["Q_int"] = qi
    res.derived_stderr["Q_int"] = qi_err
    res.message += note
    return res
