"""Rabi and T1 estimators for homodyne voltage records.

Times are ns, Rabi frequencies MHz.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.signal import hilbert

from ..traces import Sweep2D
from ._lsq import FitResult, levenberg_marquardt, not_converged

SINE_NAMES = ("T2_rabi", "nu_rabi", "slope", "intercept", "amplitude", "phase")
EXP_NAMES = ("T1", "amplitude", "offset")


class FitWarning(UserWarning):
    pass


def _xy(trace, y, x_name, y_name="v_h_mV"):
    if isinstance(trace, Sweep2D):
        names = trace.names
        x = trace[x_name] if x_name in trace else trace[names[0]]
        return np.asarray(x, float), np.asarray(trace[y_name] if y_name in trace
                                                else trace[names[1]], float)
    return np.asarray(trace, float), np.asarray(y, float)


def decaying_sinusoid(tau, T2, nu, slope, intercept, amplitude, phase):
    tau = np.asarray(tau, dtype=float)
    return (amplitude * np.exp(-tau / T2) * np.sin(2e-3 * math.pi * nu * tau + phase)
            + slope * tau + intercept)


def _linear_part(tau, v, T2, nu):
    """Best (A, phase, slope, intercept) for fixed T2 and nu."""
    env = np.exp(-tau / T2)
    w = 2e-3 * math.pi * nu * tau
    basis = np.column_stack([env * np.sin(w), env * np.cos(w), tau, np.ones_like(tau)])
    c, *_ = np.linalg.lstsq(basis, v, rcond=None)
    return math.hypot(c[0], c[1]), math.atan2(c[1], c[0]), c[2], c[3]


def _uniform(tau, v):
    if np.allclose(np.diff(tau), tau[1] - tau[0], rtol=1e-6, atol=0):
        return tau, v
    grid = np.linspace(tau[0], tau[-1], tau.size)
    return grid, np.interp(grid, tau, v)


def sinusoid_guess(tau, v):
    """FFT-peak frequency (MHz), envelope T2 (ns) and peak prominence."""
    tu, vu = _uniform(tau, v)
    vu = vu - np.polyval(np.polyfit(tu, vu, 1), tu)
    n = 8 * tu.size
    spec = np.abs(np.fft.rfft(vu * np.hanning(tu.size), n))
    freqs = np.fft.rfftfreq(n, tu[1] - tu[0]) * 1e3
    spec[0] = 0.0
    k = int(np.argmax(spec))
    prominence = spec[k] / max(np.median(spec[1:]), 1e-300)
    nu = freqs[k]
    env = np.abs(hilbert(vu))
    # envelope edges are distorted by the transform; use the middle
    lo, hi = tu.size // 10, tu.size - tu.size // 10
    good = env[lo:hi] > 1e-12 * env.max()
    span = tu[-1] - tu[0]
    T2 = span
    if good.sum() >= 3:
        rate = -np.polyfit(tu[lo:hi][good], np.log(env[lo:hi][good]), 1)[0]
        if rate > 0:
            T2 = min(1.0 / rate, 10.0 * span)
    return nu, T2, prominence


def fit_decaying_sinusoid(trace, v=None, mode="full", min_prominence=8.0) -> FitResult:
    """Fit A e^{-tau/T2} sin(2π nu tau + phase) + slope tau + intercept.

    ``mode="four"`` freezes amplitude and phase at values read off the
    first oscillation period and fits only T2, nu, slope and intercept.
    """
    if mode not in ("full", "four"):
        raise ValueError("mode must be 'full' or 'four'")
    tau, v = _xy(trace, v, "tau_ns")
    order = np.argsort(tau)
    tau, v = tau[order], v[order]
    if tau.size < 8:
        return not_converged(SINE_NAMES, "need at least 8 points")
    nu0, T20, prom = sinusoid_guess(tau, v)
    span = tau[-1] - tau[0]
    if prom < min_prominence:
        return not_converged(SINE_NAMES, f"FFT peak indistinct (prominence {prom:.2g})")
    if nu0 * 1e-3 * span < 3.0:
        return not_converged(SINE_NAMES, f"only {nu0 * 1e-3 * span:.2g} periods sampled; need 3")
    A0, ph0, m0, b0 = _linear_part(tau, v, T20, nu0)

    if mode == "four":
        first = tau <= tau[0] + 1e3 / nu0
        if first.sum() < 4:
            return not_converged(SINE_NAMES, "first period has fewer than 4 points")
        names = SINE_NAMES[:4]
        x0 = [T20, nu0, m0, b0]
        # amplitude and phase come from the first period only; re-read them once
        # the decay and frequency have been refined
        for _ in range(3):
            A0, ph0, _, _ = _linear_part(tau[first], v[first], x0[0], x0[1])
            res = levenberg_marquardt(
                lambda p: decaying_sinusoid(tau, p[0], p[1], p[2], p[3], A0, ph0) - v, x0, names)
            if not res.converged:
                break
            x0 = [res.params[n] for n in names]
    else:
        res = levenberg_marquardt(lambda p: decaying_sinusoid(tau, *p) - v,
                                  [T20, nu0, m0, b0, A0, ph0], SINE_NAMES)

    if mode == "four":
        res.params.update(amplitude=A0, phase=ph0)
    if res.converged and res.params["T2_rabi"] <= 0:
        res.converged, res.stderr = False, {}
        res.message = "fitted T2 is not positive"
    if res.converged and res.params["amplitude"] < 0:
        res.params["amplitude"] = -res.params["amplitude"]
        res.params["phase"] += math.pi
    res.params["phase"] = float((res.params["phase"] + math.pi) % (2 * math.pi) - math.pi)
    return res


def exponential(t, T1, amplitude, offset):
    return amplitude * np.exp(-np.asarray(t, dtype=float) / T1) + offset


def fit_exponential(trace, v=None) -> FitResult:
    """Fit amplitude e^{-t/T1} + offset.

    The starting T1 comes from a log-spaced scan with amplitude and offset
    solved linearly at each value. A trace shorter than 2 T1 gets a
    FitWarning.
    """
    t, v = _xy(trace, v, "t_ns")
    order = np.argsort(t)
    t, v = t[order], v[order]
    if t.size < 4:
        return not_converged(EXP_NAMES, "need at least 4 points")
    span = t[-1] - t[0]
    if not span > 0:
        return not_converged(EXP_NAMES, "time axis has zero span")

    def linear(T1):
        basis = np.column_stack([np.exp(-t / T1), np.ones_like(t)])
        c, *_ = np.linalg.lstsq(basis, v, rcond=None)
        return c, float(np.sum((basis @ c - v) ** 2))

    step = max(np.min(np.diff(t)), span * 1e-3)
    scan = np.geomspace(step, 10.0 * span, 80)
    costs = [linear(T)[1] for T in scan]
    T0 = scan[int(np.argmin(costs))]
    (A0, c0), _ = linear(T0)

    def resid(p):
        with np.errstate(over="ignore"):
            return exponential(t, *p) - v

    res = levenberg_marquardt(resid, [T0, A0, c0], EXP_NAMES)
    if not res.converged:
        return res
    T1, A = res.params["T1"], res.params["amplitude"]
    if (not (0 < T1 < 10.0 * span) or abs(A) < 2.0 * res.stderr["amplitude"]
            or res.stderr["T1"] > T1):
        res.converged, res.stderr = False, {}
        res.message = "no decay resolved in the data"
        return res
    if span < 2.0 * T1:
        warnings.warn(f"trace spans {span:.3g} ns < 2 T1 = {2 * T1:.3g} ns", FitWarning,
                      stacklevel=2)
    return res
