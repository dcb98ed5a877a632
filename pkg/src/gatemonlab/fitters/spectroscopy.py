"""Line-shape, avoided-crossing and drive-power-law estimators."""
from __future__ import annotations

import math

import numpy as np

from ..params import DomainError
from ..traces import Sweep2D
from ._lsq import FitResult, levenberg_marquardt, not_converged

LORENTZ_NAMES = ("f_0", "linewidth", "depth", "baseline")
CROSSING_NAMES = ("g_MHz", "f_r", "qubit_intercept", "qubit_slope")


class NotBracketedError(ValueError):
    pass


def lorentzian_dip(f, f_0, linewidth, depth, baseline):
    x = 2.0 * (np.asarray(f, dtype=float) - f_0) / linewidth
    return baseline - depth / (1.0 + x * x)


def fit_lorentzian_dip(f, mag=None) -> FitResult:
    """Fit baseline - depth / (1 + (2 (f - f_0) / linewidth)^2).

    ``linewidth`` is the full width at half depth, in the units of ``f``.
    """
    if isinstance(f, Sweep2D):
        f, mag = f[f.names[0]], f[f.names[1]]
    f, mag = np.asarray(f, float), np.asarray(mag, float)
    if f.size < 5:
        return not_converged(LORENTZ_NAMES, "need at least 5 points")
    order = np.argsort(f)
    f, mag = f[order], mag[order]
    edge = max(1, f.size // 10)
    base0 = float(np.median(np.concatenate([mag[:edge], mag[-edge:]])))
    k = int(np.argmin(mag))
    depth0 = base0 - mag[k]
    if not depth0 > 0:
        return not_converged(LORENTZ_NAMES, "no dip below the baseline")
    below = np.flatnonzero(mag < base0 - 0.5 * depth0)
    lw0 = max(f[below[-1]] - f[below[0]], f[1] - f[0]) if below.size else (f[-1] - f[0]) / 4
    res = levenberg_marquardt(lambda p: lorentzian_dip(f, *p) - mag,
                              [f[k], lw0, depth0, base0], LORENTZ_NAMES)
    if res.converged:
        p = res.params
        p["linewidth"] = abs(p["linewidth"])
        if p["depth"] <= 2.0 * res.stderr["depth"] or not f[0] <= p["f_0"] <= f[-1]:
            res.converged, res.stderr = False, {}
            res.message = "dip not resolved above the noise"
    return res


def crossing_branches(x, g_MHz, f_r, qubit_intercept, qubit_slope):
    """Lower and upper branch (GHz) for a bare qubit line f_b = intercept + slope x."""
    fb = qubit_intercept + qubit_slope * np.asarray(x, dtype=float)
    g = g_MHz * 1e-3
    mid = 0.5 * (fb + f_r)
    half = np.sqrt(g * g + 0.25 * (fb - f_r) ** 2)
    return mid - half, mid + half


def fit_avoided_crossing(x, minus=None, plus=None) -> FitResult:
    """Fit both hybridized branches of a qubit-resonator anticrossing.

    ``x`` is the control axis (bare qubit frequency, gate voltage, ...), the
    branches are in GHz. Accepts a Sweep2D with the three columns in order.
    Raises NotBracketedError if the bare qubit line never crosses f_r.
    """
    if isinstance(x, Sweep2D):
        x, minus, plus = (x[n] for n in x.names[:3])
    x, lo, hi = (np.asarray(a, float) for a in (x, minus, plus))
    if not (x.size == lo.size == hi.size) or x.size < 5:
        raise ValueError("need at least 5 points with equal-length columns")
    gap = hi - lo
    k = int(np.argmin(gap))
    fr0 = 0.5 * (lo[k] + hi[k])
    fb = hi + lo - fr0
    slope0, intercept0 = np.polyfit(x, fb, 1)
    line = intercept0 + slope0 * x
    if not (np.min(line - fr0) < 0 < np.max(line - fr0)):
        raise NotBracketedError("the qubit line does not cross the resonator within the sweep")
    g0 = max(0.5 * gap[k] * 1e3, 1e-3)

    def resid(p):
        m, pl = crossing_branches(x, *p)
        return np.concatenate([m - lo, pl - hi])

    res = levenberg_marquardt(resid, [g0, fr0, intercept0, slope0], CROSSING_NAMES)
    res.params["g_MHz"] = abs(res.params["g_MHz"])
    return res


def fit_sqrt_power_law(P_mW, nu_MHz, anharmonicity_MHz=None) -> FitResult:
    """Least-squares coefficient c in nu = c sqrt(P).

    With ``anharmonicity_MHz`` only points with nu < |anharmonicity| / 4
    are used. ``derived`` carries the number of points used and the rms
    relative deviation of all points from the fitted law.
    """
    P, nu = np.asarray(P_mW, float), np.asarray(nu_MHz, float)
    if P.size != nu.size:
        raise ValueError("P_mW and nu_MHz differ in length")
    if not np.all(np.isfinite(nu)):
        raise ValueError("Rabi frequencies must be finite")
    if np.any(~(P > 0)):
        raise DomainError("drive powers must be positive")
    use = np.ones(P.size, bool)
    if anharmonicity_MHz is not None:
        use = nu < abs(anharmonicity_MHz) / 4.0
    if use.sum() < 3:
        return not_converged(("c",), f"only {int(use.sum())} points in the fit subset; need 3")
    s, y = np.sqrt(P[use]), nu[use]
    c = float(s @ y / (s @ s))
    resid = y - c * s
    dof = max(use.sum() - 1, 1)
    se = math.sqrt(float(resid @ resid) / dof / float(s @ s))
    dev = nu / (c * np.sqrt(P)) - 1.0
    return FitResult({"c": c}, {"c": se}, float(np.linalg.norm(resid)), True, 1,
                     "linear least squares",
                     derived={"n_used": float(use.sum()),
                              "max_rel_deviation": float(np.max(np.abs(dev[use]))),
                              "rms_rel_deviation_all": float(np.sqrt(np.mean(dev**2)))})
