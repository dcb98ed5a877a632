"""Gate voltage to Josephson energy transfer function.

E_J(V) = saturation_EJ * logistic((V - pinchoff) / width) * (1 + field(V)),
where ``field`` is a seeded, band-limited zero-mean random function: a sum
of M cosines with Gaussian-distributed wavenumbers (std 1/correlation
length) and uniform phases. Its autocorrelation is
amplitude^2 * exp(-dV^2 / (2 * correlation_length^2)).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from . import _kernels
from .params import (TRANSMON_THRESHOLD, RegimeWarning, josephson_energy_for_frequency)
from .traces import Sweep2D


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class GateMap:
    pinchoff_voltage: float = -3.55
    saturation_EJ: float = 30.0
    transition_width: float = 0.005
    fluctuation_amplitude: float = 0.05
    correlation_length: float = 0.002
    rng_seed: int = 0
    n_modes: int = 64

    def __post_init__(self):
        if self.fluctuation_amplitude < 0:
            raise ValueError("fluctuation_amplitude must be >= 0")
        if not self.correlation_length > 0:
            raise ValueError("correlation_length must be > 0")
        if not self.saturation_EJ > 0:
            raise ValueError("saturation_EJ must be > 0")
        if not self.transition_width > 0:
            raise ValueError("transition_width must be > 0")
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")

    @cached_property
    def _modes(self):
        rng = np.random.default_rng(np.random.SeedSequence(int(self.rng_seed) & (2**64 - 1)))
        k = rng.standard_normal(self.n_modes) / self.correlation_length
        phi = rng.uniform(0.0, 2.0 * math.pi, self.n_modes)
        return np.ascontiguousarray(k), np.ascontiguousarray(phi)

    def fluctuation_field(self, V):
        V = np.ascontiguousarray(np.atleast_1d(V), dtype=float)
        if self.fluctuation_amplitude == 0:
            return np.zeros_like(V)
        k, phi = self._modes
        return _kernels.cosine_field(V, k, phi, float(self.fluctuation_amplitude))

    def baseline(self, V):
        V = np.asarray(V, dtype=float)
        return self.saturation_EJ * expit((V - self.pinchoff_voltage) / self.transition_width)

    def to_dict(self) -> dict:
        return {
            "pinchoff_voltage_V": self.pinchoff_voltage,
            "saturation_EJ_GHz": self.saturation_EJ,
            "transition_width_V": self.transition_width,
            "fluctuation_amplitude": self.fluctuation_amplitude,
            "correlation_length_V": self.correlation_length,
            "rng_seed": self.rng_seed,
            "n_modes": self.n_modes,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GateMap":
        names = {"pinchoff_voltage_V": "pinchoff_voltage", "saturation_EJ_GHz": "saturation_EJ",
                 "transition_width_V": "transition_width",
                 "fluctuation_amplitude": "fluctuation_amplitude",
                 "correlation_length_V": "correlation_length", "rng_seed": "rng_seed",
                 "n_modes": "n_modes"}
        kw = {attr: doc[key] for key, attr in names.items() if key in doc}
        for key in ("rng_seed", "n_modes"):
            if key in kw:
                kw[key] = int(kw[key])
        return cls(**kw)


def ej_of_voltage(gmap: GateMap, V):
    """Josephson energy (GHz) at gate voltage(s) ``V``; never negative."""
    scalar = np.ndim(V) == 0
    V = np.atleast_1d(np.asarray(V, dtype=float))
    ej = gmap.baseline(V) * (1.0 + gmap.fluctuation_field(V))
    ej = np.maximum(ej, 0.0)
    return float(ej[0]) if scalar else ej


def fq_sweep(gmap: GateMap, E_C: float, V_values) -> Sweep2D:
    """Asymptotic transmon frequency along a gate sweep.

    Points below the transmon threshold still get a value; one
    RegimeWarning summarises how many there were.
    """
    V = np.asarray(V_values, dtype=float)
    if V.size == 0:
        raise ValueError("V_values must be non-empty")
    ej = ej_of_voltage(gmap, V)
    fq = np.sqrt(8.0 * ej * E_C) - E_C
    low = int(np.sum(ej / E_C < TRANSMON_THRESHOLD))
    if low:
        warnings.warn(f"{low} of {V.size} sweep points below E_J/E_C = "
                      f"{TRANSMON_THRESHOLD:g}", RegimeWarning, stacklevel=2)
    return Sweep2D({"V_G_V": V, "E_J_GHz": ej, "f_Q_GHz": fq}, {"E_C_GHz": E_C})


def calibrate_map(target_points, E_C: float, template: GateMap | None = None,
                  include_fluctuations: bool = False) -> GateMap:
    """Fit the logistic baseline so the map passes through (V, f_Q) targets.

    With two targets the transition width is held at the template value and
    pinchoff and saturation are solved for; with three or more all three
    baseline parameters are fitted. Fluctuation parameters are copied from
    the template. By default the amplitude-0 baseline is fitted; with
    ``include_fluctuations`` the targets are divided by the template's
    (1 + field) first, so the full fluctuating map hits them instead.
    """
    template = template or GateMap()
    pts = sorted((float(v), float(f)) for v, f in target_points)
    if len(pts) < 2:
        raise CalibrationError("need at least two target points")
    V = np.array([p[0] for p in pts])
    fq = np.array([p[1] for p in pts])
    if np.any(np.diff(V) <= 0):
        raise CalibrationError("target voltages must be distinct")
    if np.any(np.diff(fq) <= 0):
        raise CalibrationError("targets are not monotone increasing in V; "
                               "a logistic baseline cannot pass through them")
    ej = np.array([josephson_energy_for_frequency(f, E_C) for f in fq])
    if include_fluctuations:
        ej = ej / (1.0 + template.fluctuation_field(V))
        if np.any(np.diff(ej) <= 0):
            raise CalibrationError("fluctuation-corrected targets are not monotone")
    log_target = np.log(ej)
    fit_width = len(pts) >= 3

    def unpack(p):
        v0, log_s = p[0], p[1]
        w = math.exp(p[2]) if fit_width else template.transition_width
        return v0, math.exp(log_s), w

    def resid(p):
        v0, s, w = unpack(p)
        x = (V - v0) / w
        return math.log(s) - np.logaddexp(0.0, -x) - log_target

    # start from the template width, pinchoff placed so the targets sit on the rising edge
    w0 = template.transition_width
    x0 = [V[0] - w0, log_target[-1] + 0.5]
    if fit_width:
        x0.append(math.log(w0))
    sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=2000)
    v0, s, w = unpack(sol.x)
    gmap = replace(template, pinchoff_voltage=float(v0), saturation_EJ=float(s),
                   transition_width=float(w))
    # check in frequency units
    test = gmap if include_fluctuations else replace(gmap, fluctuation_amplitude=0.0)
    got = np.sqrt(8.0 * ej_of_voltage(test, V) * E_C) - E_C
    if not sol.success or np.max(np.abs(got - fq)) > 1e-6:
        raise CalibrationError(f"calibration did not reach the targets (max miss "
                               f"{np.max(np.abs(got - fq)) * 1e3:.3g} MHz): {sol.message}")
    return gmap
