"""Device-level electrical parameters and closed-form conversions.

Energies are carried as frequency equivalents E/h. Unless a name says
otherwise: capacitances in fF, currents in nA, frequencies in GHz, times
in ns.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable

from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import h as PLANCK
from scipy.constants import hbar as HBAR

#: E_J/E_C at and above which a junction-shunt circuit is treated as a transmon.
TRANSMON_THRESHOLD = 20.0


class DomainError(ValueError):
    """An argument lies outside the domain of a conversion."""


class RegimeWarning(UserWarning):
    """E_J/E_C is below the transmon threshold; asymptotic formulas are rough."""


@dataclass(frozen=True)
class EnergyScales:
    """Charging and Josephson energies (GHz) plus offset charge."""

    E_C: float
    E_J: float
    n_g: float = 0.0

    def __post_init__(self):
        if not self.E_C > 0:
            raise DomainError(f"E_C must be positive, got {self.E_C}")
        if not self.E_J >= 0:
            raise DomainError(f"E_J must be non-negative, got {self.E_J}")

    @property
    def ratio(self) -> float:
        return self.E_J / self.E_C

    @property
    def transmon_regime(self) -> bool:
        return self.ratio >= TRANSMON_THRESHOLD


# key in the config document -> attribute name
_DEVICE_KEYS = {
    "shunt_capacitance_fF": "C_S",
    "coupling_capacitance_fF": "C_g",
    "drive_capacitance_fF": "C_kappa",
    "critical_current_nA": "I_C",
    "bare_resonator_freq_GHz": "f_r0",
    "loaded_resonator_freq_GHz": "f_r",
    "qubit_resonator_coupling_MHz": "g_MHz",
    "drive_coupling_kHz": "kappa_kHz",
}


@dataclass(frozen=True)
class DeviceParams:
    """Electrical description of one qubit cell.

    ``g_MHz`` and ``kappa_kHz`` are the couplings divided by 2π.
    """

    C_S: float
    C_g: float
    C_kappa: float
    I_C: float
    f_r0: float
    f_r: float
    g_MHz: float
    kappa_kHz: float

    def __post_init__(self):
        bad = [key for key, attr in _DEVICE_KEYS.items()
               if not (math.isfinite(getattr(self, attr)) and getattr(self, attr) > 0)]
        if bad:
            raise DomainError("must be strictly positive: " + ", ".join(bad))
        if self.f_r > self.f_r0:
            raise DomainError(
                "loaded_resonator_freq_GHz exceeds bare_resonator_freq_GHz "
                f"({self.f_r} > {self.f_r0})")

    @classmethod
    def reference_device(cls) -> "DeviceParams":
        """The reference qubit cell (shunt 62.7 fF, f_r 7.14 GHz, ...)."""
        return cls(C_S=62.7, C_g=5.0, C_kappa=0.1, I_C=30.0, f_r0=7.56,
                   f_r=7.14, g_MHz=109.0, kappa_kHz=396.0)

    @property
    def energies(self) -> EnergyScales:
        return EnergyScales(E_C=charging_energy(self.C_S) / 1e3,
                            E_J=josephson_energy_from_current(self.I_C))

    def to_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _DEVICE_KEYS.items()}

    @classmethod
    def from_dict(cls, doc: dict) -> "DeviceParams":
        missing = [k for k in _DEVICE_KEYS if k not in doc]
        if missing:
            raise KeyError("missing device keys: " + ", ".join(missing))
        return cls(**{attr: float(doc[key]) for key, attr in _DEVICE_KEYS.items()})

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "DeviceParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


DEVICE_KEYS = tuple(_DEVICE_KEYS)


def charging_energy(C_S: float) -> float:
    """Charging energy e^2/(2 C_S h) in MHz for a shunt capacitance in fF."""
    if not C_S > 0:
        raise DomainError(f"capacitance must be positive, got {C_S} fF")
    return ELEMENTARY_CHARGE**2 / (2.0 * C_S * 1e-15 * PLANCK) / 1e6


def capacitance_from_charging_energy(E_C_MHz: float) -> float:
    if not E_C_MHz > 0:
        raise DomainError(f"E_C must be positive, got {E_C_MHz} MHz")
    return ELEMENTARY_CHARGE**2 / (2.0 * E_C_MHz * 1e6 * PLANCK) / 1e-15


def josephson_energy_from_current(I_C: float) -> float:
    """Josephson energy hbar I_C / 2e, as E_J/h in GHz, for I_C in nA."""
    if not I_C >= 0:
        raise DomainError(f"critical current must be non-negative, got {I_C} nA")
    return HBAR * I_C * 1e-9 / (2.0 * ELEMENTARY_CHARGE) / PLANCK / 1e9


def current_from_josephson_energy(E_J: float) -> float:
    """Inverse of :func:`josephson_energy_from_current` (GHz -> nA)."""
    if not E_J >= 0:
        raise DomainError(f"E_J must be non-negative, got {E_J} GHz")
    return E_J * 1e9 * PLANCK * 2.0 * ELEMENTARY_CHARGE / HBAR / 1e-9


def qubit_frequency_asymptotic(E: EnergyScales) -> float:
    """Transmon 0-1 frequency sqrt(8 E_J E_C) - E_C in GHz.

    Below the transmon threshold the value is still returned, with a
    :class:`RegimeWarning`.
    """
    if not E.transmon_regime:
        warnings.warn(f"E_J/E_C = {E.ratio:.3g} is below the transmon threshold "
                      f"{TRANSMON_THRESHOLD:g}", RegimeWarning, stacklevel=2)
    return math.sqrt(8.0 * E.E_J * E.E_C) - E.E_C


def josephson_energy_for_frequency(f_Q: float, E_C: float) -> float:
    """E_J (GHz) for which the asymptotic formula gives f_Q."""
    if not f_Q > -E_C:
        raise DomainError(f"no E_J gives f_Q = {f_Q} GHz at E_C = {E_C} GHz")
    return (f_Q + E_C) ** 2 / (8.0 * E_C)


def ej_ec_ratio(E: EnergyScales) -> float:
    return E.ratio


def kinetic_inductance_fraction(f_r: float, f_r0: float) -> float:
    """L_k / (L_k + L_geo) inferred from the downshift f_r0 -> f_r."""
    if not (0 < f_r <= f_r0):
        raise DomainError(f"need 0 < f_r <= f_r0, got f_r={f_r}, f_r0={f_r0}")
    return 1.0 - (f_r / f_r0) ** 2


def qubit_quality_factor(T1: float, f_Q: float) -> float:
    """Equivalent quality factor 2π f_Q T1 (T1 in ns, f_Q in GHz)."""
    if not (T1 > 0 and f_Q > 0):
        raise DomainError("T1 and f_Q must be positive")
    return 2.0 * math.pi * f_Q * T1


def t1_from_quality_factor(Q: float, f_Q: float) -> float:
    if not (Q > 0 and f_Q > 0):
        raise DomainError("Q and f_Q must be positive")
    return Q / (2.0 * math.pi * f_Q)


def t1_limit_from_drive_coupling(kappa_kHz: float) -> float:
    """Energy-decay limit (ns) of a port coupled at rate kappa/2π (kHz)."""
    if not kappa_kHz > 0:
        raise DomainError(f"coupling must be positive, got {kappa_kHz} kHz")
    return 1.0 / (2.0 * math.pi * kappa_kHz * 1e3) * 1e9


def combine_quality_factors(qs: Iterable[float]) -> float:
    """Parallel loss channels: 1/Q = sum(1/Q_i)."""
    qs = list(qs)
    if not qs:
        raise DomainError("need at least one quality factor")
    if any(not q > 0 for q in qs):
        raise DomainError("quality factors must be positive")
    return 1.0 / math.fsum(1.0 / q for q in qs)
