"""Driven, damped qubit evolution and synthetic homodyne records.

Rotating frame at the drive frequency, rotating-wave approximation. The
Bloch vector uses z = <sigma_z> with the excited state at z = +1, so the
excited population is (1 + z)/2. Drive amplitudes are Rabi frequencies
Omega/2π in MHz, times are ns, qubit and carrier frequencies GHz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .traces import Trace

TWO_PI = 2.0 * math.pi
RECTANGULAR, GAUSSIAN = "rectangular", "gaussian"
_ENVELOPES = {RECTANGULAR: 0, GAUSSIAN: 1}


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class DissipationRates:
    T1: float
    T2: float
    thermal_population: float = 0.0

    def __post_init__(self):
        if not (self.T1 > 0 and self.T2 > 0):
            raise ValueError("T1 and T2 must be positive")
        if self.T2 > 2.0 * self.T1 * (1 + 1e-12):
            raise ValueError(f"unphysical T2 = {self.T2} > 2 T1 = {2 * self.T1}")
        if not 0.0 <= self.thermal_population < 0.5:
            raise ValueError("thermal_population must lie in [0, 0.5)")

    @property
    def gamma1(self):
        return 0.0 if math.isinf(self.T1) else 1.0 / self.T1

    @property
    def gamma2(self):
        return 0.0 if math.isinf(self.T2) else 1.0 / self.T2

    @property
    def z_eq(self):
        return 2.0 * self.thermal_population - 1.0

    @property
    def rabi_decay_time(self):
        """Envelope decay time of strongly driven Rabi oscillations."""
        g = 0.5 * (self.gamma1 + self.gamma2)
        return math.inf if g == 0 else 1.0 / g

    @classmethod
    def lossless(cls):
        return cls(math.inf, math.inf)


@dataclass(frozen=True)
class DrivePulse:
    carrier_frequency: float
    rabi_MHz: float
    width: float
    envelope: str = RECTANGULAR
    phase: float = 0.0

    def __post_init__(self):
        if self.width < 0 or self.rabi_MHz < 0:
            raise ValueError("pulse width and amplitude must be non-negative")
        if self.envelope not in _ENVELOPES:
            raise ValueError(f"unknown envelope {self.envelope!r}")

    @property
    def sigma(self):
        # gaussian pulses are truncated at +-2 sigma
        return self.width / 4.0 if self.width > 0 else 1.0


@dataclass(frozen=True)
class HomodyneModel:
    v_ground: float = 0.0
    v_excited: float = 1.0
    linear_slope: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Generator for record ``stream``, independent of evaluation order."""
        seq = np.random.SeedSequence(int(self.rng_seed) & (2**64 - 1), spawn_key=(int(stream),))
        return np.random.default_rng(seq)

    def voltage(self, p1, axis, sigma=None, stream=0):
        p1 = np.asarray(p1, dtype=float)
        axis = np.asarray(axis, dtype=float)
        v = self.v_ground + (self.v_excited - self.v_ground) * p1 + self.linear_slope * axis
        sigma = self.noise_sigma if sigma is None else sigma
        if sigma > 0:
            v = v + sigma * self.rng(stream).standard_normal(v.shape)
        return v


def rabi_population(omega_MHz, delta_MHz, t):
    """Lossless excited population after driving for ``t`` ns from ground."""
    omega = np.asarray(omega_MHz, dtype=float)
    delta = np.asarray(delta_MHz, dtype=float)
    gen2 = omega**2 + delta**2
    with np.errstate(invalid="ignore", divide="ignore"):
        contrast = np.where(gen2 > 0, omega**2 / np.where(gen2 > 0, gen2, 1.0), 0.0)
    p = contrast * np.sin(math.pi * np.sqrt(gen2) * 1e-3 * np.asarray(t, dtype=float)) ** 2
    return p if p.ndim else float(p)


def steady_state_population(rates: DissipationRates, omega_MHz, delta_MHz=0.0):
    """Excited population under continuous drive, t -> infinity."""
    W = TWO_PI * np.asarray(omega_MHz, dtype=float) * 1e-3
    D = TWO_PI * np.asarray(delta_MHz, dtype=float) * 1e-3
    g1, g2 = rates.gamma1, rates.gamma2
    if g1 == 0:
        return 0.5 * np.ones_like(W) if np.ndim(W) else 0.5
    # standard Bloch steady state, z_ss = z_eq (g2^2 + D^2) / (g2^2 + D^2 + W^2 g2/g1)
    z = rates.z_eq * (g2**2 + D**2) / (g2**2 + D**2 + W**2 * g2 / g1)
    return 0.5 * (1.0 + z)


def saturated_dispersive_shift(chi_MHz: float, steady_p1: float) -> float:
    """Ensemble-averaged resonator pull 2 chi P1 under continuous drive."""
    if not 0.0 <= steady_p1 <= 1.0:
        raise ValueError("steady_p1 must lie in [0, 1]")
    return 2.0 * chi_MHz * steady_p1


def rabi_frequency_from_power(drive_power_dBm, power_to_rabi):
    """Omega/2π (MHz) for a drive power, given MHz per sqrt(mW)."""
    p_mW = 10.0 ** (np.asarray(drive_power_dBm, dtype=float) / 10.0)
    return power_to_rabi * np.sqrt(p_mW)


def default_step(rates: DissipationRates, pulse: DrivePulse | None, detuning_MHz: float,
                 steps_per_period: int = 1000) -> float:
    """Largest RK4 step (ns) used by :func:`evolve_bloch` by default."""
    rabi = pulse.rabi_MHz if pulse is not None else 0.0
    f_eff = math.hypot(rabi, detuning_MHz) * 1e-3  # cycles per ns
    dt = 1.0
    if f_eff > 0:
        dt = min(dt, 1.0 / (steps_per_period * f_eff))
    for T in (rates.T1, rates.T2):
        if math.isfinite(T):
            dt = min(dt, T / 400.0)
    if pulse is not None and pulse.envelope == GAUSSIAN and pulse.width > 0:
        dt = min(dt, pulse.sigma / 40.0)
    return dt


def evolve_bloch(rates: DissipationRates, pulse: DrivePulse | None, qubit_f01: float,
                 t_grid, initial=(0.0, 0.0, -1.0), dt=None, check=False,
                 check_tol=1e-8) -> Trace:
    """Bloch-vector trajectory sampled at ``t_grid`` (ns).

    The pulse starts at t = 0; ``pulse=None`` means free evolution. With
    ``check=True`` the run is repeated at half the step and the Richardson
    estimate of the error is stored in ``meta['error_estimate']``; an
    estimate above ``check_tol`` raises :class:`IntegrationError`.
    """
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    if t_grid.size and (np.any(np.diff(t_grid) < 0) or t_grid[0] < 0):
        raise ValueError("t_grid must be non-negative and sorted ascending")
    if pulse is None:
        pulse = DrivePulse(qubit_f01, 0.0, 0.0)
    detuning_MHz = (qubit_f01 - pulse.carrier_frequency) * 1e3
    if dt is None:
        dt = default_step(rates, pulse, detuning_MHz)
    args = (TWO_PI * pulse.rabi_MHz * 1e-3, pulse.phase, TWO_PI * detuning_MHz * 1e-3,
            rates.gamma1, rates.gamma2, rates.z_eq, _ENVELOPES[pulse.envelope],
            pulse.width, pulse.sigma)
    r0 = np.ascontiguousarray(initial, dtype=float)
    r = _kernels.integrate_bloch(r0, t_grid, dt, *args)
    meta = {"dt": dt}
    if check:
        r_half = _kernels.integrate_bloch(r0, t_grid, dt / 2.0, *args)
        est = float(np.max(np.abs(r_half - r)) * 16.0 / 15.0) if r.size else 0.0
        meta["error_estimate"] = est
        if not np.all(np.isfinite(r_half)) or est > check_tol:
            raise IntegrationError(f"step {dt:.3g} ns gives error estimate {est:.2e} "
                                   f"> {check_tol:.1e}")
        r = r_half
    if not np.all(np.isfinite(r)):
        raise IntegrationError("Bloch integration diverged")
    return Trace({"t_ns": t_grid, "x": r[:, 0], "y": r[:, 1], "z": r[:, 2],
                  "p1": 0.5 * (1.0 + r[:, 2])}, meta)


def three_level_populations(rates: DissipationRates, rabi_MHz: float, detuning_MHz: float,
                            anharmonicity_MHz: float, times) -> np.ndarray:
    """Populations (n, 3) of a driven transmon truncated to three levels.

    Constant drive from the ground state; the 1-2 transition sees a sqrt(2)
    larger coupling and is detuned by the anharmonicity. Lindblad damping
    uses T1 for 1->0 (2->1 twice as fast) and pure dephasing from T2.
    """
    times = np.asarray(times, dtype=float)
    W = TWO_PI * rabi_MHz * 1e-3
    dq = TWO_PI * detuning_MHz * 1e-3
    a = TWO_PI * anharmonicity_MHz * 1e-3
    H = np.array([[0.0, W / 2, 0.0],
                  [W / 2, dq, math.sqrt(2) * W / 2],
                  [0.0, math.sqrt(2) * W / 2, 2 * dq + a]], dtype=complex)
    g1, g2 = rates.gamma1, rates.gamma2
    gphi = max(g2 - 0.5 * g1, 0.0)
    lower = np.diag([1.0, math.sqrt(2.0)], 1)
    ops = [math.sqrt(g1) * lower, math.sqrt(2 * gphi) * np.diag([0.0, 1.0, 2.0])]
    eye = np.eye(3)
    # row-major vec: vec(A rho B) = kron(A, B.T) vec(rho)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for c in ops:
        cdc = c.conj().T @ c
        L += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
    rho = np.zeros(9, dtype=complex)
    rho[0] = 1.0
    out = np.empty((times.size, 3))
    t_prev, cache = 0.0, {}
    for k, t in enumerate(times):
        step = round(t - t_prev, 12)
        if step not in cache:
            cache[step] = expm(L * step)
        rho = cache[step] @ rho
        t_prev = t
        out[k] = rho.reshape(3, 3).diagonal().real
    return out


def simulate_rabi_experiment(rates: DissipationRates, drive_power_dBm: float,
                             power_to_rabi: float, widths, homodyne: HomodyneModel,
                             detuning_MHz: float = 0.0, anharmonicity_MHz=None,
                             stream: int = 0) -> Trace:
    """Homodyne voltage vs rectangular pulse width at one drive power.

    Readout follows each pulse immediately, so one continuous-drive
    trajectory sampled at the widths gives every point. With
    ``anharmonicity_MHz`` the second excited level is included and the
    readout counts any excitation.
    """
    widths = np.asarray(widths, dtype=float)
    if widths.size == 0:
        raise ValueError("widths must be non-empty")
    order = np.argsort(widths, kind="stable")
    rabi = float(rabi_frequency_from_power(drive_power_dBm, power_to_rabi))
    if anharmonicity_MHz is None:
        pulse = DrivePulse(0.0, rabi, float(widths.max()))
        traj = evolve_bloch(rates, pulse, detuning_MHz * 1e-3, widths[order])
        p = traj["p1"]
    else:
        pops = three_level_populations(rates, rabi, detuning_MHz, anharmonicity_MHz,
                                       widths[order])
        p = 1.0 - pops[:, 0]
    p1 = np.empty_like(p)
    p1[order] = p
    v = homodyne.voltage(p1, widths, stream=stream)
    return Trace({"tau_ns": widths, "v_h_mV": v},
                 {"drive_power_dBm": drive_power_dBm, "rabi_MHz": rabi})


def simulate_t1_experiment(rates: DissipationRates, pi_pulse: DrivePulse, delays,
                           homodyne: HomodyneModel, n_averages: int = 1,
                           qubit_f01=None, stream: int = 0) -> Trace:
    """Averaged homodyne voltage vs delay after a pulse from ground.

    Delays are measured from the end of the pulse. Noise per point is
    ``noise_sigma / sqrt(n_averages)``.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.size == 0:
        raise ValueError("delays must be non-empty")
    if n_averages < 1:
        raise ValueError("n_averages must be >= 1")
    f01 = pi_pulse.carrier_frequency if qubit_f01 is None else qubit_f01
    order = np.argsort(delays, kind="stable")
    start = (0.0, 0.0, rates.z_eq)
    traj = evolve_bloch(rates, pi_pulse, f01, pi_pulse.width + delays[order], initial=start)
    p1 = np.empty(delays.size)
    p1[order] = traj["p1"]
    sigma = homodyne.noise_sigma / math.sqrt(n_averages)
    v = homodyne.voltage(p1, delays, sigma=sigma, stream=stream)
    return Trace({"t_ns": delays, "v_h_mV": v},
                 {"n_averages": n_averages, "noise_sigma_mV": sigma})


def pi_pulse(qubit_f01: float, rabi_MHz: float, fraction: float = 1.0) -> DrivePulse:
    """Resonant rectangular pulse of rotation angle ``fraction`` * π."""
    return DrivePulse(qubit_f01, rabi_MHz, fraction * 0.5e3 / rabi_MHz)
