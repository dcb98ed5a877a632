"""Transmon and coupled transmon-resonator spectra.

The transmon is diagonalized in the charge basis. The coupled system keeps
the lowest transmon levels and a truncated Fock ladder, with the
generalized Jaynes-Cummings coupling between neighbouring transmon levels.
That coupling conserves the total excitation number, so the Hamiltonian is
block diagonal; inside one block the k-th lowest dressed level continues
adiabatically (from g = 0) into the k-th lowest bare product state, which
is how dressed states are labeled.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.optimize import brentq

from .params import DomainError, EnergyScales, josephson_energy_for_frequency
from .traces import Sweep2D

CONVERGENCE_TOL = 1e-9  # GHz


class ConvergenceError(RuntimeError):
    def __init__(self, message, suggested_cutoff=None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


class DispersiveWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TransmonSpec:
    energies: EnergyScales
    charge_cutoff: int = 20

    def __post_init__(self):
        if self.charge_cutoff < 5:
            raise DomainError("charge_cutoff must be >= 5")


@dataclass(frozen=True)
class CoupledSpec:
    transmon: TransmonSpec
    f_r: float
    g_MHz: float
    photon_cutoff: int = 5
    transmon_levels_kept: int = 4

    def __post_init__(self):
        if self.g_MHz < 0:
            raise DomainError("g must be non-negative")
        if self.photon_cutoff < 3:
            raise DomainError("photon_cutoff must be >= 3")
        if self.transmon_levels_kept < 2:
            raise DomainError("transmon_levels_kept must be >= 2")

    def with_qubit_frequency(self, f_q: float) -> "CoupledSpec":
        """Copy with E_J retuned so the exact f_01 equals ``f_q``."""
        tr = self.transmon
        en = tr.energies

        def mismatch(ej):
            spec = TransmonSpec(replace(en, E_J=ej), tr.charge_cutoff)
            return _transmon_levels(spec, 2)[0][1] - f_q

        guess = josephson_energy_for_frequency(f_q, en.E_C)
        lo, hi = 0.5 * guess, 2.0 * guess
        while mismatch(lo) > 0:
            lo *= 0.5
        while mismatch(hi) < 0:
            hi *= 2.0
        ej = brentq(mismatch, lo, hi, xtol=1e-14, rtol=1e-15)
        return replace(self, transmon=TransmonSpec(replace(en, E_J=ej), tr.charge_cutoff))


@dataclass
class SpectrumResult:
    eigenfrequencies: np.ndarray
    labels: list
    transition_f01: float
    anharmonicity_MHz: float

    def level(self, label) -> float:
        return float(self.eigenfrequencies[self.labels.index(label)])


def _charge_hamiltonian_bands(spec: TransmonSpec, cutoff=None):
    N = spec.charge_cutoff if cutoff is None else cutoff
    en = spec.energies
    n = np.arange(-N, N + 1, dtype=float)
    diag = 4.0 * en.E_C * (n - en.n_g) ** 2
    off = np.full(2 * N, -0.5 * en.E_J)
    return n, diag, off


def charge_hamiltonian(spec: TransmonSpec) -> np.ndarray:
    """Dense charge-basis Hamiltonian (GHz)."""
    _, diag, off = _charge_hamiltonian_bands(spec)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def _transmon_levels(spec: TransmonSpec, n_levels: int, cutoff=None, vectors=False):
    n, diag, off = _charge_hamiltonian_bands(spec, cutoff)
    sel = (0, n_levels - 1)
    if vectors:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=sel)
    else:
        w = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=sel)
        v = None
    return w - w[0], v, n


def diagonalize_transmon(spec: TransmonSpec, n_levels: int = 4) -> SpectrumResult:
    """Lowest ``n_levels`` (>= 3) transmon levels relative to the ground state."""
    n_levels = max(3, n_levels)
    w, _, _ = _transmon_levels(spec, n_levels)
    w_big, _, _ = _transmon_levels(spec, n_levels, cutoff=spec.charge_cutoff + 5)
    err = np.max(np.abs(w_big[:3] - w[:3]))
    if err > CONVERGENCE_TOL:
        suggested = spec.charge_cutoff + 5
        while suggested < 10 * spec.charge_cutoff + 50:
            a = _transmon_levels(spec, 3, cutoff=suggested)[0]
            b = _transmon_levels(spec, 3, cutoff=suggested + 5)[0]
            if np.max(np.abs(a - b)) <= CONVERGENCE_TOL:
                break
            suggested += 5
        raise ConvergenceError(
            f"charge cutoff {spec.charge_cutoff} not converged (change {err:.2e} GHz); "
            f"try charge_cutoff={suggested}", suggested)
    return SpectrumResult(
        eigenfrequencies=w,
        labels=list(range(len(w))),
        transition_f01=float(w[1]),
        anharmonicity_MHz=float((w[2] - w[1]) - (w[1] - w[0])) * 1e3,
    )


def transmon_charge_elements(spec: TransmonSpec, n_levels: int):
    """Levels (GHz) and |<j|n|j+1>| matrix elements for the lowest levels."""
    w, v, n = _transmon_levels(spec, n_levels, vectors=True)
    n_op = v.T @ (n[:, None] * v)
    return w, np.abs(np.diag(n_op, 1))


def _bare_ladder(spec: CoupledSpec):
    K = spec.transmon_levels_kept
    if K == 2:
        # two-level truncation; keep the exact f_01 but drop higher levels
        w, elem = transmon_charge_elements(spec.transmon, 3)
        return w[:2], np.ones(1)
    w, elem = transmon_charge_elements(spec.transmon, K)
    return w, elem / elem[0]


def coupled_blocks(spec: CoupledSpec, levels=None, rel_elements=None):
    """Yield (labels, H) per excitation-number block, frequencies in GHz."""
    if levels is None:
        levels, rel_elements = _bare_ladder(spec)
    K = len(levels)
    P = spec.photon_cutoff
    g = spec.g_MHz * 1e-3
    for nexc in range(K + P):
        labels = [(j, nexc - j) for j in range(K) if 0 <= nexc - j <= P]
        if not labels:
            continue
        idx = {lab: i for i, lab in enumerate(labels)}
        H = np.zeros((len(labels), len(labels)))
        for (j, m), i in idx.items():
            H[i, i] = levels[j] + spec.f_r * m
            # |j+1, m-1> <-> |j, m>, amplitude g * n_{j,j+1}/n_01 * sqrt(m)
            partner = (j + 1, m - 1)
            if partner in idx:
                c = g * rel_elements[j] * math.sqrt(m)
                H[i, idx[partner]] = H[idx[partner], i] = c
        yield labels, H


def coupled_spectrum(spec: CoupledSpec) -> SpectrumResult:
    """Dressed levels of the truncated transmon-resonator system.

    Labels are the (transmon level, photon number) of the bare state each
    dressed level connects to at g = 0.
    """
    levels, rel = _bare_ladder(spec)
    energies, labels = [], []
    for labs, H in coupled_blocks(spec, levels, rel):
        w = eigh(H, eigvals_only=True)
        bare = sorted(labs, key=lambda lab: (H[labs.index(lab), labs.index(lab)], lab))
        energies.extend(w)
        labels.extend(bare)
    order = np.argsort(energies, kind="stable")
    energies = np.asarray(energies)[order]
    labels = [labels[i] for i in order]
    e0 = energies[labels.index((0, 0))]
    energies = energies - e0
    f01 = float(levels[1])
    alpha = float((levels[2] - 2 * levels[1]) * 1e3) if len(levels) > 2 else float("nan")
    return SpectrumResult(energies, labels, f01, alpha)


def single_excitation_branches(spec: CoupledSpec) -> tuple[float, float]:
    """The two dressed levels of the one-excitation manifold (GHz)."""
    levels, rel = _bare_ladder(spec)
    for labs, H in coupled_blocks(spec, levels, rel):
        if set(labs) == {(0, 1), (1, 0)}:
            w = eigh(H, eigvals_only=True)
            return float(w[0]), float(w[1])
    raise RuntimeError("single-excitation block not found")


def avoided_crossing_sweep(spec: CoupledSpec, f_q_values, workers=None) -> Sweep2D:
    """Single-excitation branches vs bare qubit frequency."""
    f_q_values = np.asarray(f_q_values, dtype=float)
    if f_q_values.size == 0:
        raise DomainError("empty sweep axis")

    def point(fq):
        return single_excitation_branches(spec.with_qubit_frequency(fq))

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(point, f_q_values))
    else:
        rows = [point(fq) for fq in f_q_values]
    rows = np.asarray(rows)
    return Sweep2D(
        {"f_q_bare_GHz": f_q_values,
         "branch_minus_GHz": rows[:, 0],
         "branch_plus_GHz": rows[:, 1]},
        meta={"f_r_GHz": spec.f_r, "g_MHz": spec.g_MHz},
    )


def minimum_gap(sweep: Sweep2D) -> tuple[float, float]:
    """(min branch gap in MHz, bare qubit frequency where it occurs)."""
    gap = sweep["branch_plus_GHz"] - sweep["branch_minus_GHz"]
    i = int(np.argmin(gap))
    return float(gap[i] * 1e3), float(sweep["f_q_bare_GHz"][i])


@dataclass(frozen=True)
class DispersiveShift:
    exact_MHz: float
    perturbative_MHz: float
    detuning_MHz: float
    levels: dict = field(default_factory=dict, compare=False)


def dispersive_shift(spec: CoupledSpec) -> DispersiveShift:
    """Dispersive shift chi from dressed levels and from g^2/Delta.

    The exact value is (E11 - E10 - E01 + E00)/2 over dressed levels
    labeled (transmon level, photon number); the perturbative one is the
    two-level g^2/Delta with Delta = f_01 - f_r.
    """
    levels, _ = _bare_ladder(spec)
    delta = (levels[1] - spec.f_r) * 1e3
    g = spec.g_MHz
    if abs(delta) <= g:
        raise DomainError(f"|Delta| = {abs(delta):.4g} MHz is not dispersive for g = {g} MHz")
    if g / abs(delta) >= 0.25:
        warnings.warn(f"g/|Delta| = {g / abs(delta):.3f} >= 0.25; dispersive "
                      "approximation is poor", DispersiveWarning, stacklevel=2)
    res = coupled_spectrum(spec)
    E = {lab: res.level(lab) for lab in [(0, 0), (1, 0), (0, 1), (1, 1)]}
    exact = (E[(1, 1)] - E[(1, 0)] - E[(0, 1)] + E[(0, 0)]) / 2.0 * 1e3
    return DispersiveShift(exact, g * g / delta, float(delta), E)
