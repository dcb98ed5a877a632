import dataclasses
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import mathieu_a, mathieu_b

from gatemonlab.params import DomainError, EnergyScales
from gatemonlab.spectrum import (ConvergenceError, CoupledSpec, DispersiveWarning, TransmonSpec,
                                 avoided_crossing_sweep, charge_hamiltonian, coupled_spectrum,
                                 diagonalize_transmon, dispersive_shift, minimum_gap,
                                 single_excitation_branches)

PAPER_EN = EnergyScales(0.309, 16.0)


def mathieu_levels(E_C, E_J, n=4):
    """Transmon levels at n_g = 0 from Mathieu characteristic values."""
    q = E_J / (2 * E_C)
    chars = [mathieu_a(0, q)]
    for k in range(1, n):
        chars += [mathieu_b(2 * k, q), mathieu_a(2 * k, q)]
    E = E_C * np.sort(chars)[:n]
    return E - E[0]


@pytest.mark.parametrize("E_C,E_J", [(0.309, 16.0), (0.25, 12.5), (0.2, 30.0), (0.5, 5.0)])
def test_levels_match_mathieu(E_C, E_J):
    res = diagonalize_transmon(TransmonSpec(EnergyScales(E_C, E_J), 30), n_levels=4)
    assert np.allclose(res.eigenfrequencies, mathieu_levels(E_C, E_J), atol=1e-7)
    ref = mathieu_levels(E_C, E_J)
    assert res.anharmonicity_MHz == pytest.approx((ref[2] - 2 * ref[1]) * 1e3, abs=1e-4)


def test_hamiltonian_is_hermitian_and_tridiagonal():
    H = charge_hamiltonian(TransmonSpec(EnergyScales(0.3, 15.0, n_g=0.27), 10))
    assert H.shape == (21, 21)
    assert np.array_equal(H, H.T.conj())
    assert np.count_nonzero(np.triu(H, 2)) == 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.5), st.floats(20.0, 80.0), st.floats(-0.5, 0.5))
def test_offset_charge_symmetries(E_C, ratio, n_g):
    def f01(ng):
        return diagonalize_transmon(
            TransmonSpec(EnergyScales(E_C, ratio * E_C, n_g=ng), 25)).transition_f01
    assert f01(n_g) == pytest.approx(f01(-n_g), abs=1e-9)
    assert f01(n_g) == pytest.approx(f01(n_g + 1.0), abs=1e-9)


def test_small_cutoff_raises_with_suggestion():
    spec = TransmonSpec(EnergyScales(0.05, 400.0), 5)
    with pytest.raises(ConvergenceError) as info:
        diagonalize_transmon(spec)
    better = info.value.suggested_cutoff
    assert better > 5
    diagonalize_transmon(TransmonSpec(spec.energies, better))


def test_cutoff_lower_bound():
    with pytest.raises(DomainError):
        TransmonSpec(PAPER_EN, 4)


def test_with_qubit_frequency_hits_target():
    spec = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0).with_qubit_frequency(6.2)
    assert diagonalize_transmon(spec.transmon).transition_f01 == pytest.approx(6.2, abs=1e-10)


def two_level_branches(f_q, f_r, g):
    mid, half = (f_q + f_r) / 2, np.hypot(g, (f_q - f_r) / 2)
    return mid - half, mid + half


@pytest.mark.parametrize("f_q", [6.9, 7.14, 7.3])
def test_two_level_branches_match_closed_form(f_q):
    spec = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0,
                       transmon_levels_kept=2).with_qubit_frequency(f_q)
    lo, hi = single_excitation_branches(spec)
    ref = two_level_branches(f_q, 7.14, 0.095)
    assert lo == pytest.approx(ref[0], abs=1e-9)
    assert hi == pytest.approx(ref[1], abs=1e-9)


def test_minimum_gap_is_twice_g():
    spec = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0)
    sweep = avoided_crossing_sweep(spec, np.linspace(7.04, 7.24, 201))
    gap, where = minimum_gap(sweep)
    assert gap == pytest.approx(190.0, rel=0.01)
    assert where == pytest.approx(7.14, abs=0.01)
    assert list(sweep.names) == ["f_q_bare_GHz", "branch_minus_GHz", "branch_plus_GHz"]


def test_sweep_workers_give_identical_rows():
    spec = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0)
    f = np.linspace(6.8, 7.4, 13)
    a = avoided_crossing_sweep(spec, f)
    b = avoided_crossing_sweep(spec, f, workers=4)
    for name in a.names:
        assert np.array_equal(a[name], b[name])


def test_zero_coupling_leaves_bare_levels():
    spec = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 0.0).with_qubit_frequency(6.5)
    res = coupled_spectrum(spec)
    assert res.level((1, 0)) == pytest.approx(6.5, abs=1e-10)
    assert res.level((0, 2)) == pytest.approx(2 * 7.14, abs=1e-10)


def two_level_chi_MHz(f_q, f_r, g):
    """Exact dressed-level chi of the two-level Jaynes-Cummings ladder."""
    d = f_q - f_r
    s1, s2 = np.hypot(g, d / 2), np.sqrt(2 * g * g + d * d / 4)
    sign = 1.0 if d < 0 else -1.0
    e10 = f_r + d / 2 - sign * s1
    e01 = f_r + d / 2 + sign * s1
    e11 = 2 * f_r + d / 2 - sign * s2
    return (e11 - e10 - e01) / 2 * 1e3


def test_two_level_chi_matches_closed_form():
    base = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0, transmon_levels_kept=2)
    for f_q in (6.53, 7.9):
        spec = base.with_qubit_frequency(f_q)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DispersiveWarning)
            chi = dispersive_shift(spec)
        assert chi.exact_MHz == pytest.approx(two_level_chi_MHz(f_q, 7.14, 0.095), abs=1e-6)
        assert chi.perturbative_MHz == pytest.approx(95.0**2 / ((f_q - 7.14) * 1e3), rel=1e-9)


def test_multilevel_chi_is_bounded_by_two_level():
    spec = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0).with_qubit_frequency(7.14 - 0.61)
    chi = dispersive_shift(spec)
    assert chi.detuning_MHz == pytest.approx(-610.0, abs=1e-6)
    assert chi.perturbative_MHz == pytest.approx(-14.795, abs=1e-3)
    assert np.sign(chi.exact_MHz) == np.sign(chi.perturbative_MHz)
    assert abs(chi.exact_MHz) < 2 * abs(chi.perturbative_MHz)


def test_chi_domain_and_warning():
    base = CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 95.0)
    with pytest.raises(DomainError):
        dispersive_shift(base.with_qubit_frequency(7.2))
    with pytest.warns(DispersiveWarning):
        dispersive_shift(base.with_qubit_frequency(7.14 - 0.3))


def test_coupled_spec_validation():
    with pytest.raises(DomainError):
        CoupledSpec(TransmonSpec(PAPER_EN), 7.14, -1.0)
    with pytest.raises(DomainError):
        dataclasses.replace(CoupledSpec(TransmonSpec(PAPER_EN), 7.14, 1.0), photon_cutoff=2)
