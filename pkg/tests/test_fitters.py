import math
import warnings

import numpy as np
import pytest

from gatemonlab.fitters import (FitWarning, NotBracketedError, crossing_branches,
                                decaying_sinusoid, exponential, fit_avoided_crossing, fit_circle,
                                fit_decaying_sinusoid, fit_exponential, fit_lorentzian_dip,
                                fit_notch_resonator, fit_sqrt_power_law, internal_q, loaded_q,
                                lorentzian_dip, notch_s21, synthesize_notch_s21)
from gatemonlab.fitters._lsq import predicted_stderr
from gatemonlab.params import DomainError
from gatemonlab.traces import ComplexTrace

# resonator -------------------------------------------------------------------


def test_circle_fit_exact_points():
    th = np.linspace(0.3, 5.0, 40)
    xc, yc, r = fit_circle(2.0 - 1j + 0.7 * np.exp(1j * th))
    assert (xc, yc, r) == pytest.approx((2.0, -1.0, 0.7), abs=1e-10)


def test_q_relations_are_inverse():
    ql = loaded_q(1e4, 1.2e4, 0.3)
    assert internal_q(ql, 1.2e4, 0.3) == pytest.approx(1e4, rel=1e-12)


TRUE = dict(f_r=7.14, Q_l=4000.0, Q_e_abs=7000.0, phi=0.2, a=0.3, alpha=1.1, delay=2.5)


def test_notch_noiseless_recovery():
    tr = synthesize_notch_s21(**TRUE, n_points=2001, span_linewidths=8)
    res = fit_notch_resonator(tr)
    assert res.converged
    for k, v in TRUE.items():
        assert res.params[k] == pytest.approx(v, rel=1e-6, abs=1e-8), k
    assert res.derived["Q_int"] == pytest.approx(internal_q(4000.0, 7000.0, 0.2), rel=1e-6)


def test_notch_zero_delay_and_phi():
    p = dict(TRUE, phi=0.0, delay=0.0, alpha=0.0, a=1.0)
    res = fit_notch_resonator(synthesize_notch_s21(**p, n_points=1001, span_linewidths=8))
    assert res.converged
    assert res.params["delay"] == pytest.approx(0.0, abs=1e-8)
    assert res.params["phi"] == pytest.approx(0.0, abs=1e-7)


def test_notch_scale_and_rotation_invariance():
    tr = synthesize_notch_s21(**TRUE, n_points=1001, span_linewidths=8)
    rng = np.random.default_rng(5)
    noisy = ComplexTrace(tr.f, tr.s21 + 0.003 * (rng.standard_normal(tr.f.size)
                                                 + 1j * rng.standard_normal(tr.f.size)))
    base = fit_notch_resonator(noisy)
    moved = fit_notch_resonator(ComplexTrace(tr.f, 3.7 * np.exp(0.9j) * noisy.s21))
    for k in ("f_r", "Q_l", "Q_e_abs", "phi"):
        assert moved.params[k] == pytest.approx(base.params[k], rel=1e-3), k
    assert moved.derived["Q_int"] == pytest.approx(base.derived["Q_int"], rel=1e-3)


def test_notch_without_resonance_does_not_converge():
    f = np.linspace(7.0, 7.2, 200)
    res = fit_notch_resonator(ComplexTrace(f, 0.5 * np.exp(-2j * np.pi * f * 1.5)))
    assert not res.converged
    assert math.isnan(res.residual_norm) or res.residual_norm >= 0


def test_notch_too_few_points():
    tr = synthesize_notch_s21(**TRUE, n_points=10)
    assert not fit_notch_resonator(tr).converged


def test_notch_to_dict_shape():
    res = fit_notch_resonator(synthesize_notch_s21(**TRUE, n_points=501, span_linewidths=8))
    doc = res.to_dict()
    assert set(doc) >= {"params", "stderr", "residual_norm", "converged"}
    assert "Q_int" in doc["params"] and "Q_int" in doc["stderr"]


# Lorentzian -------------------------------------------------------------------


def test_lorentzian_exact():
    f = np.linspace(6.4, 6.6, 301)
    res = fit_lorentzian_dip(f, lorentzian_dip(f, 6.51, 0.004, 0.3, 1.0))
    assert res.converged
    assert res.params == pytest.approx(dict(f_0=6.51, linewidth=0.004, depth=0.3, baseline=1.0),
                                       rel=1e-8)


def test_lorentzian_resolves_small_shift():
    f = np.linspace(7.1, 7.18, 801)
    lw = 0.0017
    rng = np.random.default_rng(2)
    shifts = []
    for center in (7.14, 7.14 - 0.00866):
        y = lorentzian_dip(f, center, lw, 0.5, 1.0) + 0.01 * rng.standard_normal(f.size)
        shifts.append(fit_lorentzian_dip(f, y).params["f_0"])
    assert shifts[0] - shifts[1] == pytest.approx(0.00866, abs=lw / 20)


def test_lorentzian_flat_trace():
    f = np.linspace(0, 1, 50)
    rng = np.random.default_rng(0)
    res = fit_lorentzian_dip(f, 1 + 1e-3 * rng.standard_normal(50))
    assert not res.converged
    assert not fit_lorentzian_dip(f[:3], np.ones(3)).converged


# decaying sinusoid ------------------------------------------------------------

SINE = dict(T2=98.0, nu=25.0, slope=0.002, intercept=0.5, amplitude=0.45, phase=-math.pi / 2)


def test_sinusoid_exact():
    tau = np.linspace(0, 500, 251)
    res = fit_decaying_sinusoid(tau, decaying_sinusoid(tau, *SINE.values()))
    assert res.converged
    got = [res.params[k] for k in ("T2_rabi", "nu_rabi", "slope", "intercept", "amplitude")]
    assert got == pytest.approx([98.0, 25.0, 0.002, 0.5, 0.45], rel=1e-7)
    assert math.cos(res.params["phase"] - SINE["phase"]) == pytest.approx(1.0, abs=1e-10)


def test_sinusoid_slope_consistent_with_zero():
    tau = np.linspace(0, 500, 251)
    rng = np.random.default_rng(8)
    p = dict(SINE, slope=0.0)
    v = decaying_sinusoid(tau, *p.values()) + 0.01 * rng.standard_normal(tau.size)
    res = fit_decaying_sinusoid(tau, v)
    assert abs(res.params["slope"]) < 3 * res.stderr["slope"]


def test_sinusoid_four_parameter_mode():
    tau = np.linspace(0, 500, 251)
    rng = np.random.default_rng(4)
    v = decaying_sinusoid(tau, *SINE.values()) + 0.01 * rng.standard_normal(tau.size)
    res = fit_decaying_sinusoid(tau, v, mode="four")
    assert res.converged
    assert res.params["T2_rabi"] == pytest.approx(98.0, rel=0.05)
    assert res.params["nu_rabi"] == pytest.approx(25.0, rel=0.01)


def test_sinusoid_rejects_noise_and_short_traces():
    tau = np.linspace(0, 500, 251)
    rng = np.random.default_rng(1)
    assert not fit_decaying_sinusoid(tau, rng.standard_normal(tau.size)).converged
    short = np.linspace(0, 60, 61)
    res = fit_decaying_sinusoid(short, decaying_sinusoid(short, *SINE.values()))
    assert not res.converged and "period" in res.message


# exponential -----------------------------------------------------------------


def test_exponential_exact():
    t = np.linspace(0, 500, 101)
    res = fit_exponential(t, exponential(t, 143.0, 0.9, 0.05))
    assert res.params == pytest.approx(dict(T1=143.0, amplitude=0.9, offset=0.05), rel=1e-8)


def test_exponential_short_span_warns():
    t = np.linspace(0, 150, 76)
    with pytest.warns(FitWarning):
        fit_exponential(t, exponential(t, 102.0, 1.0, 0.0))


def test_exponential_flat_trace():
    t = np.linspace(0, 500, 101)
    rng = np.random.default_rng(3)
    assert not fit_exponential(t, 0.1 + 0.01 * rng.standard_normal(t.size)).converged


def test_exponential_stderr_scaling_and_bias():
    t = np.linspace(0, 500, 101)
    clean = exponential(t, 102.0, 1.0, 0.0)
    sig = 0.02
    T1, se = [], []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        res = fit_exponential(t, clean + sig * rng.standard_normal(t.size))
        T1.append(res.params["T1"])
        se.append(res.stderr["T1"])
    T1 = np.array(T1)
    pred = predicted_stderr(exponential, dict(T1=102.0, amplitude=1.0, offset=0.0), t, sig)["T1"]
    assert np.std(T1) == pytest.approx(pred, rel=0.15)
    assert np.median(se) == pytest.approx(pred, rel=0.15)
    assert abs(np.mean(T1) - 102.0) < 3 * np.std(T1) / math.sqrt(T1.size)
    pred4 = predicted_stderr(exponential, dict(T1=102.0, amplitude=1.0, offset=0.0), t,
                             sig / 2)["T1"]
    assert pred4 == pytest.approx(pred / 2, rel=1e-6)


# avoided crossing ------------------------------------------------------------


@pytest.mark.parametrize("g", [109.0, 95.0, 20.0])
def test_avoided_crossing_recovers_g(g):
    x = np.linspace(6.64, 7.64, 201)
    lo, hi = crossing_branches(x, g, 7.14, 0.0, 1.0)
    res = fit_avoided_crossing(x, lo, hi)
    assert res.params["g_MHz"] == pytest.approx(g, rel=1e-6)
    assert res.params["f_r"] == pytest.approx(7.14, abs=1e-9)


def test_avoided_crossing_zero_coupling():
    x = np.linspace(6.64, 7.64, 200)
    lo, hi = crossing_branches(x, 0.0, 7.14, 0.0, 1.0)
    res = fit_avoided_crossing(x, lo, hi)
    assert res.params["g_MHz"] < 1.0


def test_avoided_crossing_not_bracketed():
    x = np.linspace(5.0, 6.0, 50)
    lo, hi = crossing_branches(x, 95.0, 7.14, 0.0, 1.0)
    with pytest.raises(NotBracketedError):
        fit_avoided_crossing(x, lo, hi)


# square-root law -------------------------------------------------------------


def test_sqrt_law_exact_and_subset():
    P = 10 ** (np.linspace(-57.5, -37.5, 9) / 10)
    nu = 5610.0 * np.sqrt(P)
    res = fit_sqrt_power_law(P, nu)
    assert res.params["c"] == pytest.approx(5610.0, rel=1e-12)
    sub = fit_sqrt_power_law(P, nu, anharmonicity_MHz=-240.0)
    assert sub.derived["n_used"] == np.sum(nu < 60.0)


def test_sqrt_law_errors():
    with pytest.raises(DomainError):
        fit_sqrt_power_law([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        fit_sqrt_power_law([1.0, 2.0, 3.0], [1.0, np.nan, 3.0])
    assert not fit_sqrt_power_law([1.0, 2.0, 3.0], [100.0, 150.0, 170.0], 240.0).converged


def test_model_notch_depth():
    # on resonance with phi = 0 the dip reaches a (1 - Q_l/Q_e)
    s = notch_s21(7.0, 7.0, 1000.0, 2000.0)
    assert abs(s) == pytest.approx(0.5)
