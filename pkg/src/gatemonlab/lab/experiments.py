"""End-to-end synthetic experiments: simulate, corrupt, fit, summarize.

Every run writes into one directory: raw CSV, FitResult JSON documents, a
``summary.txt`` and a ``manifest.json`` with SHA-256 checksums of the other
files. Output bytes depend only on the config and seed.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import (DissipationRates, HomodyneModel, pi_pulse, simulate_rabi_experiment,
                        simulate_t1_experiment, steady_state_population)
from ..fitters import (add_complex_noise, fit_avoided_crossing, fit_decaying_sinusoid,
                       fit_exponential, fit_lorentzian_dip, fit_notch_resonator,
                       fit_sqrt_power_law, loaded_q, synthesize_notch_s21)
from ..fitters._lsq import FitResult, predicted_stderr
from ..fitters.timedomain import exponential
from ..gatemap import calibrate_map, fq_sweep
from ..params import EnergyScales, t1_from_quality_factor
from ..spectrum import (CoupledSpec, TransmonSpec, avoided_crossing_sweep, diagonalize_transmon,
                        minimum_gap)
from ..traces import Sweep2D
from .config import ExperimentConfig, config_hash
from .report import report_loss_budget

MANIFEST = "manifest.json"


class RunDirectoryError(OSError):
    pass


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    timestamp: str
    seed: int
    kind: str
    files: list = field(default_factory=list)
    converged: bool = True
    diagnostics: list = field(default_factory=list)

    def checksums(self) -> dict:
        return {f["path"]: f["sha256"] for f in self.files}

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


class _Run:
    """Collects output files in memory; nothing touches disk until commit."""

    def __init__(self):
        self.files = {}
        self.summary = []
        self.diagnostics = []
        self.converged = True

    def csv(self, name, sweep: Sweep2D):
        self.files[name] = sweep.to_csv_text()

    def fit(self, name, res: FitResult, label=""):
        self.files[name] = res.to_json()
        if not res.converged:
            self.converged = False
            self.diagnostics.append(f"{label or name}: fit did not converge: {res.message}")
        return res

    def json(self, name, doc):
        self.files[name] = json.dumps(doc, indent=2) + "\n"

    def line(self, text=""):
        self.summary.append(text)


def _pool_map(fn, items, workers):
    # results come back in input order whatever the completion order
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _num(x):
    return repr(float(x))


def _qubit_f01(cfg: ExperimentConfig, default=6.0):
    drive = cfg.section("drive")
    if "qubit_frequency_GHz" in drive:
        return float(drive["qubit_frequency_GHz"])
    if cfg.energies is not None:
        return diagonalize_transmon(TransmonSpec(cfg.energies)).transition_f01
    return default


def _anharmonicity(cfg: ExperimentConfig):
    drive = cfg.section("drive")
    if "anharmonicity_MHz" in drive:
        return float(drive["anharmonicity_MHz"])
    if cfg.energies is not None:
        return diagonalize_transmon(TransmonSpec(cfg.energies)).anharmonicity_MHz
    return None


def _s21(cfg, run, workers):
    s = cfg.section("s21")
    snr = s.get("snr_dB")
    n = int(s.get("n_points", 5001))
    span = float(s.get("span_linewidths", 8.0))
    a, alpha, delay = s.get("amplitude", 1.0), s.get("alpha_rad", 0.0), s.get("delay_ns", 0.0)
    res_list = cfg.raw["resonators"]

    def one(i):
        r = res_list[i]
        phi = float(r.get("phi_rad", 0.0))
        ql = loaded_q(r["Q_int"], r["Q_ext"], phi)
        tr = synthesize_notch_s21(r["f_r_GHz"], ql, r["Q_ext"], phi, a, alpha, delay,
                                  n_points=n, span_linewidths=span)
        if snr is not None:
            rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed, spawn_key=(i,)))
            tr = add_complex_noise(tr, snr, rng)
        return tr, fit_notch_resonator(tr)

    out = _pool_map(one, range(len(res_list)), workers)
    run.line("resonator  f_r_GHz  Q_int_true  Q_int_fit  Q_int_stderr  Q_ext_fit")
    for i, (tr, fit) in enumerate(out):
        tag = f"R{i + 1}"
        run.csv(f"s21_{tag}.csv", tr.to_sweep())
        run.fit(f"fit_{tag}.json", fit, tag)
        doc = fit.to_dict()
        run.line(f"{tag}  {_num(doc['params']['f_r'] or math.nan)}  "
                 f"{_num(res_list[i]['Q_int'])}  {_num(doc['params'].get('Q_int') or math.nan)}  "
                 f"{_num(doc['stderr'].get('Q_int') or math.nan)}  "
                 f"{_num(doc['params']['Q_e_abs'] or math.nan)}")


def _vacuum_rabi(cfg, run, workers):
    spec = CoupledSpec(TransmonSpec(cfg.energies), cfg.device.f_r, cfg.device.g_MHz)
    axis = cfg.sweeps["f_q_GHz"]
    sweep = avoided_crossing_sweep(spec, axis.values(), workers=workers)
    run.csv("vacuum_rabi.csv", sweep)
    gap, at = minimum_gap(sweep)
    step = abs(axis.stop - axis.start) / (axis.points - 1) * 1e3
    fit = run.fit("fit_avoided_crossing.json", fit_avoided_crossing(sweep), "avoided crossing")
    doc = fit.to_dict()
    run.json("splitting.json", {"min_splitting_MHz": gap, "at_f_q_bare_GHz": at,
                                "grid_step_MHz": step})
    run.line(f"min_splitting_MHz {_num(gap)}")
    run.line(f"at_f_q_bare_GHz {_num(at)}")
    run.line(f"grid_step_MHz {_num(step)}")
    run.line(f"g_fit_MHz {_num(doc['params']['g_MHz'] or math.nan)}")
    run.line(f"g_fit_stderr_MHz {_num(doc['stderr'].get('g_MHz') or math.nan)}")


def _gate_map(cfg, run):
    gmap = cfg.gatemap
    if cfg.calibration_targets:
        gmap = calibrate_map(cfg.calibration_targets, cfg.energies.E_C, template=gmap,
                             include_fluctuations=gmap.fluctuation_amplitude > 0)
        run.json("gatemap_calibrated.json", gmap.to_dict())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sweep = fq_sweep(gmap, cfg.energies.E_C, cfg.sweeps["V_G_V"].values())
    for w in caught:
        run.diagnostics.append(f"warning: {w.message}")
    return gmap, sweep


def _two_tone(cfg, run, workers):
    _, sweep = _gate_map(cfg, run)
    tt = cfg.section("two_tone")
    rabi = float(tt.get("drive_rabi_MHz", 1.0))
    span = float(tt.get("span_MHz", 40.0)) * 1e-3
    npts = int(tt.get("points", 201))
    hm = replace(cfg.homodyne, noise_sigma=cfg.homodyne.noise_sigma / math.sqrt(cfg.averages()))
    sign = 1.0 if hm.v_excited < hm.v_ground else -1.0
    V = sweep["V_G_V"]
    E_C = cfg.energies.E_C

    def one(i):
        ej = float(sweep["E_J_GHz"][i])
        if ej <= 0:
            return None
        f01 = diagonalize_transmon(TransmonSpec(EnergyScales(E_C, ej))).transition_f01
        # window centred on the asymptotic estimate, as one would set it up blind
        center = float(sweep["f_Q_GHz"][i])
        fd = np.linspace(center - span / 2, center + span / 2, npts)
        p1 = steady_state_population(cfg.dissipation, rabi, (f01 - fd) * 1e3)
        v = hm.voltage(p1, np.zeros_like(fd), stream=i)
        return f01, fd, v, fit_lorentzian_dip(fd, sign * v)

    out = _pool_map(one, range(V.size), workers)
    long_cols = {"V_G_V": [], "f_drive_GHz": [], "v_h_mV": []}
    table = {"V_G_V": [], "f_Q_GHz": [], "f_Q_fit_GHz": [], "f_Q_fit_stderr_GHz": [],
             "linewidth_MHz": []}
    fits = []
    for i, item in enumerate(out):
        if item is None:
            run.diagnostics.append(f"V_G={V[i]!r}: E_J = 0, qubit absent")
            continue
        f01, fd, v, fit = item
        long_cols["V_G_V"] += [V[i]] * fd.size
        long_cols["f_drive_GHz"] += list(fd)
        long_cols["v_h_mV"] += list(v)
        if not fit.converged:
            run.converged = False
            run.diagnostics.append(f"V_G={V[i]!r}: line fit did not converge: {fit.message}")
        table["V_G_V"].append(V[i])
        table["f_Q_GHz"].append(f01)
        table["f_Q_fit_GHz"].append(fit.params["f_0"])
        table["f_Q_fit_stderr_GHz"].append(fit.stderr.get("f_0", math.nan))
        table["linewidth_MHz"].append(fit.params["linewidth"] * 1e3)
        fits.append({"V_G_V": float(V[i]), **fit.to_dict()})
    run.csv("two_tone.csv", Sweep2D(long_cols))
    run.csv("two_tone_lines.csv", Sweep2D(table))
    run.json("fits.json", {"points": fits})
    fq = np.asarray(table["f_Q_fit_GHz"], dtype=float)
    if fq.size:
        steps = np.diff(fq)
        monotone = bool(np.all(steps >= 0) or np.all(steps <= 0))
        run.line(f"f_Q_min_GHz {_num(np.nanmin(fq))}")
        run.line(f"f_Q_max_GHz {_num(np.nanmax(fq))}")
        run.line(f"monotone {str(monotone).lower()}")


def _rabi(cfg, run, workers):
    drive = cfg.section("drive")
    c = float(drive["power_to_rabi_MHz_per_sqrt_mW"])
    det = float(drive.get("detuning_MHz", 0.0))
    alpha = _anharmonicity(cfg) if drive.get("three_level", False) else None
    mode = drive.get("fit_mode", "full")
    tau = cfg.sweeps["tau_ns"].values()
    powers = cfg.sweeps["p_drive_dBm"].values()
    hm = replace(cfg.homodyne, noise_sigma=cfg.homodyne.noise_sigma / math.sqrt(cfg.averages()))

    def one(k):
        tr = simulate_rabi_experiment(cfg.dissipation, powers[k], c, tau, hm,
                                      detuning_MHz=det, anharmonicity_MHz=alpha, stream=k)
        return tr, fit_decaying_sinusoid(tr, mode=mode)

    out = _pool_map(one, range(powers.size), workers)
    long_cols = {"p_drive_dBm": np.repeat(powers, tau.size),
                 "tau_ns": np.tile(tau, powers.size),
                 "v_h_mV": np.concatenate([tr["v_h_mV"] for tr, _ in out])}
    run.csv("rabi.csv", Sweep2D(long_cols))
    table = {k: [] for k in ("p_drive_dBm", "P_mW", "nu_rabi_MHz", "nu_rabi_stderr_MHz",
                             "T2_rabi_ns", "T2_rabi_stderr_ns")}
    fits = []
    for k, (_, fit) in enumerate(out):
        if not fit.converged:
            run.converged = False
            run.diagnostics.append(f"P={powers[k]!r} dBm: Rabi fit did not converge: "
                                   f"{fit.message}")
            fits.append({"p_drive_dBm": float(powers[k]), **fit.to_dict()})
            continue
        table["p_drive_dBm"].append(powers[k])
        table["P_mW"].append(10.0 ** (powers[k] / 10.0))
        table["nu_rabi_MHz"].append(fit.params["nu_rabi"])
        table["nu_rabi_stderr_MHz"].append(fit.stderr["nu_rabi"])
        table["T2_rabi_ns"].append(fit.params["T2_rabi"])
        table["T2_rabi_stderr_ns"].append(fit.stderr["T2_rabi"])
        fits.append({"p_drive_dBm": float(powers[k]), **fit.to_dict()})
    run.csv("rabi_fits.csv", Sweep2D(table))
    run.json("fits.json", {"points": fits})
    subset = _anharmonicity(cfg)
    if len(table["P_mW"]) >= 3:
        law = run.fit("sqrt_law.json", fit_sqrt_power_law(table["P_mW"], table["nu_rabi_MHz"],
                                                          subset), "sqrt power law")
        doc = law.to_dict()
        run.line(f"sqrt_law_c_MHz_per_sqrt_mW {_num(doc['params']['c'] or math.nan)}")
        run.line(f"sqrt_law_points_used {_num(doc['params'].get('n_used') or 0)}")
    for p, nu, t2 in zip(table["p_drive_dBm"], table["nu_rabi_MHz"], table["T2_rabi_ns"]):
        run.line(f"P_dBm {_num(p)}  nu_rabi_MHz {_num(nu)}  T2_rabi_ns {_num(t2)}")


def _t1_pulse(cfg, f01):
    return pi_pulse(f01, float(cfg.section("drive")["pi_pulse_rabi_MHz"]))


def _t1(cfg, run, workers):
    f01 = _qubit_f01(cfg)
    t = cfg.sweeps["t_ns"].values()
    tr = simulate_t1_experiment(cfg.dissipation, _t1_pulse(cfg, f01), t, cfg.homodyne,
                                n_averages=cfg.averages())
    run.csv("t1.csv", tr)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = run.fit("fit_t1.json", fit_exponential(tr), "T1")
    run.diagnostics += [f"warning: {w.message}" for w in caught]
    doc = fit.to_dict()
    t1 = doc["params"]["T1"]
    run.line(f"f_Q_GHz {_num(f01)}")
    run.line(f"T1_fit_ns {_num(t1 or math.nan)}")
    run.line(f"T1_stderr_ns {_num(doc['stderr'].get('T1') or math.nan)}")
    if t1:
        run.line(f"qubit_Q {_num(2 * math.pi * f01 * t1)}")


def _t1_vs_gate(cfg, run, workers):
    _, sweep = _gate_map(cfg, run)
    t = cfg.sweeps["t_ns"].values()
    ratio = cfg.dissipation.T2 / cfg.dissipation.T1
    Q = cfg.qubit_quality_factor
    V, fq = sweep["V_G_V"], sweep["f_Q_GHz"]

    def one(i):
        if not fq[i] > 0:
            return None
        T1 = t1_from_quality_factor(Q, fq[i])
        rates = DissipationRates(T1, ratio * T1, cfg.dissipation.thermal_population)
        tr = simulate_t1_experiment(rates, _t1_pulse(cfg, fq[i]), t, cfg.homodyne,
                                    n_averages=cfg.averages(), stream=i)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return T1, fit_exponential(tr)

    out = _pool_map(one, range(V.size), workers)
    table = {k: [] for k in ("V_G_V", "f_Q_GHz", "T1_true_ns", "T1_fit_ns", "T1_stderr_ns",
                             "qubit_Q")}
    fits = []
    for i, item in enumerate(out):
        if item is None:
            run.diagnostics.append(f"V_G={V[i]!r}: no qubit frequency")
            continue
        T1, fit = item
        if not fit.converged:
            run.converged = False
            run.diagnostics.append(f"V_G={V[i]!r}: T1 fit did not converge: {fit.message}")
        table["V_G_V"].append(V[i])
        table["f_Q_GHz"].append(fq[i])
        table["T1_true_ns"].append(T1)
        table["T1_fit_ns"].append(fit.params["T1"])
        table["T1_stderr_ns"].append(fit.stderr.get("T1", math.nan))
        table["qubit_Q"].append(2 * math.pi * fq[i] * fit.params["T1"])
        fits.append({"V_G_V": float(V[i]), **fit.to_dict()})
    run.csv("t1_vs_gate.csv", Sweep2D(table))
    run.json("fits.json", {"points": fits})
    if table["f_Q_GHz"]:
        run.line(f"f_Q_min_GHz {_num(min(table['f_Q_GHz']))}")
        run.line(f"f_Q_max_GHz {_num(max(table['f_Q_GHz']))}")
    for row in zip(*table.values()):
        run.line("  ".join(f"{k} {_num(x)}" for k, x in zip(table, row)))


def _loss_budget(cfg, run, workers):
    rep = report_loss_budget(cfg)
    run.csv("loss_budget.csv", rep.table)
    run.json("loss_budget.json", rep.to_dict())
    run.summary += rep.text.splitlines()


RUNNERS = {
    "s21-sweep": _s21,
    "vacuum-rabi": _vacuum_rabi,
    "two-tone": _two_tone,
    "rabi": _rabi,
    "t1": _t1,
    "t1-vs-gate": _t1_vs_gate,
    "loss-budget": _loss_budget,
}


def prepare_run_dir(path, force=False) -> Path:
    """Create ``path``; refuse a non-empty directory unless ``force``."""
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise RunDirectoryError(f"{path} exists and is not a directory")
    if path.is_dir() and any(path.iterdir()) and not force:
        raise RunDirectoryError(f"{path} is not empty; pass --force to write into it")
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_run(out_dir, raw: dict, run: _Run, force=False) -> RunManifest:
    """Write the collected files, a summary and the manifest.

    ``raw`` is the (possibly seed-overridden) config document; it is
    saved as ``config.json`` and its hash goes into the manifest.
    """
    out = prepare_run_dir(out_dir, force)
    files = dict(run.files)
    files["config.json"] = json.dumps(raw, indent=2, sort_keys=True) + "\n"
    kind, seed = raw.get("kind"), int(raw.get("rng_seed", 0))
    head = [f"kind {kind}", f"seed {seed}", f"converged {str(run.converged).lower()}"]
    files["summary.txt"] = "\n".join(head + run.summary + [f"! {d}" for d in run.diagnostics]) + "\n"
    entries = []
    for name in sorted(files):
        data = files[name].encode()
        (out / name).write_bytes(data)
        entries.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(),
                        "bytes": len(data)})
    manifest = RunManifest(config_hash(raw), __version__,
                           _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                           seed, kind, entries, run.converged, list(run.diagnostics))
    (out / MANIFEST).write_text(manifest.to_json())
    return manifest


def run_experiment(cfg: ExperimentConfig, out_dir=None, force=False, workers=None) -> RunManifest:
    """Simulate, fit and summarize ``cfg.kind``; write everything to ``out_dir``."""
    out_dir = out_dir or cfg.output_dir
    if out_dir is None:
        raise RunDirectoryError("no output directory given (config output_dir or --out)")
    # fail on the directory before doing any work
    prepare_run_dir(out_dir, force)
    run = _Run()
    RUNNERS[cfg.kind](cfg, run, workers)
    return write_run(out_dir, cfg.raw, run, force=True)


def t1_noise_for_stderr(rates: DissipationRates, pulse, delays, target_stderr_ns,
                        homodyne: HomodyneModel | None = None) -> float:
    """Per-point voltage noise that makes the T1 fit report ``target_stderr_ns``.

    Linearized at the noiseless decay; the fit's reported error scales
    linearly with the noise, so one evaluation fixes it.
    """
    homodyne = homodyne or HomodyneModel()
    clean = simulate_t1_experiment(rates, pulse, delays, HomodyneModel(
        homodyne.v_ground, homodyne.v_excited, homodyne.linear_slope, 0.0))
    fit = fit_exponential(clean)
    p = [fit.params[n] for n in ("T1", "amplitude", "offset")]
    se = predicted_stderr(exponential, p, np.asarray(delays, float), 1.0)[0]
    return float(target_stderr_ns / se)
