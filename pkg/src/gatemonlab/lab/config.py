"""Experiment configuration: JSON loading, validation and search path."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import DissipationRates, HomodyneModel
from ..gatemap import GateMap
from ..params import DEVICE_KEYS, DeviceParams, EnergyScales

CONFIG_PATH_ENV = "GATEMONLAB_CONFIG_PATH"
DEFAULT_CONFIG_NAME = "gatemonlab.json"

KINDS = ("s21-sweep", "vacuum-rabi", "two-tone", "rabi", "t1", "t1-vs-gate", "loss-budget")

# sections and sweep axes each kind needs
REQUIRED = {
    "s21-sweep": (("resonators", "s21"), ()),
    "vacuum-rabi": (("device", "energies"), ("f_q_GHz",)),
    "two-tone": (("energies", "gatemap", "dissipation", "homodyne", "two_tone"), ("V_G_V",)),
    "rabi": (("dissipation", "homodyne", "drive"), ("tau_ns", "p_drive_dBm")),
    "t1": (("dissipation", "homodyne", "drive"), ("t_ns",)),
    "t1-vs-gate": (("energies", "gatemap", "dissipation", "homodyne", "drive"), ("V_G_V", "t_ns")),
    "loss-budget": (("device", "loss_budget"), ()),
}

ENERGY_KEYS = {"charging_energy_GHz": "E_C", "josephson_energy_GHz": "E_J",
               "offset_charge": "n_g"}
DISSIPATION_KEYS = {"T1_ns": "T1", "T2_ns": "T2", "thermal_population": "thermal_population"}
HOMODYNE_KEYS = {"v_ground_mV": "v_ground", "v_excited_mV": "v_excited",
                 "linear_slope_mV_per_ns": "linear_slope", "noise_sigma_mV": "noise_sigma"}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class SweepAxis:
    start: float
    stop: float
    points: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class ExperimentConfig:
    kind: str
    rng_seed: int
    output_dir: str | None
    raw: dict
    device: DeviceParams | None = None
    energies: EnergyScales | None = None
    gatemap: GateMap | None = None
    calibration_targets: list | None = None
    dissipation: DissipationRates | None = None
    qubit_quality_factor: float | None = None
    homodyne: HomodyneModel | None = None
    sweeps: dict = field(default_factory=dict)

    def section(self, name) -> dict:
        return self.raw.get(name, {})

    def averages(self, kind=None) -> int:
        """Repetitions averaged per point for ``kind`` (default: this run's kind)."""
        return int(self.section("averages").get(kind or self.kind, 1))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = dict(self.raw, rng_seed=int(seed))
        return parse_config(raw)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(doc: dict) -> str:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _numbers(doc, keys, where, errors, required=(), positive=()):
    out = {}
    for key in keys:
        if key not in doc:
            if key in required:
                errors.append(f"{where}.{key}: missing")
            continue
        val = doc[key]
        if not _is_number(val):
            errors.append(f"{where}.{key}: expected a finite number, got {val!r}")
        elif key in positive and not val > 0:
            errors.append(f"{where}.{key}: must be > 0, got {val}")
        else:
            out[key] = float(val)
    return out


def _check_device(doc, errors):
    vals = _numbers(doc, DEVICE_KEYS, "device", errors, required=DEVICE_KEYS,
                    positive=DEVICE_KEYS)
    if len(vals) != len(DEVICE_KEYS):
        return None
    if vals["loaded_resonator_freq_GHz"] > vals["bare_resonator_freq_GHz"]:
        errors.append("device.loaded_resonator_freq_GHz: exceeds bare_resonator_freq_GHz")
        return None
    return DeviceParams.from_dict(vals)


def _check_energies(doc, errors):
    vals = _numbers(doc, ENERGY_KEYS, "energies", errors,
                    required=("charging_energy_GHz", "josephson_energy_GHz"),
                    positive=("charging_energy_GHz", "josephson_energy_GHz"))
    if "charging_energy_GHz" not in vals or "josephson_energy_GHz" not in vals:
        return None
    return EnergyScales(**{ENERGY_KEYS[k]: v for k, v in vals.items()})


def _check_gatemap(doc, errors):
    targets = doc.get("calibration_targets")
    if targets is not None:
        ok = isinstance(targets, list) and len(targets) >= 2 and all(
            isinstance(t, list) and len(t) == 2 and all(_is_number(x) for x in t)
            for t in targets)
        if not ok:
            errors.append("gatemap.calibration_targets: expected a list of >= 2 [V, f_Q] pairs")
            targets = None
    try:
        gmap = GateMap.from_dict({k: v for k, v in doc.items() if k != "calibration_targets"})
    except (TypeError, ValueError) as exc:
        errors.append(f"gatemap: {exc}")
        gmap = None
    return gmap, targets


def _check_dissipation(doc, errors):
    vals = _numbers(doc, list(DISSIPATION_KEYS) + ["qubit_quality_factor"], "dissipation",
                    errors, required=("T1_ns", "T2_ns"),
                    positive=("T1_ns", "T2_ns", "qubit_quality_factor"))
    if "T1_ns" not in vals or "T2_ns" not in vals:
        return None, None
    try:
        rates = DissipationRates(**{DISSIPATION_KEYS[k]: v for k, v in vals.items()
                                    if k in DISSIPATION_KEYS})
    except ValueError as exc:
        errors.append(f"dissipation: {exc}")
        rates = None
    return rates, vals.get("qubit_quality_factor")


def _check_homodyne(doc, seed, errors):
    vals = _numbers(doc, HOMODYNE_KEYS, "homodyne", errors, required=("noise_sigma_mV",))
    if vals.get("noise_sigma_mV", 0.0) < 0:
        errors.append("homodyne.noise_sigma_mV: must be >= 0")
        return None
    kw = {HOMODYNE_KEYS[k]: v for k, v in vals.items()}
    return HomodyneModel(rng_seed=seed, **kw)


def _check_averages(doc, errors):
    if not isinstance(doc, dict):
        errors.append("averages: expected an object of kind -> count")
        return
    for k, n in doc.items():
        if k not in KINDS:
            errors.append(f"averages.{k}: unknown experiment kind")
        elif not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
            errors.append(f"averages.{k}: expected an integer >= 1, got {n!r}")


def _check_sweeps(doc, errors):
    axes = {}
    if not isinstance(doc, dict):
        errors.append("sweeps: expected an object of axes")
        return axes
    for name, ax in doc.items():
        where = f"sweeps.{name}"
        if not isinstance(ax, dict):
            errors.append(f"{where}: expected {{start, stop, points}}")
            continue
        vals = _numbers(ax, ("start", "stop"), where, errors, required=("start", "stop"))
        pts = ax.get("points")
        if not (isinstance(pts, int) and not isinstance(pts, bool)):
            errors.append(f"{where}.points: expected an integer, got {pts!r}")
        elif pts < 2:
            errors.append(f"{where}.points: need at least 2 points, got {pts}")
        elif len(vals) == 2:
            axes[name] = SweepAxis(vals["start"], vals["stop"], pts)
    return axes


def parse_config(doc) -> ExperimentConfig:
    """Validate a decoded config document; raises ConfigError listing every problem."""
    errors = []
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected a JSON object"])
    kind = doc.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    seed = doc.get("rng_seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        errors.append(f"rng_seed: expected a non-negative integer, got {seed!r}")
        seed = 0
    out = doc.get("output_dir")
    if out is not None and not isinstance(out, str):
        errors.append("output_dir: expected a string")
    cfg = ExperimentConfig(kind=kind, rng_seed=seed, output_dir=out, raw=doc)

    sections, axes = REQUIRED.get(kind, ((), ()))
    for name in sections:
        if name not in doc:
            errors.append(f"{name}: section required for kind={kind}")
    for name in ("device", "energies", "gatemap", "dissipation", "homodyne", "drive", "s21",
                 "two_tone", "loss_budget"):
        if name in doc and not isinstance(doc[name], dict):
            errors.append(f"{name}: expected an object")

    def get(name):
        return doc[name] if isinstance(doc.get(name), dict) else None

    if get("device") is not None:
        cfg.device = _check_device(get("device"), errors)
    if get("energies") is not None:
        cfg.energies = _check_energies(get("energies"), errors)
    if get("gatemap") is not None:
        cfg.gatemap, cfg.calibration_targets = _check_gatemap(get("gatemap"), errors)
    if get("dissipation") is not None:
        cfg.dissipation, cfg.qubit_quality_factor = _check_dissipation(get("dissipation"), errors)
    if get("homodyne") is not None:
        cfg.homodyne = _check_homodyne(get("homodyne"), seed, errors)
    if "averages" in doc:
        _check_averages(doc["averages"], errors)
    if get("drive") is not None:
        _numbers(get("drive"), ("power_to_rabi_MHz_per_sqrt_mW", "power_dBm", "pi_pulse_rabi_MHz",
                                "detuning_MHz", "anharmonicity_MHz", "qubit_frequency_GHz"),
                 "drive", errors, positive=("power_to_rabi_MHz_per_sqrt_mW", "pi_pulse_rabi_MHz"))
    cfg.sweeps = _check_sweeps(doc.get("sweeps", {}), errors)
    for name in axes:
        if name not in cfg.sweeps and f"sweeps.{name}" not in " ".join(errors):
            errors.append(f"sweeps.{name}: axis required for kind={kind}")
    if kind == "rabi" and "power_to_rabi_MHz_per_sqrt_mW" not in doc.get("drive", {}):
        errors.append("drive.power_to_rabi_MHz_per_sqrt_mW: missing")
    if kind in ("t1", "t1-vs-gate") and "pi_pulse_rabi_MHz" not in doc.get("drive", {}):
        errors.append("drive.pi_pulse_rabi_MHz: missing")
    if kind == "t1-vs-gate" and cfg.qubit_quality_factor is None:
        errors.append("dissipation.qubit_quality_factor: required for kind=t1-vs-gate")
    if kind == "s21-sweep":
        _check_resonators(doc, errors)
    if kind == "loss-budget":
        _check_loss_budget(doc.get("loss_budget", {}), errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _check_resonators(doc, errors):
    res = doc.get("resonators")
    if not isinstance(res, list) or not res:
        errors.append("resonators: expected a non-empty list")
        return
    for i, r in enumerate(res):
        if not isinstance(r, dict):
            errors.append(f"resonators[{i}]: expected an object")
            continue
        _numbers(r, ("f_r_GHz", "Q_int", "Q_ext", "phi_rad"), f"resonators[{i}]", errors,
                 required=("f_r_GHz", "Q_int", "Q_ext"), positive=("f_r_GHz", "Q_int", "Q_ext"))
    s21 = doc.get("s21", {})
    if isinstance(s21, dict):
        _numbers(s21, ("snr_dB", "span_linewidths", "amplitude", "alpha_rad", "delay_ns"), "s21",
                 errors, positive=("span_linewidths", "amplitude"))
        n = s21.get("n_points", 2001)
        if not (isinstance(n, int) and n >= 20):
            errors.append("s21.n_points: expected an integer >= 20")


def _check_loss_budget(doc, errors):
    if not isinstance(doc, dict):
        return
    pts = doc.get("points")
    if not isinstance(pts, list) or not pts:
        errors.append("loss_budget.points: expected a non-empty list of {f_Q_GHz, T1_ns}")
    else:
        for i, p in enumerate(pts):
            if not isinstance(p, dict):
                errors.append(f"loss_budget.points[{i}]: expected an object")
                continue
            _numbers(p, ("f_Q_GHz", "T1_ns"), f"loss_budget.points[{i}]", errors,
                     required=("f_Q_GHz", "T1_ns"), positive=("f_Q_GHz", "T1_ns"))
    refs = doc.get("reference_Q_int", [])
    if not (isinstance(refs, list) and all(_is_number(q) and q > 0 for q in refs)):
        errors.append("loss_budget.reference_Q_int: expected a list of positive numbers")
    chans = doc.get("channels", {})
    if not isinstance(chans, dict):
        errors.append("loss_budget.channels: expected an object of name -> Q")
    else:
        _numbers(chans, list(chans), "loss_budget.channels", errors, positive=list(chans))


def _decode(text, path):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
                           f"    {context}", "    " + " " * (exc.colno - 1) + "^"]) from None


def resolve_config_path(name=None) -> Path:
    """Find a config file.

    A path that exists (relative to the working directory) is used as is.
    Otherwise its file name, or ``gatemonlab.json`` when no name is given,
    is tried in each directory of $GATEMONLAB_CONFIG_PATH.
    """
    if Path(name or DEFAULT_CONFIG_NAME).is_file():
        return Path(name or DEFAULT_CONFIG_NAME)
    target = Path(name).name if name is not None else DEFAULT_CONFIG_NAME
    for d in os.environ.get(CONFIG_PATH_ENV, "").split(os.pathsep):
        if d and (Path(d) / target).is_file():
            return Path(d) / target
    raise FileNotFoundError(f"config {name or DEFAULT_CONFIG_NAME!r} not found "
                            f"(searched cwd and ${CONFIG_PATH_ENV})")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(_decode(path.read_text(), path))


def validate_config(path) -> list[str]:
    """Itemized problems with the config at ``path``; empty when valid."""
    try:
        load_config(path)
    except ConfigError as exc:
        return exc.errors
    return []
