"""Loss budget: qubit quality factors against resonator and drive-line channels."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..params import (combine_quality_factors, qubit_quality_factor,
                      t1_limit_from_drive_coupling)
from ..traces import Sweep2D

REFERENCE_Q_INT = (2.5e3, 1.0e4, 3.7e4)
# a channel whose T1 limit exceeds the measured T1 by this factor is not the main loss
DOMINANCE_FACTOR = 2.0


@dataclass
class LossBudget:
    table: Sweep2D
    reference_Q_int: tuple
    drive_limit_T1_ns: float | None
    drive_dominant: list
    channels: dict
    combined_Q: float | None
    text: str

    def to_dict(self) -> dict:
        return {
            "points": [dict(zip(self.table.names, map(float, row)))
                       for row in zip(*self.table.columns.values())],
            "reference_Q_int": list(self.reference_Q_int),
            "drive_limit_T1_ns": self.drive_limit_T1_ns,
            "drive_line_dominant": self.drive_dominant,
            "channels": self.channels,
            "combined_channel_Q": self.combined_Q,
        }


def _points(cfg):
    lb = cfg.section("loss_budget")
    if lb.get("points"):
        return [(float(p["f_Q_GHz"]), float(p["T1_ns"])) for p in lb["points"]]
    f = float(cfg.section("drive").get("qubit_frequency_GHz", 6.0))
    return [(f, cfg.dissipation.T1)]


def report_loss_budget(cfg) -> LossBudget:
    """Qubit Q = 2π f_Q T1 per point, compared with CPW Q_int references,
    the drive-line T1 limit and the configured loss channels combined."""
    lb = cfg.section("loss_budget")
    refs = tuple(float(q) for q in lb.get("reference_Q_int", REFERENCE_Q_INT))
    channels = {k: float(v) for k, v in lb.get("channels", {}).items()}
    use_drive = bool(lb.get("include_drive_line", True)) and cfg.device is not None
    t1_drive = t1_limit_from_drive_coupling(cfg.device.kappa_kHz) if use_drive else None

    cols = {k: [] for k in ("f_Q_GHz", "T1_ns", "qubit_Q", "Q_drive_limit", "Q_combined",
                            "drive_line_dominant")}
    dominant = []
    lines = ["f_Q_GHz  T1_ns  qubit_Q  " + "  ".join(f"Q/Q_int({q:.3g})" for q in refs)]
    for f, t1 in _points(cfg):
        q = qubit_quality_factor(t1, f)
        chans = list(channels.values())
        q_drive = math.nan
        if t1_drive is not None:
            q_drive = qubit_quality_factor(t1_drive, f)
            chans.append(q_drive)
        combined = combine_quality_factors(chans) if chans else math.nan
        dom = t1_drive is not None and t1_drive < DOMINANCE_FACTOR * t1
        dominant.append(dom)
        for key, val in zip(cols, (f, t1, q, q_drive, combined, float(dom))):
            cols[key].append(val)
        lines.append(f"{f!r}  {t1!r}  {q!r}  " + "  ".join(repr(q / r) for r in refs))
    if t1_drive is not None:
        flag = "dominant" if any(dominant) else "not dominant"
        lines.append(f"drive_line_T1_limit_ns {t1_drive!r} ({flag})")
    combined_cfg = combine_quality_factors(channels.values()) if channels else None
    if combined_cfg is not None:
        lines.append(f"combined_channel_Q {combined_cfg!r} (configured channels: "
                     f"{', '.join(channels)})")
    return LossBudget(Sweep2D(cols), refs, t1_drive, dominant, channels, combined_cfg,
                      "\n".join(lines))
