"""gatemonlab command line.

    gatemonlab simulate <kind> --config FILE [--seed N] [--out DIR] [--force]
    gatemonlab fit <kind> --data FILE [--config FILE] --out DIR [--force]
    gatemonlab report loss-budget --config FILE [--out DIR] [--force]
    gatemonlab validate [--config FILE]

Exit status: 0 success, 1 invalid config, 2 a fit did not converge, 3 I/O.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from ..fitters import (fit_avoided_crossing, fit_decaying_sinusoid, fit_exponential,
                       fit_lorentzian_dip, fit_notch_resonator, fit_sqrt_power_law)
from ..fitters.spectroscopy import NotBracketedError
from ..gatemap import CalibrationError
from ..traces import ComplexTrace, Sweep2D
from .config import (CONFIG_PATH_ENV, KINDS, ConfigError, load_config, parse_config,
                     resolve_config_path)
from .experiments import RunDirectoryError, _Run, run_experiment, write_run
from .report import report_loss_budget

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_IO = 0, 1, 2, 3
FIT_KINDS = ("s21-sweep", "vacuum-rabi", "two-tone", "rabi", "t1")

log = logging.getLogger("gatemonlab")


def _parser():
    p = argparse.ArgumentParser(prog="gatemonlab", description="Synthetic gatemon experiments.",
                                epilog=f"Config files are also searched in ${CONFIG_PATH_ENV}.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="config JSON (default: gatemonlab.json on the search path)")
        if out:
            sp.add_argument("--seed", type=int, help="override rng_seed")
            sp.add_argument("--out", help="run directory (default: config output_dir)")
            sp.add_argument("--force", action="store_true",
                            help="write into a non-empty run directory")
            sp.add_argument("--workers", type=int, default=None)

    sim = sub.add_parser("simulate", help="simulate, fit and summarize one experiment")
    sim.add_argument("kind", choices=KINDS)
    common(sim)

    fit = sub.add_parser("fit", help="fit an existing CSV trace")
    fit.add_argument("kind", choices=FIT_KINDS)
    fit.add_argument("--data", required=True, help="input CSV")
    common(fit)

    rep = sub.add_parser("report", help="derived reports")
    rep.add_argument("what", choices=("loss-budget",))
    common(rep)

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("path", nargs="?", help="config file (same as --config)")
    common(val, out=False)
    return p


def _config(args, kind=None):
    path = resolve_config_path(getattr(args, "path", None) or args.config)
    cfg = load_config(path)
    raw = dict(cfg.raw)
    if kind is not None:
        raw["kind"] = kind
    if getattr(args, "seed", None) is not None:
        raw["rng_seed"] = args.seed
    return parse_config(raw) if raw != cfg.raw else cfg


def _finish(manifest, out):
    print(f"wrote {len(manifest.files)} files to {out}")
    for d in manifest.diagnostics:
        print(d, file=sys.stderr)
    return EXIT_OK if manifest.converged else EXIT_FIT


def _cmd_simulate(args):
    cfg = _config(args, args.kind)
    out = args.out or cfg.output_dir
    manifest = run_experiment(cfg, out, force=args.force, workers=args.workers)
    print(Path(out, "summary.txt").read_text(), end="")
    return _finish(manifest, out)


def _fit_data(kind, sweep: Sweep2D, path, cfg):
    """FitResults for one input file, keyed by output name."""
    names = sweep.names
    if kind == "s21-sweep":
        return {"fit_s21.json": fit_notch_resonator(ComplexTrace.from_csv(path))}
    if kind == "vacuum-rabi":
        return {"fit_avoided_crossing.json": fit_avoided_crossing(sweep)}
    if kind == "two-tone":
        f, v = sweep[names[0]], sweep[names[1]]
        # peaks are fitted as dips of the negated signal
        depth_sign = -1.0 if np.median(v) < np.mean(v) else 1.0
        return {"fit_line.json": fit_lorentzian_dip(f, depth_sign * v)}
    if kind == "t1":
        return {"fit_t1.json": fit_exponential(sweep)}
    if "p_drive_dBm" not in sweep:
        return {"fit_rabi.json": fit_decaying_sinusoid(sweep)}
    out, P, nu = {}, [], []
    for p in np.unique(sweep["p_drive_dBm"]):
        sel = sweep["p_drive_dBm"] == p
        res = fit_decaying_sinusoid(sweep["tau_ns"][sel], sweep["v_h_mV"][sel])
        out[f"fit_rabi_{p:+.2f}dBm.json"] = res
        if res.converged:
            P.append(10.0 ** (p / 10.0))
            nu.append(res.params["nu_rabi"])
    if len(P) >= 3:
        alpha = cfg.section("drive").get("anharmonicity_MHz") if cfg else None
        out["sqrt_law.json"] = fit_sqrt_power_law(P, nu, alpha)
    return out


def _cmd_fit(args):
    cfg = None
    if args.config:
        cfg = load_config(resolve_config_path(args.config))
    sweep = Sweep2D.from_csv(args.data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fits = _fit_data(args.kind, sweep, args.data, cfg)
    run = _Run()
    for name, res in fits.items():
        run.fit(name, res)
        doc = res.to_dict()
        for k, v in doc["params"].items():
            run.line(f"{name[:-5]}.{k} {v!r}")
    run.diagnostics += [f"warning: {w.message}" for w in caught]
    out = args.out or (cfg.output_dir if cfg else None)
    if out is None:
        raise RunDirectoryError("no output directory given (--out)")
    raw = {"kind": args.kind, "rng_seed": args.seed or 0, "input": str(args.data),
           "input_sha256": hashlib.sha256(Path(args.data).read_bytes()).hexdigest()}
    manifest = write_run(out, raw, run, force=args.force)
    print("\n".join(run.summary))
    return _finish(manifest, out)


def _cmd_report(args):
    cfg = _config(args, "loss-budget")
    out = args.out or cfg.output_dir
    if out is None:
        print(report_loss_budget(cfg).text)
        return EXIT_OK
    manifest = run_experiment(cfg, out, force=args.force)
    print(Path(out, "summary.txt").read_text(), end="")
    return _finish(manifest, out)


def _cmd_validate(args):
    try:
        _config(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(e, file=sys.stderr)
        return EXIT_CONFIG
    print("config OK")
    return EXIT_OK


COMMANDS = {"simulate": _cmd_simulate, "fit": _cmd_fit, "report": _cmd_report,
            "validate": _cmd_validate}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CalibrationError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except NotBracketedError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (OSError, ValueError) as exc:
        # RunDirectoryError, missing files and unreadable CSV all land here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
