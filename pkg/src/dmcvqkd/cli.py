"""Command-line front end.

Every command reads a flat ``key = value`` config (``--config``) plus
``--set key=value`` overrides, runs one library operation and, when
``--output`` is given, writes the result next to a ``<output>.manifest.json``
run manifest.  Passing a manifest back as ``--config`` reproduces the output.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
physicality error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io as _stdio
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import estimate as est
from . import io
from . import optimize as opt
from . import simulate as sim
from .errors import ConfigError, DomainError, EstimationError, PhysicalityError
from .params import ChannelParams, DetectorParams, ProtocolParams, SourceNoise
from .security import CONDITIONAL_MODES, CONVENTIONS, key_rate

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("keyrate", "optimize", "sweep", "simulate", "estimate", "calibrate")


def _bool(s: str) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> list[float]:
    s = str(s).strip().strip("[]")
    return [float(v) for v in s.split(",") if v.strip()]


def _choice(options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


# name -> parser; defaults live in _DEFAULTS, required fields per command below
FIELDS = {
    "seed": int,
    "v_a": float, "beta": float, "symbol_rate": float,
    "t0": float, "loss_db": float, "eps0": float,
    "delta_eps": float,
    "eta": float, "upsilon": float,
    "convention": _choice(CONVENTIONS), "calibration": str,
    "conditional": _choice(CONDITIONAL_MODES),
    "v_a_min": float, "v_a_max": float, "tol": float,
    "variable": _choice(opt.SWEEP_VARIABLES), "grid": _floats,
    "grid_start": float, "grid_stop": float, "grid_num": int,
    "optimize_v_a": _bool,
    "n_symbols": int, "fidelity": _choice(("symbol", "waveform")),
    "carrier_hz": float, "adc_rate": float, "internal_rate": float, "cutoff_hz": float,
    "x0": float, "lo_ratio": float, "lf_amplitude_rms": float, "phase_noise_rms": float,
    "lf_noise_bandwidth": float, "guard_symbols": int, "calibration_symbols": int,
    "input": str,
    "target": float,
}

_DEFAULTS = {
    "seed": 0, "beta": 0.8, "symbol_rate": 1e7, "eps0": 0.0, "delta_eps": 0.0,
    "eta": 1.0, "upsilon": 0.0, "conditional": "closed_form",
    "v_a_min": opt.DEFAULT_BOUNDS[0], "v_a_max": opt.DEFAULT_BOUNDS[1], "tol": 1e-4,
    "optimize_v_a": False, "target": opt.UPSILON0_TARGET,
}
_SIM_FIELDS = ("fidelity", "carrier_hz", "adc_rate", "internal_rate", "cutoff_hz", "x0", "lo_ratio",
               "lf_amplitude_rms", "phase_noise_rms", "lf_noise_bandwidth", "guard_symbols",
               "calibration_symbols")

_PHYSICS = ("beta", "symbol_rate", "t0", "eps0", "delta_eps", "eta", "upsilon")
_RELEVANT = {
    "keyrate": ("v_a", *_PHYSICS, "convention", "conditional"),
    "optimize": (*_PHYSICS, "convention", "conditional", "v_a_min", "v_a_max", "tol"),
    "sweep": ("v_a", *_PHYSICS, "convention", "variable", "grid", "optimize_v_a",
              "v_a_min", "v_a_max", "tol"),
    "simulate": ("seed", "n_symbols", "v_a", *_PHYSICS, *_SIM_FIELDS),
    "estimate": ("input", "v_a", "t0", "eps0", "eta"),
    "calibrate": ("target", "beta", "t0", "eps0", "delta_eps", "eta"),
}
_REQUIRED = {
    "keyrate": ("v_a", "t0"),
    "optimize": ("t0",),
    "sweep": ("t0", "variable", "grid"),
    "simulate": ("n_symbols", "v_a", "t0"),
    "estimate": ("input", "v_a", "eta"),
    "calibrate": (),
}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    version: str
    outputs: list
    convention: str | None
    convention_source: str | None
    started_utc: str
    finished_utc: str = ""
    extra: dict = field(default_factory=dict)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def resolve_config(command: str, raw: dict[str, str]) -> dict:
    """Parse strings, apply defaults, convert loss_db and check required fields."""
    cfg = {}
    for key, text in raw.items():
        if key not in FIELDS:
            raise UsageError(f"unknown config field {key!r}")
        if text in ("", "None", "null"):
            continue
        try:
            cfg[key] = FIELDS[key](text)
        except ValueError as exc:
            raise UsageError(f"field {key!r}: {exc}") from None
    if "loss_db" in cfg:
        if "t0" in cfg:
            raise UsageError("fields 't0' and 'loss_db' are mutually exclusive")
        cfg["t0"] = 10 ** (-cfg.pop("loss_db") / 10)
    if command == "sweep" and "grid" not in cfg and "grid_start" in cfg:
        try:
            cfg["grid"] = list(np.linspace(cfg.pop("grid_start"), cfg.pop("grid_stop"),
                                           cfg.pop("grid_num")))
        except KeyError as exc:
            raise UsageError(f"missing required field {exc.args[0]!r}") from None
    if command == "calibrate":
        # reference operating point of the calibration target
        cfg.setdefault("t0", 0.1)
        cfg.setdefault("eta", 0.8)
    for key, value in _DEFAULTS.items():
        cfg.setdefault(key, value)
    if command == "simulate":
        for name in _SIM_FIELDS:
            cfg.setdefault(name, getattr(sim.RunConfig, name))
    for key in _REQUIRED[command]:
        if key not in cfg:
            label = "t0' or 'loss_db" if key == "t0" else key
            raise UsageError(f"missing required field '{label}'")
    return {k: cfg[k] for k in _RELEVANT[command] if k in cfg}


def _physics(cfg: dict):
    params = ProtocolParams(cfg.get("v_a", 1.0), cfg["beta"], cfg["symbol_rate"])
    ch = ChannelParams(cfg["t0"], cfg["eps0"])
    return params, ch, SourceNoise(cfg["delta_eps"]), DetectorParams(cfg["eta"], cfg["upsilon"])


def _resolve_convention(cfg: dict, raw: dict) -> tuple[str, str]:
    if "convention" in cfg:
        return cfg["convention"], "config"
    if "calibration" in raw:
        path = raw["calibration"]
        try:
            conv = json.loads(Path(path).read_text())["convention"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read convention from calibration file {path}: {exc}") from None
        if conv not in CONVENTIONS:
            raise UsageError(f"calibration file {path}: unknown convention {conv!r}")
        cfg["convention"] = conv
        return conv, f"calibration:{path}"
    conv = opt.calibrate_convention().convention
    cfg["convention"] = conv
    return conv, "auto-calibrated"


def _csv_text(header, rows) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _flat(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flat(v, key + "."))
        elif isinstance(v, (list, tuple)):
            for i, x in enumerate(v):
                out[f"{key}.{i}"] = x
        else:
            out[key] = v
    return out


def _render(obj, fmt: str) -> str:
    if fmt == "json":
        return io.dumps(obj)
    flat = _flat(io._jsonable(obj))
    return _csv_text(list(flat), [[_cell(v) for v in flat.values()]])


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


# Each command returns (text to write, human summary, extra manifest fields).

def cmd_keyrate(cfg, args):
    params, ch, src, det = _physics(cfg)
    rep = key_rate(params, ch, src, det, cfg["convention"], cfg["conditional"])
    table = "\n".join([
        f"V_A             {rep.v_a:.6g}",
        f"T (equivalent)  {rep.channel.t:.6g}",
        f"eps (equiv.)    {rep.channel.eps:.6g}",
        f"chi_t           {rep.budget.chi_t:.6g}",
        f"I(a:b)          {rep.i_ab:.6g} bits/symbol",
        f"Holevo bound    {rep.holevo:.6g} bits/symbol",
        f"key rate        {rep.key_rate_per_symbol:.6g} bits/symbol",
        f"key rate        {rep.key_rate_per_second / 1e3:.6g} kbit/s",
        f"secure          {rep.secure}",
    ])
    return _render(rep.to_dict(), args.format), table, {}


def cmd_optimize(cfg, args):
    _, ch, src, det = _physics(cfg)
    o = opt.optimal_modulation(ch, src, det, cfg["beta"], (cfg["v_a_min"], cfg["v_a_max"]),
                               cfg["tol"], cfg["convention"], cfg["conditional"])
    if args.format == "csv":
        spec = opt.SweepSpec("v_a", [o.v_a_star], ProtocolParams(o.v_a_star, cfg["beta"], cfg["symbol_rate"]),
                             ch, src, det, cfg["convention"])
        text = _sweep_text(opt.sweep(spec), "csv")
    else:
        d = dataclasses.asdict(o)
        d["key_rate_per_second"] = o.key_rate_star * cfg["symbol_rate"]
        text = io.dumps(d)
    summary = (f"V_A* = {o.v_a_star:.6g}, K* = {o.key_rate_star:.6g} bits/symbol "
               f"({o.key_rate_star * cfg['symbol_rate'] / 1e3:.6g} kbit/s)")
    return text, summary, {}


def _sweep_text(rows, fmt: str) -> str:
    if fmt == "json":
        return io.dumps([dataclasses.asdict(r) for r in rows])
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(io.SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_cell(float(r.swept_value)), _cell(float(r.key_rate_per_symbol)),
                    _cell(float(r.key_rate_per_second)), _cell(float(r.i_ab)),
                    _cell(float(r.holevo)), int(r.valid)])
    return buf.getvalue()


def cmd_sweep(cfg, args):
    params, ch, src, det = _physics(cfg)
    try:
        spec = opt.SweepSpec(cfg["variable"], cfg["grid"], params, ch, src, det, cfg["convention"],
                             cfg["optimize_v_a"], (cfg["v_a_min"], cfg["v_a_max"]), cfg["tol"])
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    rows = opt.sweep(spec, jobs=args.jobs)
    n_valid = sum(r.valid for r in rows)
    return _sweep_text(rows, args.format), f"{len(rows)} rows ({n_valid} valid)", {}


def cmd_simulate(cfg, args):
    params, ch, src, det = _physics(cfg)
    knobs = {k: cfg[k] for k in _SIM_FIELDS}
    run_cfg = sim.RunConfig(cfg["n_symbols"], cfg["seed"], params, ch, src, det, **knobs)
    records, diag = sim.run(run_cfg)
    diag = {k: v for k, v in diag.items() if k != "runtime_s"}
    if args.format == "json":
        text = io.dumps({c: getattr(records, c) for c in sim.SymbolRecords.COLUMNS})
    else:
        rows = ([r.n, r.k, _cell(float(r.alice_x)), _cell(float(r.alice_p)),
                 _cell(float(r.bob_x)), _cell(float(r.bob_p))] for r in records)
        text = _csv_text(sim.SymbolRecords.COLUMNS, rows)
    return text, f"{len(records)} symbols simulated ({run_cfg.fidelity} fidelity)", {"diagnostics": diag}


def cmd_estimate(cfg, args):
    records = io.read_records_csv(cfg["input"])
    res = est.estimate_channel(records, cfg["v_a"], cfg["eta"])
    d = res.to_dict()
    if "t0" in cfg:
        d["upsilon_hat"] = est.backout_detector_noise(res.chi_t_hat, cfg["t0"], cfg.get("eps0", 0.0),
                                                      cfg["eta"])
    raw = est.raw_key_bits(records)
    d["raw_key_mismatch"] = raw.mismatch_rate
    text = _render(d, args.format)
    summary = f"chi_t = {res.chi_t_hat:.4f}, T = {res.t_hat:.4f}, I(a:b) = {res.i_ab_hat:.4f} bits"
    if "upsilon_hat" in d:
        summary += f", upsilon = {d['upsilon_hat']:.4f}"
    return text, summary, {}


def cmd_calibrate(cfg, args):
    rep = opt.calibrate_convention(cfg["target"], ChannelParams(cfg["t0"], cfg["eps0"]),
                                   DetectorParams(cfg["eta"], 0.0), cfg["beta"],
                                   SourceNoise(cfg["delta_eps"]))
    cfg["convention"] = rep.convention
    errs = ", ".join(f"{k}: {v:.3%}" for k, v in rep.relative_errors.items())
    return _render(rep, args.format), f"convention = {rep.convention} (relative errors {errs})", {}


_HANDLERS = {"keyrate": cmd_keyrate, "optimize": cmd_optimize, "sweep": cmd_sweep,
             "simulate": cmd_simulate, "estimate": cmd_estimate, "calibrate": cmd_calibrate}
_DEFAULT_FORMAT = {"keyrate": "json", "optimize": "json", "sweep": "csv", "simulate": "csv",
                   "estimate": "json", "calibrate": "json"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmcvqkd", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "keyrate": "key rate lower bound for one parameter set",
        "optimize": "optimal modulation variance",
        "sweep": "key rate along a one-dimensional grid",
        "simulate": "Monte Carlo symbol records",
        "estimate": "channel and detector noise from a record file",
        "calibrate": "fix the information-counting convention",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", help="key = value file, or a run manifest to replay")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config field (repeatable)")
        s.add_argument("--seed", type=int, help="random seed (simulate)")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        s.add_argument("--output", help="output file; a manifest is written beside it")
        s.add_argument("--format", choices=("csv", "json"), help="output format")
    return p


def _raw_config(args) -> dict[str, str]:
    raw = io.read_config(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    return raw


def _execute(args) -> int:
    started = _utc_now()
    try:
        raw = _raw_config(args)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    calibration = raw.pop("calibration", None)
    cfg = resolve_config(args.command, raw)
    conv_source = None
    if args.command in ("keyrate", "optimize", "sweep"):
        if calibration is not None:
            raw["calibration"] = calibration
        conv, conv_source = _resolve_convention(cfg, raw)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    args.format = args.format or _DEFAULT_FORMAT[args.command]
    t = time.perf_counter()
    text, summary, extra = _HANDLERS[args.command](cfg, args)
    if args.output is None:
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.output)
    out.write_text(text)
    manifest = RunManifest(
        command=args.command,
        config=cfg,
        seed=cfg.get("seed") if args.command == "simulate" else None,
        version=__version__,
        outputs=[str(out)],
        convention=cfg.get("convention"),
        convention_source=conv_source if conv_source else ("calibration" if args.command == "calibrate" else None),
        started_utc=started,
        finished_utc=_utc_now(),
        extra={**extra, "format": args.format, "elapsed_s": round(time.perf_counter() - t, 3)},
    )
    io.write_json(manifest, manifest_path(out))
    print(summary)
    return EXIT_OK


def manifest_path(output) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _execute(args)
    except (UsageError, ConfigError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PhysicalityError, EstimationError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
