"""
Command-line entry point.

    nhms-memory run --preset fig2a
    nhms-memory run --config run.yaml --out results/
    nhms-memory sweep --preset fig2a --param params.xi --values 2:40:2 --workers 4
    nhms-memory optimize --lo 4 --hi 40 --tol 0.1
    nhms-memory validate --quick
    nhms-memory presets

Exit codes: 0 success, 1 validation or run failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, RunConfig, config_from_scenario, config_hash, dump_config, parse_config_text, to_scenario
from .experiments import FIGURES, SCENARIOS, optimize_thickness, run_many, scenario_efficiency_map
from .solver import SolverInstabilityError

__all__ = ["main", "run_command", "FORMAT_VERSION", "SERIES_COLUMNS", "OUTPUT_ENV"]

FORMAT_VERSION = 1
OUTPUT_ENV = "NHMS_MEMORY_OUTPUT"
DEFAULT_OUTPUT = "nhms_output"
SERIES_COLUMNS = ("t_ns", "re_omega_x", "im_omega_x", "re_omega_y", "im_omega_y", "intensity",
                  "rhoS_exit", "im_rhoP_exit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


# =============================================================================
# Output
# =============================================================================

def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2) + "\n")


def write_series(path: Path, ts, stride: int = 1, coherences: bool = True) -> None:
    n = ts.times.size
    zero = np.zeros(n)
    rho_s = ts.rho_s.real if (coherences and ts.rho_s is not None) else zero
    rho_p = ts.rho_p.imag if (coherences and ts.rho_p is not None) else zero
    data = np.column_stack([ts.times, ts.omega_x.real, ts.omega_x.imag, ts.omega_y.real, ts.omega_y.imag,
                            ts.intensity, rho_s, rho_p])[::stride]
    with open(path, "w") as f:
        f.write(f"# format_version: {FORMAT_VERSION}\n")
        f.write("# units: t in ns; omega in rad/ns; intensity in rad^2/ns^2; coherences dimensionless\n")
        f.write("# model: {}\n".format(ts.metadata.get("model", "")))
        np.savetxt(f, data, fmt="%.12e", delimiter=",", header=",".join(SERIES_COLUMNS), comments="")


def _summary(cfg: RunConfig, result) -> dict:
    preds = []
    for (i, k), p in sorted(result.predictions.items()):
        preds.append({"input": i, "pulse": k, "absorption": p.absorption, "prefactor": p.prefactor,
                      "peak": [p.peak_amplitude.real, p.peak_amplitude.imag]})
    return {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "scenario": cfg.scenario,
        "config_hash": config_hash(cfg),
        "model": cfg.model,
        "decay": cfg.decay,
        "units": {"time": "ns", "rates": "rad/ns"},
        "input_energy": result.series.input_energy,
        "echoes": [e.as_dict() for e in result.echoes],
        "analytic": preds if "analytic" in cfg.output.diagnostics else [],
    }


def _output_root(arg, cfg: RunConfig = None) -> Path:
    if arg:
        return Path(arg)
    if cfg is not None and cfg.output.directory:
        return Path(cfg.output.directory)
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def _emit_run(root: Path, cfg: RunConfig, result, name: str) -> Path:
    out = root / name
    out.mkdir(parents=True, exist_ok=True)
    write_series(out / "series.csv", result.series, cfg.output.stride, "coherences" in cfg.output.diagnostics)
    _write_json(out / "summary.json", _summary(cfg, result))
    (out / "config.yaml").write_text(dump_config(cfg))
    return out


# =============================================================================
# Config helpers
# =============================================================================

def _load_raw(args) -> dict:
    if args.config:
        try:
            data = yaml.safe_load(Path(args.config).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError([("<file>", str(exc))]) from None
        if not isinstance(data, dict):
            raise ConfigError([("<root>", "expected a mapping of keys to values")])
        return data
    return {"scenario": args.preset}


def _apply_overrides(raw: dict, args) -> dict:
    raw = copy.deepcopy(raw)
    if getattr(args, "model", None):
        raw["model"] = args.model
    if getattr(args, "no_decay", False):
        raw["decay"] = False
    return raw


def _parse(raw: dict) -> RunConfig:
    return parse_config_text(yaml.safe_dump(raw))


def _parse_value(text: str) -> float:
    t = text.strip()
    if t.endswith("pi"):
        coef = t[:-2].rstrip("*").strip()
        return (float(coef) if coef else 1.0) * math.pi
    return float(t)


def parse_values(text: str, option: str = "--values") -> list:
    """``a,b,c`` or ``start:stop:step`` (stop included when on the grid)."""
    try:
        return _parse_values(text)
    except ValueError as exc:
        raise ConfigError([(option, str(exc))]) from None


def _parse_values(text: str) -> list:
    if ":" in text:
        parts = [_parse_value(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"range must be start:stop:step with step > 0, got {text!r}")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(max(n, 0))]
    return [_parse_value(p) for p in text.split(",") if p.strip()]


def _set_path(data: dict, path: str, value) -> None:
    keys = path.split(".")
    node = data
    for i, key in enumerate(keys[:-1]):
        nxt = keys[i + 1]
        if isinstance(node, list):
            node = node[int(key)]
            continue
        if key not in node or node[key] is None:
            node[key] = [] if nxt.isdigit() else {}
        node = node[key]
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


# =============================================================================
# Subcommands
# =============================================================================

def _cmd_presets(args) -> int:
    for fig, names in FIGURES.items():
        if fig == "fig2b":
            print("fig2b: efficiency map over thickness and storage time")
            continue
        print(f"{fig}:")
        for n in names:
            print(f"  {n:<20s} {SCENARIOS[n][2]}")
    return 0


def _run_map(args) -> int:
    root = _output_root(args.out) / "fig2b"
    root.mkdir(parents=True, exist_ok=True)
    xi = parse_values(args.xi_values, "--xi-values")
    times = parse_values(args.storage_times, "--storage-times")
    emap = scenario_efficiency_map(xi, times, decay=not args.no_decay, workers=args.workers)
    rows = [(x, t, emap.eta[i, j]) for i, x in enumerate(emap.xi) for j, t in enumerate(emap.storage_times)]
    with open(root / "efficiency_map.csv", "w") as f:
        f.write(f"# format_version: {FORMAT_VERSION}\n")
        np.savetxt(f, np.array(rows), fmt="%.12e", delimiter=",", header="xi,storage_time_ns,eta", comments="")
    _write_json(root / "summary.json", {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "scenario": "fig2b",
        "decay": not args.no_decay,
        "argmax_xi": [emap.argmax_xi(j) for j in range(len(times))],
        "max_eta": [float(emap.eta[:, j].max()) for j in range(len(times))],
    })
    print(root)
    return 0


def _cmd_run(args) -> int:
    if args.preset in FIGURES and not args.config:
        if args.preset == "fig2b":
            return _run_map(args)
        names = FIGURES[args.preset]
    else:
        names = None
    if names is None:
        cfgs = [_parse(_apply_overrides(_load_raw(args), args))]
    else:
        cfgs = [_parse(_apply_overrides({"scenario": n}, args)) for n in names]
    scenarios = [to_scenario(c) for c in cfgs]
    results = run_many(scenarios, args.workers)
    for cfg, res in zip(cfgs, results):
        print(_emit_run(_output_root(args.out, cfg), cfg, res, cfg.scenario))
    return 0


def _cmd_sweep(args) -> int:
    raw = _apply_overrides(_load_raw(args), args)
    if not args.param.startswith("params."):
        # explicit sections: start from the preset-filled document
        raw = _parse(raw).model_dump(mode="json", by_alias=True)
    values = parse_values(args.values)
    cfgs = []
    for v in values:
        point = copy.deepcopy(raw)
        try:
            _set_path(point, args.param, v)
        except (KeyError, IndexError, ValueError, TypeError):
            raise ConfigError([(args.param, "path does not exist in the configuration")]) from None
        cfgs.append(_parse(point))
    results = run_many([to_scenario(c) for c in cfgs], args.workers)
    root = _output_root(args.out, cfgs[0]) / f"sweep_{cfgs[0].scenario}"
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for v, res in zip(values, results):
        for e in res.echoes:
            rows.append((v, e.index, e.energy, e.efficiency, e.peak.real, e.peak.imag, e.centroid, e.fwhm))
    with open(root / "sweep.csv", "w") as f:
        f.write(f"# format_version: {FORMAT_VERSION}\n# parameter: {args.param}\n")
        np.savetxt(f, np.array(rows), fmt="%.12e", delimiter=",",
                   header="value,window,energy,efficiency,re_peak,im_peak,centroid_ns,fwhm_ns", comments="")
    _write_json(root / "summary.json", {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "parameter": args.param,
        "values": values,
        "config_hashes": [config_hash(c) for c in cfgs],
    })
    if args.series:
        for k, (cfg, res) in enumerate(zip(cfgs, results)):
            _emit_run(root, cfg, res, f"point_{k:03d}")
    print(root)
    return 0


def _cmd_optimize(args) -> int:
    res = optimize_thickness((args.lo, args.hi), args.tol, args.storage_time, decay=args.decay)
    print(f"xi* = {res.xi:.4f}  eta* = {res.eta:.5f}  evaluations = {res.evaluations}")
    if args.out:
        root = Path(args.out)
        root.mkdir(parents=True, exist_ok=True)
        _write_json(root / "optimize.json", {
            "format_version": FORMAT_VERSION,
            "package_version": __version__,
            "bounds": [args.lo, args.hi],
            "tol": args.tol,
            "decay": args.decay,
            "xi": res.xi,
            "eta": res.eta,
            "evaluations": res.evaluations,
            "history": [list(h) for h in res.history],
        })
    return 0


def _cmd_validate(args) -> int:
    from .validation import oracle_checks

    checks = oracle_checks(quick=args.quick)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nhms-memory", description="x-ray storage and echoes by pulsed hyperfine splitting")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(sp, required=True):
        g = sp.add_mutually_exclusive_group(required=required)
        g.add_argument("--preset", help="scenario or figure name (see 'presets')")
        g.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        sp.add_argument("--model", choices=("reduced", "full", "vector"))
        sp.add_argument("--no-decay", action="store_true", help="switch off the Gamma/2 coherence damping")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")

    r = sub.add_parser("run", help="run one scenario or all scenarios of a figure")
    source(r)
    r.add_argument("--xi-values", default="0:40:4", help="fig2b thickness axis")
    r.add_argument("--storage-times", default="25:150:25", help="fig2b storage-time axis (ns)")

    s = sub.add_parser("sweep", help="run a scenario over a grid of one parameter")
    source(s)
    s.add_argument("--param", required=True, help="dotted path, e.g. params.xi or target.resonant_thickness")
    s.add_argument("--values", required=True, help="a,b,c or start:stop:step")
    s.add_argument("--series", action="store_true", help="also write every point's time series")

    o = sub.add_parser("optimize", help="golden-section search of the first-echo efficiency over xi")
    o.add_argument("--lo", type=float, default=4.0)
    o.add_argument("--hi", type=float, default=40.0)
    o.add_argument("--tol", type=float, default=0.1)
    o.add_argument("--storage-time", type=float, default=75.0)
    o.add_argument("--decay", action="store_true", help="keep the coherence damping (default: off)")
    o.add_argument("--out")

    v = sub.add_parser("validate", help="run the oracle suites")
    v.add_argument("--quick", action="store_true")

    sub.add_parser("presets", help="list built-in scenarios")
    return p


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "optimize": _cmd_optimize,
             "validate": _cmd_validate, "presets": _cmd_presets}


def run_command(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return 2
    except (SolverInstabilityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
