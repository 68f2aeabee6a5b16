"""Experiment runner.

Config files are INI documents read with :mod:`configparser`::

    [experiment]
    algorithm = saboa          ; squint | squint-corners | squint-cover | boa+ | saboa
    horizon = 4096
    seed = 0
    ; optional: E, variant (fast|slow), checkpoints (comma list),
    ; eps and prior (uniform|sparsity) for squint-cover

    [stream]
    kind = quadratic           ; quadratic | adversarial | experts | absolute
    dim = 50
    sparsity = 3
    norm = 0.5
    sigma = 0.1
    cov = identity             ; identity | toeplitz:<rho> | deficient:<k>

    [sweep]
    ; each key is section.key and holds a comma-separated list of values
    experiment.horizon = 256, 512, 1024
    experiment.seed = 0, 1

``run`` writes ``<stem>.csv`` and ``<stem>.summary.json``; ``sweep`` writes one
CSV per cell and ``<stem>.sweep.json``. Exit codes: 0 success,
2 configuration, 3 invariant violation, 4 stream or runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (ConfigurationError, ExpertGrid, InvariantViolation, SaboaError,
                   UnsupportedRegimeError, corners, validate_checkpoints)
from .geometry import build_cover, sparsity_prior
from .meta import MetaConfig, run_boaplus, run_saboa, run_squint
from .metrics import RunSummary, ledger_csv, online_to_batch, summarize
from .streams import stream_from_spec

log = logging.getLogger(__name__)

ALGORITHMS = ("squint", "squint-corners", "squint-cover", "boa+", "saboa")
EXPERIMENT_KEYS = {"algorithm", "horizon", "seed", "e", "variant", "checkpoints", "eps",
                   "prior", "snapshot_predictions"}

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RUNTIME = 0, 2, 3, 4


def read_config(path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    for section in cp.sections():
        if section not in ("experiment", "stream", "sweep"):
            raise ConfigurationError(f"unknown config section [{section}]")
    for section in ("experiment", "stream"):
        if not cp.has_section(section):
            raise ConfigurationError(f"missing config section [{section}]")
    return {s: dict(cp[s]) for s in cp.sections()}


def _int(exp, key, default=None):
    if key not in exp:
        if default is None:
            raise ConfigurationError(f"experiment key {key!r} is required")
        return default
    try:
        return int(exp[key])
    except ValueError as exc:
        raise ConfigurationError(f"bad value for experiment key {key!r}: {exp[key]!r}") from exc


def _float(exp, key):
    try:
        return float(exp[key])
    except ValueError as exc:
        raise ConfigurationError(f"bad value for experiment key {key!r}: {exp[key]!r}") from exc


def _bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def resolve(config: dict, seed: int | None = None, snapshot: bool = False) -> dict:
    """Validate the [experiment] and [stream] sections and apply overrides."""
    exp = dict(config["experiment"])
    unknown = set(exp) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigurationError(f"unknown experiment key {sorted(unknown)[0]!r}")
    alg = exp.get("algorithm")
    if alg not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {alg!r}; expected one of {ALGORITHMS}")
    if seed is not None:
        exp["seed"] = str(seed)
    if snapshot:
        exp["snapshot_predictions"] = "true"
    horizon = _int(exp, "horizon")
    if horizon < 1:
        raise ConfigurationError("experiment key 'horizon' must be >= 1")
    _int(exp, "seed", 0)
    if "e" in exp and not _float(exp, "e") > 0:
        raise ConfigurationError("experiment key 'E' must be > 0")
    if exp.get("variant", "fast") not in ("fast", "slow"):
        raise ConfigurationError("experiment key 'variant' must be fast or slow")
    if "checkpoints" in exp:
        try:
            cps = [int(c) for c in exp["checkpoints"].replace(",", " ").split()]
        except ValueError as exc:
            raise ConfigurationError("experiment key 'checkpoints' must list integers") from exc
        validate_checkpoints(cps, horizon)
    if exp.get("prior", "sparsity") not in ("uniform", "sparsity"):
        raise ConfigurationError("experiment key 'prior' must be uniform or sparsity")
    _bool(exp.get("snapshot_predictions", "false"))
    return {"experiment": exp, "stream": dict(config["stream"])}


def execute(resolved: dict):
    """Run one resolved experiment; returns ``(ledger, stream, wall_time)``."""
    exp = resolved["experiment"]
    seed = _int(exp, "seed", 0)
    horizon = _int(exp, "horizon")
    stream = stream_from_spec(resolved["stream"], seed)
    cps = ()
    if "checkpoints" in exp:
        cps = validate_checkpoints([int(c) for c in exp["checkpoints"].replace(",", " ").split()],
                                   horizon)
    cfg = MetaConfig(E=_float(exp, "e") if "e" in exp else None,
                     variant=exp.get("variant", "fast"), checkpoints=cps,
                     snapshot_predictions=_bool(exp.get("snapshot_predictions", "false")))
    alg = exp["algorithm"]
    start = time.perf_counter()
    if alg == "saboa":
        ledger = run_saboa(stream, horizon, cfg)
    elif alg == "boa+":
        ledger = run_boaplus(stream, horizon, cfg)
    else:
        d = stream.dim
        if alg == "squint":
            grid = ExpertGrid.from_points(np.eye(d))
        elif alg == "squint-corners":
            grid = corners(d, 1.0)
        else:
            grid = build_cover(d, _float(exp, "eps") if "eps" in exp else 0.25)
            if exp.get("prior", "sparsity") == "sparsity":
                grid = sparsity_prior(grid)
        ledger = run_squint(stream, horizon, grid, cfg, name=alg)
    return ledger, stream, time.perf_counter() - start


def _csv_text(ledger, stream, resolved) -> str:
    head = f"# saboa {__version__}\n# config {json.dumps(resolved, sort_keys=True)}\n"
    return head + ledger_csv(ledger, stream)


def _summary(ledger, stream, resolved, wall) -> RunSummary:
    s = summarize(ledger, stream, resolved, __version__, wall)
    s.extras["stream"] = stream.metadata()
    s.extras["grid_sizes"] = ledger.extras.get("grid_sizes")
    s.extras["max_gradient"] = ledger.extras.get("max_gradient")
    if ledger.keep_predictions and ledger.t:
        s.extras["online_to_batch"] = online_to_batch(ledger).tolist()
    return s


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, InvariantViolation):
        return EXIT_INVARIANT
    if isinstance(exc, (ConfigurationError, UnsupportedRegimeError)):
        return EXIT_CONFIG
    return EXIT_RUNTIME


def run_file(path, out=None, seed=None, snapshot=False) -> int:
    path = Path(path)
    try:
        resolved = resolve(read_config(path), seed, snapshot)
    except (ConfigurationError, SaboaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(out) if out else path.parent
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        ledger, stream, wall = execute(resolved)
    except SaboaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        partial = getattr(exc, "ledger", None)
        if partial is not None and not isinstance(exc, ConfigurationError):
            s = RunSummary(resolved, __version__, 0.0, {}, {},
                           invariant_violations=int(isinstance(exc, InvariantViolation)),
                           complete=False, error=partial.error)
            s.write(outdir / f"{path.stem}.summary.json")
        return _exit_code(exc)
    except Exception as exc:  # numerical or I/O failure outside the package's own errors
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    (outdir / f"{path.stem}.csv").write_bytes(_csv_text(ledger, stream, resolved).encode())
    summary = _summary(ledger, stream, resolved, wall)
    summary.write(outdir / f"{path.stem}.summary.json")
    print(f"{resolved['experiment']['algorithm']}: T={ledger.t} wall={wall:.2f}s")
    for name, v in summary.final_regret.items():
        slope = summary.slopes.get(name)
        slope_txt = "n/a" if slope is None else f"{slope:.3f}"
        print(f"  avg regret vs {name}: {v:.6g} (slope {slope_txt})")
    return EXIT_OK


def sweep_cells(config: dict) -> list[dict]:
    axes = config.get("sweep")
    if not axes:
        raise ConfigurationError("config has no [sweep] section")
    names, values = [], []
    for key, text in axes.items():
        section, _, field = key.partition(".")
        if section not in ("experiment", "stream") or not field:
            raise ConfigurationError(f"sweep key {key!r} must look like experiment.<key> "
                                     "or stream.<key>")
        vals = [v.strip() for v in text.split(",") if v.strip()]
        if not vals:
            raise ConfigurationError(f"sweep key {key!r} has no values")
        names.append((section, field))
        values.append(vals)
    cells = []
    for combo in itertools.product(*values):
        cell = {"experiment": dict(config["experiment"]), "stream": dict(config["stream"])}
        for (section, field), v in zip(names, combo):
            cell[section][field] = v
        cells.append(cell)
    return cells


def _run_cell(args):
    index, cell, csv_path = args
    try:
        resolved = resolve(cell)
        ledger, stream, _ = execute(resolved)
    except SaboaError as exc:
        return {"cell": index, "config": cell, "status": "failed", "exit_code": _exit_code(exc),
                "error": f"{type(exc).__name__}: {exc}"}
    except Exception as exc:
        return {"cell": index, "config": cell, "status": "failed", "exit_code": EXIT_RUNTIME,
                "error": f"{type(exc).__name__}: {exc}"}
    Path(csv_path).write_bytes(_csv_text(ledger, stream, resolved).encode())
    s = summarize(ledger, stream, resolved, __version__, 0.0)
    return {"cell": index, "config": resolved, "status": "ok", "ledger": Path(csv_path).name,
            "final_avg_regret": s.final_regret, "slopes": s.slopes}


def sweep_file(path, out=None, workers=1, keep_going=False, seed=None, snapshot=False) -> int:
    path = Path(path)
    try:
        config = read_config(path)
        if seed is not None:
            config["experiment"]["seed"] = str(seed)
        if snapshot:
            config["experiment"]["snapshot_predictions"] = "true"
        cells = sweep_cells(config)
    except SaboaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(out) if out else path.parent
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, c, outdir / f"{path.stem}.cell{i:03d}.csv") for i, c in enumerate(cells)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    failed = [r for r in results if r["status"] != "ok"]
    aggregate = {"schema": RunSummary.SCHEMA, "version": __version__, "config": config,
                 "cells": results, "failed": len(failed)}
    (outdir / f"{path.stem}.sweep.json").write_text(
        json.dumps(aggregate, indent=2, sort_keys=True) + "\n")
    for r in failed:
        print(f"cell {r['cell']} failed: {r['error']}", file=sys.stderr)
    print(f"sweep: {len(results)} cells, {len(failed)} failed")
    if failed and not keep_going:
        return max(r["exit_code"] for r in failed)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saboa", description="Run sparse online aggregation experiments.")
    p.add_argument("--version", action="version", version=f"saboa {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        s = sub.add_parser(name)
        s.add_argument("config")
        s.add_argument("--out", help="output directory (default: next to the config)")
        s.add_argument("--seed", type=int, help="override the experiment seed")
        s.add_argument("--snapshot-predictions", action="store_true",
                       help="keep every prediction (enables online-to-batch output)")
        if name == "sweep":
            s.add_argument("--workers", type=int, default=1)
            s.add_argument("--keep-going", action="store_true",
                           help="report failed cells instead of failing the sweep")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "run":
        return run_file(args.config, args.out, args.seed, args.snapshot_predictions)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return sweep_file(args.config, args.out, args.workers, args.keep_going, args.seed,
                      args.snapshot_predictions)


if __name__ == "__main__":
    sys.exit(main())
