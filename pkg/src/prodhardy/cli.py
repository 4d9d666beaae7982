"""Command line experiment runner.

    prodhardy run <config.yaml> [--jobs N]
    prodhardy list-suites
    prodhardy describe <suite>
    prodhardy schema

Exit codes: 0 all metrics pass, 1 some metric failed, 2 config error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from . import __version__
from .grid import Axis
from .report import emit_extra_tables, emit_table
from .suites import ORDER, SUITES, Context, PotentialSpec, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

# suites whose single base grid follows grid.axis1.n_cells
_BASE_GRID_SUITES = ("gaussian-bound", "propagation")
# suites whose scale density follows scales.per_octave
_SCALE_SUITES = ("square-equivalence", "tent-decomp", "atom-validate")


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ schema

def _type_of(v) -> dict:
    if isinstance(v, bool):
        return {"type": "boolean"}
    if isinstance(v, int):
        return {"type": "integer"}
    if isinstance(v, float):
        return {"type": "number"}
    if isinstance(v, str):
        return {"type": "string"}
    if isinstance(v, (list, tuple)):
        return {"type": "array", "items": _type_of(v[0]) if v else {}}
    raise TypeError(f"no schema type for {v!r}")


def _suite_options_schema(tolerances_only: bool) -> dict:
    props = {}
    for name, suite in SUITES.items():
        keys = {k: v for k, v in suite.defaults.items()
                if not tolerances_only or _is_tolerance(k)}
        props[name] = {"type": "object", "additionalProperties": False,
                       "properties": {k: _type_of(v) for k, v in keys.items()}}
    return {"type": "object", "additionalProperties": False, "properties": props}


def _is_tolerance(key: str) -> bool:
    return key.endswith(("_tol", "_bound", "_factor", "_min", "_max", "_spread"))


_AXIS = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "n_cells": {"type": "integer", "minimum": 4},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "boundary": {"enum": ["dirichlet", "periodic"]},
    },
}


def config_schema() -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "prodhardy experiment config",
        "type": "object",
        "additionalProperties": False,
        "required": ["suites"],
        "properties": {
            "seed": {"type": "integer", "minimum": 0},
            "grid": {"type": "object", "additionalProperties": False,
                     "properties": {"axis1": _AXIS, "axis2": _AXIS}},
            "potential": {
                "type": "object", "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["zero", "constant", "random", "file"]},
                    "value": {"type": "number", "minimum": 0},
                    "vmax": {"type": "number", "minimum": 0},
                    "path": {"type": "string"},
                },
            },
            "scales": {"type": "object", "additionalProperties": False,
                       "properties": {"per_octave": {"type": "integer", "minimum": 1}}},
            "suites": {"oneOf": [
                {"const": "all"},
                {"type": "array", "items": {"enum": list(SUITES)}, "uniqueItems": True},
            ]},
            "tolerances": _suite_options_schema(tolerances_only=True),
            "options": _suite_options_schema(tolerances_only=False),
            "output": {"type": "object", "additionalProperties": False,
                       "properties": {
                           "dir": {"type": "string"},
                           "formats": {"type": "array", "uniqueItems": True,
                                       "items": {"enum": ["csv", "json"]}},
                           "tables": {"type": "boolean"},
                       }},
        },
    }


# ------------------------------------------------------------------ loading

def _node_at(node, path):
    """YAML node for a jsonschema error path (falls back to the deepest parent)."""
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) \
                and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node


def _line(node) -> int:
    return node.start_mark.line + 1 if node is not None else 1


def load_config(path) -> tuple[dict, Path]:
    """Parse and validate a YAML config; raises ConfigError with a line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark else 1
        raise ConfigError(f"{path}:{line}: invalid YAML: {getattr(e, 'problem', e)}") from None
    if data is None:
        data = {}
    validator = jsonschema.Draft202012Validator(config_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (_line(_node_at(root, e.path)),
                                                                list(map(str, e.path))))
    if errors:
        e = errors[0]
        where = "/".join(map(str, e.path)) or "<root>"
        raise ConfigError(f"{path}:{_line(_node_at(root, e.path))}: {where}: {e.message}")
    if data["suites"] != "all" and not data["suites"]:
        raise ConfigError(f"{path}:{_line(_node_at(root, ['suites']))}: no suites selected")
    _semantic_checks(data, root, path)
    return data, path.parent


def _semantic_checks(data: dict, root, path: Path):
    """Constraints the schema cannot express, reported with their line."""
    def fail(keys, msg):
        raise ConfigError(f"{path}:{_line(_node_at(root, keys))}: {'/'.join(keys)}: {msg}")

    for key, a in data.get("grid", {}).items():
        n = a.get("n_cells")
        if n is not None and n & (n - 1):
            fail(["grid", key, "n_cells"], f"must be a power of two, got {n}")
    pot = data.get("potential", {})
    if pot.get("kind") == "constant" and "value" not in pot:
        fail(["potential"], "kind 'constant' needs 'value'")
    if pot.get("kind") == "file":
        if "path" not in pot:
            fail(["potential"], "kind 'file' needs 'path'")
        if not (path.parent / pot["path"]).is_file():
            fail(["potential", "path"], f"file not found: {pot['path']}")


def build_context(cfg: dict, base_dir: Path) -> tuple[Context, list[str]]:
    seed = int(cfg.get("seed", 0))
    grid = cfg.get("grid", {})
    axes = []
    for key in ("axis1", "axis2"):
        a = grid.get(key, {})
        n = a.get("n_cells", 64)
        try:
            axes.append(Axis(n, a.get("h", 1.0 / n), 0.0, a.get("boundary", "dirichlet")))
        except ValueError as e:
            raise ConfigError(f"grid/{key}: {e}") from None
    pot = cfg.get("potential", {"kind": "random"})
    spec = PotentialSpec(pot["kind"], pot.get("value", 0.0), pot.get("vmax", 50.0))
    if spec.kind == "constant" and "value" not in pot:
        raise ConfigError("potential: kind 'constant' needs 'value'")
    if spec.kind == "file":
        if "path" not in pot:
            raise ConfigError("potential: kind 'file' needs 'path'")
        p = base_dir / pot["path"]
        if not p.is_file():
            raise ConfigError(f"potential: file not found: {p}")
        try:
            spec.samples = np.loadtxt(p, dtype=float).ravel()
        except ValueError as e:
            raise ConfigError(f"potential: cannot parse {p}: {e}") from None
        if spec.samples.size == 0 or np.any(spec.samples < 0) \
                or not np.all(np.isfinite(spec.samples)):
            raise ConfigError(f"potential: {p} must hold finite non-negative samples")
    names = list(ORDER) if cfg["suites"] == "all" else [s for s in ORDER if s in cfg["suites"]]
    options: dict = {}
    for name in names:
        o = {}
        if name in _BASE_GRID_SUITES:
            o["n_cells"] = axes[0].n_cells
        if name in _SCALE_SUITES and "per_octave" in cfg.get("scales", {}):
            o["per_octave"] = cfg["scales"]["per_octave"]
        o.update(cfg.get("tolerances", {}).get(name, {}))
        o.update(cfg.get("options", {}).get(name, {}))
        options[name] = o
    ctx = Context(seed, (axes[0].length, axes[1].length),
                  (axes[0].boundary, axes[1].boundary), spec, options)
    return ctx, names


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


# ------------------------------------------------------------------ running

def _run_one(args):
    name, ctx = args
    return run_suite(name, ctx)


def run(cfg: dict, base_dir: Path, jobs: int = 1, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        ctx, names = build_context(cfg, base_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=err)
        return EXIT_CONFIG
    output = cfg.get("output", {})
    out_dir = Path(os.environ.get("PRODHARDY_OUTPUT_DIR") or base_dir / output.get("dir", "out"))
    formats = output.get("formats", ["csv", "json"])
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                reports = list(pool.map(_run_one, [(n, ctx) for n in names]))
        else:
            reports = [run_suite(n, ctx) for n in names]
    except ValueError as e:
        print(f"config error: invalid suite option: {e}", file=err)
        return EXIT_CONFIG
    digest = config_hash(cfg)
    for rep in reports:
        rep.provenance["config_hash"] = digest
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for f in formats:
            emit_table(reports, out_dir / f"metrics.{f}", f)
        if output.get("tables", True):
            emit_extra_tables(reports, out_dir)
    except OSError as e:
        print(f"I/O error: {e}", file=err)
        return EXIT_IO
    failed = [(r.suite, m) for r in reports for m in r.failures()]
    for rep in reports:
        print(f"{rep.suite}: {'PASS' if rep.passed else 'FAIL'} "
              f"({len(rep.metrics) - len(rep.failures())}/{len(rep.metrics)} metrics)", file=out)
    if failed:
        for suite, m in failed:
            print(f"FAILED {suite}/{m.name}: {m.value:.6g} {m.comparison} {m.tolerance:.6g}",
                  file=err)
        return EXIT_FAIL
    return EXIT_OK


# ------------------------------------------------------------------ entry

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prodhardy", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the suites selected by a config file")
    r.add_argument("config")
    r.add_argument("--jobs", type=int, default=1, help="suites run in parallel processes")
    sub.add_parser("list-suites", help="list suite names")
    d = sub.add_parser("describe", help="describe a suite and its options")
    d.add_argument("suite")
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    if args.command == "list-suites":
        for name in ORDER:
            s = SUITES[name]
            crit = ",".join(map(str, s.criteria)) or "-"
            print(f"{name:20s} criteria {crit:5s} {s.description}")
        return EXIT_OK
    if args.command == "describe":
        if args.suite not in SUITES:
            print(f"unknown suite {args.suite!r}; see list-suites", file=sys.stderr)
            return EXIT_CONFIG
        s = SUITES[args.suite]
        print(f"{s.name}: {s.description}")
        print(f"criteria: {', '.join(map(str, s.criteria)) or 'none'}")
        print("options (defaults):")
        for k, v in s.defaults.items():
            print(f"  {k}: {json.dumps(v)}")
        return EXIT_OK
    if args.command == "schema":
        print(json.dumps(config_schema(), indent=2))
        return EXIT_OK
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg, base = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    threads = os.environ.get("PRODHARDY_THREADS")
    if threads:
        try:
            n = int(threads)
        except ValueError:
            print("config error: PRODHARDY_THREADS must be an integer", file=sys.stderr)
            return EXIT_CONFIG
        with threadpool_limits(limits=n):
            return run(cfg, base, args.jobs)
    return run(cfg, base, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
