"""Command-line entry point: ``faultca <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis, engine, infobound, lattice as lat, treeify as tf
from .config import ConfigError, echo, fault_spec, parse_config, with_override
from .faults import FaultError
from .transition import BooleanTable, RuleError


class CLIError(Exception):
    pass


# -- building blocks ------------------------------------------------------------

def build_lattice(spec: dict) -> lat.Lattice:
    kind = spec["kind"]
    if kind == "tree":
        return lat.build_tree(spec["q"], spec["depth"])
    if kind == "hyperbolic":
        return lat.build_hyperbolic(spec["p"], spec["q"], spec["shells"],
                                    spec.get("max_vertices", lat.DEFAULT_MAX_VERTICES))
    if kind == "euclidean":
        return lat.build_euclidean_torus(spec["tiling"], spec["width"], spec["height"])
    if kind == "toom":
        return lat.build_toom(spec["width"], spec["height"])
    return lat.loads(Path(spec["path"]).read_text())


def build_plan(config: dict) -> engine.SimPlan:
    if "lattice" not in config:
        raise CLIError("simulate needs a lattice section")
    plan = config["plan"]
    spec = fault_spec(config)
    L = build_lattice(config["lattice"])
    root = plan["root"]
    if not 0 <= root < L.vertex_count:
        raise CLIError(f"plan.root {root} is not a vertex")
    observe = plan["observe"]
    if plan["light_cone"]:
        L = lat.light_cone(L, root, plan["horizon"])
        if isinstance(observe, list):
            index = {int(o): i for i, o in enumerate(L.origin.tolist())}
            missing = [v for v in observe if v not in index]
            if missing:
                raise CLIError(f"observed cells {missing[:5]} lie outside the light cone")
            observe = [index[v] for v in observe]
        root = 0
    rk = config["rules"]["kind"]
    if rk == "majority":
        rules = engine.majority_rules(L)
    elif rk == "tree":
        trs = tf.treeify(L, root)
        L = trs.tree
        rules = engine.tree_rules(trs, spec.a)
    else:
        rules = engine.table_rules(L, BooleanTable.from_hex(config["rules"]["hex"], config["rules"]["arity"]))
    if observe == "root":
        observed = np.array([root])
    elif observe == "all":
        observed = np.flatnonzero(~L.boundary)
    else:
        observed = np.array(observe)
    return engine.SimPlan(L, rules, spec, plan["horizon"], plan["replicates"], observed,
                          config["seed"], plan["boundary"])


def git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_bytes(text.encode())
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def recursion_row(config: dict) -> dict:
    """Recursion outcome plus the closed-form tolerance certificate for one point."""
    if "recursion" not in config or "d" not in config["recursion"]:
        raise CLIError("recurse needs recursion.d")
    rc = config["recursion"]
    d = rc["d"]
    h = rc["h"] if rc["h"] is not None else d // 2 + 1
    if "faults" not in config:
        raise CLIError("recurse needs a faults section")
    trace = analysis.iterate_recursion(d, h, rc["m"], eps=config["faults"]["epsilon"], mode=rc["mode"],
                                       t_max=rc["t_max"], delta=rc["delta"])
    bounds = analysis.cor23_min_q(trace.xi)
    required = bounds.odd_q if d % 2 else bounds.even_q
    return {
        "d": d, "h": h, "m": rc["m"], "xi": trace.xi, "epsilon": trace.eps, "mode": rc["mode"],
        "required_q": required,
        "verdict": "tolerant" if d >= required else "not_certified",
        "recursion_verdict": trace.verdict,
        "violated_at": "" if trace.violated_at is None else trace.violated_at,
        "final_P": trace.P[-1], "steps": len(trace.P) - 1,
    }, trace


# -- subcommands ----------------------------------------------------------------

def cmd_check(args, config):
    sys.stdout.write(echo(config))


def cmd_generate(args, config):
    if "lattice" not in config:
        raise CLIError("generate needs a lattice section")
    L = build_lattice(config["lattice"])
    path = _write(args.out, f"{config['output']['prefix']}.lattice", lat.dumps(L))
    print(f"{L.kind} {' '.join(map(str, L.params))}: {L.vertex_count} vertices, "
          f"shell sizes {L.shell_sizes()} -> {path}")


def cmd_treeify(args, config):
    if "lattice" not in config:
        raise CLIError("treeify needs a lattice section")
    L = build_lattice(config["lattice"])
    trs = tf.treeify(L, config["plan"]["root"])
    ok, problems = tf.verify_directed_tree(trs)
    if not ok:
        raise CLIError("treeify produced an invalid tree: " + "; ".join(problems[:3]))
    prefix = config["output"]["prefix"]
    _write(args.out, f"{prefix}.tree.lattice", lat.dumps(trs.tree))
    _write(args.out, f"{prefix}.deletions.csv", trs.deletion_report())
    over = tf.budget_violations(trs)
    print(f"max deletions r={trs.max_deletions} over non-boundary vertices; "
          f"{len(over)} vertices exceed a per-category budget")


def cmd_simulate(args, config):
    plan = build_plan(config)
    est = engine.estimate_error(plan)
    prefix = config["output"]["prefix"]
    text = est.to_csv()
    path = _write(args.out, f"{prefix}.csv", text)
    L = build_lattice(config["lattice"])
    sidecar = {
        "seed": config["seed"],
        "config": config,
        "lattice": {"kind": L.kind, "params": list(L.params), "vertices": L.vertex_count,
                    "simulated_vertices": plan.lattice.vertex_count},
        "exact_light_cone": plan.exact_light_cone(int(plan.observed[0])) if len(plan.observed) else False,
        "csv": path.name,
        "csv_sha1": git_blob_sha1(text.encode()),
        "version": __version__,
    }
    _write(args.out, f"{prefix}.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    final = est.freq[-1]
    print(f"t={plan.horizon}: mean error frequency {float(final.mean())!r} over {len(final)} cells, "
          f"{plan.replicates} replicates -> {path}")


def cmd_recurse(args, config):
    row, trace = recursion_row(config)
    path = _write(args.out, f"{config['output']['prefix']}.recursion.csv", trace.to_csv())
    print(json.dumps(row, default=str))
    print(f"-> {path}")


BOUND_HEADER = ["xi", "prop21_m0", "prop21_m1", "prop21_m2", "prop21_m3", "cor23_odd", "cor23_even",
                "cor24_odd", "cor24_even", "thm42_lower"]


def bounds_rows(xis):
    return [analysis.bound_table_row(x) for x in xis]


def cmd_bounds(args, config):
    if not args.xi:
        raise CLIError("bounds needs --xi")
    rows = bounds_rows(args.xi)
    text = _csv_text(BOUND_HEADER, [[_fmt(r[k]) for k in BOUND_HEADER] for r in rows])
    _write(args.out, "bounds.csv", text)
    sys.stdout.write(text)


def cmd_info_bound(args, config):
    report = infobound.info_bound(args.d, args.xi, args.delta, args.t)
    text = json.dumps(report.to_json_dict(), indent=2) + "\n"
    _write(args.out, "info_bound.json", text)
    sys.stdout.write(text)


def _simulate_row(config):
    plan = build_plan(config)
    est = engine.estimate_error(plan)
    lo, hi = est.wilson
    return {"cells": len(plan.observed), "replicates": plan.replicates, "horizon": plan.horizon,
            "final_freq": float(est.freq[-1].mean()), "root_wilson_lo": float(lo[-1, 0]),
            "root_wilson_hi": float(hi[-1, 0])}


def sweep_rows(config):
    sw = config["sweep"]
    keys = list(sw["grid"])
    rows = []
    for values in itertools.product(*(sw["grid"][k] for k in keys)):
        point = dict(zip(keys, values))
        if sw["action"] == "bounds":
            if keys != ["faults.xi"]:
                raise CLIError("a bounds sweep takes a grid over xi only")
            rows.append({**analysis.bound_table_row(point["faults.xi"])})
            continue
        doc = config
        for k, v in point.items():
            doc = with_override(doc, k, v)
        doc.pop("sweep", None)
        point_cfg = parse_config(doc)
        if sw["action"] == "recurse":
            row, _ = recursion_row(point_cfg)
        else:
            row = _simulate_row(point_cfg)
        rows.append({**point, **row})
    return rows


def cmd_sweep(args, config):
    if "sweep" not in config:
        raise CLIError("sweep needs a sweep section")
    rows = sweep_rows(config)
    header = list(rows[0])
    text = _csv_text(header, [[_fmt(r.get(k, "")) for k in header] for r in rows])
    _write(args.out, f"{config['output']['prefix']}.sweep.csv", text)
    sys.stdout.write(text)


COMMANDS = {
    "check": (cmd_check, "validate a config and print it in canonical form"),
    "generate": (cmd_generate, "build a lattice and write it to a file"),
    "treeify": (cmd_treeify, "extract the directed tree and write a deletion report"),
    "simulate": (cmd_simulate, "Monte Carlo error estimate (CSV plus JSON sidecar)"),
    "recurse": (cmd_recurse, "iterate the error recursion (CSV trace)"),
    "bounds": (cmd_bounds, "degree bound table for a list of xi"),
    "info-bound": (cmd_info_bound, "information-theoretic feasibility report (JSON)"),
    "sweep": (cmd_sweep, "cross product of parameter lists, one row per point"),
}
NEEDS_CONFIG = {"check", "generate", "treeify", "simulate", "recurse", "sweep"}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faultca", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        if name in NEEDS_CONFIG:
            p.add_argument("config", type=Path, help="JSON experiment config")
        if name == "bounds":
            p.add_argument("--xi", type=float, nargs="+", required=True)
        if name == "info-bound":
            p.add_argument("--d", type=int, required=True)
            p.add_argument("--xi", type=float, required=True)
            p.add_argument("--delta", type=float, required=True)
            p.add_argument("--t", type=int, default=None)
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.threads is not None:
            import numba
            if args.threads < 1:
                raise CLIError("--threads must be >= 1")
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        config = parse_config(args.config.read_text()) if args.command in NEEDS_CONFIG else None
        COMMANDS[args.command][0](args, config)
    except (CLIError, ConfigError, FaultError, RuleError, OSError, ValueError) as exc:
        print(f"faultca {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
