"""Command-line front end.

Exit status: 0 when everything ran and every requested check held, 2 when an
inequality check found a violation (a result, not a malfunction), 1 on usage
or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Any

from . import __version__, bounds, graphs, samplers
from .geometry import Metric, convert_params
from .report import emit, flatten_row

log = logging.getLogger("birthdaylab")

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

COMMANDS = ("params", "simulate", "enumerate", "check", "bounds", "certify")

DEFAULTS: dict[str, Any] = {
    "seed": 0, "replicas": 10_000, "threads": None, "format": "json", "out": None, "timing": False,
    "n": None, "d": None, "metric": "l2", "r": None, "p": None, "alpha": None, "allow_large_radius": False,
    "method": "naive", "backend": "auto", "quantity": "prob-empty", "k": None, "check": False,
    "graph": None, "edge_list": None, "mode": "is", "all_k": False, "checks": "birthday,repulsion,bipest",
    "model": None, "rho": None, "alphas": None, "grid": 200, "t": 0.79,
}


_MODEL_KEYS = ("n", "d", "metric", "r", "p", "alpha")
_GRAPH_KEYS = ("graph", "edge_list", "mode")
INPUT_KEYS = {
    "params": _MODEL_KEYS + ("allow_large_radius",),
    "simulate": _MODEL_KEYS + ("replicas", "quantity", "method", "backend", "k", "check"),
    "enumerate": _GRAPH_KEYS,
    "check": _GRAPH_KEYS + ("k", "all_k", "checks"),
    "bounds": ("model", "d", "rho", "alphas"),
    "certify": ("model", "d", "t", "rho", "grid"),
}


CSV_COLUMNS = {
    "certify": ["operation", "alpha", "birthday", "comparison"],
    "bounds": ["operation", "d", "alpha", "birthday", "comparison", "gap"],
    "check": ["operation", "graph", "mode", "k", "count", "lhs", "lhs_value", "rhs", "rhs_value", "holds",
              "slack", "slack_value"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="JSON manifest; flags given on the command line take precedence")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default: all cores); never changes results")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--timing", action="store_const", const=True, help="record wall time in the JSON report")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--metric", choices=("l2", "linf"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--r", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--alpha", type=float)


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="hypercube:D, cycle:N, torus:D:SIDE, kdd:D:COPIES")
    p.add_argument("--edge-list", dest="edge_list", help="file: 'n d' then one 'u v' per line")
    p.add_argument("--mode", choices=("is", "matching", "matchings"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="birthdaylab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("params", help="complete (n, d, r | p | alpha) into a full parameter set")
    _common(p)
    _model_args(p)
    p.add_argument("--allow-large-radius", dest="allow_large_radius", action="store_const", const=True)

    p = sub.add_parser("simulate", help="Monte Carlo estimates on the torus")
    _common(p)
    _model_args(p)
    p.add_argument("--quantity", choices=("prob-empty", "repulsion"))
    p.add_argument("--method", choices=("naive", "telescoping", "exact", "both"))
    p.add_argument("--backend", choices=("auto", "rejection", "mcmc"))
    p.add_argument("--k", type=int, help="repulsion: a single k (default 1..n-1)")
    p.add_argument("--check", action="store_const", const=True,
                   help="treat birthday / repulsion as checks: exit 2 on a violation beyond 4 stderr")

    p = sub.add_parser("enumerate", help="exact counts by size")
    _common(p)
    _graph_args(p)

    p = sub.add_parser("check", help="exact birthday / repulsion / bipest / extremal-graph checks")
    _common(p)
    _graph_args(p)
    p.add_argument("--k", type=int)
    p.add_argument("--all-k", dest="all_k", action="store_const", const=True)
    p.add_argument("--checks", help="comma list of birthday, repulsion, bipest, extremal")

    p = sub.add_parser("bounds", help="bound curves along a density grid")
    _common(p)
    p.add_argument("--model", choices=("sphere", "square", "hardcore", "matching"))
    p.add_argument("--d", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--alphas", help="comma-separated densities (default: an even grid)")

    p = sub.add_parser("certify", help="analytic failure certificates")
    _common(p)
    p.add_argument("--model", choices=("sphere24", "square", "hardcore", "matching"))
    p.add_argument("--d", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--grid", type=int)
    return parser


def resolve(argv: list[str]) -> dict[str, Any]:
    """Parse flags, fold in the manifest underneath them, then the defaults."""
    pre = _Parser(add_help=False)
    pre.add_argument("--manifest")
    manifest_path = pre.parse_known_args(argv)[0].manifest
    manifest: dict[str, Any] = {}
    if manifest_path:
        try:
            manifest = json.loads(Path(manifest_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"manifest: cannot read {manifest_path}: {exc}") from exc
        if not isinstance(manifest, dict):
            raise UsageError("manifest: top level must be a JSON object")
        manifest = {k.replace("-", "_"): v for k, v in manifest.items()}
        if not (argv and argv[0] in COMMANDS) and "command" in manifest:
            argv = [str(manifest["command"]), *argv]
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError(f"command: missing; choose one of {', '.join(COMMANDS)}")
    known = set(DEFAULTS) | {"command", "manifest"}
    for key in manifest:
        if key not in known:
            raise UsageError(f"manifest: unknown field {key!r}")
    if manifest.get("command", args.command) != args.command:
        raise UsageError(f"command: manifest says {manifest['command']!r} but {args.command!r} was given")
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in manifest.items() if k != "command"})
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k != "manifest"})
    cfg["command"] = args.command
    cfg["mode"] = "matchings" if cfg["mode"] in ("matching", "matchings") else "is"
    return cfg


def _need(cfg: dict, *names: str) -> None:
    for name in names:
        if cfg.get(name) is None:
            raise UsageError(f"{name}: required for '{cfg['command']}'")


def _params(cfg: dict):
    _need(cfg, "n", "d")
    given = [k for k in ("r", "p", "alpha") if cfg.get(k) is not None]
    if len(given) != 1:
        raise UsageError(f"r/p/alpha: give exactly one (got {', '.join(given) or 'none'})")
    try:
        return convert_params(int(cfg["n"]), int(cfg["d"]), Metric.parse(cfg["metric"]),
                              allow_large_radius=bool(cfg["allow_large_radius"]),
                              **{given[0]: float(cfg[given[0]])})
    except ValueError as exc:
        raise UsageError(f"{given[0]}: {exc}") from exc


def _graph(cfg: dict) -> graphs.RegularGraph:
    if cfg.get("edge_list"):
        return graphs.from_edge_list(cfg["edge_list"])
    _need(cfg, "graph")
    try:
        return graphs.build_graph(cfg["graph"])
    except graphs.GraphError as exc:
        raise UsageError(f"graph: {exc}") from exc


# -- commands: each returns (results rows, extra report fields, violation flag) -----

def cmd_params(cfg):
    params = _params(cfg)
    return [dict(operation="convert_params", **params.to_dict())], {}, False


def cmd_simulate(cfg):
    params = _params(cfg)
    if not params.torus_exact:
        raise UsageError("r: derived radius exceeds 1/2; cannot simulate on the unit torus")
    seed, reps, threads = int(cfg["seed"]), int(cfg["replicas"]), cfg["threads"]
    base = {"model": "square" if params.metric is Metric.CHEBYSHEV else "sphere", "n": params.n, "d": params.d,
            "metric": params.metric.value, "r": params.r, "p": params.p, "alpha": params.alpha}
    rows, violation = [], False
    if cfg["quantity"] == "prob-empty":
        methods = {"naive": ["naive-mc"], "telescoping": ["telescoping"], "exact": ["exact"],
                   "both": ["naive-mc", "telescoping"]}[cfg["method"]]
        rhs = samplers.birthday_rhs(params.n, params.p)
        for method in methods:
            est = samplers.estimate_prob_empty(params, params.metric, reps, seed, method, cfg["backend"], threads)
            holds = est.mean <= rhs + samplers.Z_CONFIDENCE * est.stderr
            row = {"operation": "estimate_prob_empty", **base, "method": est.method, "backend": est.backend,
                   "mean": est.mean, "stderr": est.stderr, "samples": est.samples, "seed": seed,
                   "birthday_rhs": rhs, "birthday_holds": holds}
            if params.d == 1:
                row["exact_d1"] = samplers.d1_prob_empty(params.n, params.p)
            rows.append(row)
            violation |= bool(cfg["check"]) and not holds
    else:
        ks = [int(cfg["k"])] if cfg["k"] is not None else list(range(1, max(params.n, 2)))
        for k in ks:
            gap = samplers.repulsion_gap(k, params, params.metric, reps, seed, cfg["backend"], threads)
            holds = gap.gap.mean >= -samplers.Z_CONFIDENCE * gap.gap.stderr
            rows.append({"operation": "repulsion_gap", **base, **gap.to_record(), "seed": seed,
                         "repulsion_holds": holds})
            violation |= bool(cfg["check"]) and not holds
    return rows, {}, violation


def cmd_enumerate(cfg):
    g = _graph(cfg)
    table = graphs.count_by_size(g, cfg["mode"])
    rows = []
    for k in range(table.max_k + 1):
        chk = graphs.birthday_check(g, k, table.mode, table)
        row = {"operation": "count_by_size", "graph": g.label, "mode": table.mode, "n": g.n, "degree": g.d,
               "k": k, "count": str(table[k]), "lhs": chk.lhs, "rhs": chk.rhs, "holds": chk.holds}
        if table[k]:
            row["coverage"] = graphs.exact_conditional_coverage(g, k, table.mode)
        rows.append(row)
    return rows, {"p": table.p, "total": str(table.total)}, False


def cmd_check(cfg):
    g = _graph(cfg)
    mode = cfg["mode"]
    table = graphs.count_by_size(g, mode)
    if cfg["k"] is not None:
        ks = [int(cfg["k"])]
    elif cfg["all_k"]:
        ks = list(range(table.max_k + 1))
    else:
        raise UsageError("k: give --k K or --all-k")
    wanted = [c.strip() for c in str(cfg["checks"]).split(",") if c.strip()]
    unknown = set(wanted) - {"birthday", "repulsion", "bipest", "extremal"}
    if unknown:
        raise UsageError(f"checks: unknown check(s) {', '.join(sorted(unknown))}")
    rows, violation = [], False
    for k in ks:
        found = []
        if "birthday" in wanted:
            found.append(graphs.birthday_check(g, k, mode, table))
        if table[k] > 0:
            if "repulsion" in wanted:
                found.append(graphs.repulsion_check(g, k, mode))
            if "bipest" in wanted and mode == "is" and k * table.p < 1:
                found.append(graphs.bipest_check(g, k))
        for chk in found:
            rows.append({"operation": f"{chk.name}_check", "graph": g.label, "mode": table.mode, "k": k,
                         "count": str(table[k]), "lhs": chk.lhs, "rhs": chk.rhs, "holds": chk.holds,
                         "slack": chk.slack})
            violation |= not chk.holds
        if "extremal" in wanted and mode == "is" and table[k] > 0 and g.n % (2 * g.d) == 0:
            cmp_ = graphs.extremal_compare(g, k)
            rows.append({"operation": "extremal_compare", "graph": g.label, "mode": table.mode, "k": k,
                         "count": str(table[k]), "lhs": cmp_.value_H, "rhs": cmp_.value_G,
                         "holds": cmp_.consistent, "slack": cmp_.value_G - cmp_.value_H})
            violation |= not cmp_.consistent
    return rows, {}, violation


def cmd_bounds(cfg):
    _need(cfg, "model", "d")
    alphas = None
    if cfg["alphas"]:
        alphas = [float(a) for a in str(cfg["alphas"]).split(",")]
    try:
        rep = bounds.bound_curve(cfg["model"], int(cfg["d"]), alphas, cfg["rho"])
    except ValueError as exc:
        raise UsageError(f"alphas: {exc}") from exc
    rows = [{"operation": f"bound_curve:{rep.model}", "d": rep.d, **r} for r in rep.rows()]
    extra = {"failure_interval": rep.failure_interval, "asymptotic_ratio": rep.asymptotic_ratio}
    return rows, extra, False


def cmd_certify(cfg):
    _need(cfg, "model")
    model = cfg["model"]
    if model == "sphere24":
        cert = bounds.sphere24_certificate(float(cfg["t"]), cfg["rho"] or bounds.RHO_24, int(cfg["grid"]))
    elif model == "square":
        _need(cfg, "d")
        cert = bounds.square_certificate(int(cfg["d"]))
    elif model == "hardcore":
        _need(cfg, "d")
        cert = bounds.hardcore_certificate(int(cfg["d"]))
    else:
        _need(cfg, "d")
        d = int(cfg["d"])
        a = bounds.matching_crossing(d)
        cert = {"model": "matching", "d": d, "crossing_alpha": a,
                "crossing_ratio": a / (math.log(d) / d) ** (1 / 3), "failure_interval": None,
                "witnesses": [], "birthday_fails": False}
    rows = [{"operation": f"certify:{model}", "alpha": w[0], "birthday": w[1], "comparison": w[2]}
            for w in cert["witnesses"]]
    return rows, {"certificate": cert}, bool(cert["birthday_fails"])


HANDLERS = {"params": cmd_params, "simulate": cmd_simulate, "enumerate": cmd_enumerate, "check": cmd_check,
            "bounds": cmd_bounds, "certify": cmd_certify}


def run(cfg: dict) -> tuple[int, str]:
    start = time.perf_counter()
    rows, extra, violation = HANDLERS[cfg["command"]](cfg)
    inputs = {k: cfg[k] for k in INPUT_KEYS[cfg["command"]]}
    report = {"tool": "birthdaylab", "version": __version__, "command": cfg["command"], "seed": cfg["seed"],
              "inputs": inputs, "status": "violation" if violation else "ok",
              "results": [flatten_row(r) for r in rows], **extra}
    elapsed = time.perf_counter() - start
    log.info("%s finished in %.3f s", cfg["command"], elapsed)
    if cfg["timing"]:
        report["wall_time_s"] = elapsed
    text = emit(report, cfg["format"], cfg["out"], None if rows else CSV_COLUMNS.get(cfg["command"]))
    return (EXIT_VIOLATION if violation else EXIT_OK), text


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("BIRTHDAYLAB_LOG", "WARNING"), format="%(levelname)s %(message)s")
    try:
        cfg = resolve(sys.argv[1:] if argv is None else argv)
        code, text = run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError, RuntimeError, graphs.GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if cfg["out"] is None:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
