"""``cpes`` command-line interface.

Exit codes: 0 success, 1 I/O or parse error, 2 non-conformance,
3 power-flow non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, assets
from .attack import AttackScenario, Objective, apply_attack, targets_to_json
from .augment import apply_all, logs_to_json, parse_rules
from .errors import CpesError, NonConvergence, PostValidationError, ValidationError
from .grid import dump_grid, export_grid, import_grid, load_grid
from .impact import check_limits, compare, reports_to_csv, reports_to_json, voltage_stats
from .ontology import derive_households
from .pipeline import EXIT_IO, EXIT_NONCONFORMING, EXIT_NONCONVERGENCE, EXIT_OK, PipelineConfig, run_pipeline
from .powerflow import dump_result, load_result, solve
from .query import evaluate, parse_select
from .shacl import parse_shapes, validate
from .turtle import dump_turtle, load_turtle

log = logging.getLogger("cpesgraph")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_IO):
        super().__init__(message)
        self.code = code


def _write(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _grid_from(path):
    """Grid tables from a grid JSON file or from a Turtle model."""
    if str(path).endswith(".ttl"):
        return export_grid(load_turtle(path))
    tables = load_grid(path)
    tables.check()
    return tables


# -- subcommands ---------------------------------------------------------------

def cmd_import(args) -> int:
    tables = load_grid(args.grid)
    tables.check()
    graph = import_grid(tables)
    if args.households:
        graph = derive_households(graph)
    dump_turtle(graph, args.output)
    log.info("wrote %d triples to %s", len(graph), args.output)
    return EXIT_OK


def cmd_export(args) -> int:
    dump_grid(export_grid(load_turtle(args.model)), args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    data = load_turtle(args.data)
    extra = []
    if args.shapes:
        shapes = []
        for p in args.shapes:
            g = load_turtle(p)
            shapes += parse_shapes(g)
            extra.append(g)
    else:
        shapes = assets.power_shapes() + assets.cpes_shapes()
    report = validate(data, shapes, assets.class_hierarchy(data, *extra))
    if args.json:
        _write(args.json, report.to_json())
    sys.stdout.write(report.table())
    return EXIT_OK if report.conforms else EXIT_NONCONFORMING


def cmd_query(args) -> int:
    text = args.query
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    graph = load_turtle(args.data)
    query = parse_select(text, graph.prefixes)
    rows = evaluate(graph, query)
    names = list(query.projected)
    if args.format == "json":
        sys.stdout.write(json.dumps([{n: str(r[n]) for n in names} for r in rows], indent=1) + "\n")
    else:
        sys.stdout.write("\t".join(f"?{n}" for n in names) + "\n")
        for r in rows:
            sys.stdout.write("\t".join(str(r[n]) for n in names) + "\n")
    return EXIT_OK


def cmd_augment(args) -> int:
    graph = derive_households(load_turtle(args.model))
    rules = parse_rules(load_turtle(args.rules))
    shapes = None if args.no_validate else assets.cpes_shapes()
    try:
        out, logs = apply_all(graph, rules, args.seed or 0, shapes)
    except PostValidationError as exc:
        sys.stdout.write(exc.report.table())
        return EXIT_NONCONFORMING
    dump_turtle(out, args.output)
    if args.log:
        _write(args.log, logs_to_json(logs))
    log.info("augmented graph: %d triples", len(out))
    return EXIT_OK


def cmd_attack(args) -> int:
    graph = load_turtle(args.cpes)
    scenario = AttackScenario(graph.expand(args.actor), Objective.parse(args.objective),
                              args.label or args.objective, args.manufacturer, args.firmware)
    attacked, targets = apply_attack(graph, scenario)
    dump_turtle(attacked, args.output)
    if args.targets:
        _write(args.targets, targets_to_json(targets, scenario))
    sys.stdout.write(f"{len(targets)} controllable unit(s) reached by {scenario.compromised_actor.value}\n")
    return EXIT_OK


def cmd_solve(args) -> int:
    result = solve(_grid_from(args.grid), tol_mva=args.tol, max_iter=args.max_iter)
    dump_result(result, args.output)
    log.info("converged in %d iterations", result.iterations)
    return EXIT_OK


def cmd_report(args) -> int:
    baseline = load_result(args.baseline)
    labels = args.label or []
    if labels and len(labels) != len(args.attacked):
        raise CliError("--label must be given once per --attacked file")
    tables = _grid_from(args.grid) if args.grid else None
    reports, stats = [], {}
    for i, path in enumerate(args.attacked):
        label = labels[i] if labels else Path(path).parent.name or Path(path).stem
        result = load_result(path)
        rep = compare(baseline, result, tables, label)
        rep.violations = check_limits(result, tables)
        reports.append(rep)
        if tables is not None:
            stats[label] = voltage_stats(result, tables)
    _write(args.output, reports_to_csv(reports))
    if args.json:
        _write(args.json, reports_to_json(reports, stats))
    for rep in reports:
        sys.stdout.write(f"{rep.label}: max |delta p| {rep.max_abs_delta:.6f} MW, "
                         f"{len(rep.violations)} violation(s)\n")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config_path = assets.path("demo/pipeline.json") if args.demo else args.config
    if config_path is None:
        raise CliError("pipeline needs a config file or --demo")
    config = PipelineConfig.load(config_path)
    output = args.output
    if output is None and args.demo:
        output = Path("cpes-demo-out")
    outcome = run_pipeline(config, output, jobs=args.jobs, seed=args.seed)
    sys.stdout.write(outcome.summary())
    if outcome.exit_code == EXIT_OK:
        log.info("artifacts in %s", outcome.output_dir)
    return outcome.exit_code


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed for augmentation")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="concurrent scenarios")
    common.add_argument("--verbose", "-v", action="count", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="cpes", parents=[common],
                                     description="Knowledge-graph based impact analysis of attacks on smart grids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("import", cmd_import, "grid JSON -> Turtle model")
    p.add_argument("grid")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--households", action="store_true", help="also derive household asset groups")

    p = add("export", cmd_export, "Turtle model -> grid JSON")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)

    p = add("validate", cmd_validate, "check a graph against shapes")
    p.add_argument("data")
    p.add_argument("--shapes", action="append", help="shapes file (repeatable); default: bundled shapes")
    p.add_argument("--json", help="write the report as JSON")

    p = add("query", cmd_query, "run a SELECT query")
    p.add_argument("data")
    p.add_argument("query", help="query text or @file")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    p = add("augment", cmd_augment, "apply augmentation rules")
    p.add_argument("model")
    p.add_argument("--rules", default=str(assets.path("rules_casestudy.ttl")))
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--log", help="write the applied-rule log as JSON")
    p.add_argument("--no-validate", action="store_true")

    p = add("attack", cmd_attack, "apply an attack scenario")
    p.add_argument("cpes")
    p.add_argument("--actor", required=True)
    p.add_argument("--objective", required=True, help="max or min")
    p.add_argument("--label")
    p.add_argument("--manufacturer")
    p.add_argument("--firmware")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--targets")

    p = add("solve", cmd_solve, "AC power flow")
    p.add_argument("grid", help="grid JSON or Turtle model")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=30)

    p = add("report", cmd_report, "compare attacked results with a baseline")
    p.add_argument("--baseline", required=True)
    p.add_argument("--attacked", required=True, nargs="+")
    p.add_argument("--label", action="append")
    p.add_argument("--grid", help="grid tables for voltage statistics")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--json")

    p = add("pipeline", cmd_pipeline, "run the whole workflow from a config file")
    p.add_argument("config", nargs="?")
    p.add_argument("--demo", action="store_true", help="use the bundled demo config")
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed = getattr(args, "seed", None)
    args.jobs = getattr(args, "jobs", 1)
    verbose = getattr(args, "verbose", 0)
    logging.basicConfig(level=logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValidationError as exc:
        print(f"error: graph does not describe valid grid tables: {exc}", file=sys.stderr)
        return EXIT_NONCONFORMING
    except (CpesError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
