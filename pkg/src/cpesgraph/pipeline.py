"""End-to-end run: grid tables -> knowledge graph -> augmentation -> attack
scenarios -> power flow -> impact report.

All artifacts are written deterministically; identical config and seed give
byte-identical files.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import assets
from .attack import AttackScenario, Objective, apply_attack, targets_to_json
from .augment import apply_all, logs_to_json, parse_rules
from .errors import CpesError, NonConvergence, PostValidationError
from .grid import export_grid, import_grid, load_grid
from .impact import ImpactReport, check_limits, compare, reports_to_csv, reports_to_json, voltage_stats
from .ontology import derive_households
from .powerflow import PowerFlowResult, dump_result, solve
from .rdf import expand_name
from .shacl import parse_shapes, validate
from .turtle import dump_turtle, load_turtle

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_NONCONFORMING = 2
EXIT_NONCONVERGENCE = 3


class ConfigError(CpesError):
    """Unreadable or inconsistent pipeline configuration."""


@dataclass
class ScenarioSpec:
    actor: str
    objective: Objective
    label: str
    manufacturer: Optional[str] = None
    firmware: Optional[str] = None


@dataclass
class PipelineConfig:
    grid_file: Path
    rules_file: Path
    shapes_power: Optional[Path] = None
    shapes_cpes: Optional[Path] = None
    seed: int = 0
    scenarios: list[ScenarioSpec] = field(default_factory=list)
    output_dir: Path = Path("out")
    limits: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(raw, path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base: Path) -> "PipelineConfig":
        def rel(key, required=True):
            if raw.get(key) is None:
                if required:
                    raise ConfigError(f"config lacks {key!r}")
                return None
            return (base / raw[key]).resolve()

        scenarios = []
        for s in raw.get("scenarios", []):
            try:
                scenarios.append(ScenarioSpec(s["actor"], Objective.parse(s["objective"]), s["label"],
                                              s.get("manufacturer"), s.get("firmware")))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad scenario {s!r}: {exc}") from None
        labels = [s.label for s in scenarios]
        if len(set(labels)) != len(labels):
            raise ConfigError("scenario labels must be unique")
        unknown = set(raw.get("limits", {})) - {"vm_min_pu", "vm_max_pu", "loading_max_percent"}
        if unknown:
            raise ConfigError(f"unknown limits: {', '.join(sorted(unknown))}")
        return cls(
            grid_file=rel("grid_file"),
            rules_file=rel("rules_file"),
            shapes_power=rel("shapes_power", False),
            shapes_cpes=rel("shapes_cpes", False),
            seed=int(raw.get("seed", 0)),
            scenarios=scenarios,
            output_dir=rel("output_dir", False) or (base / "out").resolve(),
            limits=dict(raw.get("limits", {})),
        )

    def check_paths(self):
        for name in ("grid_file", "rules_file", "shapes_power", "shapes_cpes"):
            p = getattr(self, name)
            if p is not None and not p.is_file():
                raise ConfigError(f"{name}: no such file: {p}")


@dataclass
class ScenarioOutcome:
    spec: ScenarioSpec
    status: str = "ok"
    targets: int = 0
    report: Optional[ImpactReport] = None
    result: Optional[PowerFlowResult] = None
    error: str = ""


@dataclass
class PipelineOutcome:
    exit_code: int
    output_dir: Path
    scenarios: list[ScenarioOutcome] = field(default_factory=list)
    message: str = ""
    baseline_violations: list = field(default_factory=list)

    @property
    def violation_count(self) -> int:
        return len(self.baseline_violations) + sum(
            len(s.report.violations) for s in self.scenarios if s.report is not None)

    def summary(self) -> str:
        if self.message and not self.scenarios:
            return self.message + "\n"
        rows = [("scenario", "targets", "max |delta p| MW", "violations", "status")]
        for s in self.scenarios:
            if s.report is None:
                rows.append((s.spec.label, str(s.targets), "-", "-", s.status))
            else:
                rows.append((s.spec.label, str(s.targets), f"{s.report.max_abs_delta:.6f}",
                             str(len(s.report.violations)), s.status))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        if self.baseline_violations:
            lines.append(f"baseline: {len(self.baseline_violations)} limit violation(s)")
        if self.exit_code == EXIT_OK and self.violation_count == 0:
            lines.append("no problematic grid states: all scenarios stay within voltage and loading limits")
        elif self.violation_count:
            lines.append(f"{self.violation_count} limit violation(s) in total")
        if self.message:
            lines.append(self.message)
        return "\n".join(lines) + "\n"


def slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", label.lower()).strip("-") or "scenario"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _shapes(path: Optional[Path], default):
    if path is None:
        return default(), None
    g = load_turtle(path)
    return parse_shapes(g), g


def _run_scenario(spec: ScenarioSpec, cpes, baseline, tables, out: Path, limits) -> ScenarioOutcome:
    outcome = ScenarioOutcome(spec)
    folder = out / "scenarios" / slug(spec.label)
    try:
        folder.mkdir(parents=True, exist_ok=True)
        scenario = AttackScenario(expand_name(spec.actor, cpes.prefixes), spec.objective, spec.label,
                                  spec.manufacturer, spec.firmware)
        attacked, targets = apply_attack(cpes, scenario)
        outcome.targets = len(targets)
        dump_turtle(attacked, folder / "attacked.ttl")
        _write(folder / "targets.json", targets_to_json(targets, scenario))
        attacked_tables = export_grid(attacked)
        result = solve(attacked_tables)
        dump_result(result, folder / "result.json")
        report = compare(baseline, result, tables, spec.label)
        report.violations = check_limits(result, attacked_tables, **limits)
        outcome.report, outcome.result = report, result
    except NonConvergence as exc:
        outcome.status, outcome.error = "non-convergence", str(exc)
    except (CpesError, KeyError, OSError) as exc:
        outcome.status, outcome.error = "error", str(exc)
    if outcome.error:
        log.warning("scenario %s: %s", spec.label, outcome.error)
    return outcome


def run_pipeline(config: PipelineConfig, output_dir=None, jobs: int = 1, seed: Optional[int] = None) -> PipelineOutcome:
    out = Path(output_dir) if output_dir is not None else config.output_dir
    seed = config.seed if seed is None else seed
    try:
        config.check_paths()
        tables = load_grid(config.grid_file)
        tables.check()
        rules = parse_rules(load_turtle(config.rules_file))
        power_shapes, power_graph = _shapes(config.shapes_power, assets.power_shapes)
        cpes_shapes, cpes_graph = _shapes(config.shapes_cpes, assets.cpes_shapes)
    except (OSError, CpesError) as exc:
        return PipelineOutcome(EXIT_IO, out, message=f"error: {exc}")
    hierarchy = assets.class_hierarchy(*(g for g in (power_graph, cpes_graph) if g is not None))
    out.mkdir(parents=True, exist_ok=True)

    log.info("import: %d buses", len(tables.bus))
    model = import_grid(tables)
    dump_turtle(model, out / "model.ttl")
    report = validate(model, power_shapes, hierarchy)
    _write(out / "validation_power.json", report.to_json())
    if not report.conforms:
        return PipelineOutcome(EXIT_NONCONFORMING, out, message="grid model does not conform:\n" + report.table())

    log.info("augment: %d rules, seed %d", len(rules), seed)
    try:
        cpes, logs = apply_all(derive_households(model), rules, seed, cpes_shapes, hierarchy)
    except PostValidationError as exc:
        _write(out / "validation_cpes.json", exc.report.to_json())
        return PipelineOutcome(EXIT_NONCONFORMING, out,
                               message="augmented graph does not conform:\n" + exc.report.table())
    except CpesError as exc:
        return PipelineOutcome(EXIT_IO, out, message=f"error: {exc}")
    _write(out / "validation_cpes.json", validate(cpes, cpes_shapes, hierarchy).to_json())
    dump_turtle(cpes, out / "cpes.ttl")
    _write(out / "log.json", logs_to_json(logs))

    log.info("baseline power flow")
    try:
        base_tables = export_grid(cpes)
        baseline = solve(base_tables)
    except NonConvergence as exc:
        return PipelineOutcome(EXIT_NONCONVERGENCE, out, message=f"baseline: {exc}")
    except CpesError as exc:
        return PipelineOutcome(EXIT_IO, out, message=f"baseline: {exc}")
    _write(out / "baseline" / "result.json", baseline.to_json())
    limits = dict(config.limits)
    baseline_violations = check_limits(baseline, base_tables, **limits)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(_run_scenario, s, cpes, baseline, base_tables, out, limits) for s in config.scenarios]
        outcomes = [f.result() for f in futures]

    reports = [o.report for o in outcomes if o.report is not None]
    _write(out / "report.csv", reports_to_csv(reports))
    stats = {"baseline": voltage_stats(baseline, base_tables)}
    for o in outcomes:
        if o.report is not None:
            stats[o.spec.label] = voltage_stats(o.result, base_tables)
    _write(out / "report.json", reports_to_json(reports, stats))

    code = EXIT_OK
    if any(o.status == "non-convergence" for o in outcomes):
        code = EXIT_NONCONVERGENCE
    elif any(o.status == "error" for o in outcomes):
        code = EXIT_IO
    message = "\n".join(f"{o.spec.label}: {o.error}" for o in outcomes if o.error)
    return PipelineOutcome(code, out, outcomes, message, baseline_violations)

