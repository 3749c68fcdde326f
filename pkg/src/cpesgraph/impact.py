"""Impact of an attack: transformer load deltas, voltage distributions per
voltage level and limit checks.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import TopologyMismatch
from .grid import GridTables
from .powerflow.solver import PowerFlowResult

# Quartiles use the (n+1)p rank rule with linear interpolation between the two
# closest ranks: {0.95 .. 0.99} gives q1 0.955, q3 0.985.
QUARTILE_METHOD = "weibull"


@dataclass
class TrafoDelta:
    trafo_id: int
    p_baseline_mw: float
    p_attacked_mw: float
    delta_p_mw: float
    loading_percent_attacked: float


@dataclass
class Violation:
    element: str
    element_id: int
    quantity: str
    value: float
    limit: float

    def __str__(self):
        return f"{self.element} {self.element_id}: {self.quantity} {self.value:.6f} violates limit {self.limit}"


@dataclass
class ImpactReport:
    label: str
    deltas: list[TrafoDelta]
    violations: list[Violation] = field(default_factory=list)

    @property
    def max_abs_delta(self) -> float:
        return max((abs(d.delta_p_mw) for d in self.deltas), default=0.0)

    def delta(self, trafo_id) -> float:
        return next(d.delta_p_mw for d in self.deltas if d.trafo_id == trafo_id)

    def to_dict(self) -> dict:
        return {
            "scenario": self.label,
            "max_abs_delta_p_mw": _round(self.max_abs_delta),
            "trafos": [{k: _round(v) for k, v in asdict(d).items()} for d in self.deltas],
            "violations": [{k: _round(v) for k, v in asdict(x).items()} for x in self.violations],
        }


def _round(v):
    if isinstance(v, float):
        r = round(v, 12)
        return 0.0 if r == 0 else r
    return v


def compare(baseline: PowerFlowResult, attacked: PowerFlowResult, tables: GridTables | None = None,
            label: str = "") -> ImpactReport:
    """Per-transformer change of hv-side active power, attacked minus baseline."""
    base = {t.id: t for t in baseline.trafo_results}
    hit = {t.id: t for t in attacked.trafo_results}
    if set(base) != set(hit):
        raise TopologyMismatch(f"trafo ids differ: {sorted(set(base) ^ set(hit))}")
    if tables is not None and {t.id for t in tables.trafo} != set(base):
        raise TopologyMismatch("result trafos do not match the grid tables")
    deltas = [
        TrafoDelta(i, base[i].p_hv_mw, hit[i].p_hv_mw, hit[i].p_hv_mw - base[i].p_hv_mw, hit[i].loading_percent)
        for i in sorted(base)
    ]
    return ImpactReport(label, deltas)


@dataclass
class LevelStats:
    vn_kv: float
    count: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


def voltage_stats(result: PowerFlowResult, tables: GridTables) -> list[LevelStats]:
    """Five-number summary of vm_pu per rated voltage level, highest level first."""
    levels = {b.id: float(b.vn_kv) for b in tables.bus}
    groups = defaultdict(list)
    for b in result.bus_results:
        groups[levels[b.id]].append(b.vm_pu)
    out = []
    for vn in sorted(groups, reverse=True):
        values = np.sort(np.array(groups[vn]))
        q1, med, q3 = np.percentile(values, [25, 50, 75], method=QUARTILE_METHOD)
        out.append(LevelStats(vn, len(values), float(values[0]), float(q1), float(med), float(q3), float(values[-1])))
    return out


def check_limits(result: PowerFlowResult, tables: GridTables | None = None, vm_min_pu: float = 0.9,
                 vm_max_pu: float = 1.1, loading_max_percent: float = 100.0) -> list[Violation]:
    out = []
    for b in result.bus_results:
        if b.vm_pu < vm_min_pu:
            out.append(Violation("bus", b.id, "vm_pu", b.vm_pu, vm_min_pu))
        elif b.vm_pu > vm_max_pu:
            out.append(Violation("bus", b.id, "vm_pu", b.vm_pu, vm_max_pu))
    for kind, rows in (("line", result.line_results), ("trafo", result.trafo_results)):
        for r in rows:
            if r.loading_percent > loading_max_percent:
                out.append(Violation(kind, r.id, "loading_percent", r.loading_percent, loading_max_percent))
    return out


CSV_COLUMNS = ["scenario", "trafo_id", "p_baseline_mw", "p_attacked_mw", "delta_p_mw", "loading_percent_attacked"]


def _fmt(x: float) -> str:
    text = f"{x:.9f}"
    return text[1:] if text.startswith("-") and not text.strip("-0.") else text


def reports_to_csv(reports: list[ImpactReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        for d in rep.deltas:
            writer.writerow([rep.label, d.trafo_id, _fmt(d.p_baseline_mw), _fmt(d.p_attacked_mw),
                             _fmt(d.delta_p_mw), _fmt(d.loading_percent_attacked)])
    return buf.getvalue()


def reports_to_json(reports: list[ImpactReport], stats: dict | None = None) -> str:
    doc = {"scenarios": [r.to_dict() for r in reports]}
    if stats:
        doc["voltage_stats"] = {label: [{k: _round(v) for k, v in asdict(s).items()} for s in levels]
                                for label, levels in stats.items()}
    return json.dumps(doc, indent=1) + "\n"
