"""Attack scenarios: a compromised functional actor drives every unit it can
reach to the extreme of its active-power range.

Reach is found by walking information object flows ``from -> to`` starting at
the actor's own function blocks. Setpoints are written by generated change
rules, so attacked graphs come out of the same engine as augmentation.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Optional

from .augment import AugmentationRule, RuleKind, apply_all
from .errors import AttackError, DanglingRefError
from .ontology import (
    CONTROL_VALUE, FIRMWARE, FLOW, FROM, FUNCTIONAL_ACTOR, HAS_FUNCTION_BLOCK, MANUFACTURER,
    MAX_P_MW, MIN_P_MW, P_MW, REALIZED_ON, REFERENCES_UNIT, TO, TRANSMITS,
)
from .query import parse_select
from .rdf import RDF_TYPE, RULE, Graph, Iri, Literal


class Objective(str, Enum):
    MAXIMIZE_LOAD = "MaximizeLoad"
    MINIMIZE_LOAD = "MinimizeLoad"

    @classmethod
    def parse(cls, text: str) -> "Objective":
        aliases = {"max": cls.MAXIMIZE_LOAD, "min": cls.MINIMIZE_LOAD}
        key = text.strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown objective {text!r} (use max, min, MaximizeLoad or MinimizeLoad)") from None


@dataclass(frozen=True)
class AttackScenario:
    compromised_actor: Iri
    objective: Objective
    label: str = ""
    manufacturer: Optional[str] = None
    firmware: Optional[str] = None


@dataclass(frozen=True)
class ControlTarget:
    control_value: Iri
    unit: Iri
    min_p_mw: Decimal
    max_p_mw: Decimal
    current_p_mw: Decimal

    def __post_init__(self):
        if not self.min_p_mw <= self.current_p_mw <= self.max_p_mw:
            raise AttackError(f"{self.unit.value}: p_mw {self.current_p_mw} outside "
                              f"[{self.min_p_mw}, {self.max_p_mw}]")

    def setpoint(self, objective: Objective) -> Decimal:
        return self.max_p_mw if objective is Objective.MAXIMIZE_LOAD else self.min_p_mw

    def to_dict(self) -> dict:
        return {
            "control_value": self.control_value.value,
            "unit": self.unit.value,
            "min_p_mw": str(self.min_p_mw),
            "max_p_mw": str(self.max_p_mw),
            "current_p_mw": str(self.current_p_mw),
        }


def targets_to_json(targets: list[ControlTarget], scenario: AttackScenario | None = None) -> str:
    doc = {"targets": [t.to_dict() for t in targets]}
    if scenario is not None:
        doc = {
            "scenario": scenario.label,
            "actor": scenario.compromised_actor.value,
            "objective": scenario.objective.value,
            **doc,
        }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _decimal(graph: Graph, node, pred) -> Decimal | None:
    v = graph.value(node, pred)
    if isinstance(v, Literal) and v.is_numeric:
        return Decimal(v.lexical)
    return None


def reachable_flows(graph: Graph, actor: Iri) -> tuple[set, set]:
    """Function blocks and flows reachable from ``actor`` (transitive)."""
    blocks = set(graph.objects(actor, HAS_FUNCTION_BLOCK))
    flows = set()
    queue = deque(sorted(blocks, key=lambda b: b.key))
    while queue:
        block = queue.popleft()
        for flow in graph.subjects(FROM, block):
            if (flow, RDF_TYPE, FLOW) not in graph:
                continue
            flows.add(flow)
            for nxt in graph.objects(flow, TO):
                if nxt not in blocks:
                    blocks.add(nxt)
                    queue.append(nxt)
    return blocks, flows


def _host_matches(graph: Graph, block, manufacturer, firmware) -> bool:
    for actor in graph.subjects(HAS_FUNCTION_BLOCK, block):
        for host in graph.objects(actor, REALIZED_ON):
            if manufacturer is not None and Literal(manufacturer) not in graph.objects(host, MANUFACTURER):
                continue
            if firmware is not None and Literal(firmware) not in graph.objects(host, FIRMWARE):
                continue
            return True
    return False


def enumerate_controllables(graph: Graph, actor: Iri, manufacturer: str | None = None,
                            firmware: str | None = None) -> list[ControlTarget]:
    """Every control value the actor can reach, resolved to its unit and bounds.

    With ``manufacturer``/``firmware`` set, a control value only counts when a
    flow carrying it ends at a block whose actor runs on a matching host.
    """
    if (actor, RDF_TYPE, FUNCTIONAL_ACTOR) not in graph:
        raise AttackError(f"{actor.value} is not a FunctionalActor")
    scoped = manufacturer is not None or firmware is not None
    _, flows = reachable_flows(graph, actor)
    values = set()
    for flow in flows:
        if scoped and not any(_host_matches(graph, b, manufacturer, firmware) for b in graph.objects(flow, TO)):
            continue
        for cv in graph.objects(flow, TRANSMITS):
            if (cv, RDF_TYPE, CONTROL_VALUE) in graph:
                values.add(cv)

    targets = []
    for cv in values:
        for unit in graph.objects(cv, REFERENCES_UNIT):
            if not graph.has_subject(unit):
                raise DanglingRefError(f"{cv.value} references missing unit {unit.value}")
            lo, hi, now = (_decimal(graph, unit, p) for p in (MIN_P_MW, MAX_P_MW, P_MW))
            if lo is None or hi is None or now is None:
                raise DanglingRefError(f"{unit.value} lacks p_mw bounds")
            targets.append(ControlTarget(cv, unit, lo, hi, now))
    targets.sort(key=lambda t: (t.unit.value, t.control_value.value))
    return targets


def attack_rules(targets: list[ControlTarget], objective: Objective) -> list[AugmentationRule]:
    bound = MAX_P_MW if objective is Objective.MAXIMIZE_LOAD else MIN_P_MW
    rules = []
    units = sorted({t.unit for t in targets}, key=lambda u: u.value)
    for i, unit in enumerate(units):
        selector = parse_select(
            f"SELECT ?u ?v WHERE {{ ?u <{bound.value}> ?v . FILTER(?u = <{unit.value}>) }}")
        rules.append(AugmentationRule(
            iri=Iri(f"{RULE}attack_{i:06d}"),
            kind=RuleKind.CHANGE,
            selector=selector,
            anchor="u",
            target_path=P_MW,
            value_variable="v",
        ))
    return rules


def apply_attack(graph: Graph, scenario: AttackScenario) -> tuple[Graph, list[ControlTarget]]:
    targets = enumerate_controllables(graph, scenario.compromised_actor,
                                      scenario.manufacturer, scenario.firmware)
    attacked, _ = apply_all(graph, attack_rules(targets, scenario.objective), master_seed=0, shapes=None)
    return attacked, targets
