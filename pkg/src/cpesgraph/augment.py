"""Probabilistic graph rewriting with add, change and delete rules.

Rules live in an RDF document (namespace ``rule:`` = ``http://example.org/errol-rule#``)::

    rule:r10 rule:ruleKind rule:Add ;
        rule:selector "SELECT ?h WHERE { ?h a errol:HouseHold }" ;
        rule:anchor "h" ;
        rule:pApply 1.0 ;
        rule:template rule:t1, rule:t2 .
    rule:t1 rule:templateName "hems_m1" ;
        rule:templateWeight 50 ;
        rule:freshNode slot:host ;
        rule:singletonNode errol:backend_m1 ;
        rule:triple [ rule:s slot:host ; rule:p rdf:type ; rule:o errol:Host ] ,
                    [ rule:s slot:host ; rule:p errol:locatedIn ; rule:o var:h ] .

Inside templates, ``var:x`` (``http://example.org/errol-rule/var#x``) stands for
the selector variable ``?x`` and every ``rule:freshNode`` gets a new IRI
``errol:inst/<template>/<counter>/<slot>`` per instantiation. Triples about a
``rule:singletonNode`` are only added while that node does not exist yet.

Each selector match draws ``u1``; the rule fires when ``u1 < pApply``. An add
rule that fires draws ``u2`` to pick a template by weight. Every rule gets its
own random stream, so adding a rule never shifts the draws of another.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Optional

from .errors import BindError, ParseError, PostValidationError, RuleError
from .query import SelectQuery, evaluate, parse_select
from .rdf import (
    ERROL, RULE, BlankNode, Graph, Iri, Literal, Triple, literal,
)

VAR_NS = "http://example.org/errol-rule/var#"
SLOT_NS = "http://example.org/errol-rule/slot#"
RULE_PREFIXES = {"rule": RULE, "var": VAR_NS, "slot": SLOT_NS}


def _r(local: str) -> Iri:
    return Iri(RULE + local)


RULE_KIND = _r("ruleKind")
SELECTOR = _r("selector")
ANCHOR = _r("anchor")
P_APPLY = _r("pApply")
TEMPLATE = _r("template")
TEMPLATE_NAME = _r("templateName")
TEMPLATE_WEIGHT = _r("templateWeight")
FRESH_NODE = _r("freshNode")
SINGLETON_NODE = _r("singletonNode")
TRIPLE = _r("triple")
S, P, O = _r("s"), _r("p"), _r("o")
TARGET_PATH = _r("targetPath")
VALUE = _r("value")
VALUE_VARIABLE = _r("valueVariable")
MIN_VALUE = _r("minValue")
MAX_VALUE = _r("maxValue")
DELETE_PATTERN = _r("deletePattern")
ANY = _r("any")


class RuleKind(str, Enum):
    ADD = "Add"
    CHANGE = "Change"
    DELETE = "Delete"


@dataclass
class Template:
    name: str
    weight: Decimal
    triples: list[tuple]
    fresh: frozenset = frozenset()
    singletons: frozenset = frozenset()


@dataclass
class AugmentationRule:
    iri: Iri
    kind: RuleKind
    selector: SelectQuery
    anchor: str
    p_apply: Decimal = Decimal(1)
    templates: list[Template] = field(default_factory=list)
    target_path: Optional[Iri] = None
    value: Optional[Literal] = None
    value_variable: Optional[str] = None
    min_value: Optional[Decimal] = None
    max_value: Optional[Decimal] = None
    delete_patterns: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        if not Decimal(0) <= self.p_apply <= Decimal(1):
            raise RuleError(f"{self.iri.value}: pApply {self.p_apply} outside [0, 1]")
        if self.anchor not in self.selector.projected:
            raise RuleError(f"{self.iri.value}: anchor ?{self.anchor} is not projected by the selector")
        if self.kind is RuleKind.ADD:
            if not self.templates:
                raise RuleError(f"{self.iri.value}: add rule without templates")
            for t in self.templates:
                if t.weight <= 0:
                    raise RuleError(f"{self.iri.value}: template {t.name} has non-positive weight")
        elif self.kind is RuleKind.CHANGE:
            if self.target_path is None:
                raise RuleError(f"{self.iri.value}: change rule without targetPath")
            if (self.value is None) == (self.value_variable is None):
                raise RuleError(f"{self.iri.value}: change rule needs exactly one of value / valueVariable")
            if self.value_variable is not None and self.value_variable not in self.selector.projected:
                raise RuleError(f"{self.iri.value}: valueVariable ?{self.value_variable} is not projected")
        elif not self.delete_patterns:
            raise RuleError(f"{self.iri.value}: delete rule without deletePattern")

    def template_distribution(self) -> list[float]:
        total = sum(t.weight for t in self.templates)
        return [float(t.weight / total) for t in self.templates]


@dataclass
class LogEntry:
    rule: Iri
    binding: dict
    template: Optional[int]
    added: list[Triple]
    removed: list[Triple]


@dataclass
class AppliedLog:
    rule: Iri
    entries: list[LogEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.value,
            "entries": [
                {
                    "binding": {k: str(v) for k, v in sorted(e.binding.items())},
                    "template": e.template,
                    "added": [str(t) for t in sorted(e.added, key=lambda t: t.key)],
                    "removed": [str(t) for t in sorted(e.removed, key=lambda t: t.key)],
                }
                for e in self.entries
            ],
        }


def logs_to_json(logs: list[AppliedLog]) -> str:
    return json.dumps([log.to_dict() for log in logs], indent=1) + "\n"


# -- parsing --------------------------------------------------------------------

def _one(g: Graph, node, pred, required=True):
    values = g.objects(node, pred)
    if len(values) > 1:
        raise RuleError(f"{_show(node)}: several values for {pred.value}")
    if not values:
        if required:
            raise RuleError(f"{_show(node)}: missing {pred.value}")
        return None
    return values[0]


def _show(node) -> str:
    return node.value if isinstance(node, Iri) else str(node)


def _string(g, node, pred, required=True) -> Optional[str]:
    v = _one(g, node, pred, required)
    if v is None:
        return None
    if not isinstance(v, Literal) or v.is_numeric:
        raise RuleError(f"{_show(node)}: {pred.value} must be a string")
    return v.lexical


def _decimal(g, node, pred, required=True) -> Optional[Decimal]:
    v = _one(g, node, pred, required)
    if v is None:
        return None
    if not isinstance(v, Literal) or not v.is_numeric:
        raise RuleError(f"{_show(node)}: {pred.value} must be numeric, got {v}")
    return Decimal(v.lexical)


def _pattern(g: Graph, node) -> tuple:
    return (_one(g, node, S), _one(g, node, P), _one(g, node, O))


def parse_rules(rules_graph: Graph) -> list[AugmentationRule]:
    prefixes = {**rules_graph.prefixes, **RULE_PREFIXES}
    rules = []
    for node, _, kind in sorted(rules_graph.iter_match(p=RULE_KIND), key=lambda t: t.subject.key):
        if not isinstance(node, Iri):
            raise RuleError("rules must be IRIs (deterministic ordering)")
        try:
            kind_enum = RuleKind(kind.value[len(RULE):]) if isinstance(kind, Iri) and kind.value.startswith(RULE) else None
        except ValueError:
            kind_enum = None
        if kind_enum is None:
            raise RuleError(f"{node.value}: unknown ruleKind {kind}")
        text = _string(rules_graph, node, SELECTOR)
        try:
            selector = parse_select(text, prefixes)
        except ParseError as exc:
            raise RuleError(f"{node.value}: selector does not parse: {exc}") from exc
        anchor = _string(rules_graph, node, ANCHOR, required=False) or selector.projected[0]
        p_apply = _decimal(rules_graph, node, P_APPLY, required=False)
        kwargs = dict(iri=node, kind=kind_enum, selector=selector, anchor=anchor,
                      p_apply=Decimal(1) if p_apply is None else p_apply)
        if kind_enum is RuleKind.ADD:
            templates = [_template(rules_graph, t) for t in rules_graph.objects(node, TEMPLATE)]
            kwargs["templates"] = sorted(templates, key=lambda t: t.name)
        elif kind_enum is RuleKind.CHANGE:
            path = _one(rules_graph, node, TARGET_PATH)
            if not isinstance(path, Iri):
                raise RuleError(f"{node.value}: targetPath must be an IRI")
            kwargs["target_path"] = path
            value = _one(rules_graph, node, VALUE, required=False)
            if value is not None and not isinstance(value, Literal):
                raise RuleError(f"{node.value}: rule:value must be a literal")
            kwargs["value"] = value
            kwargs["value_variable"] = _string(rules_graph, node, VALUE_VARIABLE, required=False)
            kwargs["min_value"] = _decimal(rules_graph, node, MIN_VALUE, required=False)
            kwargs["max_value"] = _decimal(rules_graph, node, MAX_VALUE, required=False)
        else:
            kwargs["delete_patterns"] = [_pattern(rules_graph, p) for p in rules_graph.objects(node, DELETE_PATTERN)]
        rules.append(AugmentationRule(**kwargs))
    return rules


def _template(g: Graph, node) -> Template:
    name = _string(g, node, TEMPLATE_NAME)
    if not re.fullmatch(r"[A-Za-z0-9_\-]+", name):
        raise RuleError(f"template name {name!r} must be alphanumeric")
    weight = _decimal(g, node, TEMPLATE_WEIGHT, required=False)
    triples = [_pattern(g, t) for t in g.objects(node, TRIPLE)]
    triples.sort(key=lambda t: tuple(x.key for x in t))
    return Template(
        name=name,
        weight=Decimal(1) if weight is None else weight,
        triples=triples,
        fresh=frozenset(g.objects(node, FRESH_NODE)),
        singletons=frozenset(g.objects(node, SINGLETON_NODE)),
    )


# -- application ------------------------------------------------------------------

def sub_seed(master_seed: int, rule_iri: Iri) -> int:
    digest = hashlib.sha256(f"{master_seed}|{rule_iri.value}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _matches(graph: Graph, rule: AugmentationRule) -> list[dict]:
    rows = evaluate(graph, rule.selector)
    order = [rule.anchor] + [v for v in rule.selector.projected if v != rule.anchor]
    return sorted(rows, key=lambda row: tuple(row[v].key for v in order))


def _next_counter(graph: Graph, name: str) -> int:
    prefix = f"{ERROL}inst/{name}/"
    highest = -1
    for node in graph._spo:
        if isinstance(node, Iri) and node.value.startswith(prefix):
            head = node.value[len(prefix):].split("/", 1)[0]
            if head.isdigit():
                highest = max(highest, int(head))
    return highest + 1


def _slot_name(slot: Iri) -> str:
    return re.split(r"[#/]", slot.value)[-1] or "node"


def _resolve(term, binding: dict, rule: AugmentationRule, fresh_map: dict | None = None):
    if isinstance(term, Iri):
        if fresh_map is not None and term in fresh_map:
            return fresh_map[term]
        if term.value.startswith(VAR_NS):
            name = term.value[len(VAR_NS):]
            if name not in binding:
                raise BindError(f"{rule.iri.value}: template references unbound variable ?{name}")
            return binding[name]
    if isinstance(term, BlankNode):
        raise RuleError(f"{rule.iri.value}: blank nodes are not allowed inside templates")
    return term


def _instantiate(graph: Graph, rule, template: Template, binding: dict, counter: int) -> list[Triple]:
    fresh_map = {slot: Iri(f"{ERROL}inst/{template.name}/{counter}/{_slot_name(slot)}")
                 for slot in template.fresh}
    existing = {s for s in template.singletons if graph.has_subject(s)}
    out = []
    for s, p, o in template.triples:
        if s in existing:
            continue
        subj, pred, obj = (_resolve(x, binding, rule, fresh_map) for x in (s, p, o))
        if isinstance(subj, Literal) or not isinstance(pred, Iri):
            raise BindError(f"{rule.iri.value}: template triple ({s}, {p}, {o}) instantiates to an invalid triple")
        out.append(Triple(subj, pred, obj))
    return out


def _change_value(rule: AugmentationRule, binding: dict) -> Literal:
    if rule.value is not None:
        value = rule.value
    else:
        if rule.value_variable not in binding:
            raise BindError(f"{rule.iri.value}: ?{rule.value_variable} unbound")
        value = binding[rule.value_variable]
    if rule.min_value is None and rule.max_value is None:
        return value
    if not isinstance(value, Literal) or not value.is_numeric:
        raise BindError(f"{rule.iri.value}: bounded value needs a number, got {value}")
    number = Decimal(value.lexical)
    clamped = number
    if rule.min_value is not None:
        clamped = max(clamped, rule.min_value)
    if rule.max_value is not None:
        clamped = min(clamped, rule.max_value)
    return value if clamped == number else literal(clamped)


def apply_rule(graph: Graph, rule: AugmentationRule, rng_seed: int) -> tuple[Graph, AppliedLog]:
    rng = random.Random(rng_seed)
    out = graph.copy()
    log = AppliedLog(rule.iri)
    counters = {t.name: _next_counter(graph, t.name) for t in rule.templates}
    weights = rule.template_distribution() if rule.kind is RuleKind.ADD else []
    p_apply = float(rule.p_apply)
    for binding in _matches(graph, rule):
        if not rng.random() < p_apply:
            continue
        choice = None
        if rule.kind is RuleKind.ADD:
            u2 = rng.random()
            choice, acc = len(weights) - 1, 0.0
            for i, w in enumerate(weights):
                acc += w
                if u2 < acc:
                    choice = i
                    break
            template = rule.templates[choice]
            new = _instantiate(out, rule, template, binding, counters[template.name])
            counters[template.name] += 1
            added = [t for t in new if out.add(t)]
            removed = []
        elif rule.kind is RuleKind.CHANGE:
            anchor = binding[rule.anchor]
            new = Triple(anchor, rule.target_path, _change_value(rule, binding))
            old = list(out.iter_match(anchor, rule.target_path, None))
            removed = [t for t in old if t != new]
            for t in removed:
                out.discard(t)
            added = [new] if out.add(new) else []
        else:
            removed = []
            for pattern in rule.delete_patterns:
                s, p, o = (None if x == ANY else _resolve(x, binding, rule) for x in pattern)
                doomed = list(out.iter_match(s, p, o))
                for t in doomed:
                    out.discard(t)
                removed.extend(doomed)
            added = []
        log.entries.append(LogEntry(rule.iri, dict(binding), choice, added, removed))
    return out, log


_DEFAULT = object()


def apply_all(graph: Graph, rules: list[AugmentationRule], master_seed: int,
              shapes=_DEFAULT, class_hierarchy: Graph | None = None) -> tuple[Graph, list[AppliedLog]]:
    """Apply ``rules`` in IRI order, then validate against ``shapes``.

    ``shapes`` defaults to the bundled cyber-physical shape set; pass ``None``
    to skip validation.
    """
    from . import assets
    from .shacl import validate

    logs = []
    out = graph
    for rule in sorted(rules, key=lambda r: r.iri.value):
        out, log = apply_rule(out, rule, sub_seed(master_seed, rule.iri))
        logs.append(log)
    if not rules:
        out = graph.copy()
    if shapes is _DEFAULT:
        shapes = assets.cpes_shapes()
    if shapes:
        hierarchy = class_hierarchy if class_hierarchy is not None else assets.class_hierarchy()
        report = validate(out, shapes, hierarchy)
        if not report.conforms:
            raise PostValidationError(report)
    return out, logs


def replay(graph: Graph, logs: list[AppliedLog]) -> Graph:
    out = graph.copy()
    for log in logs:
        for entry in log.entries:
            for t in entry.removed:
                out.discard(t)
            for t in entry.added:
                out.add(t)
    return out
