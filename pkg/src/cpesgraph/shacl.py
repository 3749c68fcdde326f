"""Closed-world validation with a SHACL subset.

Supported: ``sh:targetClass`` (with ``rdfs:subClassOf`` targeting),
``sh:property`` with ``sh:path``, ``sh:datatype``, ``sh:minCount``,
``sh:maxCount``, ``sh:minInclusive``, ``sh:maxInclusive``, and ``sh:and``
lists of such value shapes. A value that is not stated counts as absent.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Optional

from .errors import CycleError, ShapeError
from .rdf import (
    RDF_FIRST, RDF_NIL, RDF_REST, RDF_TYPE, RDFS_SUBCLASS_OF, SH, XSD_INTEGER, XSD_STRING, BlankNode,
    Graph, Iri, Literal,
)

SH_NODE_SHAPE = Iri(SH + "NodeShape")
SH_TARGET_CLASS = Iri(SH + "targetClass")
SH_PROPERTY = Iri(SH + "property")
SH_AND = Iri(SH + "and")
SH_PATH = Iri(SH + "path")
SH_DATATYPE = Iri(SH + "datatype")
SH_MIN_COUNT = Iri(SH + "minCount")
SH_MAX_COUNT = Iri(SH + "maxCount")
SH_MIN_INCLUSIVE = Iri(SH + "minInclusive")
SH_MAX_INCLUSIVE = Iri(SH + "maxInclusive")
SH_NAME = Iri(SH + "name")
SH_DESCRIPTION = Iri(SH + "description")


class Constraint(str, Enum):
    DATATYPE = "Datatype"
    MIN_COUNT = "MinCount"
    MAX_COUNT = "MaxCount"
    MIN_INCLUSIVE = "MinInclusive"
    MAX_INCLUSIVE = "MaxInclusive"


@dataclass(frozen=True)
class PropertyShape:
    path: Iri
    datatype: Optional[str] = None
    min_count: Optional[int] = None
    max_count: Optional[int] = None
    min_inclusive: Optional[Decimal] = None
    max_inclusive: Optional[Decimal] = None
    name: Optional[str] = None
    description: Optional[str] = None


@dataclass
class NodeShape:
    shape_iri: Iri
    target_class: Iri
    properties: list[PropertyShape] = field(default_factory=list)
    and_constraints: list[PropertyShape] = field(default_factory=list)


@dataclass(frozen=True)
class Violation:
    focus_node: str
    path: str
    constraint: Constraint
    actual: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def conforms(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "conforms": self.conforms,
            "violations": [
                {**asdict(v), "constraint": v.constraint.value} for v in self.violations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        if self.conforms:
            return "conforms: no violations\n"
        rows = [("focus node", "path", "constraint", "actual", "message")]
        rows += [(v.focus_node, v.path, v.constraint.value, v.actual, v.message) for v in self.violations]
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = []
        for r in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r[:4], widths)) + "  " + r[4])
        return "\n".join(lines) + f"\n{len(self.violations)} violation(s)\n"


# -- parsing ----------------------------------------------------------------

def parse_shapes(shapes_graph: Graph) -> list[NodeShape]:
    shapes = []
    for node in shapes_graph.subjects(RDF_TYPE, SH_NODE_SHAPE):
        target = shapes_graph.objects(node, SH_TARGET_CLASS)
        if len(target) != 1 or not isinstance(target[0], Iri):
            raise ShapeError(f"node shape {node} needs exactly one IRI sh:targetClass")
        props = [_property_shape(shapes_graph, p) for p in shapes_graph.objects(node, SH_PROPERTY)]
        ands = []
        for head in shapes_graph.objects(node, SH_AND):
            ands.extend(_property_shape(shapes_graph, m) for m in _read_list(shapes_graph, head))
        shapes.append(NodeShape(node, target[0], props, ands))
    return shapes


def _read_list(g: Graph, head) -> list:
    items = []
    seen = set()
    while head != RDF_NIL:
        if head in seen:
            raise ShapeError("cyclic RDF list in sh:and")
        seen.add(head)
        first = g.objects(head, RDF_FIRST)
        rest = g.objects(head, RDF_REST)
        if len(first) != 1 or len(rest) != 1:
            raise ShapeError(f"malformed RDF list at {head}")
        items.append(first[0])
        head = rest[0]
    return items


def _single(g: Graph, node, pred):
    values = g.objects(node, pred)
    if len(values) > 1:
        raise ShapeError(f"{node} has several values for {pred.value}")
    return values[0] if values else None


def _count(g, node, pred) -> Optional[int]:
    v = _single(g, node, pred)
    if v is None:
        return None
    if not isinstance(v, Literal) or v.datatype != XSD_INTEGER or v.value < 0:
        raise ShapeError(f"{pred.value} of {node} must be a non-negative integer, got {v}")
    return v.value


def _bound(g, node, pred) -> Optional[Decimal]:
    v = _single(g, node, pred)
    if v is None:
        return None
    if not isinstance(v, Literal) or not v.is_numeric:
        raise ShapeError(f"{pred.value} of {node} must be numeric, got {v}")
    return Decimal(v.lexical)


def _text(g, node, pred) -> Optional[str]:
    v = _single(g, node, pred)
    if v is None:
        return None
    if not isinstance(v, Literal) or v.datatype != XSD_STRING:
        raise ShapeError(f"{pred.value} of {node} must be a string, got {v}")
    return v.lexical


def _property_shape(g: Graph, node) -> PropertyShape:
    if not isinstance(node, (BlankNode, Iri)):
        raise ShapeError(f"property shape must be a node, got {node}")
    path = _single(g, node, SH_PATH)
    if path is None:
        raise ShapeError(f"property shape {node} lacks sh:path")
    if not isinstance(path, Iri):
        raise ShapeError(f"sh:path of {node} must be an IRI (path expressions unsupported)")
    datatype = _single(g, node, SH_DATATYPE)
    if datatype is not None and not isinstance(datatype, Iri):
        raise ShapeError(f"sh:datatype of {node} must be an IRI, got {datatype}")
    shape = PropertyShape(
        path=path,
        datatype=datatype.value if datatype is not None else None,
        min_count=_count(g, node, SH_MIN_COUNT),
        max_count=_count(g, node, SH_MAX_COUNT),
        min_inclusive=_bound(g, node, SH_MIN_INCLUSIVE),
        max_inclusive=_bound(g, node, SH_MAX_INCLUSIVE),
        name=_text(g, node, SH_NAME),
        description=_text(g, node, SH_DESCRIPTION),
    )
    if shape.min_count is not None and shape.max_count is not None and shape.min_count > shape.max_count:
        raise ShapeError(f"property shape for {path.value}: minCount > maxCount")
    if shape.min_inclusive is not None and shape.max_inclusive is not None \
            and shape.min_inclusive > shape.max_inclusive:
        raise ShapeError(f"property shape for {path.value}: minInclusive > maxInclusive")
    return shape


# -- targeting ----------------------------------------------------------------

def subclasses(class_hierarchy: Graph, cls: Iri) -> set[Iri]:
    """``cls`` and all its transitive subclasses; raises CycleError on a cycle."""
    result = {cls}
    on_path: list = []
    state: dict = {}

    def visit(c):
        state[c] = "open"
        on_path.append(c)
        for sub in class_hierarchy.subjects(RDFS_SUBCLASS_OF, c):
            if sub == c:
                continue
            if state.get(sub) == "open":
                cycle = on_path[on_path.index(sub):] + [sub]
                raise CycleError("rdfs:subClassOf cycle: " + " -> ".join(x.value for x in cycle))
            if sub not in state:
                result.add(sub)
                visit(sub)
        on_path.pop()
        state[c] = "done"

    visit(cls)
    return result


def target_nodes(data_graph: Graph, shape: NodeShape, class_hierarchy: Graph) -> list:
    nodes = set()
    for cls in subclasses(class_hierarchy, shape.target_class):
        nodes.update(data_graph.subjects(RDF_TYPE, cls))
    return sorted(nodes, key=lambda n: n.key)


# -- validation ---------------------------------------------------------------

def validate(data_graph: Graph, shapes: list[NodeShape], class_hierarchy: Graph | None = None) -> ValidationReport:
    hierarchy = class_hierarchy if class_hierarchy is not None else data_graph
    found = []
    for shape in shapes:
        for focus in target_nodes(data_graph, shape, hierarchy):
            for prop in shape.properties + shape.and_constraints:
                found.extend(_check(data_graph, focus, prop))
    ordered = sorted(found, key=lambda v: (v.focus_node, v.path, v.constraint.value, v.actual, v.message))
    return ValidationReport(ordered)


def _label(prop: PropertyShape) -> str:
    if prop.name and prop.description:
        return f"{prop.name} ({prop.description})"
    return prop.name or prop.description or prop.path.value


def _check(g: Graph, focus, prop: PropertyShape) -> list[Violation]:
    values = g.objects(focus, prop.path)
    label = _label(prop)
    focus_id = focus.value if isinstance(focus, Iri) else str(focus)

    def v(constraint, actual, message):
        return Violation(focus_id, prop.path.value, constraint, actual, f"{label}: {message}")

    out = []
    if prop.min_count is not None and len(values) < prop.min_count:
        out.append(v(Constraint.MIN_COUNT, str(len(values)),
                     f"expected at least {prop.min_count} value(s), found {len(values)}"))
    if prop.max_count is not None and len(values) > prop.max_count:
        out.append(v(Constraint.MAX_COUNT, str(len(values)),
                     f"expected at most {prop.max_count} value(s), found {len(values)}"))
    for value in values:
        if prop.datatype is not None:
            if not isinstance(value, Literal) or value.datatype != prop.datatype:
                out.append(v(Constraint.DATATYPE, _show(value), f"value is not of datatype <{prop.datatype}>"))
        for bound, constraint, ok in (
            (prop.min_inclusive, Constraint.MIN_INCLUSIVE, lambda x, b: x >= b),
            (prop.max_inclusive, Constraint.MAX_INCLUSIVE, lambda x, b: x <= b),
        ):
            if bound is None:
                continue
            relation = ">=" if constraint is Constraint.MIN_INCLUSIVE else "<="
            if not isinstance(value, Literal) or not value.is_numeric:
                out.append(v(constraint, _show(value), f"value is not numeric, expected {relation} {bound}"))
            elif not ok(Decimal(value.lexical), bound):
                out.append(v(constraint, _show(value), f"value must be {relation} {bound}"))
    return out


def _show(term) -> str:
    if isinstance(term, Literal):
        return term.lexical
    if isinstance(term, Iri):
        return term.value
    return str(term)
