"""In-memory RDF terms and triple store.

Terms are immutable value objects. :class:`Graph` keeps three hash indexes
(spo, pos, osp) so that any combination of bound positions in :meth:`Graph.match`
is answered without a full scan.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, NamedTuple, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
SH = "http://www.w3.org/ns/shacl#"
ERROL = "http://example.org/errol#"
RULE = "http://example.org/errol-rule#"

DEFAULT_PREFIXES = {
    "rdf": RDF,
    "rdfs": RDFS,
    "xsd": XSD,
    "sh": SH,
    "errol": ERROL,
}

XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_BOOLEAN = XSD + "boolean"

_LEXICAL = {
    XSD_INTEGER: re.compile(r"[+-]?\d+\Z"),
    XSD_DECIMAL: re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)\Z"),
    XSD_BOOLEAN: re.compile(r"(true|false|1|0)\Z"),
}
NUMERIC_DATATYPES = (XSD_INTEGER, XSD_DECIMAL)


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self):
        if not self.value or any(c.isspace() for c in self.value):
            raise ValueError(f"invalid IRI {self.value!r}")

    @property
    def key(self):
        return (0, self.value, "")

    def __str__(self):
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    @property
    def key(self):
        return (1, self.label, "")

    def __str__(self):
        return f"_:{self.label}"


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING

    def __post_init__(self):
        if self.datatype == XSD_STRING:
            return
        pattern = _LEXICAL.get(self.datatype)
        if pattern is None:
            raise ValueError(f"unsupported datatype {self.datatype}")
        if not pattern.match(self.lexical):
            raise ValueError(f"{self.lexical!r} is not a valid {self.datatype}")

    @property
    def key(self):
        return (2, self.lexical, self.datatype)

    @property
    def is_numeric(self) -> bool:
        return self.datatype in NUMERIC_DATATYPES

    @property
    def value(self) -> Union[str, int, Decimal, bool]:
        """Python value: ``int`` / ``Decimal`` / ``bool`` / ``str``."""
        if self.datatype == XSD_INTEGER:
            return int(self.lexical)
        if self.datatype == XSD_DECIMAL:
            return Decimal(self.lexical)
        if self.datatype == XSD_BOOLEAN:
            return self.lexical in ("true", "1")
        return self.lexical

    def __str__(self):
        escaped = self.lexical.replace("\\", "\\\\").replace('"', '\\"')
        escaped = escaped.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
        if self.datatype == XSD_STRING:
            return f'"{escaped}"'
        return f'"{escaped}"^^<{self.datatype}>'


Term = Union[Iri, BlankNode, Literal]


def literal(value) -> Literal:
    """Build a typed literal from a Python value."""
    if isinstance(value, bool):
        return Literal("true" if value else "false", XSD_BOOLEAN)
    if isinstance(value, int):
        return Literal(str(value), XSD_INTEGER)
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise ValueError(f"cannot encode {value} as xsd:decimal")
        return Literal(format(value, "f"), XSD_DECIMAL)
    if isinstance(value, float):
        return literal(Decimal(repr(value)))
    if isinstance(value, str):
        return Literal(value)
    raise TypeError(f"no literal mapping for {type(value).__name__}")


def to_decimal(value) -> Decimal:
    try:
        return Decimal(str(value))
    except InvalidOperation as exc:
        raise ValueError(f"not a number: {value!r}") from exc


_bnode_ids = itertools.count()


def fresh_bnode() -> BlankNode:
    return BlankNode(f"b{next(_bnode_ids)}")


class Triple(NamedTuple):
    subject: Union[Iri, BlankNode]
    predicate: Iri
    object: Term

    @property
    def key(self):
        return (self.subject.key, self.predicate.key, self.object.key)

    def __str__(self):
        return f"{self.subject} {self.predicate} {self.object} ."


RDF_TYPE = Iri(RDF + "type")
RDF_FIRST = Iri(RDF + "first")
RDF_REST = Iri(RDF + "rest")
RDF_NIL = Iri(RDF + "nil")
RDFS_SUBCLASS_OF = Iri(RDFS + "subClassOf")
RDFS_LABEL = Iri(RDFS + "label")


def errol(local: str) -> Iri:
    return Iri(ERROL + local)


class Graph:
    """A set of triples plus a prefix table.

    The graph is mutable through :meth:`add` / :meth:`discard`; the module level
    :func:`insert` and :func:`remove` return modified copies and leave their
    argument untouched.
    """

    def __init__(self, triples: Iterable[Triple] = (), prefixes: dict[str, str] | None = None):
        self.prefixes: dict[str, str] = dict(DEFAULT_PREFIXES if prefixes is None else prefixes)
        self._spo: dict = {}
        self._pos: dict = {}
        self._osp: dict = {}
        self._size = 0
        for t in triples:
            self.add(t)

    def __len__(self):
        return self._size

    def __iter__(self) -> Iterator[Triple]:
        for s, pmap in self._spo.items():
            for p, objs in pmap.items():
                for o in objs:
                    yield Triple(s, p, o)

    def __contains__(self, triple) -> bool:
        s, p, o = triple
        return o in self._spo.get(s, {}).get(p, ())

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._size == other._size and all(t in other for t in self)

    def __repr__(self):
        return f"<Graph with {self._size} triples>"

    def copy(self) -> "Graph":
        g = Graph(prefixes=self.prefixes)
        for t in self:
            g.add(t)
        return g

    def triples(self) -> list[Triple]:
        return sorted(self, key=_triple_key)

    def add(self, triple: Triple) -> bool:
        s, p, o = triple
        if not isinstance(p, Iri):
            raise TypeError("predicate must be an IRI")
        if isinstance(s, Literal):
            raise TypeError("subject cannot be a literal")
        objs = self._spo.setdefault(s, {}).setdefault(p, set())
        if o in objs:
            return False
        objs.add(o)
        self._pos.setdefault(p, {}).setdefault(o, set()).add(s)
        self._osp.setdefault(o, {}).setdefault(s, set()).add(p)
        self._size += 1
        return True

    def discard(self, triple: Triple) -> bool:
        s, p, o = triple
        objs = self._spo.get(s, {}).get(p)
        if not objs or o not in objs:
            return False
        _drop(self._spo, s, p, o)
        _drop(self._pos, p, o, s)
        _drop(self._osp, o, s, p)
        self._size -= 1
        return True

    def update(self, triples: Iterable[Triple]):
        for t in triples:
            self.add(t)

    def iter_match(self, s=None, p=None, o=None) -> Iterator[Triple]:
        """Unordered match; ``None`` is a wildcard."""
        if s is not None:
            pmap = self._spo.get(s)
            if not pmap:
                return
            if p is not None:
                objs = pmap.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                    return
                for obj in objs:
                    yield Triple(s, p, obj)
                return
            if o is not None:
                for pred in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, pred, o)
                return
            for pred, objs in pmap.items():
                for obj in objs:
                    yield Triple(s, pred, obj)
            return
        if p is not None:
            omap = self._pos.get(p)
            if not omap:
                return
            if o is not None:
                for subj in omap.get(o, ()):
                    yield Triple(subj, p, o)
                return
            for obj, subjs in omap.items():
                for subj in subjs:
                    yield Triple(subj, p, obj)
            return
        if o is not None:
            for subj, preds in self._osp.get(o, {}).items():
                for pred in preds:
                    yield Triple(subj, pred, o)
            return
        yield from self

    def match(self, s=None, p=None, o=None) -> list[Triple]:
        return sorted(self.iter_match(s, p, o), key=_triple_key)

    def objects(self, s, p) -> list[Term]:
        return sorted(self._spo.get(s, {}).get(p, ()), key=_term_key)

    def subjects(self, p, o) -> list:
        return sorted(self._pos.get(p, {}).get(o, ()), key=_term_key)

    def value(self, s, p):
        """The single object of ``(s, p, ?)`` or ``None``; raises if several."""
        objs = self._spo.get(s, {}).get(p, ())
        if len(objs) > 1:
            raise ValueError(f"{s} has {len(objs)} values for {p}")
        return next(iter(objs), None)

    def has_subject(self, s) -> bool:
        return s in self._spo

    def expand(self, name: str) -> Iri:
        """Expand ``prefix:local`` or ``<iri>`` against this graph's prefixes."""
        return expand_name(name, self.prefixes)


def _drop(index, a, b, c):
    inner = index[a][b]
    inner.discard(c)
    if not inner:
        del index[a][b]
        if not index[a]:
            del index[a]


def _term_key(term):
    return term.key


def _triple_key(t: Triple):
    return (t.subject.key, t.predicate.key, t.object.key)


def expand_name(name: str, prefixes: dict[str, str] | None = None) -> Iri:
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    if name.startswith("<") and name.endswith(">"):
        return Iri(name[1:-1])
    prefix, sep, local = name.partition(":")
    if sep and prefix in prefixes:
        return Iri(prefixes[prefix] + local)
    if (sep and "://" in name) or name.startswith("urn:"):
        return Iri(name)
    raise KeyError(f"cannot expand {name!r}: unknown prefix {prefix!r}")


def match(graph: Graph, s=None, p=None, o=None) -> list[Triple]:
    return graph.match(s, p, o)


def insert(graph: Graph, triple: Triple) -> Graph:
    g = graph.copy()
    g.add(triple)
    return g


def remove(graph: Graph, s=None, p=None, o=None) -> tuple[Graph, int]:
    g = graph.copy()
    doomed = list(g.iter_match(s, p, o))
    for t in doomed:
        g.discard(t)
    return g, len(doomed)


def union(*graphs: Graph) -> Graph:
    prefixes = {}
    for g in graphs:
        prefixes.update(g.prefixes)
    out = Graph(prefixes=prefixes)
    for g in graphs:
        out.update(g)
    return out


def isomorphic(g1: Graph, g2: Graph) -> bool:
    """Graph isomorphism up to blank-node relabeling (backtracking search)."""
    if len(g1) != len(g2):
        return False
    ground1 = {t for t in g1 if not _has_bnode(t)}
    ground2 = {t for t in g2 if not _has_bnode(t)}
    if ground1 != ground2:
        return False
    rest1 = [t for t in g1 if _has_bnode(t)]
    rest2 = {t for t in g2 if _has_bnode(t)}
    nodes1 = sorted({x for t in rest1 for x in (t.subject, t.object) if isinstance(x, BlankNode)}, key=_term_key)
    nodes2 = {x for t in rest2 for x in (t.subject, t.object) if isinstance(x, BlankNode)}
    if len(nodes1) != len(nodes2):
        return False

    def signature(graph_triples, node):
        sig = []
        for t in graph_triples:
            if t.subject == node:
                sig.append(("s", t.predicate, None if isinstance(t.object, BlankNode) else t.object))
            if t.object == node:
                sig.append(("o", t.predicate, None if isinstance(t.subject, BlankNode) else t.subject))
        return sorted(sig, key=repr)

    sig1 = {n: signature(rest1, n) for n in nodes1}
    sig2 = {n: signature(rest2, n) for n in nodes2}
    candidates = {n: [m for m in nodes2 if sig2[m] == sig1[n]] for n in nodes1}
    order = sorted(nodes1, key=lambda n: len(candidates[n]))

    def mapped(t, mapping):
        s = mapping.get(t.subject, t.subject)
        o = mapping.get(t.object, t.object)
        return Triple(s, t.predicate, o)

    def search(i, mapping, used):
        if i == len(order):
            return all(mapped(t, mapping) in rest2 for t in rest1)
        node = order[i]
        for cand in candidates[node]:
            if cand in used:
                continue
            mapping[node] = cand
            ok = True
            for t in rest1:
                if t.subject in mapping or t.object in mapping:
                    s_done = not isinstance(t.subject, BlankNode) or t.subject in mapping
                    o_done = not isinstance(t.object, BlankNode) or t.object in mapping
                    if s_done and o_done and mapped(t, mapping) not in rest2:
                        ok = False
                        break
            if ok and search(i + 1, mapping, used | {cand}):
                return True
            del mapping[node]
        return False

    return search(0, {}, frozenset())


def _has_bnode(t: Triple) -> bool:
    return isinstance(t.subject, BlankNode) or isinstance(t.object, BlankNode)
