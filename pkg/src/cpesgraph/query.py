"""SELECT queries over basic graph patterns with simple comparison filters.

Grammar::

    PREFIX* SELECT DISTINCT? var+ WHERE? { (triple-pattern | FILTER(?v op term))* }

Patterns are joined left to right by substituting the current bindings into
the next pattern and looking it up in the graph indexes. Solutions have set
semantics and are returned sorted by the projected terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Union

from ._lexer import TokenStream, describe, tokenize, unescape
from .errors import ParseError
from .rdf import (
    DEFAULT_PREFIXES, RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING,
    BlankNode, Graph, Iri, Literal, Term,
)

UNSUPPORTED = {
    "OPTIONAL", "UNION", "MINUS", "GRAPH", "SERVICE", "BIND", "VALUES", "EXISTS", "NOT",
    "ORDER", "GROUP", "HAVING", "LIMIT", "OFFSET", "CONSTRUCT", "ASK", "DESCRIBE",
    "INSERT", "DELETE", "LOAD", "CLEAR", "DROP", "FROM", "REDUCED",
}
OPERATORS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


PatternTerm = Union[Var, Iri, Literal]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: PatternTerm
    predicate: Union[Var, Iri]
    object: PatternTerm

    def variables(self) -> list[str]:
        return [t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Var)]


@dataclass(frozen=True, slots=True)
class Filter:
    left: Var
    op: str
    right: Union[Var, Iri, Literal]

    def variables(self) -> list[str]:
        names = [self.left.name]
        if isinstance(self.right, Var):
            names.append(self.right.name)
        return names


@dataclass
class SelectQuery:
    projected: list[str]
    patterns: list[TriplePattern]
    filters: list[Filter] = field(default_factory=list)

    def variables(self) -> set[str]:
        return {v for p in self.patterns for v in p.variables()}


Binding = dict  # variable name -> Term


class FilterTypeError(TypeError):
    """Operands of a filter comparison are not comparable."""


def parse_select(text: str, prefixes: dict[str, str] | None = None) -> SelectQuery:
    return _QueryParser(text, prefixes).parse()


class _QueryParser:
    def __init__(self, text, prefixes):
        self.ts = TokenStream(tokenize(text))
        self.prefixes = dict(DEFAULT_PREFIXES if prefixes is None else prefixes)

    def keyword(self, word: str) -> bool:
        tok = self.ts.peek
        return tok.kind == "name" and tok.text.upper() == word

    def check_unsupported(self):
        tok = self.ts.peek
        if tok.kind == "name" and tok.text.upper() in UNSUPPORTED:
            self.ts.fail(tok, f"{tok.text.upper()} unsupported")

    def parse(self) -> SelectQuery:
        ts = self.ts
        while self.keyword("PREFIX"):
            ts.next()
            pname = ts.expect("pname", what="prefix declaration 'name:'")
            prefix, _, local = pname.text.partition(":")
            if local:
                ts.fail(pname, f"malformed prefix declaration {pname.text!r}")
            self.prefixes[prefix] = ts.expect("iri", what="namespace IRI").text[1:-1]
        self.check_unsupported()
        if not self.keyword("SELECT"):
            ts.fail(ts.peek, f"expected SELECT, found {describe(ts.peek)}")
        ts.next()
        if self.keyword("DISTINCT"):
            ts.next()
        self.check_unsupported()
        projected = []
        while ts.at("var"):
            name = ts.next().text[1:]
            if name not in projected:
                projected.append(name)
        if ts.at("punct", "*"):
            ts.fail(ts.peek, "SELECT * unsupported; list the variables")
        if not projected:
            ts.fail(ts.peek, f"expected variable, found {describe(ts.peek)}")
        self.check_unsupported()
        if self.keyword("WHERE"):
            ts.next()
        ts.expect("punct", "{")
        patterns, filters = [], []
        while not ts.accept("punct", "}"):
            self.check_unsupported()
            if ts.at("eof"):
                ts.fail(ts.peek, "unterminated group pattern")
            if ts.accept("punct", "."):
                continue
            if self.keyword("FILTER"):
                filters.append(self.filter())
                continue
            if ts.at("punct", "{"):
                ts.fail(ts.peek, "nested group patterns unsupported")
            self.triples_block(patterns)
        self.check_unsupported()
        if not ts.at("eof"):
            ts.fail(ts.peek, f"unexpected {describe(ts.peek)} after query body")
        query = SelectQuery(projected, patterns, filters)
        in_patterns = query.variables()
        for name in projected:
            if name not in in_patterns:
                raise ParseError(1, 1, f"projected variable ?{name} does not occur in any pattern")
        for f in filters:
            for name in f.variables():
                if name not in in_patterns:
                    raise ParseError(1, 1, f"filter variable ?{name} does not occur in any pattern")
        return query

    def triples_block(self, patterns):
        ts = self.ts
        subj = self.term(position="subject")
        while True:
            pred = self.verb()
            while True:
                patterns.append(TriplePattern(subj, pred, self.term(position="object")))
                if not ts.accept("punct", ","):
                    break
            if not ts.accept("punct", ";"):
                break
            while ts.accept("punct", ";"):
                pass
            if ts.at("punct", ".") or ts.at("punct", "}"):
                break

    def verb(self):
        tok = self.ts.peek
        if tok.kind == "name" and tok.text == "a":
            self.ts.next()
            return RDF_TYPE
        if tok.kind == "var":
            return Var(self.ts.next().text[1:])
        if tok.kind in ("iri", "pname"):
            return self.iri(self.ts.next())
        self.check_unsupported()
        self.ts.fail(tok, f"expected predicate, found {describe(tok)}")

    def term(self, position: str):
        ts = self.ts
        tok = ts.peek
        if tok.kind == "var":
            return Var(ts.next().text[1:])
        if tok.kind in ("iri", "pname"):
            return self.iri(ts.next())
        if tok.kind in ("bnode",) or (tok.kind == "punct" and tok.text in "[("):
            ts.fail(tok, "blank nodes and collections unsupported in queries")
        if position == "object" or position == "filter":
            lit = self.literal()
            if lit is not None:
                return lit
        self.check_unsupported()
        ts.fail(tok, f"expected {position}, found {describe(tok)}")

    def literal(self):
        ts = self.ts
        tok = ts.peek
        if tok.kind in ("string", "long_string"):
            ts.next()
            lexical = unescape(tok)
            if ts.at("directive"):
                ts.fail(ts.peek, "language-tagged literals unsupported")
            if ts.accept("dtype"):
                dt = ts.peek
                if dt.kind not in ("iri", "pname"):
                    ts.fail(dt, "expected datatype IRI")
                try:
                    return Literal(lexical, self.iri(ts.next()).value)
                except ValueError as exc:
                    ts.fail(tok, str(exc))
            return Literal(lexical, XSD_STRING)
        if tok.kind == "number":
            ts.next()
            if "e" in tok.text.lower():
                ts.fail(tok, "xsd:double literals unsupported")
            return Literal(tok.text, XSD_DECIMAL if "." in tok.text else XSD_INTEGER)
        if tok.kind == "name" and tok.text in ("true", "false"):
            ts.next()
            return Literal(tok.text, XSD_BOOLEAN)
        return None

    def filter(self) -> Filter:
        ts = self.ts
        ts.next()
        ts.expect("punct", "(")
        left_tok = ts.peek
        left = self.term(position="filter")
        if not isinstance(left, Var):
            ts.fail(left_tok, "left operand of FILTER must be a variable")
        op_tok = ts.peek
        if op_tok.kind != "op" or op_tok.text not in OPERATORS:
            if op_tok.kind == "op":
                ts.fail(op_tok, f"operator {op_tok.text!r} unsupported")
            ts.fail(op_tok, f"expected comparison operator, found {describe(op_tok)}")
        ts.next()
        right = self.term(position="filter")
        if ts.at("op"):
            ts.fail(ts.peek, f"operator {ts.peek.text!r} unsupported")
        ts.expect("punct", ")")
        return Filter(left, op_tok.text, right)

    def iri(self, tok) -> Iri:
        if tok.kind == "iri":
            return Iri(tok.text[1:-1])
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            self.ts.fail(tok, f"unknown prefix {prefix!r}")
        return Iri(self.prefixes[prefix] + local)


# -- evaluation -------------------------------------------------------------

def compare(left: Term, op: str, right: Term) -> bool:
    """Filter comparison; raises :class:`FilterTypeError` on incomparable operands."""
    if isinstance(left, Literal) and isinstance(right, Literal):
        if left.is_numeric and right.is_numeric:
            a, b = Decimal(left.lexical), Decimal(right.lexical)
        elif left.datatype == right.datatype and left.datatype in (XSD_STRING, XSD_BOOLEAN):
            a, b = left.value, right.value
        else:
            raise FilterTypeError(f"cannot compare {left} with {right}")
    elif type(left) is type(right) and isinstance(left, (Iri, BlankNode)):
        if op not in ("=", "!="):
            raise FilterTypeError(f"{op} is undefined for {type(left).__name__}")
        a, b = left, right
    else:
        raise FilterTypeError(f"cannot compare {left} with {right}")
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown operator {op}")


def _passes(f: Filter, binding: Binding) -> bool:
    right = binding[f.right.name] if isinstance(f.right, Var) else f.right
    try:
        return compare(binding[f.left.name], f.op, right)
    except FilterTypeError:
        return False


def evaluate(graph: Graph, query: SelectQuery) -> list[Binding]:
    seed: Binding = {}
    for f in query.filters:
        # an IRI equality filter can only be satisfied by that exact IRI
        if f.op == "=" and isinstance(f.right, Iri):
            if seed.get(f.left.name, f.right) != f.right:
                return []
            seed[f.left.name] = f.right
    pending = list(query.filters)
    solutions = [seed]
    for pat in query.patterns:
        extended = []
        for sol in solutions:
            s = sol.get(pat.subject.name) if isinstance(pat.subject, Var) else pat.subject
            p = sol.get(pat.predicate.name) if isinstance(pat.predicate, Var) else pat.predicate
            o = sol.get(pat.object.name) if isinstance(pat.object, Var) else pat.object
            for t in graph.iter_match(s, p, o):
                new = _extend(sol, pat, t)
                if new is not None:
                    extended.append(new)
        solutions = extended
        ready = [f for f in pending if all(v in solutions[0] for v in f.variables())] if solutions else []
        for f in ready:
            pending.remove(f)
            solutions = [sol for sol in solutions if _passes(f, sol)]
        if not solutions:
            return []
    for f in pending:
        solutions = [sol for sol in solutions if _passes(f, sol)]
    unique = {}
    for sol in solutions:
        row = tuple(sol[v] for v in query.projected)
        unique[row] = None
    rows = sorted(unique, key=lambda row: tuple(t.key for t in row))
    return [dict(zip(query.projected, row)) for row in rows]


def _extend(sol: Binding, pat: TriplePattern, triple) -> Binding | None:
    new = None
    for slot, value in zip((pat.subject, pat.predicate, pat.object), triple):
        if not isinstance(slot, Var):
            continue
        current = (new or sol).get(slot.name)
        if current is None:
            if new is None:
                new = dict(sol)
            new[slot.name] = value
        elif current != value:
            return None
    return new if new is not None else dict(sol)


def select(graph: Graph, text: str) -> list[Binding]:
    """Parse ``text`` with the graph's prefixes and evaluate it."""
    return evaluate(graph, parse_select(text, graph.prefixes))
