"""Turtle subset: parser and deterministic serializer.

Supported: ``@prefix``/``PREFIX``, ``@base``/``BASE`` (plain concatenation),
prefixed names, ``<iri>``, ``a``, ``;`` and ``,`` continuations, ``[ ... ]``
anonymous nodes, ``( ... )`` collections, ``_:label`` nodes, plain and
``^^``-typed literals, bare integers/decimals/booleans. Anything else raises
:class:`ParseError`.
"""

from __future__ import annotations

import re

from ._lexer import TokenStream, describe, tokenize, unescape
from .errors import ParseError
from .rdf import (
    RDF_FIRST, RDF_NIL, RDF_REST, RDF_TYPE, XSD, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER,
    XSD_STRING, BlankNode, Graph, Iri, Literal, Triple, fresh_bnode,
)

SUPPORTED_DATATYPES = (XSD_STRING, XSD_INTEGER, XSD_DECIMAL, XSD_BOOLEAN)


def parse_turtle(text: str, prefixes: dict[str, str] | None = None) -> Graph:
    graph = Graph(prefixes=prefixes)
    _TurtleParser(text, graph).parse()
    return graph


def load_turtle(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_turtle(fh.read())


class _TurtleParser:
    def __init__(self, text: str, graph: Graph):
        self.ts = TokenStream(tokenize(text))
        self.graph = graph
        self.base = ""
        self.labels: dict[str, BlankNode] = {}

    def parse(self):
        ts = self.ts
        while not ts.at("eof"):
            if ts.at("directive") or (ts.at("name") and ts.peek.text.upper() in ("PREFIX", "BASE")):
                self.directive()
                continue
            self.triples()
            if ts.accept("punct", "."):
                continue
            if ts.at("eof"):
                # a final statement may omit its terminating dot
                break
            ts.fail(ts.peek, f"expected '.', found {describe(ts.peek)}")

    def directive(self):
        ts = self.ts
        tok = ts.next()
        word = tok.text.lstrip("@").lower()
        sparql_style = not tok.text.startswith("@")
        if word == "prefix":
            pname = ts.expect("pname", what="prefix declaration 'name:'")
            prefix, _, local = pname.text.partition(":")
            if local:
                ts.fail(pname, f"malformed prefix declaration {pname.text!r}")
            self.graph.prefixes[prefix] = self.iri_ref(ts.expect("iri", what="namespace IRI")).value
        elif word == "base":
            self.base = self.iri_ref(ts.expect("iri", what="base IRI")).value
        else:
            ts.fail(tok, f"unsupported directive {tok.text}")
        if not sparql_style:
            ts.expect("punct", ".")

    def triples(self):
        ts = self.ts
        if ts.at("punct", "["):
            subj = self.blank_property_list()
            if ts.at("punct", ".") or ts.at("eof"):
                return
        elif ts.at("punct", "("):
            subj = self.collection()
        else:
            subj = self.subject()
        self.predicate_object_list(subj)

    def subject(self):
        tok = self.ts.peek
        if tok.kind in ("iri", "pname"):
            return self.iri(self.ts.next())
        if tok.kind == "bnode":
            return self.labeled_bnode(self.ts.next())
        self.ts.fail(tok, f"expected subject, found {describe(tok)}")

    def predicate_object_list(self, subj):
        ts = self.ts
        self.object_list(subj, self.verb())
        while ts.accept("punct", ";"):
            while ts.accept("punct", ";"):
                pass
            if ts.at("punct", ".") or ts.at("punct", "]") or ts.at("eof"):
                return
            self.object_list(subj, self.verb())

    def verb(self) -> Iri:
        tok = self.ts.peek
        if tok.kind == "name" and tok.text == "a":
            self.ts.next()
            return RDF_TYPE
        if tok.kind in ("iri", "pname"):
            return self.iri(self.ts.next())
        self.ts.fail(tok, f"expected predicate, found {describe(tok)}")

    def object_list(self, subj, pred):
        self.graph.add(Triple(subj, pred, self.object()))
        while self.ts.accept("punct", ","):
            self.graph.add(Triple(subj, pred, self.object()))

    def object(self):
        ts = self.ts
        tok = ts.peek
        if tok.kind in ("iri", "pname"):
            return self.iri(ts.next())
        if tok.kind == "bnode":
            return self.labeled_bnode(ts.next())
        if tok.kind == "punct" and tok.text == "[":
            return self.blank_property_list()
        if tok.kind == "punct" and tok.text == "(":
            return self.collection()
        if tok.kind in ("string", "long_string"):
            return self.literal(ts.next())
        if tok.kind == "number":
            ts.next()
            if "e" in tok.text.lower():
                ts.fail(tok, "xsd:double literals are unsupported")
            return Literal(tok.text, XSD_DECIMAL if "." in tok.text else XSD_INTEGER)
        if tok.kind == "name" and tok.text in ("true", "false"):
            ts.next()
            return Literal(tok.text, XSD_BOOLEAN)
        ts.fail(tok, f"expected object, found {describe(tok)}")

    def literal(self, tok) -> Literal:
        ts = self.ts
        lexical = unescape(tok)
        if ts.at("directive"):
            ts.fail(ts.peek, "language-tagged literals are unsupported")
        if not ts.accept("dtype"):
            return Literal(lexical)
        dt_tok = ts.peek
        if dt_tok.kind not in ("iri", "pname"):
            ts.fail(dt_tok, f"expected datatype IRI, found {describe(dt_tok)}")
        datatype = self.iri(ts.next()).value
        if datatype not in SUPPORTED_DATATYPES:
            ts.fail(dt_tok, f"unsupported datatype <{datatype}>")
        try:
            return Literal(lexical, datatype)
        except ValueError as exc:
            ts.fail(tok, str(exc))

    def blank_property_list(self) -> BlankNode:
        ts = self.ts
        ts.expect("punct", "[")
        node = fresh_bnode()
        if not ts.at("punct", "]"):
            self.predicate_object_list(node)
        ts.expect("punct", "]")
        return node

    def collection(self):
        ts = self.ts
        ts.expect("punct", "(")
        items = []
        while not ts.accept("punct", ")"):
            if ts.at("eof"):
                ts.fail(ts.peek, "unterminated collection")
            items.append(self.object())
        head = RDF_NIL
        for item in reversed(items):
            node = fresh_bnode()
            self.graph.add(Triple(node, RDF_FIRST, item))
            self.graph.add(Triple(node, RDF_REST, head))
            head = node
        return head

    def labeled_bnode(self, tok) -> BlankNode:
        label = tok.text[2:]
        if label not in self.labels:
            self.labels[label] = fresh_bnode()
        return self.labels[label]

    def iri(self, tok) -> Iri:
        if tok.kind == "iri":
            return self.iri_ref(tok)
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.graph.prefixes:
            self.ts.fail(tok, f"unknown prefix {prefix!r}")
        return Iri(self.graph.prefixes[prefix] + local)

    def iri_ref(self, tok) -> Iri:
        value = tok.text[1:-1]
        if not re.match(r"[A-Za-z][A-Za-z0-9+.\-]*:", value):
            value = self.base + value
        try:
            return Iri(value)
        except ValueError as exc:
            raise ParseError(tok.line, tok.column, str(exc)) from None


# -- serialization ---------------------------------------------------------

_SAFE_LOCAL = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_\-]*\Z")
_NEVER = re.compile(r"(?!)")
_BARE = {
    XSD_INTEGER: re.compile(r"[+-]?\d+\Z"),
    XSD_DECIMAL: re.compile(r"[+-]?\d*\.\d+\Z"),
    XSD_BOOLEAN: re.compile(r"(true|false)\Z"),
}


def serialize_turtle(graph: Graph) -> str:
    return _Serializer(graph).run()


def dump_turtle(graph: Graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_turtle(graph))


class _Serializer:
    def __init__(self, graph: Graph):
        self.g = graph
        self.namespaces = sorted(graph.prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        self.inline = self._inlinable()
        self.labels: dict[BlankNode, str] = {}

    def _inlinable(self) -> set:
        g = self.g
        bnodes = {t.subject for t in g if isinstance(t.subject, BlankNode)}
        bnodes |= {t.object for t in g if isinstance(t.object, BlankNode)}
        inline = {b for b in bnodes if len(g.match(o=b)) == 1}
        # nodes only reachable through a cycle of inlined nodes need a label
        while True:
            roots = [t.subject for t in g if t.subject not in inline]
            seen = set()
            stack = list(roots)
            while stack:
                node = stack.pop()
                for t in g.iter_match(s=node):
                    if t.object in inline and t.object not in seen:
                        seen.add(t.object)
                        stack.append(t.object)
            orphans = sorted(inline - seen, key=lambda b: b.key)
            if not orphans:
                return inline
            inline.discard(orphans[0])

    def run(self) -> str:
        lines = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(self.g.prefixes.items())]
        subjects = {t.subject for t in self.g if t.subject not in self.inline}
        ordered = sorted(subjects, key=lambda s: s.key)
        labelled = {x for t in self.g for x in (t.subject, t.object)
                    if isinstance(x, BlankNode) and x not in self.inline}
        for i, b in enumerate(sorted(labelled, key=lambda b: b.key)):
            self.labels[b] = f"n{i}"
        blocks = []
        for s in ordered:
            body = self.predicate_list(s, indent=1)
            blocks.append(f"{self.term(s)}\n{body} .")
        out = "\n".join(lines) + "\n"
        if blocks:
            out += "\n" + "\n\n".join(blocks) + "\n"
        return out

    def predicate_list(self, s, indent: int) -> str:
        pad = "    " * indent
        preds = sorted({t.predicate for t in self.g.iter_match(s=s)}, key=lambda p: p.key)
        parts = []
        for p in preds:
            objs = [self.object(o, indent + 1) for o in self.g.iter_match(s=s, p=p)]
            objs.sort(key=lambda pair: pair[0])
            verb = "a" if p == RDF_TYPE else self.term(p)
            parts.append(f"{pad}{verb} " + ", ".join(text for _, text in objs))
        return " ;\n".join(parts)

    def object(self, triple, indent):
        o = triple.object
        if isinstance(o, BlankNode) and o in self.inline:
            items = self.as_list(o)
            if items is not None:
                text = "( " + " ".join(self.object(Triple(o, RDF_FIRST, it), indent)[1] for it in items) + " )"
            elif self.g.has_subject(o):
                pad = "    " * (indent - 1)
                text = "[\n" + self.predicate_list(o, indent + 1) + f"\n{pad}    ]"
            else:
                text = "[]"
            return (1, text), text
        text = self.term(o)
        return (o.key[0], o.key[1], o.key[2]), text

    def as_list(self, node):
        items = []
        seen = set()
        while node != RDF_NIL:
            if not isinstance(node, BlankNode) or node not in self.inline or node in seen:
                return None
            seen.add(node)
            preds = list(self.g.iter_match(s=node))
            if len(preds) != 2:
                return None
            first = self.g.match(node, RDF_FIRST)
            rest = self.g.match(node, RDF_REST)
            if len(first) != 1 or len(rest) != 1:
                return None
            items.append(first[0].object)
            node = rest[0].object
        return items

    def term(self, t) -> str:
        if isinstance(t, Iri):
            for prefix, ns in self.namespaces:
                if t.value.startswith(ns) and _SAFE_LOCAL.match(t.value[len(ns):]):
                    return f"{prefix}:{t.value[len(ns):]}"
            return f"<{t.value}>"
        if isinstance(t, BlankNode):
            return f"_:{self.labels[t]}"
        if t.datatype == XSD_STRING:
            return str(t)
        if _BARE.get(t.datatype, _NEVER).match(t.lexical):
            return t.lexical
        return str(Literal(t.lexical)) + "^^" + self.term(Iri(t.datatype))


__all__ = ["parse_turtle", "serialize_turtle", "load_turtle", "dump_turtle", "ParseError", "XSD"]

