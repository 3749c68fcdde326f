"""Bundled vocabulary, shape sets, rules and demo fixtures."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path

from .rdf import Graph, union
from .shacl import NodeShape, parse_shapes
from .turtle import parse_turtle


def path(name: str) -> Path:
    return Path(str(resources.files("cpesgraph") / "data" / name))


def read_text(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _graph_text(name: str) -> str:
    return read_text(name)


def graph(name: str) -> Graph:
    """Fresh parse of a bundled Turtle file (callers may mutate the result)."""
    return parse_turtle(_graph_text(name))


def ontology() -> Graph:
    return graph("ontology.ttl")


def power_shapes() -> list[NodeShape]:
    return parse_shapes(graph("shapes_power.ttl"))


def cpes_shapes() -> list[NodeShape]:
    return parse_shapes(graph("shapes_cpes.ttl"))


def class_hierarchy(*extra: Graph) -> Graph:
    """Ontology hierarchy merged with any additional graphs (e.g. a shapes graph)."""
    return union(ontology(), *extra)
