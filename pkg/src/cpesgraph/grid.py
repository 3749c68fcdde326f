"""Tabular grid model and its lossless mapping to the knowledge graph.

Sign convention is the load reference frame: consumption positive, production
negative. A grid file may declare ``"sgen_sign_convention": "generator"``, in
which case static generator powers are negated on ingest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from decimal import Decimal
from typing import Optional

from .errors import GridError, RefError, ValidationError
from .rdf import RDF_TYPE, Graph, Iri, Literal, Triple, errol, literal

ZERO = Decimal(0)


@dataclass
class BusRecord:
    id: int
    name: str
    vn_kv: Decimal


@dataclass
class LineRecord:
    id: int
    from_bus: int
    to_bus: int
    r_ohm_per_km: Decimal
    x_ohm_per_km: Decimal
    length_km: Decimal
    max_i_ka: Decimal


@dataclass
class TrafoRecord:
    id: int
    hv_bus: int
    lv_bus: int
    sn_mva: Decimal
    vn_hv_kv: Decimal
    vn_lv_kv: Decimal
    vk_percent: Decimal
    vkr_percent: Decimal


@dataclass
class LoadRecord:
    id: int
    bus: int
    p_mw: Decimal
    q_mvar: Decimal
    type: str = "household"
    controllable: bool = False
    max_p_mw: Optional[Decimal] = None
    min_p_mw: Optional[Decimal] = None

    def __post_init__(self):
        if self.max_p_mw is None:
            self.max_p_mw = self.p_mw
        if self.min_p_mw is None:
            self.min_p_mw = ZERO


@dataclass
class SgenRecord:
    id: int
    bus: int
    p_mw: Decimal
    q_mvar: Decimal
    type: str = "pv"
    controllable: bool = False
    max_p_mw: Optional[Decimal] = None
    min_p_mw: Optional[Decimal] = None

    def __post_init__(self):
        if self.max_p_mw is None:
            self.max_p_mw = ZERO
        if self.min_p_mw is None:
            self.min_p_mw = self.p_mw


@dataclass
class StorageRecord:
    id: int
    bus: int
    p_mw: Decimal
    q_mvar: Decimal
    max_p_mw: Decimal
    min_p_mw: Decimal
    soc_percent: Decimal = Decimal(50)
    controllable: bool = False


@dataclass
class ExtGridRecord:
    id: int
    bus: int
    vm_pu: Decimal = Decimal(1)
    va_deg: Decimal = ZERO


TABLES = {
    "bus": BusRecord,
    "line": LineRecord,
    "trafo": TrafoRecord,
    "load": LoadRecord,
    "sgen": SgenRecord,
    "storage": StorageRecord,
    "ext_grid": ExtGridRecord,
}

# table -> (errol class, {bus-reference field: object property})
GRAPH_MAPPING = {
    "bus": ("Bus", {}),
    "line": ("Line", {"from_bus": "fromBus", "to_bus": "toBus"}),
    "trafo": ("Transformer", {"hv_bus": "hvBus", "lv_bus": "lvBus"}),
    "load": ("Load", {"bus": "connectedTo"}),
    "sgen": ("StaticGenerator", {"bus": "connectedTo"}),
    "storage": ("Storage", {"bus": "connectedTo"}),
    "ext_grid": ("ExternalGrid", {"bus": "connectedTo"}),
}


@dataclass
class GridTables:
    bus: list[BusRecord] = field(default_factory=list)
    line: list[LineRecord] = field(default_factory=list)
    trafo: list[TrafoRecord] = field(default_factory=list)
    load: list[LoadRecord] = field(default_factory=list)
    sgen: list[SgenRecord] = field(default_factory=list)
    storage: list[StorageRecord] = field(default_factory=list)
    ext_grid: list[ExtGridRecord] = field(default_factory=list)

    def tables(self):
        for name in TABLES:
            yield name, getattr(self, name)

    def sorted(self) -> "GridTables":
        return GridTables(**{name: sorted(rows, key=lambda r: r.id) for name, rows in self.tables()})

    def check(self):
        """Raise on duplicate ids, dangling bus references or a missing slack."""
        for name, rows in self.tables():
            ids = [r.id for r in rows]
            if len(set(ids)) != len(ids):
                raise GridError(f"duplicate ids in {name} table")
        buses = {b.id for b in self.bus}
        for name, rows in self.tables():
            for ref in GRAPH_MAPPING[name][1]:
                for r in rows:
                    if getattr(r, ref) not in buses:
                        raise RefError(getattr(r, ref), f"{name} {r.id}")
        if not self.ext_grid:
            raise GridError("grid has no ext_grid (slack) element")

    def bus_by_id(self) -> dict[int, BusRecord]:
        return {b.id: b for b in self.bus}

    # -- JSON ---------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "GridTables":
        convention = data.get("sgen_sign_convention", "load")
        if convention not in ("load", "generator"):
            raise GridError(f"unknown sgen_sign_convention {convention!r}")
        unknown = set(data) - set(TABLES) - {"sgen_sign_convention"}
        if unknown:
            raise GridError(f"unknown tables: {', '.join(sorted(unknown))}")
        out = cls()
        for name, record_cls in TABLES.items():
            rows = []
            for raw in data.get(name, []):
                if name == "sgen" and convention == "generator":
                    raw = _to_load_frame(raw)
                rows.append(_record(record_cls, raw, name))
            setattr(out, name, rows)
        return out

    def to_dict(self) -> dict:
        return {name: [{f.name: getattr(r, f.name) for f in fields(r)} for r in rows]
                for name, rows in self.tables()}


def _to_load_frame(raw: dict) -> dict:
    raw = dict(raw)
    for key in ("p_mw", "q_mvar"):
        if key in raw:
            raw[key] = -Decimal(str(raw[key]))
    lo, hi = raw.get("min_p_mw"), raw.get("max_p_mw")
    raw["max_p_mw"] = None if lo is None else -Decimal(str(lo))
    raw["min_p_mw"] = None if hi is None else -Decimal(str(hi))
    if raw["max_p_mw"] is None:
        del raw["max_p_mw"]
    if raw["min_p_mw"] is None:
        del raw["min_p_mw"]
    return raw


def _record(record_cls, raw: dict, table: str):
    known = {f.name: f for f in fields(record_cls)}
    extra = set(raw) - set(known)
    if extra:
        raise GridError(f"{table}: unknown column(s) {', '.join(sorted(extra))}")
    kwargs = {}
    for name, value in raw.items():
        kind = known[name].type
        try:
            kwargs[name] = _coerce(kind, value)
        except (TypeError, ValueError, ArithmeticError) as exc:
            raise GridError(f"{table} row {raw.get('id')}: bad value for {name}: {value!r}") from exc
    try:
        return record_cls(**kwargs)
    except TypeError as exc:
        raise GridError(f"{table} row {raw.get('id')}: {exc}") from None


def _coerce(kind: str, value):
    if value is None:
        if kind.startswith("Optional"):
            return None
        raise TypeError("missing value")
    if "Decimal" in kind:
        if isinstance(value, bool):
            raise TypeError("boolean is not a number")
        return Decimal(str(value))
    if kind == "int":
        if isinstance(value, bool) or int(value) != value:
            raise TypeError("not an integer")
        return int(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise TypeError("not a boolean")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise TypeError("not a string")
        return value
    raise TypeError(f"unsupported column type {kind}")


def _json_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Decimal):
        return format(value, "f")
    if isinstance(value, (int, str)):
        return json.dumps(value)
    if value is None:
        return "null"
    raise TypeError(f"cannot encode {value!r}")


def dumps_grid(tables: GridTables) -> str:
    """Deterministic JSON with decimals written exactly."""
    parts = []
    for name, rows in tables.sorted().to_dict().items():
        body = ",\n".join(
            "    {" + ", ".join(f"{json.dumps(k)}: {_json_scalar(v)}" for k, v in row.items()) + "}"
            for row in rows
        )
        parts.append(f'  "{name}": [\n{body}\n  ]' if rows else f'  "{name}": []')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def loads_grid(text: str) -> GridTables:
    data = json.loads(text, parse_float=Decimal)
    if not isinstance(data, dict):
        raise GridError("grid document must be a JSON object")
    return GridTables.from_dict(data)


def load_grid(path) -> GridTables:
    with open(path, encoding="utf-8") as fh:
        return loads_grid(fh.read())


def dump_grid(tables: GridTables, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_grid(tables))


# -- graph mapping --------------------------------------------------------------

def element_iri(table: str, element_id: int) -> Iri:
    return errol(f"{table}_{element_id}")


def import_grid(tables: GridTables) -> Graph:
    tables.check()
    g = Graph()
    for name, rows in tables.tables():
        cls_name, refs = GRAPH_MAPPING[name]
        cls = errol(cls_name)
        for r in rows:
            node = element_iri(name, r.id)
            g.add(Triple(node, RDF_TYPE, cls))
            for f in fields(r):
                value = getattr(r, f.name)
                if f.name in refs:
                    g.add(Triple(node, errol(refs[f.name]), element_iri("bus", value)))
                else:
                    g.add(Triple(node, errol(f.name), literal(value)))
    return g


def export_grid(graph: Graph) -> GridTables:
    """Rebuild grid tables from the power-system part of ``graph``."""
    problems: list[str] = []
    bus_ids: dict[Iri, int] = {}
    for node in graph.subjects(RDF_TYPE, errol("Bus")):
        value = graph.objects(node, errol("id"))
        if len(value) == 1 and isinstance(value[0], Literal) and isinstance(value[0].value, int):
            bus_ids[node] = value[0].value
    out = GridTables()
    for name, record_cls in TABLES.items():
        cls_name, refs = GRAPH_MAPPING[name]
        rows = []
        for node in graph.subjects(RDF_TYPE, errol(cls_name)):
            kwargs = {}
            for f in fields(record_cls):
                pred = errol(refs.get(f.name, f.name))
                values = graph.objects(node, pred)
                where = f"{node.value if isinstance(node, Iri) else node} {pred.value}"
                if len(values) != 1:
                    problems.append(f"{where}: expected exactly one value, found {len(values)}")
                    continue
                value = values[0]
                if f.name in refs:
                    if value not in bus_ids:
                        problems.append(f"{where}: {value} is not a bus with an id")
                    else:
                        kwargs[f.name] = bus_ids[value]
                    continue
                try:
                    kwargs[f.name] = _from_literal(f.type, value)
                except (TypeError, ValueError) as exc:
                    problems.append(f"{where}: {exc}")
            if len(kwargs) == len(fields(record_cls)):
                rows.append(record_cls(**kwargs))
        setattr(out, name, sorted(rows, key=lambda r: r.id))
    if problems:
        raise ValidationError(problems)
    return out


def _from_literal(kind: str, term):
    if not isinstance(term, Literal):
        raise TypeError(f"expected a literal, found {term}")
    value = term.value
    if "Decimal" in kind:
        if not term.is_numeric:
            raise TypeError(f"expected a number, found {term}")
        return Decimal(term.lexical)
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError(f"expected an integer, found {term}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise TypeError(f"expected a boolean, found {term}")
        return value
    if not isinstance(value, str) or term.is_numeric:
        raise TypeError(f"expected a string, found {term}")
    return value
