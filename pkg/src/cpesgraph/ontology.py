"""Control-infrastructure vocabulary: asset groups, hosts, functional actors,
function blocks, information object flows and control values.

The only link from the function/information layers to a physical element is
``errol:referencesUnit`` on a control value.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .rdf import RDF_TYPE, RDFS_LABEL, Graph, Iri, Literal, Triple, errol

# classes
HOUSEHOLD = errol("HouseHold")
ASSET_GROUP = errol("AssetGroup")
HOST = errol("Host")
FUNCTIONAL_ACTOR = errol("FunctionalActor")
FUNCTION_BLOCK = errol("FunctionBlock")
FLOW = errol("InformationObjectFlow")
INFORMATION_OBJECT = errol("InformationObject")
CONTROL_VALUE = errol("ControlValue")
BUS = errol("Bus")
LOAD = errol("Load")
SGEN = errol("StaticGenerator")
STORAGE = errol("Storage")
UNIT_CLASSES = (LOAD, SGEN, STORAGE)

# properties
PCC = errol("pcc")
OWNS = errol("owns")
CONNECTED_TO = errol("connectedTo")
MANUFACTURER = errol("manufacturer")
FIRMWARE = errol("firmware")
REALIZED_ON = errol("realizedOn")
SERVES = errol("serves")
HAS_FUNCTION_BLOCK = errol("hasFunctionBlock")
CAPABILITY = errol("capability")
FROM = errol("from")
TO = errol("to")
TRANSMITS = errol("transmits")
REFERENCES_UNIT = errol("referencesUnit")
PROPERTY = errol("property")
P_MW = errol("p_mw")
MIN_P_MW = errol("min_p_mw")
MAX_P_MW = errol("max_p_mw")
CONTROLLABLE = errol("controllable")
TYPE = errol("type")

REMOTE_CONTROL = "remote controllability"


def household_iri(bus: Iri) -> Iri:
    local = bus.value.rsplit("#", 1)[-1].rsplit("/", 1)[-1]
    return errol(f"household_{local}")


def derive_households(graph: Graph) -> Graph:
    """Create one household per bus that feeds at least one household load.

    The household owns every load, static generator and storage on that bus.
    Re-running on the result adds nothing.
    """
    out = graph.copy()
    pcc_buses = set()
    for load in graph.subjects(RDF_TYPE, LOAD):
        kind = graph.value(load, TYPE)
        if isinstance(kind, Literal) and kind.lexical == "household":
            pcc_buses.update(graph.objects(load, CONNECTED_TO))
    for bus in sorted(pcc_buses, key=lambda b: b.key):
        hh = household_iri(bus)
        out.add(Triple(hh, RDF_TYPE, HOUSEHOLD))
        out.add(Triple(hh, PCC, bus))
        for unit in graph.subjects(CONNECTED_TO, bus):
            if any(Triple(unit, RDF_TYPE, cls) in graph for cls in UNIT_CLASSES):
                out.add(Triple(hh, OWNS, unit))
    return out


@dataclass(frozen=True)
class UnitBounds:
    unit: Iri
    min_p_mw: Decimal
    max_p_mw: Decimal


def _number(graph: Graph, node, pred) -> Decimal | None:
    v = graph.value(node, pred)
    if isinstance(v, Literal) and v.is_numeric:
        return Decimal(v.lexical)
    return None


def is_controllable(graph: Graph, unit) -> bool:
    v = graph.value(unit, CONTROLLABLE)
    return isinstance(v, Literal) and v.value is True


def controllable_units(graph: Graph, household: Iri) -> list[UnitBounds]:
    out = []
    for unit in graph.objects(household, OWNS):
        if not is_controllable(graph, unit):
            continue
        lo, hi = _number(graph, unit, MIN_P_MW), _number(graph, unit, MAX_P_MW)
        if lo is None or hi is None:
            continue
        out.append(UnitBounds(unit, lo, hi))
    return out


# -- constructors ----------------------------------------------------------------

def add_host(g: Graph, iri: Iri, manufacturer: str | None = None, firmware: str | None = None) -> Iri:
    g.add(Triple(iri, RDF_TYPE, HOST))
    if manufacturer is not None:
        g.add(Triple(iri, MANUFACTURER, Literal(manufacturer)))
    if firmware is not None:
        g.add(Triple(iri, FIRMWARE, Literal(firmware)))
    return iri


def add_actor(g: Graph, iri: Iri, label: str, host: Iri | None = None) -> Iri:
    g.add(Triple(iri, RDF_TYPE, FUNCTIONAL_ACTOR))
    g.add(Triple(iri, RDFS_LABEL, Literal(label)))
    if host is not None:
        g.add(Triple(iri, REALIZED_ON, host))
    return iri


def add_block(g: Graph, iri: Iri, actor: Iri, capability: str = REMOTE_CONTROL) -> Iri:
    g.add(Triple(iri, RDF_TYPE, FUNCTION_BLOCK))
    g.add(Triple(iri, CAPABILITY, Literal(capability)))
    g.add(Triple(actor, HAS_FUNCTION_BLOCK, iri))
    return iri


def add_flow(g: Graph, iri: Iri, source: Iri, target: Iri) -> Iri:
    if source == target:
        raise ValueError("an information object flow needs distinct endpoints")
    g.add(Triple(iri, RDF_TYPE, FLOW))
    g.add(Triple(iri, FROM, source))
    g.add(Triple(iri, TO, target))
    return iri


def add_control_value(g: Graph, iri: Iri, unit: Iri, flow: Iri) -> Iri:
    g.add(Triple(iri, RDF_TYPE, CONTROL_VALUE))
    g.add(Triple(iri, REFERENCES_UNIT, unit))
    g.add(Triple(iri, PROPERTY, P_MW))
    g.add(Triple(flow, TRANSMITS, iri))
    return iri
