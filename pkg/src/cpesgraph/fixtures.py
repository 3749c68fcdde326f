"""Synthetic grids and control graphs used by the demo, tests and benchmarks.

``demo_grid`` is a small MV/LV feeder: a 20 kV slack bus, two MV buses each
feeding a 20/0.4 kV substation, and ten households per substation on two LV
feeders. It is sized so that every attack scenario of the bundled pipeline
stays inside default voltage and loading limits.
"""

from __future__ import annotations

import random
from decimal import Decimal as D

from .grid import (
    BusRecord, ExtGridRecord, GridTables, LineRecord, LoadRecord, SgenRecord, StorageRecord, TrafoRecord,
    element_iri, import_grid,
)
from .ontology import (
    HOUSEHOLD, add_actor, add_block, add_control_value, add_flow, add_host, controllable_units, derive_households,
)
from .rdf import RDF_TYPE, Graph, Iri, errol

MV_KV = D(20)
LV_KV = D("0.4")

# cable types (r, x in ohm/km, thermal limit in kA)
MV_CABLE = (D("0.161"), D("0.117"), D("0.362"))
LV_CABLE = (D("0.125"), D("0.08"), D("0.364"))

HEAT_PUMP = dict(p_mw=D("0.004"), q_mvar=D("0.001"), max_p_mw=D("0.01"), min_p_mw=D(0))
EV = dict(p_mw=D(0), q_mvar=D(0), max_p_mw=D("0.011"), min_p_mw=D(0))
PV = dict(p_mw=D("-0.006"), q_mvar=D(0), max_p_mw=D(0), min_p_mw=D("-0.006"))
BATTERY = dict(p_mw=D(0), q_mvar=D(0), max_p_mw=D("0.005"), min_p_mw=D("-0.005"))


class _Builder:
    def __init__(self):
        self.t = GridTables()

    def bus(self, name, vn):
        i = len(self.t.bus)
        self.t.bus.append(BusRecord(i, name, vn))
        return i

    def line(self, a, b, length_km, cable):
        r, x, imax = cable
        self.t.line.append(LineRecord(len(self.t.line), a, b, r, x, D(length_km), imax))

    def trafo(self, hv, lv, sn="0.63", vk="6", vkr="1.03"):
        self.t.trafo.append(TrafoRecord(len(self.t.trafo), hv, lv, D(sn), MV_KV, LV_KV, D(vk), D(vkr)))

    def load(self, bus, p, q, kind, controllable=False, **bounds):
        self.t.load.append(LoadRecord(len(self.t.load), bus, D(p), D(q), kind, controllable, **bounds))

    def sgen(self, bus, spec, controllable=True):
        self.t.sgen.append(SgenRecord(len(self.t.sgen), bus, spec["p_mw"], spec["q_mvar"], "pv", controllable,
                                      spec["max_p_mw"], spec["min_p_mw"]))

    def storage(self, bus, spec, controllable=True):
        self.t.storage.append(StorageRecord(len(self.t.storage), bus, spec["p_mw"], spec["q_mvar"],
                                            spec["max_p_mw"], spec["min_p_mw"], D(50), controllable))

    def household(self, bus, hp, ev, pv, battery):
        self.load(bus, "0.003", "0.001", "household")
        if hp:
            self.load(bus, HEAT_PUMP["p_mw"], HEAT_PUMP["q_mvar"], "heat_pump", True,
                      max_p_mw=HEAT_PUMP["max_p_mw"], min_p_mw=HEAT_PUMP["min_p_mw"])
        if ev:
            self.load(bus, EV["p_mw"], EV["q_mvar"], "ev", True, max_p_mw=EV["max_p_mw"], min_p_mw=EV["min_p_mw"])
        if pv:
            self.sgen(bus, PV)
        if battery:
            self.storage(bus, BATTERY)


def _feeder(b: _Builder, lv_bus: int, households: list[tuple], prefix: str, segment_km="0.05"):
    prev = lv_bus
    for k, devices in enumerate(households):
        bus = b.bus(f"{prefix} house {k}", LV_KV)
        b.line(prev, bus, segment_km, LV_CABLE)
        b.household(bus, *devices)
        prev = bus


def demo_devices(k: int) -> tuple[bool, bool, bool, bool]:
    """Device mix of household ``k``: (heat pump, EV, PV, battery).

    Every household gets at least one controllable load, so removing PV does
    not change which households are eligible for a HEMS.
    """
    return (k % 2 == 0 or k % 3 == 0, k % 3 != 0, k % 4 != 3, k % 5 == 0)


def demo_grid(pv: bool = True) -> GridTables:
    b = _Builder()
    slack = b.bus("HV/MV substation", MV_KV)
    b.t.ext_grid.append(ExtGridRecord(0, slack))
    k = 0
    for s in range(2):
        mv = b.bus(f"MV node {s}", MV_KV)
        b.line(slack, mv, ("2", "3")[s], MV_CABLE)
        lv = b.bus(f"substation {s} LV", LV_KV)
        b.trafo(mv, lv)
        for f in range(2):
            houses = []
            for _ in range(5):
                hp, ev, has_pv, bat = demo_devices(k)
                houses.append((hp, ev, has_pv and pv, bat))
                k += 1
            _feeder(b, lv, houses, f"S{s}F{f}")
    b.load(1, "0.2", "0.05", "commercial")
    return b.t


def household_grid(n: int = 1000, seed: int = 0, per_substation: int = 50) -> GridTables:
    """``n`` households, each with at least one controllable unit.

    Households hang directly off the LV bus of their substation; the grid is
    meant for graph-level experiments rather than power flow realism.
    """
    rng = random.Random(seed)
    b = _Builder()
    slack = b.bus("slack", MV_KV)
    b.t.ext_grid.append(ExtGridRecord(0, slack))
    lv = None
    for k in range(n):
        if k % per_substation == 0:
            mv = b.bus(f"MV node {k // per_substation}", MV_KV)
            b.line(slack, mv, "1", MV_CABLE)
            lv = b.bus(f"substation {k // per_substation} LV", LV_KV)
            b.trafo(mv, lv)
        bus = b.bus(f"house {k}", LV_KV)
        b.line(lv, bus, "0.03", LV_CABLE)
        hp = rng.random() < 0.6
        ev = rng.random() < 0.4 or not hp
        b.household(bus, hp, ev, rng.random() < 0.5, rng.random() < 0.2)
    return b.t


def household_graph(tables: GridTables) -> Graph:
    return derive_households(import_grid(tables))


def backend(i: int) -> Iri:
    return errol(f"backend_m{i}")


def attach_hems(graph: Graph, assignment: dict[Iri, int], relay: bool = False) -> Graph:
    """Hand-built control layer: household -> manufacturer index.

    Each manufacturer gets a backend actor; each household a HEMS actor whose
    block receives one flow from the backend carrying a control value for
    every controllable unit. With ``relay`` the flow passes through an
    intermediate aggregator block, giving two hops.
    """
    g = graph.copy()
    for m in sorted(set(assignment.values())):
        host = add_host(g, errol(f"backend_m{m}_host"), f"Manufacturer {m}", "cloud")
        actor = add_actor(g, backend(m), f"HEMS backend manufacturer {m}", host)
        add_block(g, errol(f"backend_m{m}_block"), actor)
        if relay:
            agg = add_actor(g, errol(f"aggregator_m{m}"), f"aggregator {m}")
            add_block(g, errol(f"aggregator_m{m}_block"), agg)
            add_flow(g, errol(f"backend_m{m}_to_aggregator"), errol(f"backend_m{m}_block"),
                     errol(f"aggregator_m{m}_block"))
    for hh in sorted(assignment, key=lambda h: h.value):
        m = assignment[hh]
        local = hh.value.rsplit("#", 1)[-1]
        host = add_host(g, errol(f"{local}_hems_host"), f"Manufacturer {m}", "1.0")
        actor = add_actor(g, errol(f"{local}_hems"), f"HEMS manufacturer {m}", host)
        block = add_block(g, errol(f"{local}_hems_block"), actor)
        source = errol(f"aggregator_m{m}_block") if relay else errol(f"backend_m{m}_block")
        flow = add_flow(g, errol(f"{local}_flow"), source, block)
        for u in controllable_units(g, hh):
            local_u = u.unit.value.rsplit("#", 1)[-1]
            add_control_value(g, errol(f"cv_{local_u}"), u.unit, flow)
    return g


def hems_graph(households_per_backend=(2, 1, 1), relay: bool = False) -> Graph:
    """Small graph with one backend per manufacturer, HEMS per household."""
    n = sum(households_per_backend)
    g = household_graph(household_grid(n, seed=7))
    households = sorted(g.subjects(RDF_TYPE, HOUSEHOLD), key=lambda h: h.value)
    assignment = {}
    it = iter(households)
    for m, count in enumerate(households_per_backend, start=1):
        for _ in range(count):
            assignment[next(it)] = m
    return attach_hems(g, assignment, relay)


def unit_iri(table: str, element_id: int) -> Iri:
    return element_iri(table, element_id)
