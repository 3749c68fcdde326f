from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpesgraph.attack import (
    AttackScenario, ControlTarget, Objective, apply_attack, enumerate_controllables, targets_to_json,
)
from cpesgraph.augment import apply_all
from cpesgraph.errors import AttackError, DanglingRefError
from cpesgraph.fixtures import backend, hems_graph, household_graph, household_grid
from cpesgraph.ontology import FROM, HOUSEHOLD, OWNS, P_MW, add_actor, add_block, add_control_value, add_flow
from cpesgraph.rdf import RDF_TYPE, errol
from oracles import reachable_units


def p_mw(graph, unit) -> Decimal:
    return Decimal(graph.value(unit, P_MW).lexical)


def test_single_household_hems():
    g = hems_graph((1,))
    (hh,) = g.subjects(RDF_TYPE, HOUSEHOLD)
    targets = enumerate_controllables(g, backend(1))
    assert {t.unit for t in targets} == {u for u in g.objects(hh, OWNS) if g.value(u, errol("controllable")).value}
    assert [t.unit.value for t in targets] == sorted(t.unit.value for t in targets)


def test_two_backends_split():
    g = hems_graph((2, 1))
    households = sorted(g.subjects(RDF_TYPE, HOUSEHOLD), key=lambda h: h.value)
    a = {t.unit for t in enumerate_controllables(g, backend(1))}
    b = {t.unit for t in enumerate_controllables(g, backend(2))}
    owned = [set(g.objects(h, OWNS)) for h in households]
    assert a <= owned[0] | owned[1] and a & owned[0] and a & owned[1]
    assert b <= owned[2] and not a & b
    assert a == reachable_units(g, backend(1)) and b == reachable_units(g, backend(2))


def test_multi_hop():
    g = hems_graph((2, 1, 1), relay=True)
    for m in (1, 2, 3):
        units = {t.unit for t in enumerate_controllables(g, backend(m))}
        assert units and units == reachable_units(g, backend(m))


def test_actor_without_blocks():
    g = hems_graph((1,))
    add_actor(g, errol("idle"), "idle actor")
    assert enumerate_controllables(g, errol("idle")) == []


def test_not_an_actor():
    with pytest.raises(AttackError):
        enumerate_controllables(hems_graph((1,)), errol("household_bus_3"))


def test_dangling_unit():
    g = hems_graph((1,))
    flow = g.subjects(FROM, errol("backend_m1_block"))[0]
    add_control_value(g, errol("cv_ghost"), errol("ghost"), flow)
    with pytest.raises(DanglingRefError):
        enumerate_controllables(g, backend(1))


def test_bounds_must_bracket_value():
    with pytest.raises(AttackError):
        ControlTarget(errol("cv"), errol("u"), Decimal(0), Decimal(1), Decimal(2))


@pytest.mark.parametrize("objective, unit_kind, expected", [
    (Objective.MAXIMIZE_LOAD, "heat_pump", Decimal("0.01")),
    (Objective.MAXIMIZE_LOAD, "pv", Decimal(0)),
    (Objective.MINIMIZE_LOAD, "storage", Decimal("-0.005")),
    (Objective.MINIMIZE_LOAD, "pv", Decimal("-0.006")),
])
def test_setpoints(objective, unit_kind, expected):
    g = hems_graph((5,))
    attacked, targets = apply_attack(g, AttackScenario(backend(1), objective, "x"))
    matched = [t for t in targets if _kind(g, t.unit) == unit_kind]
    assert matched
    for t in matched:
        assert p_mw(attacked, t.unit) == expected


def _kind(g, unit):
    if (unit, RDF_TYPE, errol("Storage")) in g:
        return "storage"
    return g.value(unit, errol("type")).lexical


def test_scope_idempotence_and_dominance():
    g = hems_graph((3, 2))
    for m in (1, 2):
        hi, targets = apply_attack(g, AttackScenario(backend(m), Objective.MAXIMIZE_LOAD))
        lo, _ = apply_attack(g, AttackScenario(backend(m), Objective.MINIMIZE_LOAD))
        units = {t.unit for t in targets}
        changed = set(hi) ^ set(g)
        assert all(t.predicate == P_MW and t.subject in units for t in changed)
        again, _ = apply_attack(hi, AttackScenario(backend(m), Objective.MAXIMIZE_LOAD))
        assert again == hi
        for u in units:
            assert p_mw(hi, u) >= p_mw(g, u) >= p_mw(lo, u)


def test_manufacturer_filter(case_rules):
    g = household_graph(household_grid(30, seed=4))
    cpes, _ = apply_all(g, case_rules, 2)
    all_targets = enumerate_controllables(cpes, backend(1))
    assert enumerate_controllables(cpes, backend(1), manufacturer="Manufacturer 1") == all_targets
    assert enumerate_controllables(cpes, backend(1), manufacturer="Manufacturer 2") == []
    assert enumerate_controllables(cpes, backend(1), firmware="9.9.9") == []


def test_objective_parsing_and_json():
    assert Objective.parse("max") is Objective.MAXIMIZE_LOAD
    assert Objective.parse("MinimizeLoad") is Objective.MINIMIZE_LOAD
    with pytest.raises(ValueError):
        Objective.parse("sideways")
    g = hems_graph((1,))
    scenario = AttackScenario(backend(1), Objective.MAXIMIZE_LOAD, "Max. 1")
    text = targets_to_json(enumerate_controllables(g, backend(1)), scenario)
    assert '"scenario": "Max. 1"' in text


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_random_control_graphs_match_closure(data):
    """Random block/flow topologies (at most a few dozen nodes) against the fixpoint oracle."""
    g = household_graph(household_grid(6, seed=data.draw(st.integers(0, 50))))
    units = [u for u in g.subjects(RDF_TYPE, errol("Load")) if g.value(u, errol("controllable")).value]
    n_blocks = data.draw(st.integers(2, 10))
    blocks = [errol(f"blk{i}") for i in range(n_blocks)]
    for i, blk in enumerate(blocks):
        add_block(g, blk, add_actor(g, errol(f"act{i}"), f"actor {i}"))
    edges = data.draw(st.lists(st.tuples(st.integers(0, n_blocks - 1), st.integers(0, n_blocks - 1)), max_size=20))
    for k, (a, b) in enumerate(edges):
        if a == b:
            continue
        flow = add_flow(g, errol(f"flow{k}"), blocks[a], blocks[b])
        for j in data.draw(st.lists(st.integers(0, len(units) - 1), max_size=2)):
            add_control_value(g, errol(f"cv{k}_{j}"), units[j], flow)
    for i in range(n_blocks):
        got = {t.unit for t in enumerate_controllables(g, errol(f"act{i}"))}
        assert got == reachable_units(g, errol(f"act{i}"))
