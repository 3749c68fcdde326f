"""Acceptance suite: one test per criterion, each reported as PASS/FAIL in the
terminal summary (see ``conftest.py``)."""

import json
import math
import time
from collections import Counter
from contextlib import contextmanager
from decimal import Decimal as D

import pytest
from hypothesis import HealthCheck, given, settings

from cpesgraph import assets
from cpesgraph.attack import enumerate_controllables
from cpesgraph.augment import apply_all
from cpesgraph.errors import NonConvergence
from cpesgraph.fixtures import backend, demo_grid, hems_graph, household_graph, household_grid
from cpesgraph.grid import (
    BusRecord, ExtGridRecord, GridTables, LineRecord, LoadRecord, dump_grid, dumps_grid, export_grid, import_grid,
    loads_grid,
)
from cpesgraph.impact import check_limits
from cpesgraph.ontology import FUNCTIONAL_ACTOR
from cpesgraph.pipeline import EXIT_OK, PipelineConfig, run_pipeline
from cpesgraph.powerflow import solve
from cpesgraph.rdf import RDF_TYPE, isomorphic
from cpesgraph.shacl import Constraint, parse_shapes, validate
from cpesgraph.turtle import parse_turtle, serialize_turtle
from oracles import analytic_vm, balance_error, check_against_oracle, reachable_units
from strategies import grid_tables, queries, small_graphs, turtle_graphs

# template counts (hems_m1, hems_m2, hems_m3) for the 1000-household fixture
# (layout seed 0) augmented with master seed 42; recorded once, never recomputed
GOLDEN_SEED = 42
GOLDEN_COUNTS = (495, 291, 214)
WEIGHTS = (0.5, 0.3, 0.2)

ACCEPT = settings(deadline=None, derandomize=True, database=None,
                  suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])


@contextmanager
def within(seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f} s, limit {seconds} s"


@pytest.fixture(scope="module")
def thousand():
    return household_graph(household_grid(1000, seed=0))


def demo_config(tmp_path, grid=None) -> PipelineConfig:
    config = PipelineConfig.load(assets.path("demo/pipeline.json"))
    if grid is not None:
        tmp_path.mkdir(parents=True, exist_ok=True)
        config.grid_file = tmp_path / "grid.json"
        dump_grid(grid, config.grid_file)
    return config


def two_bus(p, q, r="0.01", x="0.1") -> GridTables:
    # 1 kV buses on a 1 MVA base: ohms equal per-unit
    return GridTables(bus=[BusRecord(0, "slack", D(1)), BusRecord(1, "load", D(1))],
                      line=[LineRecord(0, 0, 1, D(r), D(x), D(1), D(1))],
                      load=[LoadRecord(0, 1, D(p), D(q))], ext_grid=[ExtGridRecord(0, 0)])


@pytest.mark.criterion(1, "static generator shape conformance (exact violation counts, < 1 s)")
def test_criterion_1_sgen_shape(sgen_shape_text):
    with within(1.0):
        shape_graph = parse_turtle(sgen_shape_text)
        shapes = parse_shapes(shape_graph)

        def kinds(body):
            data = parse_turtle("errol:sg a errol:StaticGenerator ; " + body + " .")
            return [v.constraint for v in validate(data, shapes, shape_graph).violations]

        assert kinds("errol:p_mw 0.5 ; errol:q_mvar 0.1") == [Constraint.MAX_INCLUSIVE]
        assert kinds("errol:p_mw -0.5 ; errol:q_mvar 0.1") == []
        assert kinds("errol:p_mw -0.5") == [Constraint.MIN_COUNT]


@pytest.mark.criterion(2, "query evaluation equals exhaustive enumeration on 100 random cases (< 10 s)")
def test_criterion_2_query_oracle():
    seen = []

    @settings(ACCEPT, max_examples=100)
    @given(small_graphs(max_size=50), queries())
    def case(graph, query):
        seen.append(1)
        check_against_oracle(graph, query)

    with within(10.0):
        case()
    assert len(seen) >= 100


@pytest.mark.criterion(3, "grid JSON and Turtle round-trips on 50 + 100 random inputs (< 10 s)")
def test_criterion_3_round_trips():
    counts = Counter()

    @settings(ACCEPT, max_examples=50)
    @given(grid_tables())
    def grid_case(tables):
        counts["grid"] += 1
        text = dumps_grid(tables)
        graph = import_grid(loads_grid(text))
        assert dumps_grid(export_grid(parse_turtle(serialize_turtle(graph)))) == text

    @settings(ACCEPT, max_examples=100)
    @given(turtle_graphs())
    def turtle_case(graph):
        counts["turtle"] += 1
        assert isomorphic(parse_turtle(serialize_turtle(graph)), graph)

    with within(10.0):
        grid_case()
        turtle_case()
    assert counts["grid"] >= 50 and counts["turtle"] >= 100


@pytest.mark.criterion(4, "augmentation golden counts and 4-sigma template shares over 20 seeds (< 30 s)")
def test_criterion_4_augmentation(thousand, case_rules):
    hems_rule = case_rules[:1]
    assert [t.name for t in hems_rule[0].templates] == ["hems_m1", "hems_m2", "hems_m3"]

    def counts(seed):
        _, (log,) = apply_all(thousand, hems_rule, seed, shapes=None)
        c = Counter(e.template for e in log.entries)
        return tuple(c[i] for i in range(3))

    with within(30.0):
        assert counts(GOLDEN_SEED) == GOLDEN_COUNTS
        for seed in range(20):
            got = counts(seed)
            n = sum(got)
            assert n == 1000
            for k, p in zip(got, WEIGHTS):
                assert abs(k - n * p) <= 4 * math.sqrt(n * p * (1 - p)), (seed, got)


@pytest.mark.criterion(5, "pipeline artifacts byte-identical across two runs (< 60 s)")
def test_criterion_5_determinism(tmp_path):
    with within(60.0):
        config = demo_config(tmp_path)
        runs = [run_pipeline(config, tmp_path / name, jobs=jobs) for name, jobs in (("a", 4), ("b", 2))]
    assert [r.exit_code for r in runs] == [EXIT_OK, EXIT_OK]
    a, b = tmp_path / "a", tmp_path / "b"
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for name in ("model.ttl", "cpes.ttl", "log.json", "report.csv", "report.json"):
        assert a.joinpath(name) in [a / f for f in files]
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


@pytest.mark.criterion(6, "attack reach equals brute force; manufacturer 1 reaches most units in >= 18/20 seeds")
def test_criterion_6_attack_reach(thousand, case_rules):
    for relay in (False, True):
        g = hems_graph((2, 1, 1), relay=relay)
        actors = g.subjects(RDF_TYPE, FUNCTIONAL_ACTOR)
        assert len(actors) > 3
        for actor in actors:
            assert {t.unit for t in enumerate_controllables(g, actor)} == reachable_units(g, actor)

    wins = 0
    for seed in range(20):
        cpes, _ = apply_all(thousand, case_rules, seed, shapes=None)
        reach = [len(enumerate_controllables(cpes, backend(m))) for m in (1, 2, 3)]
        wins += reach[0] > max(reach[1:])
    assert wins >= 18, f"manufacturer 1 largest in {wins}/20 seeds"


@pytest.mark.criterion(7, "power flow: analytic two-bus, balance <= 1e-7, <= 6 iterations, overload (< 5 s)")
def test_criterion_7_power_flow():
    with within(5.0):
        for p, q in (("0.5", "0.2"), ("1.2", "0.4"), ("0.1", "-0.05")):
            result = solve(two_bus(p, q))
            assert result.bus(1).vm_pu == pytest.approx(analytic_vm(float(p), float(q), 0.01, 0.1), abs=1e-6)

        fixtures = [two_bus("0.5", "0.2"), demo_grid(), demo_grid(pv=False), household_grid(200, seed=3)]
        for tables in fixtures:
            result = solve(tables)
            # the base is 1 MVA, so MW and per-unit coincide
            assert balance_error(result, tables) <= 1e-7

        assert solve(demo_grid()).iterations <= 6
        with pytest.raises(NonConvergence):
            solve(two_bus("30", "10"))


def _scenario_deltas(tmp_path, grid=None):
    outcome = run_pipeline(demo_config(tmp_path, grid), tmp_path / "out", jobs=3)
    assert outcome.exit_code == EXIT_OK
    return outcome, {s.spec.label: s.report for s in outcome.scenarios}


@pytest.mark.criterion(8, "sign of deltas per objective (1e-9 MW); PV switched off drives the Max deltas")
def test_criterion_8_sign(tmp_path):
    _, with_pv = _scenario_deltas(tmp_path / "pv")
    assert len(with_pv) == 6
    for label, report in with_pv.items():
        assert len(report.deltas) == len(demo_grid().trafo)
        for d in report.deltas:
            if label.startswith("Max"):
                assert d.delta_p_mw >= -1e-9, (label, d)
            else:
                assert d.delta_p_mw <= 1e-9, (label, d)

    _, without_pv = _scenario_deltas(tmp_path / "nopv", demo_grid(pv=False))
    for label in ("Max. 1", "Max. 2", "Max. 3"):
        a, b = with_pv[label], without_pv[label]
        for da, db in zip(a.deltas, b.deltas):
            assert da.trafo_id == db.trafo_id
            assert da.delta_p_mw >= db.delta_p_mw - 1e-9, (label, da, db)
        assert sum(d.delta_p_mw for d in a.deltas) > sum(d.delta_p_mw for d in b.deltas), label


@pytest.mark.criterion(9, "no limit violations in any of the six demo scenarios")
def test_criterion_9_healthy_grid(tmp_path):
    outcome, reports = _scenario_deltas(tmp_path)
    assert sorted(reports) == ["Max. 1", "Max. 2", "Max. 3", "Min. 1", "Min. 2", "Min. 3"]
    for s in outcome.scenarios:
        assert s.status == "ok"
        assert check_limits(s.result) == []
        assert s.report.violations == []
    report = json.loads((outcome.output_dir / "report.json").read_text())
    assert all(not sc["violations"] for sc in report["scenarios"])
