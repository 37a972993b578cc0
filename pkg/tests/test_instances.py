"""Recursive worst-case families: structure, tags and closed-form checks."""

import dataclasses

import numpy as np
import pytest

import riskroute as rr
from riskroute.instances import (
    BRAESS_CROSS,
    DOMINO_CONTRACT_EDGE_IDS,
    DOMINO_EAR_EDGE_IDS,
    RecursiveFamilySpec,
    Variant,
    build_domino_with_ears,
    build_recursive,
    closed_form_check,
    contracted_domino_matches_braess,
    recursive_edge_tags,
)


@pytest.mark.parametrize("level", [1, 2, 3, 4, 5])
def test_recursive_sizes(level):
    inst, _ = build_recursive(RecursiveFamilySpec(level=level))
    assert inst.vertices == 2 ** (level + 1)
    assert len(inst.edges) == 2 ** (level + 2) - 3


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_recursive_edge_tags(level):
    tags = recursive_edge_tags(level)
    inst, _ = build_recursive(RecursiveFamilySpec(level=level))
    assert len(tags) == len(inst.edges)
    assert tags.count("risky") == 2 ** level
    assert tags.count("vertical") == 2 ** level - 1
    for j in range(1, level + 1):
        assert tags.count(f"a:{j}") == 2 ** (level - j + 1)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_each_path_has_at_most_one_risky_edge(level):
    inst, _ = build_recursive(RecursiveFamilySpec(level=level))
    tags = recursive_edge_tags(level)
    risky = {eid for eid, tag in enumerate(tags) if tag == "risky"}
    counts = [len(risky.intersection(p)) for p in rr.enumerate_paths(inst)]
    assert max(counts) == 1
    # exactly the 2^level parallel paths carry one risky edge each
    assert sum(counts) == 2 ** level


@pytest.mark.parametrize("level", [1, 2, 3, 4])
@pytest.mark.parametrize("gk", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("variant", [Variant.STRUCTURAL, Variant.FUNCTIONAL])
def test_closed_forms_hold(level, gk, variant):
    inst, oracle = build_recursive(
        RecursiveFamilySpec(level=level, gamma_kappa=gk, variant=variant))
    report = closed_form_check(inst, oracle, tol=1e-10)
    assert report.passed, report.failures
    assert oracle.expected_pra == pytest.approx(1.0 + 2 ** level * gk, rel=1e-12)


def test_structural_oracle_demands_and_uniformity():
    spec = RecursiveFamilySpec(level=3, r_a=1.0, r_n=1.0, gamma_kappa=1.0)
    inst, oracle = build_recursive(spec)
    assert oracle.rawe.total() == pytest.approx(1.0, abs=1e-12)
    assert oracle.rnwe.total() == pytest.approx(1.0, abs=1e-12)
    # risk-neutral flow splits uniformly over the 2^level parallel paths
    assert all(a == pytest.approx(1.0 / 8.0) for _, a in oracle.rnwe)
    assert len(oracle.rnwe) == 8
    assert len(oracle.rawe) == 7  # the 2^level - 1 zigzag paths


def test_unequal_demands_still_satisfy_closed_forms():
    spec = RecursiveFamilySpec(level=2, r_a=2.0, r_n=1.0, gamma_kappa=1.0)
    inst, oracle = build_recursive(spec)
    assert inst.demand == 2.0
    report = closed_form_check(inst, oracle, tol=1e-10)
    assert report.passed, report.failures
    assert oracle.rawe_cost == pytest.approx((1 + 4.0) * 2.0)
    assert oracle.rnwe_cost == pytest.approx(1.0)


def test_demand_precondition_is_enforced():
    # level 1 needs r_a > r_n / 2
    with pytest.raises(ValueError):
        build_recursive(RecursiveFamilySpec(level=1, r_a=0.4, r_n=1.0))
    # deeper levels tighten the requirement on the sub-instances
    with pytest.raises(ValueError):
        build_recursive(RecursiveFamilySpec(level=3, r_a=0.51, r_n=1.0))
    build_recursive(RecursiveFamilySpec(level=3, r_a=0.9, r_n=1.0))


def test_spec_validation():
    with pytest.raises(ValueError):
        build_recursive(RecursiveFamilySpec(level=0))
    with pytest.raises(ValueError):
        build_recursive(RecursiveFamilySpec(level=1, gamma_kappa=-1.0))


def test_closed_form_check_catches_corrupt_costs():
    inst, oracle = build_recursive(RecursiveFamilySpec(level=2))
    bad = dataclasses.replace(oracle, rawe_cost=oracle.rawe_cost + 1e-5)
    report = closed_form_check(inst, bad, tol=1e-10)
    assert not report.passed
    assert any("social cost" in f or "ratio" in f for f in report.failures)


def test_closed_form_check_catches_corrupt_flows():
    inst, oracle = build_recursive(RecursiveFamilySpec(level=2))
    entries = list(oracle.rawe.entries)
    (p0, a0) = entries[0]
    (p1, a1) = entries[1]
    entries[0] = (p0, a0 + 0.05)
    entries[1] = (p1, a1 - 0.05)
    bad = dataclasses.replace(oracle, rawe=rr.PathFlow(tuple(entries)))
    report = closed_form_check(inst, bad, tol=1e-10)
    assert not report.passed


def test_braess_is_level1_topology():
    braess = rr.build_braess()
    g1, _ = build_recursive(RecursiveFamilySpec(level=1))
    assert len(braess.edges) == len(g1.edges) == 5
    assert braess.edges[BRAESS_CROSS].tail == 1
    assert braess.edges[BRAESS_CROSS].head == 2


def test_domino_with_ears_layout():
    inst = build_domino_with_ears()
    assert inst.vertices == 6
    assert len(inst.edges) == 9
    ears = [inst.edges[eid] for eid in DOMINO_EAR_EDGE_IDS]
    assert [(e.tail, e.head) for e in ears] == [(0, 2), (3, 5)]
    rungs = [inst.edges[eid] for eid in DOMINO_CONTRACT_EDGE_IDS]
    assert [(e.tail, e.head) for e in rungs] == [(0, 3), (2, 5)]


def test_contracting_the_domino_yields_braess():
    assert contracted_domino_matches_braess()


def test_reinterpret_as_meanstdev():
    inst, _ = build_recursive(RecursiveFamilySpec(level=1))
    ms = rr.reinterpret_as_meanstdev(inst)
    assert ms.risk_model is rr.RiskModel.MEAN_STDEV
    assert ms.edges == inst.edges
    assert ms.gamma == inst.gamma
