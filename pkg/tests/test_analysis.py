"""Partitions, alternating paths, smoothness and the cost-ratio bounds."""

import math

import numpy as np
import pytest

import riskroute as rr
from riskroute.analysis import smoothness_mu_at_flow
from riskroute.instances import RecursiveFamilySpec, Variant, build_recursive
from riskroute.solver import SolverConfig

CFG = SolverConfig(tolerance=1e-10)


def _oracle_flows(level, variant=Variant.STRUCTURAL, gk=1.0):
    inst, oracle = build_recursive(
        RecursiveFamilySpec(level=level, gamma_kappa=gk, variant=variant))
    x = rr.induced_edge_flow(inst, oracle.rawe)
    z = rr.induced_edge_flow(inst, oracle.rnwe)
    return inst, oracle, x, z


def test_partition_on_level1():
    inst, _, x, z = _oracle_flows(1)
    part = rr.partition_edges(inst, x, z)
    assert part.set_a == frozenset({1, 2})  # the two risky edges
    assert part.set_b == frozenset({0, 3, 4})


def test_partition_ignores_unused_edges():
    inst, _, x, z = _oracle_flows(1)
    # knock one edge out of both flows
    x2, z2 = x.copy(), z.copy()
    x2[1] = z2[1] = 0.0
    part = rr.partition_edges(inst, x2, z2)
    assert 1 not in part.set_a and 1 not in part.set_b


def test_alternating_path_on_level1():
    inst, _, x, z = _oracle_flows(1)
    alt = rr.find_alternating_path(inst, rr.partition_edges(inst, x, z))
    assert alt.segments == (("forward", (2,)), ("backward", (4,)),
                            ("forward", (1,)))
    assert alt.forward_subpath_count == 2
    assert alt.vertices == (0, 3, 2, 1)


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_alternating_path_counts_scale_with_level(level):
    inst, _, x, z = _oracle_flows(level)
    tags = rr.recursive_edge_tags(level)
    part = rr.partition_edges(inst, x, z)
    assert part.set_a == frozenset(
        eid for eid, t in enumerate(tags) if t == "risky")
    alt = rr.find_alternating_path(inst, part)
    assert alt.forward_subpath_count == 2 ** level
    assert len(alt.vertices) == 2 ** (level + 1)
    assert len(set(alt.vertices)) == len(alt.vertices)  # visits each vertex once


def test_alternating_path_needs_tie_edges_across_equal_cuts():
    # single mandatory first edge, then a risky/safe parallel pair: both
    # equilibria push everything through edge 0, so the strict search is
    # blocked at the source and the tie rescue must kick in
    inst = rr.NetworkInstance(
        3,
        (rr.Edge(0, 1, rr.Constant(0.5), rr.Constant(0.0)),
         rr.Edge(1, 2, rr.Affine(1.0, 0.1), rr.Constant(1.0)),
         rr.Edge(1, 2, rr.Affine(1.0, 0.1), rr.Constant(0.0))),
        0, 2, 1.0, 1.0, rr.RiskModel.MEAN_VAR)
    rawe = rr.solve_rawe_meanvar(inst, CFG)
    rnwe = rr.solve_rnwe(inst, CFG)
    part = rr.partition_edges(inst, rawe.flow, rnwe.flow)
    assert part.set_a == frozenset({1})
    with pytest.raises(rr.AlternatingPathNotFound):
        rr.find_alternating_path(inst, part)
    alt = rr.find_alternating_path(inst, part, tie_forward={0})
    assert alt.forward_subpath_count == 1
    assert alt.segments == (("forward", (0, 1)),)
    report = rr.check_bound(inst, rawe, rnwe, rr.BoundKind.TOPOLOGICAL_ETA)
    assert report.satisfied
    assert report.eta == 1


def test_compute_kappa_meanvar_and_meanstdev():
    inst, _, x, _ = _oracle_flows(1, gk=2.0)
    # variances are scaled so kappa is one regardless of gamma*kappa
    assert rr.compute_kappa(inst, x) == pytest.approx(1.0, abs=1e-12)
    ms = rr.NetworkInstance(
        2, (rr.Edge(0, 1, rr.Constant(2.0), rr.Constant(4.0)),),
        0, 1, 1.0, 1.0, rr.RiskModel.MEAN_STDEV)
    # stdev/mean = 2/2
    assert rr.compute_kappa(ms, np.array([1.0])) == pytest.approx(1.0)
    # variance/mean = 4/2 under the mean-var reading
    mv = rr.with_risk_model(ms, rr.RiskModel.MEAN_VAR)
    assert rr.compute_kappa(mv, np.array([1.0])) == pytest.approx(2.0)


def test_compute_kappa_zero_mean_positive_variance_is_infinite():
    inst = rr.NetworkInstance(
        2, (rr.Edge(0, 1, rr.Constant(0.0), rr.Constant(1.0)),),
        0, 1, 1.0, 1.0, rr.RiskModel.MEAN_VAR)
    assert rr.compute_kappa(inst, np.array([1.0])) == math.inf


def test_smoothness_closed_forms():
    assert rr.estimate_smoothness_mu(rr.Constant(3.0), 2.0) == 0.0
    # affine through the origin peaks at y = x/2 with value 1/4
    assert rr.estimate_smoothness_mu(rr.Affine(1.0, 0.0), 5.0) == pytest.approx(0.25)
    # positive intercept shrinks it to ax / (4(ax+b))
    assert rr.estimate_smoothness_mu(rr.Affine(1.0, 1.0), 2.0) == pytest.approx(
        2.0 / 12.0, abs=1e-12)


def test_smoothness_polynomial_matches_analytic_value():
    # for l(y) = y^2 the supremum sits at y = x/sqrt(3): mu = 2/(3*sqrt(3))
    got = rr.estimate_smoothness_mu(rr.Polynomial((0.0, 0.0, 1.0)), 1.7)
    assert got == pytest.approx(2.0 / (3.0 * math.sqrt(3.0)), abs=1e-8)


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_smoothness_of_functional_family_is_exact(level):
    inst, _, x, _ = _oracle_flows(level, variant=Variant.FUNCTIONAL)
    assert smoothness_mu_at_flow(inst, x) == pytest.approx(
        1.0 - 2.0 ** -level, abs=1e-12)


def test_smoothness_rejects_degenerate_arguments():
    with pytest.raises(ValueError):
        rr.estimate_smoothness_mu(rr.Affine(1.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        rr.estimate_smoothness_mu(rr.Constant(0.0), 1.0)


def test_compute_pra_rejects_zero_reference_cost():
    inst = rr.NetworkInstance(
        2, (rr.Edge(0, 1, rr.Constant(0.0), rr.Constant(0.0)),),
        0, 1, 1.0, 0.0, rr.RiskModel.MEAN_VAR)
    res = rr.solve_rnwe(inst, CFG)
    with pytest.raises(ValueError):
        rr.compute_pra(inst, res, res)


@pytest.mark.parametrize("level,gk", [(1, 1.0), (2, 0.5), (3, 2.0)])
def test_eta_bound_is_tight_on_structural_family(level, gk):
    inst, oracle = build_recursive(
        RecursiveFamilySpec(level=level, gamma_kappa=gk))
    rawe = rr.result_from_paths(inst, oracle.rawe, inst.gamma)
    rnwe = rr.result_from_paths(inst, oracle.rnwe, 0.0)
    report = rr.check_bound(inst, rawe, rnwe, rr.BoundKind.TOPOLOGICAL_ETA)
    assert report.satisfied
    assert report.eta == 2 ** level
    assert report.bound_value == pytest.approx(1.0 + 2 ** level * gk, rel=1e-12)
    assert report.slack == pytest.approx(0.0, abs=1e-9)


def test_vertex_bound_matches_eta_bound_on_family():
    # 2^(level+1) vertices: ceil((n-1)/2) = 2^level, same bound value
    inst, oracle = build_recursive(RecursiveFamilySpec(level=2))
    rawe = rr.result_from_paths(inst, oracle.rawe, inst.gamma)
    rnwe = rr.result_from_paths(inst, oracle.rnwe, 0.0)
    report = rr.check_bound(inst, rawe, rnwe,
                            rr.BoundKind.TOPOLOGICAL_VERTICES)
    assert report.satisfied
    assert report.bound_value == pytest.approx(5.0)
    assert report.slack == pytest.approx(0.0, abs=1e-9)


def test_functional_smooth_bound_value():
    inst, oracle = build_recursive(
        RecursiveFamilySpec(level=2, variant=Variant.FUNCTIONAL))
    rawe = rr.result_from_paths(inst, oracle.rawe, inst.gamma)
    rnwe = rr.result_from_paths(inst, oracle.rnwe, 0.0)
    report = rr.check_bound(inst, rawe, rnwe, rr.BoundKind.FUNCTIONAL_SMOOTH)
    assert report.satisfied
    assert report.mu == pytest.approx(0.75, abs=1e-12)
    assert report.bound_value == pytest.approx(8.0, rel=1e-9)


def test_near_unit_smoothness_inflates_the_bound():
    # flat-then-cliff latency: the best deviation waits at the end of the
    # flat stretch, mu = 0.9 exactly, and the smoothness bound balloons
    cliff = rr.PiecewiseLinear(((0.0, 0.0), (0.9, 0.0), (1.0, 10.0)))
    inst = rr.NetworkInstance(
        2,
        (rr.Edge(0, 1, cliff, rr.Constant(1.0)),
         rr.Edge(0, 1, rr.Constant(11.0), rr.Constant(0.0))),
        0, 1, 1.0, 0.1, rr.RiskModel.MEAN_VAR)
    rawe = rr.solve_rawe_meanvar(inst, CFG)
    rnwe = rr.solve_rnwe(inst, CFG)
    report = rr.check_bound(inst, rawe, rnwe, rr.BoundKind.FUNCTIONAL_SMOOTH)
    assert report.mu == pytest.approx(0.9, abs=1e-12)
    assert report.kappa == pytest.approx(0.1, abs=1e-12)  # variance 1, mean 10
    assert report.bound_value == pytest.approx(10.1, rel=1e-9)
    assert report.satisfied


def test_stdev_bounds_tight_on_reinterpreted_level1():
    inst, _ = build_recursive(RecursiveFamilySpec(level=1))
    ms = rr.reinterpret_as_meanstdev(inst)
    rawe = rr.solve_rawe_meanstdev(ms, CFG)
    rnwe = rr.solve_rnwe(ms, CFG)
    one_alt = rr.check_bound(ms, rawe, rnwe, rr.BoundKind.STDEV_ONE_ALT)
    assert one_alt.satisfied
    assert one_alt.bound_value == pytest.approx(3.0)
    assert one_alt.slack == pytest.approx(0.0, abs=1e-8)
    # the zero-alternation bound does not apply here and says so
    zero_alt = rr.check_bound(ms, rawe, rnwe, rr.BoundKind.STDEV_ZERO_ALT)
    assert not zero_alt.satisfied
    assert "inapplicable" in zero_alt.note


def test_coinciding_flows_give_eta_zero():
    inst = rr.NetworkInstance(
        2, (rr.Edge(0, 1, rr.Affine(1.0, 0.1), rr.Constant(1.0)),),
        0, 1, 1.0, 1.0, rr.RiskModel.MEAN_VAR)
    rawe = rr.solve_rawe_meanvar(inst, CFG)
    rnwe = rr.solve_rnwe(inst, CFG)
    report = rr.check_bound(inst, rawe, rnwe, rr.BoundKind.TOPOLOGICAL_ETA)
    assert report.eta == 0
    assert report.satisfied
    assert "coincide" in report.note


def test_verify_structural_properties_accepts_canonical():
    inst, oracle = build_recursive(RecursiveFamilySpec(level=3, gamma_kappa=2.0))
    report = rr.verify_structural_properties(3, inst, oracle)
    assert report.passed, report.failures


def test_verify_structural_properties_rejects_corruption():
    inst, oracle = build_recursive(RecursiveFamilySpec(level=2))
    broken = rr.with_edge_functions(
        inst, {1: (rr.Constant(2.0), rr.Constant(1.0))})
    report = rr.verify_structural_properties(2, broken, oracle)
    assert not report.passed
    assert report.failures


def test_vertex_bound_gap_values():
    assert rr.vertex_bound_gap_ratio(6, 1.0) == pytest.approx(0.8)
    assert rr.vertex_bound_gap_ratio(9, 1.0) == pytest.approx(5.0 / 9.0)
    with pytest.raises(ValueError):
        rr.vertex_bound_gap_ratio(2, 1.0)


def test_vertex_bound_gap_stays_below_two():
    assert rr.vertex_bound_gap_below_two(10_000, (0.1, 1.0, 10.0))
