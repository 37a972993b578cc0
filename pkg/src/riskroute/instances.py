"""Canonical instance families with closed-form equilibrium oracles.

The workhorse is a recursively built family of Braess-like networks that
realizes the worst case of the topological price-of-risk-aversion bound.
Level 1 is the Braess graph; level i wires two level i-1 copies into a new
Braess frame.  Writing gk for gamma*kappa, a level-i instance drives the
ratio of risk-averse to risk-neutral social cost to exactly 1 + 2^i * gk
while keeping the alternating path between the two equilibria at 2^i
forward subpaths on 2^(i+1) vertices.

Two variants share the topology and differ in the congestion-dependent
mean latencies a_j placed on the diagonal edges:

    Structural: a_j is pinned by the recursion parameters (r_a, r_n); the
        risk-averse equilibrium spreads over the zig-zag paths with
        level-dependent amounts.
    Functional: requires r_a = r_n = 1; a_j is pinned so that both
        equilibria split uniformly (risk-averse over the 2^i - 1 zig-zag
        paths, risk-neutral over the 2^i parallel paths) and every a_j is
        exactly (1 - 2^-i)-smooth at its risk-averse flow.

Edges with nonzero variance (the "risky" edges) appear only inside the
level-1 blocks, so every simple path carries at most one of them; that is
what lets the same instances serve as tight mean-stdev examples when the
stored variances are reinterpreted as standard deviations.

Edge ids follow a fixed recursion order (lower component, crossing edge,
upper component, then the two diagonal a_i edges), so instances, oracles
and tags are deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .functions import Constant, LatencyFn, PiecewiseLinear
from .network import (
    Edge,
    NetworkInstance,
    PathFlow,
    RiskModel,
    enumerate_paths,
    flow_demand,
    induced_edge_flow,
    mean_path_latency,
    path_cost,
    social_cost,
    validate_path,
)
from .solver import vi_residual


class Variant(enum.Enum):
    STRUCTURAL = "structural"
    FUNCTIONAL = "functional"


@dataclass(frozen=True)
class RecursiveFamilySpec:
    """Parameters of one recursive worst-case instance.

    level >= 1; r_a and r_n are the demands of the risk-averse and the
    risk-neutral scenario; gamma_kappa is the product gamma * kappa that
    the instance realizes (the instance stores gamma = gamma_kappa and
    scales variances so kappa = 1).
    """

    level: int
    r_a: float = 1.0
    r_n: float = 1.0
    gamma_kappa: float = 1.0
    variant: Variant = Variant.STRUCTURAL


@dataclass(frozen=True)
class OracleFlows:
    """Closed-form equilibrium path flows and social costs."""

    rawe: PathFlow
    rnwe: PathFlow
    rawe_cost: float
    rnwe_cost: float
    expected_pra: float


@dataclass(frozen=True)
class CheckReport:
    """Outcome of closed_form_check with per-failure diagnostics."""

    passed: bool
    failures: tuple[str, ...]


_ZERO = Constant(0.0)
_ONE = Constant(1.0)

# Braess edge ids, in builder order
BRAESS_UPPER_LEFT = 0
BRAESS_UPPER_RIGHT = 1
BRAESS_LOWER_LEFT = 2
BRAESS_LOWER_RIGHT = 3
BRAESS_CROSS = 4


class _Builder:
    def __init__(self) -> None:
        self.next_vertex = 0
        self.edges: list[Edge] = []
        self.tags: list[str] = []

    def vertex(self) -> int:
        v = self.next_vertex
        self.next_vertex += 1
        return v

    def edge(self, tail: int, head: int, latency: LatencyFn, variability: LatencyFn,
             tag: str) -> int:
        self.edges.append(Edge(tail, head, latency, variability))
        self.tags.append(tag)
        return len(self.edges) - 1


def _structural_a(level: int, r_a: float, r_n: float, gk: float) -> PiecewiseLinear:
    """Diagonal latency a_level pinned by the recursion parameters.

    Zero up to r_n/2 (the flow it carries at the risk-neutral equilibrium)
    and equal to 2^(level-1)*gk at the flow it carries at the risk-averse
    equilibrium, linear in between and beyond.
    """
    threshold = r_n / 2.0
    if level == 1:
        anchor = r_a
    else:
        anchor = r_a / 2.0 + r_n / 2.0 ** (level + 1)
    value = 2.0 ** (level - 1) * gk
    points = [(threshold, 0.0), (anchor, value)]
    if threshold > 0.0:
        points.insert(0, (0.0, 0.0))
    return PiecewiseLinear(tuple(points))


def _functional_a(level: int, top_level: int, gk: float) -> PiecewiseLinear:
    """Diagonal latency a_level of the uniform-split variant.

    Zero up to 2^(level-1)/2^i (its risk-neutral flow in the level-i
    instance) and 2^(level-1)*gk at 2^(level-1)/(2^i - 1) (its risk-averse
    flow), so its best smoothness parameter at the risk-averse flow is
    exactly 1 - 2^-i for every level.
    """
    threshold = 2.0 ** (level - 1) / 2.0 ** top_level
    anchor = 2.0 ** (level - 1) / (2.0 ** top_level - 1.0)
    value = 2.0 ** (level - 1) * gk
    return PiecewiseLinear(((0.0, 0.0), (threshold, 0.0), (anchor, value)))


def _check_structural_precondition(level: int, r_a: float, r_n: float) -> None:
    if not 2.0 ** level * r_a > (2.0 ** level - 1.0) * r_n:
        raise ValueError(
            f"structural level-{level} parameters need 2^i*r_a > (2^i - 1)*r_n, "
            f"got r_a={r_a}, r_n={r_n}")


def _grow(b: _Builder, level: int, s: int, t: int, r_a: float, r_n: float,
          gk: float, spec: RecursiveFamilySpec) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Emit the level subgraph between s and t.

    Returns (zigzag paths, parallel paths) as edge-id tuples.  Zig-zag
    paths are ordered [own crossing, upper copy..., lower copy...], which
    is the order the amount recursion expects.
    """
    if spec.variant is Variant.STRUCTURAL:
        _check_structural_precondition(level, r_a, r_n)
        a_fn = _structural_a(level, r_a, r_n, gk)
    else:
        a_fn = _functional_a(level, spec.level, gk)
    var_kappa = Constant(1.0)

    if level == 1:
        u = b.vertex()
        w = b.vertex()
        e_ul = b.edge(s, u, a_fn, _ZERO, "a:1")
        e_ur = b.edge(u, t, _ONE, var_kappa, "risky")
        e_ll = b.edge(s, w, _ONE, var_kappa, "risky")
        e_lr = b.edge(w, t, a_fn, _ZERO, "a:1")
        e_cr = b.edge(u, w, _ONE, _ZERO, "vertical")
        zig = [(e_ul, e_cr, e_lr)]
        par = [(e_ul, e_ur), (e_ll, e_lr)]
        return zig, par

    sub_r_a = (2.0 ** level * r_a - r_n) / 2.0 ** (level + 1)
    sub_r_n = r_n / 2.0
    u = b.vertex()
    w = b.vertex()
    zig_lo, par_lo = _grow(b, level - 1, s, w, sub_r_a, sub_r_n, gk, spec)
    e_cr = b.edge(u, w, _ONE, _ZERO, "vertical")
    zig_up, par_up = _grow(b, level - 1, u, t, sub_r_a, sub_r_n, gk, spec)
    e_in = b.edge(s, u, a_fn, _ZERO, f"a:{level}")
    e_out = b.edge(w, t, a_fn, _ZERO, f"a:{level}")
    zig = [(e_in, e_cr, e_out)]
    zig += [(e_in,) + p for p in zig_up]
    zig += [p + (e_out,) for p in zig_lo]
    par = [(e_in,) + p for p in par_up]
    par += [p + (e_out,) for p in par_lo]
    return zig, par


def _structural_zigzag_amounts(level: int, r_a: float, r_n: float) -> list[float]:
    """Risk-averse amounts per zig-zag path, in _grow order."""
    if level == 1:
        return [r_a]
    sub_r_a = (2.0 ** level * r_a - r_n) / 2.0 ** (level + 1)
    sub = _structural_zigzag_amounts(level - 1, sub_r_a, r_n / 2.0)
    return [r_n / 2.0 ** level] + sub + sub


def build_recursive(spec: RecursiveFamilySpec) -> tuple[NetworkInstance, OracleFlows]:
    """Build a recursive worst-case instance with its closed-form oracle.

    The instance stores gamma = spec.gamma_kappa with unit variance on the
    risky edges, so the realized variance-to-mean ratio at the risk-averse
    equilibrium is exactly 1 and gamma*kappa = spec.gamma_kappa.
    """
    if spec.level < 1:
        raise ValueError(f"level must be >= 1, got {spec.level}")
    if spec.gamma_kappa < 0.0:
        raise ValueError(f"gamma_kappa must be nonnegative, got {spec.gamma_kappa}")
    if spec.r_a < 0.0 or spec.r_n < 0.0:
        raise ValueError("demands must be nonnegative")
    if spec.variant is Variant.FUNCTIONAL and (spec.r_a != 1.0 or spec.r_n != 1.0):
        raise ValueError("the functional variant requires r_a = r_n = 1")
    if spec.variant is Variant.STRUCTURAL:
        _check_structural_precondition(spec.level, spec.r_a, spec.r_n)

    b = _Builder()
    s = b.vertex()
    t = b.vertex()
    zig, par = _grow(b, spec.level, s, t, spec.r_a, spec.r_n, spec.gamma_kappa, spec)
    instance = NetworkInstance(
        vertices=b.next_vertex,
        edges=tuple(b.edges),
        source=s,
        sink=t,
        demand=spec.r_a,
        gamma=spec.gamma_kappa,
        risk_model=RiskModel.MEAN_VAR,
    )

    if spec.variant is Variant.STRUCTURAL:
        amounts = _structural_zigzag_amounts(spec.level, spec.r_a, spec.r_n)
        rawe = PathFlow.of([(p, a) for p, a in zip(zig, amounts) if a > 0.0])
    else:
        share = 1.0 / (2.0 ** spec.level - 1.0)
        rawe = PathFlow.of([(p, share) for p in zig])
    rn_share = spec.r_n / 2.0 ** spec.level
    rnwe = PathFlow.of([(p, rn_share) for p in par] if rn_share > 0.0 else [])

    rawe_cost = (1.0 + 2.0 ** spec.level * spec.gamma_kappa) * spec.r_a
    rnwe_cost = spec.r_n
    pra = rawe_cost / rnwe_cost if rnwe_cost > 0.0 else math.inf
    return instance, OracleFlows(rawe, rnwe, rawe_cost, rnwe_cost, pra)


def recursive_edge_tags(level: int) -> tuple[str, ...]:
    """Role of each edge id of a level-i instance: 'a:j', 'risky' or 'vertical'.

    Both variants share the topology, so the tags do not depend on the
    variant or the demand parameters.
    """
    spec = RecursiveFamilySpec(level=level, variant=Variant.FUNCTIONAL)
    b = _Builder()
    s = b.vertex()
    t = b.vertex()
    _grow(b, level, s, t, 1.0, 1.0, 1.0, spec)
    return tuple(b.tags)


def build_braess(edge_functions=None, demand: float = 1.0, gamma: float = 1.0,
                 risk_model: RiskModel = RiskModel.MEAN_VAR) -> NetworkInstance:
    """The four-vertex Braess graph.

    Vertices: 0 source, 1 top, 2 bottom, 3 sink.  Edge order: upper-left,
    upper-right, lower-left, lower-right, crossing (top->bottom).
    `edge_functions` is an optional sequence of five (latency, variability)
    pairs in that order; by default the edges carry the level-1 structural
    functions with r_a = r_n = 1 and gamma*kappa = gamma.
    """
    if edge_functions is None:
        a_fn = _structural_a(1, 1.0, 1.0, gamma)
        edge_functions = [
            (a_fn, _ZERO),
            (_ONE, Constant(1.0)),
            (_ONE, Constant(1.0)),
            (a_fn, _ZERO),
            (_ONE, _ZERO),
        ]
    if len(edge_functions) != 5:
        raise ValueError(f"expected 5 (latency, variability) pairs, got {len(edge_functions)}")
    (ul, ur, ll, lr, cr) = edge_functions
    edges = (
        Edge(0, 1, *ul),
        Edge(1, 3, *ur),
        Edge(0, 2, *ll),
        Edge(2, 3, *lr),
        Edge(1, 2, *cr),
    )
    return NetworkInstance(4, edges, 0, 3, demand, gamma, risk_model)


# Domino-with-ears vertex layout: bottom row 0,1,2 then top row 3,4,5;
# source 0 (bottom left), sink 5 (top right).
DOMINO_EAR_EDGE_IDS = (7, 8)
DOMINO_CONTRACT_EDGE_IDS = (4, 6)  # lower-left and upper-right rung


def build_domino_with_ears(demand: float = 1.0, gamma: float = 1.0,
                           risk_model: RiskModel = RiskModel.MEAN_VAR) -> NetworkInstance:
    """Topology of the six-vertex domino graph plus its two ear arcs.

    The domino is the 2x3 grid directed from bottom-left to top-right:
    two rows of horizontal edges and three upward rungs.  The ears connect
    the two distance-2 pairs along the rows (source to bottom-right corner
    and top-left corner to sink).  All latencies default to 1 and all
    variances to 0; callers are expected to swap in their own functions
    with `with_edge_functions`.

    Edge order: bottom horizontals (0->1, 1->2), top horizontals (3->4,
    4->5), rungs left to right (0->3, 1->4, 2->5), then the two ears
    (0->2, 3->5).
    """
    edges = (
        Edge(0, 1, _ONE, _ZERO),
        Edge(1, 2, _ONE, _ZERO),
        Edge(3, 4, _ONE, _ZERO),
        Edge(4, 5, _ONE, _ZERO),
        Edge(0, 3, _ONE, _ZERO),
        Edge(1, 4, _ONE, _ZERO),
        Edge(2, 5, _ONE, _ZERO),
        Edge(0, 2, _ONE, _ZERO),
        Edge(3, 5, _ONE, _ZERO),
    )
    return NetworkInstance(6, edges, 0, 5, demand, gamma, risk_model)


def contracted_domino_matches_braess() -> bool:
    """Self-test: contracting the outer rungs of the domino-with-ears graph
    (and deleting the collapsed ear images) reproduces the Braess topology.
    """
    domino = build_domino_with_ears()
    merge = {}
    for eid in DOMINO_CONTRACT_EDGE_IDS:
        e = domino.edges[eid]
        merge[e.head] = e.tail
    def rep(v: int) -> int:
        while v in merge:
            v = merge[v]
        return v
    contracted = []
    for eid, e in enumerate(domino.edges):
        if eid in DOMINO_CONTRACT_EDGE_IDS:
            continue
        tail, head = rep(e.tail), rep(e.head)
        if eid in DOMINO_EAR_EDGE_IDS:
            # the ears collapse onto direct source->sink arcs; deleting them
            # is the remaining minor operation
            continue
        contracted.append((tail, head))
    braess = build_braess()
    # the middle rung points bottom->top, so the domino's bottom-mid vertex
    # plays the tail of the Braess crossing and top-mid its head
    relabel = {rep(domino.source): braess.source, rep(domino.sink): braess.sink,
               1: 1, 4: 2}
    got = sorted((relabel[a], relabel[b]) for a, b in contracted)
    want = sorted((e.tail, e.head) for e in braess.edges)
    return got == want


def reinterpret_as_meanstdev(instance: NetworkInstance) -> NetworkInstance:
    """Read the stored variance functions as sigma^2 under the mean-stdev model.

    With the default unit variances this turns each risky edge's variance
    kappa=1 into a standard deviation kappa=1, which is how the structural
    instances double as tight mean-stdev examples.
    """
    return NetworkInstance(instance.vertices, instance.edges, instance.source,
                           instance.sink, instance.demand, instance.gamma,
                           RiskModel.MEAN_STDEV)


def closed_form_check(instance: NetworkInstance, oracle: OracleFlows,
                      tol: float = 1e-10) -> CheckReport:
    """Verify that the oracle flows really are equilibria of `instance`.

    Checks, with per-item diagnostics: every oracle path is a simple
    source->sink path; the risk-averse flow has equilibrium residual at
    most tol (variational-inequality residual for additive models, used
    path cost spread for mean-stdev); same for the risk-neutral flow at
    gamma 0; and both social costs match the closed forms.
    """
    failures: list[str] = []

    for name, pf in (("rawe", oracle.rawe), ("rnwe", oracle.rnwe)):
        for path, amount in pf:
            try:
                validate_path(instance, path)
            except Exception as exc:  # noqa: BLE001 - collect into the report
                failures.append(f"{name} path {path}: {exc}")
            if amount < 0.0:
                failures.append(f"{name} path {path}: negative amount {amount}")

    if failures:
        return CheckReport(False, tuple(failures))

    rawe_flow = induced_edge_flow(instance, oracle.rawe)
    rnwe_flow = induced_edge_flow(instance, oracle.rnwe)

    if instance.risk_model is RiskModel.MEAN_VAR or instance.gamma == 0.0:
        res = vi_residual(instance, rawe_flow, instance.gamma)
        if res > tol:
            failures.append(f"rawe equilibrium residual {res:.3e} exceeds {tol:.1e}")
    else:
        paths = enumerate_paths(instance)
        costs = {p: path_cost(instance, p, rawe_flow) for p in paths}
        cheapest = min(costs.values())
        for path, amount in oracle.rawe:
            if amount > 0.0:
                gap = costs[tuple(path)] - cheapest
                if gap > tol:
                    failures.append(
                        f"rawe path {path} costs {gap:.3e} above the cheapest path")

    res = vi_residual(instance, rnwe_flow, 0.0)
    if res > tol:
        failures.append(f"rnwe equilibrium residual {res:.3e} exceeds {tol:.1e}")

    c_rawe = social_cost(instance, rawe_flow)
    c_rnwe = social_cost(instance, rnwe_flow)
    if abs(c_rawe - oracle.rawe_cost) > tol * max(1.0, abs(oracle.rawe_cost)):
        failures.append(
            f"rawe social cost {c_rawe!r} does not match closed form {oracle.rawe_cost!r}")
    if abs(c_rnwe - oracle.rnwe_cost) > tol * max(1.0, abs(oracle.rnwe_cost)):
        failures.append(
            f"rnwe social cost {c_rnwe!r} does not match closed form {oracle.rnwe_cost!r}")

    if oracle.rnwe_cost > 0.0 and math.isfinite(oracle.expected_pra):
        ratio = oracle.rawe_cost / oracle.rnwe_cost
        if abs(ratio - oracle.expected_pra) > tol * max(1.0, abs(ratio)):
            failures.append(
                f"expected_pra {oracle.expected_pra!r} is not rawe_cost/rnwe_cost {ratio!r}")

    return CheckReport(not failures, tuple(failures))
