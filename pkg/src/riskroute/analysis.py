"""Certified bounds on the price of risk aversion.

The price of risk aversion (PRA) of an instance is the ratio of the social
cost (means only) of a risk-averse equilibrium to that of the risk-neutral
one.  This module computes the observed ratio together with the quantities
the upper bounds are built from:

    kappa   worst variance-to-mean ratio (mean-var) or worst coefficient of
            variation (mean-stdev) over the edges, evaluated at the
            risk-averse flow,
    eta     number of forward subpaths of a cheapest alternating path
            between the two equilibria,
    mu      worst smoothness parameter of the mean latencies at the
            risk-averse flows.

and checks the observed ratio against five bound families:

    TopologicalEta        1 + eta * gamma * kappa
    TopologicalVertices   1 + gamma * kappa * ceil((n - 1) / 2)
    FunctionalSmooth      (1 + gamma * kappa) / (1 - mu), vacuous if mu >= 1
    StdevZeroAlt          1 + gamma * kappa   (alternating path has a single
                          forward run, e.g. series-parallel networks)
    StdevOneAlt           1 + 2 * gamma * kappa  (at most two forward runs)

An alternating path walks from source to sink using edges that gained flow
under risk aversion forward and edges that lost flow backward; its forward
subpath count never exceeds ceil((n - 1) / 2), and on n-vertex networks
that are not a power of two the slack between the vertex bound and the
realizable 1 + gamma*kappa*2^floor(log2 n) stays below a factor two.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .functions import Affine, Constant, LatencyFn, PiecewiseLinear
from .network import (
    NetworkInstance,
    RiskModel,
    induced_edge_flow,
    mean_path_latency,
    path_cost,
    social_cost,
)
from .solver import EquilibriumResult

_ZERO_EPS = 1e-15


class BoundKind(enum.Enum):
    TOPOLOGICAL_ETA = "TopologicalEta"
    TOPOLOGICAL_VERTICES = "TopologicalVertices"
    FUNCTIONAL_SMOOTH = "FunctionalSmooth"
    STDEV_ZERO_ALT = "StdevZeroAlt"
    STDEV_ONE_ALT = "StdevOneAlt"


@dataclass(frozen=True)
class EdgePartition:
    """Edges split by how the two equilibria load them.

    set_a: edges carrying strictly more risk-neutral flow (x_e < z_e);
    set_b: the remaining edges used by either flow (z_e <= x_e, with ties
    and near-ties classified into B).  Edges unused by both are in neither.
    """

    set_a: frozenset[int]
    set_b: frozenset[int]


@dataclass(frozen=True)
class AlternatingPath:
    """Generalized source->sink path over the partitioned edges.

    Segments alternate direction; "forward" segments traverse A edges in
    their own direction, "backward" segments traverse B edges against it.
    """

    segments: tuple[tuple[str, tuple[int, ...]], ...]
    forward_subpath_count: int
    vertices: tuple[int, ...]


class AlternatingPathNotFound(RuntimeError):
    """No alternating path exists.  Equilibrium flow pairs always admit one
    when tied edges may be walked forward; without that, a source-sink cut
    whose edges all carry identical flow in both equilibria blocks the walk.
    """


@dataclass(frozen=True)
class BoundReport:
    pra_observed: float
    kappa: float
    bound_value: float
    bound_kind: BoundKind
    satisfied: bool
    slack: float
    eta: int | None = None
    mu: float | None = None
    note: str = ""


def compute_pra(instance: NetworkInstance, rawe: EquilibriumResult,
                rnwe: EquilibriumResult) -> float:
    """Observed price of risk aversion: social cost ratio rawe / rnwe."""
    denom = social_cost(instance, rnwe.flow)
    if denom <= 0.0:
        raise ValueError(f"risk-neutral social cost is {denom}; the ratio is undefined")
    return social_cost(instance, rawe.flow) / denom


def compute_kappa(instance: NetworkInstance, flow) -> float:
    """Worst variability-to-mean ratio over the edges at `flow`.

    Mean-var instances use variance/mean, mean-stdev instances use
    stdev/mean.  Every edge is evaluated at its flow value (unused edges at
    zero); edges with zero mean and zero variability are skipped, and a
    zero mean with positive variability yields +inf.
    """
    worst = 0.0
    for eid, e in enumerate(instance.edges):
        f = float(flow[eid])
        mean = e.latency(f)
        var = e.variability(f)
        if instance.risk_model is RiskModel.MEAN_STDEV:
            var = math.sqrt(var)
        if var <= _ZERO_EPS:
            continue
        if mean <= _ZERO_EPS:
            return math.inf
        worst = max(worst, var / mean)
    return worst


def partition_edges(instance: NetworkInstance, rawe_flow, rnwe_flow,
                    tie_tol: float | None = None) -> EdgePartition:
    """Split the edges used by either equilibrium into the A/B classes.

    A collects edges where the risk-averse flow is below the risk-neutral
    flow by more than the tie tolerance (default 1e-7 * demand); everything
    else used by either flow goes to B.
    """
    if tie_tol is None:
        tie_tol = 1e-7 * max(instance.demand, 1.0)
    set_a = set()
    set_b = set()
    for eid in range(len(instance.edges)):
        x = float(rawe_flow[eid])
        z = float(rnwe_flow[eid])
        if max(x, z) <= tie_tol:
            continue
        if x < z - tie_tol:
            set_a.add(eid)
        else:
            set_b.add(eid)
    return EdgePartition(frozenset(set_a), frozenset(set_b))


def find_alternating_path(instance: NetworkInstance, partition: EdgePartition,
                          tie_forward=frozenset()) -> AlternatingPath:
    """Cheapest alternating path: fewest forward subpaths, deterministic
    tie-break.  Searches the mixed graph where A edges keep their direction
    and B edges are reversed.

    `tie_forward` names B edges whose flows coincide in the two equilibria;
    those may additionally be walked forward (counting toward the forward
    runs).  Passing the ties restores the guarantee that a path exists for
    any two flows routing the same positive demand.
    """
    adj: list[list[tuple[str, int, int]]] = [[] for _ in range(instance.vertices)]
    for eid in sorted(partition.set_a | (frozenset(tie_forward) & partition.set_b)):
        e = instance.edges[eid]
        adj[e.tail].append(("forward", eid, e.head))
    for eid in sorted(partition.set_b):
        e = instance.edges[eid]
        adj[e.head].append(("backward", eid, e.tail))

    start = (0, (), instance.source, "")
    heap = [start]
    seen: set[tuple[int, str]] = set()
    moves_by_state: dict[tuple[int, str], tuple] = {}
    while heap:
        nseg, moves, v, last = heapq.heappop(heap)
        if (v, last) in seen:
            continue
        seen.add((v, last))
        moves_by_state[(v, last)] = moves
        if v == instance.sink:
            return _assemble_alternating(instance, moves, nseg)
        for direction, eid, nxt in adj[v]:
            if (nxt, direction) in seen:
                continue
            cost = nseg + (1 if direction == "forward" and last != "forward" else 0)
            heapq.heappush(heap, (cost, moves + ((direction, eid),), nxt, direction))
    raise AlternatingPathNotFound(
        "no alternating path from source to sink; equilibrium flow pairs always "
        "admit one, so check the flows and the partition tolerance")


def _assemble_alternating(instance: NetworkInstance, moves, nseg: int) -> AlternatingPath:
    segments: list[tuple[str, list[int]]] = []
    vertices = [instance.source]
    at = instance.source
    for direction, eid in moves:
        e = instance.edges[eid]
        at = e.head if direction == "forward" else e.tail
        vertices.append(at)
        if segments and segments[-1][0] == direction:
            segments[-1][1].append(eid)
        else:
            segments.append((direction, [eid]))
    forward = sum(1 for d, _ in segments if d == "forward")
    assert forward == nseg, "segment count disagrees with search cost"
    return AlternatingPath(tuple((d, tuple(eids)) for d, eids in segments),
                           forward, tuple(vertices))


def estimate_smoothness_mu(fn: LatencyFn, x: float) -> float:
    """Best smoothness parameter of `fn` at flow x.

    Returns the supremum over y >= 0 of y*(fn(x) - fn(y)) / (x*fn(x)), the
    smallest mu for which y*fn(x) <= y*fn(y) + mu*x*fn(x) for all y.  The
    supremum is attained on [0, x] because fn is non-decreasing.  Constant,
    affine and piecewise-linear functions are solved in closed form by
    candidate enumeration; polynomials by golden-section search (their
    objective is concave on [0, x]).
    """
    if not x > 0.0:
        raise ValueError(f"smoothness is evaluated at a positive flow, got x={x}")
    fx = fn(x)
    if fx <= 0.0:
        raise ValueError(f"smoothness needs fn(x) > 0, got fn({x}) = {fx}")

    def ratio(y: float) -> float:
        return y * (fx - fn(y)) / (x * fx)

    if isinstance(fn, Constant):
        return 0.0
    if isinstance(fn, Affine):
        best_y = min(max(x / 2.0, 0.0), x)
        return max(ratio(best_y), 0.0)
    if isinstance(fn, PiecewiseLinear):
        candidates = {0.0, x}
        xs = [p[0] for p in fn.points]
        for bx in xs:
            if 0.0 < bx < x:
                candidates.add(bx)
        # stationary point inside each linear segment: for fn(y)=c+m(y-s) the
        # objective y*(fx-fn(y)) peaks at y = (fx - c + m*s) / (2m)
        bounds = [0.0] + xs + [x]
        for left, right in zip(bounds, bounds[1:]):
            left = max(left, 0.0)
            right = min(right, x)
            if right <= left:
                continue
            mid = 0.5 * (left + right)
            m = (fn(right) - fn(left)) / (right - left)
            if m <= 0.0:
                continue
            c = fn(mid) - m * mid
            y_star = (fx - c) / (2.0 * m)
            if left < y_star < right:
                candidates.add(y_star)
        return max(0.0, max(ratio(y) for y in candidates))
    # golden-section search; y*(fx - fn(y)) is concave on [0, x] for
    # polynomials with nonnegative coefficients
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, x
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = ratio(c), ratio(d)
    while hi - lo > 1e-10:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = ratio(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = ratio(d)
    return max(0.0, ratio(0.5 * (lo + hi)))


def smoothness_mu_at_flow(instance: NetworkInstance, flow) -> float:
    """Worst per-edge smoothness parameter at `flow` over the used edges.

    Edges with zero flow or zero latency are skipped: they satisfy the
    smoothness inequality for every mu >= 0.
    """
    worst = 0.0
    for eid, e in enumerate(instance.edges):
        f = float(flow[eid])
        if f <= _ZERO_EPS or e.latency(f) <= _ZERO_EPS:
            continue
        worst = max(worst, estimate_smoothness_mu(e.latency, f))
    return worst


def check_bound(instance: NetworkInstance, rawe: EquilibriumResult,
                rnwe: EquilibriumResult, kind: BoundKind,
                tolerance: float = 1e-9,
                tie_tol: float | None = None) -> BoundReport:
    """Evaluate one bound family against the observed cost ratio."""
    pra = compute_pra(instance, rawe, rnwe)
    kappa = compute_kappa(instance, rawe.flow)
    gamma = instance.gamma
    eta: int | None = None
    mu: float | None = None
    notes: list[str] = []

    if kind in (BoundKind.TOPOLOGICAL_ETA, BoundKind.STDEV_ZERO_ALT,
                BoundKind.STDEV_ONE_ALT):
        eta = _eta_with_fallback(instance, rawe, rnwe, tie_tol, notes)

    if kind is BoundKind.TOPOLOGICAL_ETA:
        bound = 1.0 + eta * gamma * kappa
    elif kind is BoundKind.TOPOLOGICAL_VERTICES:
        bound = 1.0 + gamma * kappa * math.ceil((instance.vertices - 1) / 2)
    elif kind is BoundKind.FUNCTIONAL_SMOOTH:
        mu = smoothness_mu_at_flow(instance, rawe.flow)
        if mu >= 1.0:
            bound = math.inf
            notes.append(f"vacuous: mu={mu!r} >= 1")
        else:
            bound = (1.0 + gamma * kappa) / (1.0 - mu)
    elif kind is BoundKind.STDEV_ZERO_ALT:
        bound = 1.0 + gamma * kappa
        if eta > 1:
            notes.append(f"inapplicable: alternating path has {eta} forward subpaths")
    elif kind is BoundKind.STDEV_ONE_ALT:
        bound = 1.0 + 2.0 * gamma * kappa
        if eta > 2:
            notes.append(f"inapplicable: alternating path has {eta} forward subpaths")
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown bound kind {kind}")

    slack = bound - pra
    return BoundReport(pra, kappa, bound, kind, pra <= bound + tolerance, slack,
                       eta=eta, mu=mu, note="; ".join(notes))


def _eta_with_fallback(instance: NetworkInstance, rawe: EquilibriumResult,
                       rnwe: EquilibriumResult, tie_tol: float | None,
                       notes: list[str]) -> int:
    """Forward subpath count of the alternating path, with two numeric
    escapes: coinciding flows have no A edges and count as eta = 0, and a
    partition wrecked by solver noise is retried at a coarser tolerance.
    """

    def attempt(tol: float | None) -> int:
        partition = partition_edges(instance, rawe.flow, rnwe.flow, tol)
        if not partition.set_a:
            notes.append("flows coincide: no edge lost flow under risk aversion")
            return 0
        if tol is None:
            tol = 1e-7 * max(instance.demand, 1.0)
        ties = frozenset(
            eid for eid in partition.set_b
            if abs(float(rawe.flow[eid]) - float(rnwe.flow[eid])) <= tol)
        return find_alternating_path(instance, partition,
                                     ties).forward_subpath_count

    try:
        return attempt(tie_tol)
    except AlternatingPathNotFound:
        notes.append("partition retried at coarse tie tolerance")
        return attempt(1e-4 * max(instance.demand, 1.0))


@dataclass(frozen=True)
class FamilyPropertyReport:
    passed: bool
    failures: tuple[str, ...]


def verify_structural_properties(level: int, instance: NetworkInstance,
                                 oracle, tol: float = 1e-9) -> FamilyPropertyReport:
    """Check the defining cost structure of a recursive worst-case instance.

    At the oracle risk-averse flow every used path must have mean-var cost
    and mean latency equal to (1 + 2^level * gamma*kappa); at the oracle
    risk-neutral flow every used path must have mean latency equal to the
    risk-neutral unit cost; and the social costs must match the closed
    forms.  gamma*kappa is recovered from the oracle costs themselves.
    """
    failures: list[str] = []
    rawe_flow = induced_edge_flow(instance, oracle.rawe)
    rnwe_flow = induced_edge_flow(instance, oracle.rnwe)
    r_a = oracle.rawe.total()
    r_n = oracle.rnwe.total()
    if r_a <= 0.0 or r_n <= 0.0:
        return FamilyPropertyReport(False, ("oracle routes zero demand",))
    rawe_unit = oracle.rawe_cost / r_a
    rnwe_unit = oracle.rnwe_cost / r_n

    for path, amount in oracle.rawe:
        if amount <= 0.0:
            continue
        mean = mean_path_latency(instance, path, rawe_flow)
        cost = path_cost(instance, path, rawe_flow)
        if abs(mean - rawe_unit) > tol:
            failures.append(
                f"risk-averse path {path}: mean latency {mean!r} != {rawe_unit!r}")
        if abs(cost - rawe_unit) > tol:
            failures.append(
                f"risk-averse path {path}: perceived cost {cost!r} != {rawe_unit!r}")
    for path, amount in oracle.rnwe:
        if amount <= 0.0:
            continue
        mean = mean_path_latency(instance, path, rnwe_flow)
        if abs(mean - rnwe_unit) > tol:
            failures.append(
                f"risk-neutral path {path}: mean latency {mean!r} != {rnwe_unit!r}")

    c_rawe = social_cost(instance, rawe_flow)
    c_rnwe = social_cost(instance, rnwe_flow)
    if abs(c_rawe - oracle.rawe_cost) > tol * max(1.0, abs(oracle.rawe_cost)):
        failures.append(f"risk-averse social cost {c_rawe!r} != {oracle.rawe_cost!r}")
    if abs(c_rnwe - oracle.rnwe_cost) > tol * max(1.0, abs(oracle.rnwe_cost)):
        failures.append(f"risk-neutral social cost {c_rnwe!r} != {oracle.rnwe_cost!r}")

    gk = (rawe_unit - 1.0) / 2.0 ** level
    if gk < -tol:
        failures.append(f"implied gamma*kappa {gk!r} is negative")

    return FamilyPropertyReport(not failures, tuple(failures))


def vertex_bound_gap_ratio(n: int, gamma_kappa: float) -> float:
    """Ratio of the vertex-count bound to the realizable power-of-two bound.

    For n not a power of two the numerator 1 + gk*ceil((n-1)/2) cannot be
    matched by any known construction; the best realizable value uses the
    largest power of two below n.  The ratio stays below two.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    realizable = 1.0 + gamma_kappa * 2.0 ** (n.bit_length() - 1)
    return (1.0 + gamma_kappa * math.ceil((n - 1) / 2)) / realizable


def vertex_bound_gap_below_two(n_max: int, gamma_kappas) -> bool:
    """True iff the gap ratio is < 2 for all non-power-of-two 3 <= n <= n_max."""
    n = np.arange(3, n_max + 1)
    powers = np.array([1 << (int(v).bit_length() - 1) for v in n], dtype=float)
    mask = powers != n
    n = n[mask].astype(float)
    powers = powers[mask]
    for gk in gamma_kappas:
        ratio = (1.0 + gk * np.ceil((n - 1) / 2.0)) / (1.0 + gk * powers)
        if not np.all(ratio < 2.0):
            return False
    return True
