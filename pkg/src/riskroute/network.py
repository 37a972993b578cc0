"""Single-commodity routing networks with stochastic edge delays.

A :class:`NetworkInstance` is a directed multigraph (parallel edges are
allowed, edges are addressed by integer id) with one source, one sink, an
aggregate demand, a risk aversion coefficient gamma and a risk model.
Edge delay distributions enter only through their first two moments: each
edge stores a mean latency function and a variance function, both flow
dependent.  Under the mean-var model the perceived cost of a path adds
gamma times the path variance to the mean; under the mean-stdev model it
adds gamma times the square root of the path variance, which is not edge
additive.  The variance function always stores sigma^2; the mean-stdev
model takes the square root at path level.

Social cost is always measured in means only, regardless of risk model.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .functions import LatencyFn


class GraphStructureError(ValueError):
    """A path, flow or graph violates the structural requirements."""


class PathCapExceeded(RuntimeError):
    """Simple-path enumeration found more paths than the configured cap."""


class RiskModel(enum.Enum):
    MEAN_VAR = "mean-var"
    MEAN_STDEV = "mean-stdev"


@dataclass(frozen=True)
class Edge:
    """Directed edge with a mean latency and a variance function."""

    tail: int
    head: int
    latency: LatencyFn
    variability: LatencyFn


@dataclass(frozen=True)
class NetworkInstance:
    """Immutable routing instance.  Safe to share across threads.

    Attributes:
        vertices: number of vertices; ids are 0 .. vertices-1.
        edges: edge tuple; the index of an edge is its id.
        source, sink: distinct vertex ids with at least one source->sink path.
        demand: nonnegative aggregate flow to route.
        gamma: nonnegative risk aversion coefficient.
        risk_model: how path costs combine means and variances.
    """

    vertices: int
    edges: tuple[Edge, ...]
    source: int
    sink: int
    demand: float
    gamma: float
    risk_model: RiskModel = RiskModel.MEAN_VAR
    _out: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))
        n = self.vertices
        if n < 2:
            raise GraphStructureError(f"need at least two vertices, got {n}")
        if not (0 <= self.source < n and 0 <= self.sink < n):
            raise GraphStructureError(
                f"source/sink must be valid vertex ids, got {self.source}, {self.sink} with n={n}")
        if self.source == self.sink:
            raise GraphStructureError("source and sink must differ")
        if not self.demand >= 0.0:
            raise GraphStructureError(f"demand must be nonnegative, got {self.demand}")
        if not self.gamma >= 0.0:
            raise GraphStructureError(f"gamma must be nonnegative, got {self.gamma}")
        out: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for eid, e in enumerate(self.edges):
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise GraphStructureError(f"edge {eid} has endpoints outside 0..{n - 1}")
            out[e.tail].append((eid, e.head))
        object.__setattr__(self, "_out", tuple(tuple(lst) for lst in out))
        # the sink must be reachable from the source
        seen = {self.source}
        queue = deque([self.source])
        while queue:
            v = queue.popleft()
            for _, head in self._out[v]:
                if head not in seen:
                    seen.add(head)
                    queue.append(head)
        if self.sink not in seen:
            raise GraphStructureError("sink is not reachable from source")

    def out_edges(self, vertex: int) -> tuple[tuple[int, int], ...]:
        """(edge id, head) pairs leaving `vertex`, in edge-id order."""
        return self._out[vertex]


@dataclass(frozen=True)
class PathFlow:
    """A demand decomposition into simple source->sink paths.

    Entries are (edge-id tuple, amount) pairs; amounts are nonnegative and
    sum to the routed demand.
    """

    entries: tuple[tuple[tuple[int, ...], float], ...]

    @staticmethod
    def of(pairs) -> "PathFlow":
        return PathFlow(tuple((tuple(int(e) for e in p), float(a)) for p, a in pairs))

    def total(self) -> float:
        return float(sum(a for _, a in self.entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def zero_flow(instance: NetworkInstance) -> np.ndarray:
    return np.zeros(len(instance.edges))


def validate_path(instance: NetworkInstance, path) -> None:
    """Check that `path` is a simple source->sink edge-id sequence."""
    if len(path) == 0:
        raise GraphStructureError("empty path")
    m = len(instance.edges)
    visited = []
    at = instance.source
    for eid in path:
        if not (0 <= eid < m):
            raise GraphStructureError(f"unknown edge id {eid}")
        e = instance.edges[eid]
        if e.tail != at:
            raise GraphStructureError(
                f"edge {eid} starts at {e.tail}, expected {at}: path is not connected")
        visited.append(at)
        at = e.head
        if at in visited:
            raise GraphStructureError(f"path revisits vertex {at}: not simple")
    if at != instance.sink:
        raise GraphStructureError(f"path ends at {at}, not at sink {instance.sink}")


def mean_path_latency(instance: NetworkInstance, path, flow) -> float:
    """Sum of mean latencies along `path` at the given edge flow."""
    total = 0.0
    for eid in path:
        e = instance.edges[eid]
        total += e.latency(float(flow[eid]))
    return total


def path_variance(instance: NetworkInstance, path, flow) -> float:
    """Sum of edge variances along `path` at the given edge flow."""
    total = 0.0
    for eid in path:
        e = instance.edges[eid]
        total += e.variability(float(flow[eid]))
    return total


def path_cost(instance: NetworkInstance, path, flow) -> float:
    """Perceived path cost under the instance's risk model.

    Mean-var: sum of means plus gamma times sum of variances.
    Mean-stdev: sum of means plus gamma times sqrt of summed variances.
    """
    m = len(instance.edges)
    for eid in path:
        if not (0 <= eid < m):
            raise GraphStructureError(f"unknown edge id {eid}")
    mean = mean_path_latency(instance, path, flow)
    if instance.gamma == 0.0:
        return mean
    var = path_variance(instance, path, flow)
    if instance.risk_model is RiskModel.MEAN_VAR:
        return mean + instance.gamma * var
    return mean + instance.gamma * math.sqrt(var)


def social_cost(instance: NetworkInstance, flow) -> float:
    """Total mean latency experienced: sum of f_e * latency_e(f_e)."""
    total = 0.0
    for eid, e in enumerate(instance.edges):
        f = float(flow[eid])
        if f != 0.0:
            total += f * e.latency(f)
    return total


def induced_edge_flow(instance: NetworkInstance, path_flow: PathFlow) -> np.ndarray:
    """Edge flow vector induced by a path flow.  Validates every path."""
    flow = zero_flow(instance)
    for path, amount in path_flow:
        validate_path(instance, path)
        if amount < 0.0:
            raise GraphStructureError(f"negative path amount {amount}")
        for eid in path:
            flow[eid] += amount
    return flow


def flow_demand(instance: NetworkInstance, flow) -> float:
    """Net outflow at the source (the demand actually routed by `flow`)."""
    out = sum(float(flow[eid]) for eid, _ in instance.out_edges(instance.source))
    into = sum(float(flow[eid]) for eid, e in enumerate(instance.edges)
               if e.head == instance.source)
    return out - into


def check_flow_feasible(instance: NetworkInstance, flow, tol: float = 1e-9) -> None:
    """Raise GraphStructureError unless `flow` conserves the demand."""
    flow = np.asarray(flow, dtype=float)
    if flow.shape != (len(instance.edges),):
        raise GraphStructureError(
            f"flow has shape {flow.shape}, expected ({len(instance.edges)},)")
    if np.any(flow < -tol):
        raise GraphStructureError("flow has negative components")
    net = np.zeros(instance.vertices)
    for eid, e in enumerate(instance.edges):
        net[e.tail] += flow[eid]
        net[e.head] -= flow[eid]
    for v in range(instance.vertices):
        if v == instance.source:
            if abs(net[v] - instance.demand) > tol:
                raise GraphStructureError(
                    f"source routes {net[v]}, expected demand {instance.demand}")
        elif v == instance.sink:
            if abs(net[v] + instance.demand) > tol:
                raise GraphStructureError(
                    f"sink absorbs {-net[v]}, expected demand {instance.demand}")
        elif abs(net[v]) > tol:
            raise GraphStructureError(f"flow not conserved at vertex {v}: {net[v]}")


def enumerate_paths(instance: NetworkInstance, cap: int = 4096) -> list[tuple[int, ...]]:
    """All simple source->sink paths, lexicographic by edge-id sequence.

    Raises PathCapExceeded as soon as more than `cap` paths exist, so the
    call stays cheap on instances with exponentially many paths.
    """
    if cap < 1:
        raise ValueError(f"cap must be at least 1, got {cap}")
    paths: list[tuple[int, ...]] = []
    on_path: set[int] = set()

    def walk(vertex: int, prefix: list[int]) -> None:
        if vertex == instance.sink:
            if len(paths) >= cap:
                raise PathCapExceeded(
                    f"more than {cap} simple paths; raise the cap to enumerate")
            paths.append(tuple(prefix))
            return
        on_path.add(vertex)
        for eid, head in instance.out_edges(vertex):
            if head not in on_path:
                prefix.append(eid)
                walk(head, prefix)
                prefix.pop()
        on_path.discard(vertex)

    walk(instance.source, [])
    return paths


def with_risk_model(instance: NetworkInstance, risk_model: RiskModel) -> NetworkInstance:
    """Copy of `instance` with the risk model replaced.

    Used to reinterpret a mean-var instance under the mean-stdev model
    (the stored variance functions are then read as sigma^2 and the square
    root is taken at path level).
    """
    return NetworkInstance(instance.vertices, instance.edges, instance.source,
                           instance.sink, instance.demand, instance.gamma, risk_model)


def with_gamma(instance: NetworkInstance, gamma: float) -> NetworkInstance:
    """Copy of `instance` with the risk aversion coefficient replaced."""
    return NetworkInstance(instance.vertices, instance.edges, instance.source,
                           instance.sink, instance.demand, gamma, instance.risk_model)


def with_edge_functions(instance: NetworkInstance, assignments) -> NetworkInstance:
    """Copy of `instance` with (latency, variability) replaced per edge id.

    `assignments` maps edge id -> (latency, variability); unlisted edges
    keep their functions.
    """
    edges = list(instance.edges)
    for eid, (lat, var) in assignments.items():
        old = edges[eid]
        edges[eid] = Edge(old.tail, old.head, lat, var)
    return NetworkInstance(instance.vertices, tuple(edges), instance.source,
                           instance.sink, instance.demand, instance.gamma,
                           instance.risk_model)
