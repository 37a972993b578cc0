"""Equilibrium solvers for risk-neutral and risk-averse routing.

Risk-neutral equilibria and mean-var risk-averse equilibria have edge
additive path costs, so both reduce to minimizing a congestion potential
(sum over edges of the integral of the perceived edge cost).  We minimize
it with conditional-gradient iterations: every iteration computes one
all-or-nothing shortest path under the current perceived costs, then moves
flow according to the configured step rule.  With ExactLineSearch the step
shifts mass from the costliest path of the maintained decomposition onto
the shortest path with an exact line search of the potential, which
converges fast enough for tight tolerances; SuccessiveAverages takes the
classic averaged step toward the all-or-nothing assignment.

Mean-stdev path costs are not edge additive, so that solver works directly
on the enumerated path set and equalizes path costs by shifting flow from
the costliest used path to the cheapest one.

Convergence is certified by a variational-inequality residual: the total
perceived cost of the current flow minus the cheapest possible perceived
cost of the same demand at frozen costs.  A solve reports converged once
the absolute residual drops below tolerance * min(1, total cost), which
bounds both the absolute and the relative residual by the tolerance; the
reported `vi_residual` is the relative form.  Running out of iterations
sets converged=False, it does not raise.

All shortest-path ties are broken toward the lexicographically smallest
edge-id sequence, so repeated runs are bit-for-bit reproducible.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .network import (
    GraphStructureError,
    NetworkInstance,
    PathFlow,
    RiskModel,
    enumerate_paths,
    induced_edge_flow,
    path_cost,
    zero_flow,
)

_PRUNE_REL = 1e-12


class StepRule(enum.Enum):
    EXACT_LINE_SEARCH = "exact-line-search"
    SUCCESSIVE_AVERAGES = "successive-averages"


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 100_000
    path_cap: int = 4096
    step_rule: StepRule = StepRule.EXACT_LINE_SEARCH


@dataclass(frozen=True)
class EquilibriumResult:
    """Solver output.

    `flow` is the authoritative edge flow.  `path_flow` is a decomposition
    of it; whenever converged=True every listed path with positive amount
    has perceived cost within tolerance of `common_cost` (relative).
    `vi_residual` stores the relative variational-inequality gap of `flow`.
    """

    flow: np.ndarray
    path_flow: PathFlow
    common_cost: float
    vi_residual: float
    iterations: int
    converged: bool


def _edge_cost(edge, x: float, gamma_eff: float) -> float:
    if gamma_eff == 0.0:
        return edge.latency(x)
    return edge.latency(x) + gamma_eff * edge.variability(x)


def _cost_vector(instance: NetworkInstance, flow: np.ndarray, gamma_eff: float) -> np.ndarray:
    return np.array([_edge_cost(e, float(flow[eid]), gamma_eff)
                     for eid, e in enumerate(instance.edges)])


def _shortest_path(instance: NetworkInstance, costs: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Min-cost source->sink path; ties broken by smallest edge-id sequence."""
    s, t = instance.source, instance.sink
    heap: list[tuple[float, tuple[int, ...], int]] = [(0.0, (), s)]
    done: set[int] = set()
    while heap:
        dist, path, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == t:
            return path, dist
        for eid, head in instance.out_edges(v):
            if head not in done:
                heapq.heappush(heap, (dist + float(costs[eid]), path + (eid,), head))
    raise GraphStructureError("sink not reachable from source")


def beckmann_potential(instance: NetworkInstance, flow, gamma_eff: float) -> float:
    """Congestion potential: sum over edges of the cost integral up to f_e."""
    total = 0.0
    for eid, e in enumerate(instance.edges):
        f = float(flow[eid])
        total += e.latency.integral(f)
        if gamma_eff != 0.0:
            total += gamma_eff * e.variability.integral(f)
    return total


def vi_residual(instance: NetworkInstance, flow, gamma_effective: float) -> float:
    """Absolute variational-inequality gap of `flow` at frozen costs.

    Total perceived cost of `flow` minus the cheapest way to route the same
    demand when edge costs stay frozen at their current values (one
    shortest-path computation).  Zero exactly at an equilibrium.
    """
    flow = np.asarray(flow, dtype=float)
    costs = _cost_vector(instance, flow, gamma_effective)
    total = float(flow @ costs)
    demand = sum(float(flow[eid]) for eid, _ in instance.out_edges(instance.source)) \
        - sum(float(flow[eid]) for eid, e in enumerate(instance.edges)
              if e.head == instance.source)
    _, dist = _shortest_path(instance, costs)
    return max(total - demand * dist, 0.0)


def _path_cost_from_vector(path: tuple[int, ...], costs: np.ndarray) -> float:
    return float(sum(costs[eid] for eid in path))


def _line_search(instance: NetworkInstance, flow: np.ndarray, deltas: dict[int, float],
                 t_max: float, gamma_eff: float) -> float:
    """Step length in [0, t_max] minimizing the potential along `deltas`.

    The derivative t -> sum_e delta_e * c_e(f_e + delta_e * t) is
    non-decreasing.  For piecewise-linear costs the root is found exactly
    from the slope-change knots; polynomial costs fall back to bisection.
    """

    def dphi(t: float) -> float:
        return sum(s * _edge_cost(instance.edges[eid], float(flow[eid]) + s * t, gamma_eff)
                   for eid, s in deltas.items())

    knots = {0.0, t_max}
    linear = True
    for eid, s in deltas.items():
        e = instance.edges[eid]
        fns = (e.latency,) if gamma_eff == 0.0 else (e.latency, e.variability)
        f = float(flow[eid])
        lo, hi = (f, f + t_max) if s > 0 else (f - t_max, f)
        for fn in fns:
            ks = fn.knots_between(max(lo, 0.0), hi)
            if ks is None:
                linear = False
                break
            for x in ks:
                knots.add((x - f) / s)
        if not linear:
            break

    if not linear:
        if dphi(t_max) <= 0.0:
            return t_max
        lo, hi = 0.0, t_max
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if dphi(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    ts = sorted(k for k in knots if 0.0 <= k <= t_max)
    prev_t = ts[0]
    prev_v = dphi(prev_t)
    if prev_v >= 0.0:
        return 0.0
    for t in ts[1:]:
        v = dphi(t)
        if v >= 0.0:
            if v == prev_v:
                return t
            return prev_t + (0.0 - prev_v) * (t - prev_t) / (v - prev_v)
        prev_t, prev_v = t, v
    return t_max


def _flow_from_weights(instance: NetworkInstance, weights: dict[tuple[int, ...], float]) -> np.ndarray:
    flow = zero_flow(instance)
    for path, w in weights.items():
        for eid in path:
            flow[eid] += w
    return flow


def _prune_path_flow(weights: dict[tuple[int, ...], float], demand: float) -> PathFlow:
    if demand <= 0.0:
        return PathFlow.of([])
    kept = {p: w for p, w in weights.items() if w > _PRUNE_REL * demand}
    total = sum(kept.values())
    scale = demand / total if total > 0.0 else 0.0
    return PathFlow.of(sorted((p, w * scale) for p, w in kept.items()))


def _solve_additive(instance: NetworkInstance, cfg: SolverConfig, gamma_eff: float,
                    callback=None) -> EquilibriumResult:
    demand = instance.demand
    if demand == 0.0:
        flow = zero_flow(instance)
        _, dist = _shortest_path(instance, _cost_vector(instance, flow, gamma_eff))
        return EquilibriumResult(flow, PathFlow.of([]), dist, 0.0, 0, True)

    costs = _cost_vector(instance, zero_flow(instance), gamma_eff)
    first, _ = _shortest_path(instance, costs)
    weights: dict[tuple[int, ...], float] = {first: demand}
    flow = _flow_from_weights(instance, weights)

    iterations = 0
    converged = False
    for k in itertools.count():
        if k and k % 256 == 0:
            flow = _flow_from_weights(instance, weights)
        costs = _cost_vector(instance, flow, gamma_eff)
        best, dist = _shortest_path(instance, costs)
        total = float(flow @ costs)
        gap = max(total - demand * dist, 0.0)
        if callback is not None:
            callback(k, flow.copy(), total, gap)
        if gap <= cfg.tolerance * min(1.0, total if total > 0.0 else 1.0):
            converged = True
            break
        if k >= cfg.max_iterations:
            break
        iterations = k + 1

        if cfg.step_rule is StepRule.SUCCESSIVE_AVERAGES:
            alpha = 1.0 / (k + 2)
            flow = (1.0 - alpha) * flow
            for eid in best:
                flow[eid] += alpha * demand
            weights = {p: w * (1.0 - alpha) for p, w in weights.items()}
            weights[best] = weights.get(best, 0.0) + alpha * demand
            continue

        worst = max(weights, key=lambda p: (_path_cost_from_vector(p, costs), p))
        if worst == best:
            break
        deltas: dict[int, float] = {}
        for eid in best:
            deltas[eid] = deltas.get(eid, 0.0) + 1.0
        for eid in worst:
            deltas[eid] = deltas.get(eid, 0.0) - 1.0
        deltas = {eid: s for eid, s in deltas.items() if s != 0.0}
        t_max = weights[worst]
        t = _line_search(instance, flow, deltas, t_max, gamma_eff) if deltas else t_max
        remainder = t_max - t
        if remainder <= _PRUNE_REL * demand:
            t = t_max
        for eid, s in deltas.items():
            flow[eid] = max(flow[eid] + s * t, 0.0)
        weights[best] = weights.get(best, 0.0) + t
        if t >= t_max:
            del weights[worst]
        else:
            weights[worst] = t_max - t

    flow = _flow_from_weights(instance, weights)
    costs = _cost_vector(instance, flow, gamma_eff)
    _, dist = _shortest_path(instance, costs)
    total = float(flow @ costs)
    gap = max(total - demand * dist, 0.0)
    residual = gap / total if total > 0.0 else 0.0
    return EquilibriumResult(flow, _prune_path_flow(weights, demand), dist,
                             residual, iterations, converged)


def solve_rnwe(instance: NetworkInstance, cfg: SolverConfig = SolverConfig(),
               callback=None) -> EquilibriumResult:
    """Risk-neutral equilibrium: all travelers minimize mean latency."""
    return _solve_additive(instance, cfg, 0.0, callback)


def solve_rawe_meanvar(instance: NetworkInstance, cfg: SolverConfig = SolverConfig(),
                       callback=None) -> EquilibriumResult:
    """Mean-var risk-averse equilibrium via the additive edge cost l + gamma*v."""
    if instance.risk_model is not RiskModel.MEAN_VAR:
        raise ValueError("solve_rawe_meanvar requires a mean-var instance")
    return _solve_additive(instance, cfg, instance.gamma, callback)


def solve_rawe_meanstdev(instance: NetworkInstance, cfg: SolverConfig = SolverConfig()) -> EquilibriumResult:
    """Mean-stdev risk-averse equilibrium over the enumerated path set.

    Path costs are not edge additive here, so the solver iterates directly
    on path amounts: each round moves flow from the costliest used path to
    the cheapest path, choosing the transfer that equalizes the pair's
    costs.  Stops once every used path is within tolerance of the cheapest.
    """
    if instance.risk_model is not RiskModel.MEAN_STDEV:
        raise ValueError("solve_rawe_meanstdev requires a mean-stdev instance")
    paths = enumerate_paths(instance, cfg.path_cap)
    demand = instance.demand
    m = len(instance.edges)
    incidence = np.zeros((len(paths), m))
    for i, p in enumerate(paths):
        for eid in p:
            incidence[i, eid] = 1.0

    def costs_at(amounts: np.ndarray) -> np.ndarray:
        flow = incidence.T @ amounts
        return np.array([path_cost(instance, p, flow) for p in paths])

    if demand == 0.0:
        q = costs_at(np.zeros(len(paths)))
        return EquilibriumResult(zero_flow(instance), PathFlow.of([]),
                                 float(q.min()), 0.0, 0, True)

    amounts = np.zeros(len(paths))
    amounts[int(np.argmin(costs_at(amounts)))] = demand

    iterations = 0
    converged = False
    used_cut = _PRUNE_REL * demand
    for k in itertools.count():
        q = costs_at(amounts)
        best = int(np.argmin(q))
        used = np.flatnonzero(amounts > used_cut)
        worst = int(used[np.argmax(q[used])])
        gap = float(q[worst] - q[best])
        scale = min(1.0, float(q[best])) if q[best] > 0.0 else 1.0
        if gap <= cfg.tolerance * scale:
            converged = True
            break
        if k >= cfg.max_iterations:
            break
        iterations = k + 1

        move = amounts[worst]
        direction = incidence[best] - incidence[worst]

        def pair_gap(t: float) -> float:
            flow = incidence.T @ amounts + t * direction
            return path_cost(instance, paths[worst], flow) - path_cost(instance, paths[best], flow)

        if pair_gap(move) >= 0.0:
            t = move
        else:
            lo, hi = 0.0, float(move)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if pair_gap(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            t = 0.5 * (lo + hi)
        amounts[worst] -= t
        amounts[best] += t
        if amounts[worst] <= used_cut:
            amounts[best] += amounts[worst]
            amounts[worst] = 0.0

    q = costs_at(amounts)
    best = int(np.argmin(q))
    total = float(amounts @ q)
    gap_total = max(total - demand * float(q[best]), 0.0)
    residual = gap_total / total if total > 0.0 else 0.0
    pf = PathFlow.of(sorted((paths[i], float(a)) for i, a in enumerate(amounts) if a > used_cut))
    flow = induced_edge_flow(instance, pf)
    return EquilibriumResult(flow, pf, float(q[best]), residual, iterations, converged)


def _simplex_points(k: int, grid: int, total: float):
    """All points of the k-simplex with coordinates in multiples of total/grid."""
    for cuts in itertools.combinations(range(grid + k - 1), k - 1):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(grid + k - 2 - prev)
        yield np.array(parts, dtype=float) * (total / grid)


def brute_force_equilibrium(instance: NetworkInstance, grid: int = 12) -> EquilibriumResult:
    """Reference equilibrium by support enumeration over the path set.

    Only for instances with at most four simple paths.  For every subset of
    paths it solves the smooth equal-cost system on that support (coarse
    simplex grid, then a derivative-free polish of the squared cost
    spread), then keeps the candidate with the smallest equilibrium
    violation: used-path cost spread plus any amount by which an unused
    path undercuts the common cost.  Intentionally independent of the
    iterative solvers so the two can cross-check.
    """
    from scipy.optimize import minimize

    paths = enumerate_paths(instance, cap=64)
    if len(paths) > 4:
        raise ValueError(f"brute force supports at most 4 paths, found {len(paths)}")
    if grid < 1:
        raise ValueError("grid must be positive")
    demand = instance.demand
    n_paths = len(paths)
    m = len(instance.edges)
    incidence = np.zeros((n_paths, m))
    for i, p in enumerate(paths):
        for eid in p:
            incidence[i, eid] = 1.0

    def costs(amounts: np.ndarray) -> np.ndarray:
        flow = incidence.T @ amounts
        return np.array([path_cost(instance, p, flow) for p in paths])

    def violation(amounts: np.ndarray, support) -> float:
        q = costs(amounts)
        q_s = q[list(support)]
        v = float(q_s.max() - q_s.min())
        lam = float(q_s.max())
        for j in range(n_paths):
            if j not in support:
                v += max(0.0, lam - q[j])
        return v

    if demand == 0.0:
        amounts = np.zeros(n_paths)
    else:
        best_amounts, best_viol = None, math.inf
        for size in range(1, n_paths + 1):
            for support in itertools.combinations(range(n_paths), size):
                if size == 1:
                    cand = np.zeros(n_paths)
                    cand[support[0]] = demand
                else:
                    # seed from a coarse grid on the support simplex
                    seed, seed_val = None, math.inf
                    for pt in _simplex_points(size, grid, demand):
                        cand = np.zeros(n_paths)
                        cand[list(support)] = pt
                        q_s = costs(cand)[list(support)]
                        val = float(q_s.max() - q_s.min())
                        if val < seed_val:
                            seed, seed_val = cand, val

                    idx = list(support)

                    def objective(theta: np.ndarray) -> float:
                        full = np.zeros(n_paths)
                        full[idx[:-1]] = theta
                        full[idx[-1]] = demand - theta.sum()
                        penalty = float(np.sum(np.maximum(-full, 0.0)))
                        clipped = np.maximum(full, 0.0)
                        s = clipped.sum()
                        if s > 0.0:
                            clipped *= demand / s
                        q_s = costs(clipped)[idx]
                        return float(np.sum((q_s - q_s.mean()) ** 2)) + 1e6 * penalty

                    res = minimize(objective, seed[idx[:-1]], method="Nelder-Mead",
                                   options={"xatol": 1e-13, "fatol": 1e-18,
                                            "maxiter": 4000, "maxfev": 4000})
                    cand = np.zeros(n_paths)
                    cand[idx[:-1]] = res.x
                    cand[idx[-1]] = demand - res.x.sum()
                    cand = np.maximum(cand, 0.0)
                    s = cand.sum()
                    if s > 0.0:
                        cand *= demand / s
                viol = violation(cand, set(support))
                if viol < best_viol:
                    best_amounts, best_viol = cand, viol
        amounts = best_amounts

    flow = incidence.T @ amounts
    q = costs(amounts)
    used_cut = max(_PRUNE_REL * demand, 1e-9 * demand)
    used = np.flatnonzero(amounts > used_cut)
    common = float(q[used].min()) if len(used) else float(q.min()) if n_paths else 0.0
    gap = float(q[used].max() - q.min()) if len(used) else 0.0
    total = float(amounts @ q)
    residual = max(total - demand * float(q.min()), 0.0) / total if total > 0.0 else 0.0
    pf = PathFlow.of(sorted((paths[i], float(a)) for i, a in enumerate(amounts) if a > used_cut))
    scale = min(1.0, common) if common > 0.0 else 1.0
    return EquilibriumResult(np.asarray(flow), pf, common, residual, 0,
                             gap <= 1e-6 * scale)


def result_from_paths(instance: NetworkInstance, path_flow: PathFlow,
                      gamma_effective: float, path_cap: int = 4096) -> EquilibriumResult:
    """Wrap an explicit path flow (for example a closed-form oracle) as a result.

    Computes the induced edge flow, the equilibrium residual and the
    cheapest path cost so the wrapped flow can feed the analysis helpers.
    """
    flow = induced_edge_flow(instance, path_flow)
    additive = gamma_effective == 0.0 or instance.risk_model is RiskModel.MEAN_VAR
    if additive:
        costs = _cost_vector(instance, flow, gamma_effective)
        _, dist = _shortest_path(instance, costs)
        total = float(flow @ costs)
        gap = max(total - path_flow.total() * dist, 0.0)
        common = dist
    else:
        paths = enumerate_paths(instance, path_cap)
        q = {p: path_cost(instance, p, flow) for p in paths}
        common = min(q.values())
        total = sum(a * q[tuple(p)] for p, a in path_flow)
        gap = max(total - path_flow.total() * common, 0.0)
    residual = gap / total if total > 0.0 else 0.0
    scale = min(1.0, total if total > 0.0 else 1.0)
    return EquilibriumResult(flow, path_flow, common, residual, 0, gap <= 1e-9 * scale)
