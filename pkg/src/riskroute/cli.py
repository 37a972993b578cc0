"""Command line front end.

Subcommands:

    generate   build an instance (and optionally its oracle) and write it out
    solve      compute equilibria for a serialized instance
    analyze    solve both equilibria and check cost-ratio bounds
    verify     check a recursive worst-case instance against its closed forms
    sweep      run seeded batches and emit a CSV of bound checks

Exit codes: 0 on success, 1 when a verification or bound check fails or a
solver does not converge, 2 on usage or input errors.  Relative output
paths are resolved against $RISKROUTE_OUT_DIR when that variable is set.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from dataclasses import dataclass

from . import analysis, instances, serialization, synthetic
from .network import NetworkInstance, RiskModel
from .solver import (
    EquilibriumResult,
    SolverConfig,
    solve_rawe_meanstdev,
    solve_rawe_meanvar,
    solve_rnwe,
)

OUT_DIR_ENV = "RISKROUTE_OUT_DIR"

SWEEP_HEADER = "# riskroute sweep v1"
SWEEP_COLUMNS = ("instance_id", "n", "level", "gamma", "kappa", "eta", "mu",
                 "pra", "bound", "slack", "kind")

_BOUND_NAMES = {
    "eta": analysis.BoundKind.TOPOLOGICAL_ETA,
    "vertices": analysis.BoundKind.TOPOLOGICAL_VERTICES,
    "smooth": analysis.BoundKind.FUNCTIONAL_SMOOTH,
    "stdev0": analysis.BoundKind.STDEV_ZERO_ALT,
    "stdev1": analysis.BoundKind.STDEV_ONE_ALT,
}


@dataclass(frozen=True)
class RunConfig:
    """Options shared by the solving subcommands."""

    tolerance: float = 1e-8
    max_iterations: int = 100_000
    jobs: int = 1
    out_dir: str | None = None

    def solver(self) -> SolverConfig:
        return SolverConfig(tolerance=self.tolerance,
                            max_iterations=self.max_iterations)

    def resolve(self, path: str) -> str:
        if self.out_dir and not os.path.isabs(path):
            return os.path.join(self.out_dir, path)
        return path


def _run_config(args) -> RunConfig:
    return RunConfig(tolerance=getattr(args, "tolerance", 1e-8),
                     max_iterations=getattr(args, "max_iters", 100_000),
                     jobs=getattr(args, "jobs", 1),
                     out_dir=os.environ.get(OUT_DIR_ENV))


def _solve_pair(instance: NetworkInstance,
                cfg: SolverConfig) -> tuple[EquilibriumResult, EquilibriumResult]:
    rnwe = solve_rnwe(instance, cfg)
    if instance.risk_model is RiskModel.MEAN_VAR:
        rawe = solve_rawe_meanvar(instance, cfg)
    else:
        rawe = solve_rawe_meanstdev(instance, cfg)
    return rawe, rnwe


def _emit(text: str, out: str | None, run: RunConfig) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        path = run.resolve(out)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _generate(args) -> int:
    run = _run_config(args)
    oracle = None
    metadata: dict[str, str] = {"family": args.family}
    if args.family == "recursive":
        spec = instances.RecursiveFamilySpec(
            level=args.level, r_a=args.r_a, r_n=args.r_n,
            gamma_kappa=args.gamma_kappa,
            variant=instances.Variant(args.variant))
        instance, oracle = instances.build_recursive(spec)
        metadata.update(level=str(args.level), variant=args.variant,
                        r_a=repr(args.r_a), r_n=repr(args.r_n),
                        gamma_kappa=repr(args.gamma_kappa))
        if args.risk_model == "mean-stdev":
            instance = instances.reinterpret_as_meanstdev(instance)
    elif args.family == "braess":
        instance = instances.build_braess(gamma=args.gamma_kappa,
                                          risk_model=RiskModel(args.risk_model))
    elif args.family == "domino":
        instance = synthetic.random_domino_instance(
            args.seed, risk_model=RiskModel(args.risk_model))
        metadata["seed"] = str(args.seed)
    elif args.family == "random-affine":
        instance = synthetic.random_affine_instance(
            args.seed, risk_model=RiskModel(args.risk_model))
        metadata["seed"] = str(args.seed)
    elif args.family == "random-poly":
        instance = synthetic.random_polynomial_instance(
            args.seed, args.degree, risk_model=RiskModel(args.risk_model))
        metadata.update(seed=str(args.seed), degree=str(args.degree))
    elif args.family == "series-parallel":
        instance = synthetic.random_series_parallel_instance(
            args.seed, risk_model=RiskModel(args.risk_model))
        metadata["seed"] = str(args.seed)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.family)
    _emit(serialization.dumps_instance(instance), args.out, run)
    if args.oracle_out:
        if oracle is None:
            print("error: --oracle-out is only available for --family recursive",
                  file=sys.stderr)
            return 2
        _emit(serialization.dumps_oracle(oracle, metadata), args.oracle_out, run)
    return 0


def _solve(args) -> int:
    run = _run_config(args)
    instance = serialization.read_instance(args.input)
    cfg = run.solver()
    results: list[tuple[str, EquilibriumResult]] = []
    if args.mode in ("rnwe", "both"):
        results.append(("rnwe", solve_rnwe(instance, cfg)))
    if args.mode in ("rawe", "both"):
        if instance.risk_model is RiskModel.MEAN_VAR:
            results.append(("rawe", solve_rawe_meanvar(instance, cfg)))
        else:
            results.append(("rawe", solve_rawe_meanstdev(instance, cfg)))
    status = 0
    for name, res in results:
        print(f"{name}: converged={res.converged} iterations={res.iterations} "
              f"common_cost={res.common_cost!r} vi_residual={res.vi_residual:.3e}")
        if not res.converged:
            status = 1
        if args.out:
            suffix = f".{name}.txt" if args.mode == "both" else ""
            serialization.write_result(run.resolve(args.out) + suffix, res)
    return status


def _bound_row(instance: NetworkInstance, report: analysis.BoundReport,
               instance_id: str, level: int | None) -> list[str]:
    def fmt(v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    return [instance_id, str(instance.vertices),
            "" if level is None else str(level), repr(instance.gamma),
            fmt(report.kappa), fmt(report.eta), fmt(report.mu),
            fmt(report.pra_observed), fmt(report.bound_value),
            fmt(report.slack), report.bound_kind.value]


def _analyze(args) -> int:
    run = _run_config(args)
    instance = serialization.read_instance(args.input)
    rawe, rnwe = _solve_pair(instance, run.solver())
    if not (rawe.converged and rnwe.converged):
        print("error: equilibrium solver did not converge", file=sys.stderr)
        return 1
    kinds = list(_BOUND_NAMES.values()) if args.bound == "all" \
        else [_BOUND_NAMES[args.bound]]
    status = 0
    lines = []
    for kind in kinds:
        rep = analysis.check_bound(instance, rawe, rnwe, kind)
        ok = "ok" if rep.satisfied else "VIOLATED"
        lines.append(f"{rep.bound_kind.value}: pra={rep.pra_observed:.9g} "
                     f"bound={rep.bound_value:.9g} slack={rep.slack:.3e} "
                     f"kappa={rep.kappa:.9g}"
                     + (f" eta={rep.eta}" if rep.eta is not None else "")
                     + (f" mu={rep.mu:.9g}" if rep.mu is not None else "")
                     + f" [{ok}]"
                     + (f" ({rep.note})" if rep.note else ""))
        if not rep.satisfied and "inapplicable" not in rep.note:
            status = 1
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        _emit(text, args.out, run)
    return status


def _verify(args) -> int:
    run = _run_config(args)
    spec = instances.RecursiveFamilySpec(
        level=args.level, r_a=args.r_a, r_n=args.r_n,
        gamma_kappa=args.gamma_kappa, variant=instances.Variant(args.variant))
    instance, oracle = instances.build_recursive(spec)
    report = instances.closed_form_check(instance, oracle)
    print(f"closed_form_check: {'pass' if report.passed else 'FAIL'}")
    for failure in report.failures:
        print(f"  {failure}")
    struct = analysis.verify_structural_properties(args.level, instance, oracle)
    print(f"structural_properties: {'pass' if struct.passed else 'FAIL'}")
    for failure in struct.failures:
        print(f"  {failure}")
    status = 0 if (report.passed and struct.passed) else 1
    if args.solve:
        rawe, rnwe = _solve_pair(instance, run.solver())
        pra = analysis.compute_pra(instance, rawe, rnwe)
        rel = abs(pra - oracle.expected_pra) / max(1.0, abs(oracle.expected_pra))
        agree = rel <= args.pra_tolerance
        print(f"solver_pra: observed={pra:.9g} expected={oracle.expected_pra:.9g} "
              f"rel_err={rel:.3e} [{'pass' if agree else 'FAIL'}]")
        if not agree or not (rawe.converged and rnwe.converged):
            status = 1
    return status


def _sweep_one(task) -> list[list[str]]:
    what, seed, tolerance = task
    cfg = SolverConfig(tolerance=tolerance)
    if what == "affine":
        instance = synthetic.random_affine_instance(seed)
        kinds = [analysis.BoundKind.TOPOLOGICAL_ETA,
                 analysis.BoundKind.TOPOLOGICAL_VERTICES,
                 analysis.BoundKind.FUNCTIONAL_SMOOTH]
    elif what in ("poly2", "poly3", "poly4"):
        instance = synthetic.random_polynomial_instance(seed, int(what[-1]))
        kinds = [analysis.BoundKind.TOPOLOGICAL_ETA,
                 analysis.BoundKind.FUNCTIONAL_SMOOTH]
    elif what == "series-parallel":
        instance = synthetic.random_series_parallel_instance(seed)
        kinds = [analysis.BoundKind.STDEV_ZERO_ALT]
    elif what == "braess":
        instance = synthetic.random_braess_instance(seed)
        kinds = [analysis.BoundKind.STDEV_ONE_ALT]
    elif what == "domino":
        instance = synthetic.random_domino_instance(seed)
        kinds = [analysis.BoundKind.STDEV_ONE_ALT]
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(what)
    rawe, rnwe = _solve_pair(instance, cfg)
    rows = []
    for kind in kinds:
        rep = analysis.check_bound(instance, rawe, rnwe, kind)
        rows.append(_bound_row(instance, rep, f"{what}-{seed}", None))
    return rows


def _sweep(args) -> int:
    run = _run_config(args)
    tasks = [(args.what, seed, args.tolerance)
             for seed in range(args.seed, args.seed + args.count)]
    jobs = max(1, args.jobs)
    if jobs == 1:
        grouped = [_sweep_one(t) for t in tasks]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            grouped = list(pool.map(_sweep_one, tasks))
    lines = [SWEEP_HEADER, ",".join(SWEEP_COLUMNS)]
    for rows in grouped:
        for row in rows:
            lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    _emit(text, args.out, run)

    violations = []
    best_ratio, best_id = -math.inf, ""
    for rows in grouped:
        for row in rows:
            pra, bound = float(row[7]), float(row[8])
            ratio = pra / bound if math.isfinite(bound) and bound > 0 else 0.0
            if ratio > best_ratio:
                best_ratio, best_id = ratio, f"{row[0]}/{row[10]}"
            if pra > bound + 1e-5:
                violations.append(f"{row[0]}/{row[10]}: pra={pra!r} > bound={bound!r}")
    if args.search_conjecture:
        print(f"tightest instance: {best_id} ratio={best_ratio:.9g}", file=sys.stderr)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return 1 if violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskroute",
        description="Wardrop equilibria under risk aversion and certified "
                    "bounds on the induced cost ratio.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--tolerance", type=float, default=1e-8,
                       help="solver convergence tolerance (relative)")
        p.add_argument("--max-iters", type=int, default=100_000,
                       help="iteration cap per solve")

    gen = sub.add_parser("generate", help="build and serialize an instance")
    gen.add_argument("--family", required=True,
                     choices=["recursive", "braess", "domino", "random-affine",
                              "random-poly", "series-parallel"])
    gen.add_argument("--level", type=int, default=1,
                     help="recursion depth of the recursive family")
    gen.add_argument("--variant", choices=["structural", "functional"],
                     default="structural")
    gen.add_argument("--gamma-kappa", type=float, default=1.0,
                     help="target gamma*kappa of the built instance")
    gen.add_argument("--r-a", type=float, default=1.0,
                     help="risk-averse demand of the recursive family")
    gen.add_argument("--r-n", type=float, default=1.0,
                     help="risk-neutral demand of the recursive family")
    gen.add_argument("--risk-model", choices=["mean-var", "mean-stdev"],
                     default="mean-var")
    gen.add_argument("--degree", type=int, default=2,
                     help="latency degree for --family random-poly")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="instance file (stdout when omitted)")
    gen.add_argument("--oracle-out", help="oracle sidecar file (recursive only)")
    gen.set_defaults(func=_generate)

    sol = sub.add_parser("solve", help="solve a serialized instance")
    sol.add_argument("--in", dest="input", required=True)
    sol.add_argument("--mode", choices=["rawe", "rnwe", "both"], default="both")
    sol.add_argument("--out", help="result file; mode both appends .rawe.txt/.rnwe.txt")
    add_common(sol)
    sol.set_defaults(func=_solve)

    ana = sub.add_parser("analyze", help="check cost-ratio bounds on an instance")
    ana.add_argument("--in", dest="input", required=True)
    ana.add_argument("--bound", choices=sorted(_BOUND_NAMES) + ["all"],
                     default="all")
    ana.add_argument("--out", help="also write the report to this file")
    add_common(ana)
    ana.set_defaults(func=_analyze)

    ver = sub.add_parser("verify",
                         help="closed-form checks for the recursive family")
    ver.add_argument("--level", type=int, required=True)
    ver.add_argument("--variant", choices=["structural", "functional"],
                     default="structural")
    ver.add_argument("--gamma-kappa", type=float, default=1.0)
    ver.add_argument("--r-a", type=float, default=1.0)
    ver.add_argument("--r-n", type=float, default=1.0)
    ver.add_argument("--solve", action="store_true",
                     help="also solve numerically and compare the cost ratio")
    ver.add_argument("--pra-tolerance", type=float, default=1e-5,
                     help="relative tolerance for --solve")
    add_common(ver)
    ver.set_defaults(func=_verify)

    swp = sub.add_parser("sweep", help="seeded batch of bound checks as CSV")
    swp.add_argument("--what", required=True,
                     choices=["affine", "poly2", "poly3", "poly4",
                              "series-parallel", "braess", "domino"])
    swp.add_argument("--count", type=int, default=20)
    swp.add_argument("--seed", type=int, default=0, help="first seed of the batch")
    swp.add_argument("--jobs", type=int, default=1,
                     help="worker threads for row computation")
    swp.add_argument("--search-conjecture", action="store_true",
                     help="experimental: report the instance closest to its bound")
    swp.add_argument("--out", help="CSV file (stdout when omitted)")
    add_common(swp)
    swp.set_defaults(func=_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (serialization.FormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
