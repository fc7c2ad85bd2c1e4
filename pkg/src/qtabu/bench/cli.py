"""``qtabu`` command line: solve, bench, ecdf, energy-dist, reduce.

Exit codes: 0 success, 1 some matrix cells failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..angles import OptBudget
from ..qubo import clamp, move_values, write_orlib
from ..samplers import QaoaSamplerConfig, SaConfig, SamplerContext
from ..tabu import GREEDY, WEIGHTED_RANDOM, TabuParams, basic_tabu_search, select_variables
from .data import InstanceError, dump_qubos_json, resolve, resolve_one, synthetic_a_series
from .ecdf import compute_ecdf
from .energy import energy_distribution_export
from .experiment import ALGORITHMS, ConfigError, ExperimentSpec, load_result, run_cell, run_experiment
from .reduce import make_reduced_suite

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _int_list(text: str) -> list[int]:
    """Parse ``"2,3,5"`` or ``"2-10,15"``."""
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    return out


def _add_search_flags(p: argparse.ArgumentParser, many: bool) -> None:
    if many:
        p.add_argument("--algorithms", default="basic", help=f"comma list from {','.join(ALGORITHMS)}")
        p.add_argument("--tenures", type=_int_list, default=[5], help="e.g. 2-10,15")
        p.add_argument("--ks", type=_int_list, default=[10])
        p.add_argument("--seeds", type=int, default=1, help="run seeds 0..R-1")
    else:
        p.add_argument("--algorithm", choices=ALGORITHMS, default="basic")
        p.add_argument("--tenure", type=int, default=5)
        p.add_argument("--k", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rand-tenure", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--cutoff", type=int, default=None, help="stop after this many non-improving iterations")
    p.add_argument("--selection", choices=(GREEDY, WEIGHTED_RANDOM), default=GREEDY)
    p.add_argument("--targets", default="best-known", help="best-known, none, or a JSON file name->value")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--max-evals", type=int, default=2000)
    p.add_argument("--sa-temperature", type=float, default=17.5)
    p.add_argument("--sa-steps", type=int, default=100)
    p.add_argument("--sa-restarts", type=int, default=1)


def _spec_from_args(a, instances, algorithms, tenures, ks, seeds) -> ExperimentSpec:
    return ExperimentSpec(
        instances=instances,
        seeds=seeds,
        algorithms=algorithms,
        tenures=tenures,
        rand_tenure=a.rand_tenure,
        ks=ks,
        max_iters=a.max_iters,
        improvement_cutoff=a.cutoff,
        selection_mode=a.selection,
        targets=a.targets,
        p=a.p,
        A=a.A,
        m=a.m,
        shots=a.shots,
        max_evals=a.max_evals,
        sa_temperature=a.sa_temperature,
        sa_steps=a.sa_steps,
        sa_restarts=a.sa_restarts,
    )


def cmd_solve(a) -> int:
    spec = _spec_from_args(a, [a.instance], [a.algorithm], [a.tenure], [a.k], [a.seed])
    spec.validate()
    resolve_one(a.instance)  # unknown references are configuration errors here
    row = run_cell(spec, None, spec.cells()[0], trace_path=a.trace)
    json.dump(row, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK if row["status"] == "ok" else EXIT_PARTIAL


def cmd_bench(a) -> int:
    if a.spec:
        with open(a.spec) as fh:
            spec = ExperimentSpec.from_json(json.load(fh))
    else:
        spec = _spec_from_args(a, a.instances, [s for s in a.algorithms.split(",") if s], a.tenures, a.ks,
                               list(range(a.seeds)))
    result = run_experiment(spec, a.out, jobs=a.jobs)
    ok = len(result.rows) - result.failed
    print(f"{ok}/{len(result.rows)} cells succeeded; results in {a.out}")
    for r in result.rows:
        if r["status"] != "ok":
            print(f"cell {r['cell']} failed: {r['error']}", file=sys.stderr)
    return EXIT_PARTIAL if result.failed else EXIT_OK


def cmd_ecdf(a) -> int:
    rows, traces = load_result(a.results)
    if not traces:
        raise ConfigError(f"no successful runs in {a.results}")
    optima = {r["name"]: r["target_min"] for r in rows if r.get("target_min") is not None}
    overall = compute_ecdf(traces, optima, a.targets)
    horizon = len(overall.curve) - 1
    labels = [r["algorithm"] + ("" if r["k"] is None else f"_k{r['k']}") + f"_tt{r['tenure']}" for r in rows]
    curves = {}
    for label in dict.fromkeys(labels):
        sel = [t for t, lab in zip(traces, labels) if lab == label]
        rep = compute_ecdf(sel, optima, a.targets, horizon=horizon, grid=overall.targets)
        curves[label] = rep.curve
    out = open(a.out, "w") if a.out else sys.stdout
    try:
        out.write("iteration," + ",".join(curves) + "\n")
        for t in range(horizon + 1):
            out.write(f"{t}," + ",".join(repr(float(c[t])) for c in curves.values()) + "\n")
    finally:
        if a.out:
            out.close()
    return EXIT_OK


def cmd_energy_dist(a) -> int:
    q = resolve_one(a.instance)
    if not 1 <= a.k <= min(q.n, 24):
        raise ConfigError(f"k must be in 1..{min(q.n, 24)}")
    x, _, _ = basic_tabu_search(q, np.zeros(q.n, dtype=np.uint8),
                                TabuParams(tenure=a.tenure, max_iters=a.ts_iters, seed=a.seed))
    delta = move_values(q, x)
    rng = np.random.default_rng(a.seed)
    sel = select_variables(delta, np.zeros(q.n, dtype=np.int64), a.k, GREEDY, rng)
    sub = clamp(q, x, sel)
    ctx = SamplerContext(delta[sub.parent_indices].copy(), sub.restrict(x))
    budget = OptBudget(max_evals=a.max_evals)
    configs = []
    for p in a.depths:
        configs.append(QaoaSamplerConfig(p=p, m=1, shots=a.shots, budget=budget, label=f"p{p}"))
        if a.A:
            configs.append(QaoaSamplerConfig(p=p, m=1, shots=a.shots, budget=budget, penalized=True, A=a.A,
                                             label=f"p{p}_pen"))
    sa = SaConfig(a.sa_temperature, a.sa_steps, a.sa_restarts) if a.sa_restarts else None
    data = energy_distribution_export(sub, configs, sa, a.draws, rng, ctx)
    if a.out:
        with open(a.out, "w", newline="") as fh:
            data.to_csv(fh)
    else:
        data.to_csv(sys.stdout)
    return EXIT_OK


def cmd_reduce(a) -> int:
    if a.analog:
        instances = synthetic_a_series(a.seed)
    elif a.instances:
        instances = [q for ref in a.instances for q in resolve(ref)]
    else:
        raise ConfigError("give instance references or --analog")
    suite = make_reduced_suite(instances, a.seed, a.per_instance, a.size)
    out = Path(a.out)
    if out.suffix == ".json":
        with open(out, "w") as fh:
            dump_qubos_json(suite, fh)
    else:
        # the OR-LIB layout has no offset field; keep a JSON copy alongside
        out.write_text(write_orlib(suite))
        with open(out.with_suffix(out.suffix + ".json"), "w") as fh:
            dump_qubos_json(suite, fh)
    print(f"wrote {len(suite)} reduced instances to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtabu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one seeded run on one instance")
    p.add_argument("instance", help="path, path:index or path:name")
    p.add_argument("--trace", help="write the run trace CSV here")
    _add_search_flags(p, many=False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run an experiment matrix")
    p.add_argument("instances", nargs="*")
    p.add_argument("--spec", help="JSON experiment description (overrides the flags)")
    p.add_argument("--out", required=True, help="result directory")
    p.add_argument("--jobs", type=int, default=1)
    _add_search_flags(p, many=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ecdf", help="aggregate a result directory into ECDF curves")
    p.add_argument("results")
    p.add_argument("--targets", type=int, default=10, help="targets per problem")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ecdf)

    p = sub.add_parser("energy-dist", help="energy/Hamming dataset for one subproblem")
    p.add_argument("instance")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--tenure", type=int, default=5)
    p.add_argument("--ts-iters", type=int, default=10, help="basic search iterations before extraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=100000)
    p.add_argument("--depths", type=_int_list, default=[1, 2])
    p.add_argument("--A", type=float, default=0.0, help="also export penalized runs with this scale")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--max-evals", type=int, default=2000)
    p.add_argument("--sa-temperature", type=float, default=17.5)
    p.add_argument("--sa-steps", type=int, default=100)
    p.add_argument("--sa-restarts", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_energy_dist)

    p = sub.add_parser("reduce", help="build the clamped reduced-instance suite")
    p.add_argument("instances", nargs="*")
    p.add_argument("--analog", action="store_true", help="use the bundled synthetic instances")
    p.add_argument("--per-instance", type=int, default=5)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".json for the JSON mirror, anything else for OR-LIB")
    p.set_defaults(func=cmd_reduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InstanceError, ValueError, OSError) as exc:
        print(f"qtabu {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
