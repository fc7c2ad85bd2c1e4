"""Reduced-instance suite: solve, pick random variables, clamp the rest."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..qubo import Qubo, clamp
from ..tabu import TabuParams, basic_tabu_search

DEFAULT_TABU = TabuParams(tenure=5, max_iters=2000)


def make_reduced_suite(
    instances: list[Qubo],
    seed: int,
    per_instance: int = 5,
    size: int = 20,
    tabu: TabuParams = DEFAULT_TABU,
) -> list[Qubo]:
    """Build ``per_instance`` clamped ``size``-variable problems per instance.

    Each parent is first solved with the basic tabu search from the all-zero
    start; every reduced problem then frees ``size`` uniformly drawn
    variables and fixes the others to that solution.  ``meta`` records the
    parent name, the freed indices and the solution used.
    """
    if per_instance < 1 or size < 1:
        raise ValueError("per_instance and size must be positive")
    for q in instances:
        if q.n < size:
            raise ValueError(f"instance {q.name or '?'} has n={q.n} < size={size}")
    children = np.random.SeedSequence(seed).spawn(len(instances))
    out = []
    for q, ss in zip(instances, children):
        tabu_seed, pick_seed = ss.generate_state(2)
        params = replace(tabu, seed=int(tabu_seed))
        x_sol, f_sol, _ = basic_tabu_search(q, np.zeros(q.n, dtype=np.uint8), params)
        rng = np.random.default_rng(pick_seed)
        for j in range(per_instance):
            sel = np.sort(rng.choice(q.n, size=size, replace=False))
            sub = clamp(q, x_sol, sel)
            meta = {
                "parent": q.name,
                "parent_n": q.n,
                "selected": sel.tolist(),
                "solution": "".join(map(str, x_sol.tolist())),
                "solution_value": f_sol,
                "seed": seed,
                "replica": j,
            }
            r = sub.reduced
            out.append(Qubo(r.coeffs, r.offset, r.sense, f"{q.name}-r{j}", meta))
    return out
