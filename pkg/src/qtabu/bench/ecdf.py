"""Fixed-target ECDF over (run, target) pairs."""

from __future__ import annotations

import csv
import io
from collections import OrderedDict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..tabu import RunTrace


@dataclass
class EcdfReport:
    """Success proportions of (run, target) pairs as a function of iteration.

    ``targets[p]`` are the raw per-problem target values (minimization
    convention) and ``normalized[p]`` the same values divided by that
    problem's optimum.  ``hits[r, j]`` is the first iteration at which run
    ``r`` met its problem's ``j``-th target, or -1 if it never did.
    """

    T: int
    problems: list
    targets: dict
    normalized: dict
    run_problem: list
    hits: np.ndarray
    curve: np.ndarray

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(len(self.curve))

    def proportion_at(self, t: int) -> float:
        return float(self.curve[min(t, len(self.curve) - 1)])

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "proportion"])
        for t, v in enumerate(self.curve):
            w.writerow([t, repr(float(v))])
        return fh.getvalue() if own else None


def compute_ecdf(
    traces: Sequence[RunTrace],
    optima: Mapping[str, float] | Sequence[float] | None,
    T: int,
    horizon: int | None = None,
    grid: Mapping[str, np.ndarray] | None = None,
) -> EcdfReport:
    """Aggregate ``traces`` into an ECDF with ``T`` targets per problem.

    Traces are grouped by ``trace.problem``.  Per problem the targets are
    ``T`` evenly spaced values between the smallest and largest value any of
    its runs observed (start point included).  ``optima`` maps problem to
    optimum, or lists optima in first-appearance order of the problems; it
    only affects the normalized grid.  ``grid`` supplies precomputed
    per-problem targets, so that several algorithms can be scored against
    targets derived from all of their runs together.
    """
    if not traces:
        raise ValueError("no traces to aggregate")
    if T < 2:
        raise ValueError("T must be at least 2")

    groups: OrderedDict[str, list[int]] = OrderedDict()
    for r, tr in enumerate(traces):
        groups.setdefault(tr.problem, []).append(r)
    problems = list(groups)

    if optima is None:
        opt = {}
    elif isinstance(optima, Mapping):
        opt = dict(optima)
    else:
        if len(optima) != len(problems):
            raise ValueError(f"{len(optima)} optima for {len(problems)} problems")
        opt = dict(zip(problems, optima))

    if horizon is None:
        horizon = max(tr.iterations for tr in traces)

    targets, normalized = {}, {}
    hits = np.full((len(traces), T), -1, dtype=np.int64)
    for p, runs in groups.items():
        if grid is not None:
            levels = np.asarray(grid[p], dtype=np.float64)
            if levels.size != T:
                raise ValueError(f"grid for {p!r} has {levels.size} targets, expected {T}")
        else:
            seen = np.concatenate([np.append(traces[r].f_best, traces[r].f_init) for r in runs])
            levels = np.linspace(seen.min(), seen.max(), T)
        targets[p] = levels
        o = opt.get(p)
        normalized[p] = levels / o if o not in (None, 0) else np.full(T, np.nan)
        for r in runs:
            curve = traces[r].best_curve(horizon)
            for j, target in enumerate(levels):
                met = np.flatnonzero(curve <= target)
                if met.size:
                    hits[r, j] = met[0]

    counts = np.bincount(hits[hits >= 0], minlength=horizon + 1)
    curve = np.cumsum(counts) / hits.size
    return EcdfReport(T, problems, targets, normalized, [tr.problem for tr in traces], hits, curve)
