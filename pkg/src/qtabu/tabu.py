"""One-flip tabu search and its sampler-driven variant.

``basic_tabu_search`` is the classic short-term-memory search: each iteration
flips the best non-tabu variable and marks it tabu for ``tenure`` (+ a random
extra) iterations, unless the move produced a new best solution.

``sampler_tabu_search`` additionally picks ``k`` non-tabu variables per
iteration, clamps the rest to the current solution and asks a
:class:`~qtabu.samplers.NeighborhoodSampler` for a candidate on that
subproblem.  The candidate replaces the one-flip move when it is strictly
better.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import kernels
from .qubo import MoveTable, Qubo, as_bits, clamp, evaluate, move_values

if TYPE_CHECKING:
    from .samplers import NeighborhoodSampler

GREEDY = "greedy"
WEIGHTED_RANDOM = "weighted-random"

_REASONS = {
    kernels.STOP_MAX_ITERS: "max_iters",
    kernels.STOP_TARGET: "target",
    kernels.STOP_CUTOFF: "cutoff",
}


class TabuConfigError(ValueError):
    """The tabu configuration leaves no admissible move (tenure too large for n)."""


class SamplerError(RuntimeError):
    """A neighborhood sampler failed; carries the iteration it failed in."""

    def __init__(self, iteration: int, cause: BaseException):
        super().__init__(f"sampler failed at iteration {iteration}: {cause!r}")
        self.iteration = iteration


@dataclass(frozen=True)
class TabuParams:
    tenure: int = 5
    rand_tenure: int = 0
    max_iters: int = 1000
    improvement_cutoff: int | None = None
    target: float | None = None
    seed: int = 0
    k: int | None = None
    selection_mode: str = GREEDY

    def __post_init__(self):
        if self.tenure < 0 or self.rand_tenure < 0:
            raise ValueError("tenure and rand_tenure must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.improvement_cutoff is not None and self.improvement_cutoff < 1:
            raise ValueError("improvement_cutoff must be positive")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")
        if self.selection_mode not in (GREEDY, WEIGHTED_RANDOM):
            raise ValueError(f"unknown selection mode {self.selection_mode!r}")


@dataclass
class TabuState:
    x_ts: np.ndarray
    x_best: np.ndarray
    f_ts: float
    f_best: float
    tabu: np.ndarray
    move_table: np.ndarray
    iteration: int = 0

    @classmethod
    def start(cls, q: Qubo, x0) -> "TabuState":
        x = as_bits(x0, q.n)
        f = evaluate(q, x)
        return cls(x, x.copy(), f, f, np.zeros(q.n, dtype=np.int64), move_values(q, x))


@dataclass
class RunTrace:
    """Per-iteration record of a search run.

    Row ``t`` (0-based) describes iteration ``t + 1``; ``f_init`` is the value
    of the starting point, i.e. the state "after iteration 0".
    """

    f_init: float
    f_ts: np.ndarray
    f_best: np.ndarray
    n_flipped: np.ndarray
    accepted: np.ndarray
    reason: str
    candidate: np.ndarray = None
    problem: str = ""
    flipped: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.candidate is None:
            self.candidate = np.full(len(self.f_ts), np.nan)

    @property
    def iterations(self) -> int:
        return len(self.f_ts)

    def best_at(self, t: int) -> float:
        """Best value after ``t`` iterations; runs that stopped early keep their last value."""
        if t <= 0 or self.iterations == 0:
            return self.f_init
        return float(self.f_best[min(t, self.iterations) - 1])

    def best_curve(self, horizon: int) -> np.ndarray:
        """``best_at(t)`` for ``t = 0..horizon``."""
        out = np.empty(horizon + 1)
        out[0] = self.f_init
        m = min(horizon, self.iterations)
        out[1 : m + 1] = self.f_best[:m]
        out[m + 1 :] = out[m]
        return out

    def first_hit(self, target: float) -> int | None:
        """First iteration whose best value is ``<= target`` (0 for the start point)."""
        if self.f_init <= target:
            return 0
        hits = np.flatnonzero(self.f_best <= target)
        return int(hits[0]) + 1 if hits.size else None

    CSV_FIELDS = ("iteration", "f_ts", "f_best", "n_flipped", "accepted")

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        w.writerow([0, repr(self.f_init), repr(self.f_init), 0, 0])
        for t in range(self.iterations):
            w.writerow([t + 1, repr(float(self.f_ts[t])), repr(float(self.f_best[t])),
                        int(self.n_flipped[t]), int(bool(self.accepted[t]))])
        return fh.getvalue() if own else None

    @classmethod
    def from_csv(cls, fh, reason: str = "", problem: str = "") -> "RunTrace":
        rows = list(csv.DictReader(fh))
        if not rows or int(rows[0]["iteration"]) != 0:
            raise ValueError("trace CSV must start with the iteration-0 row")
        body = rows[1:]
        return cls(
            f_init=float(rows[0]["f_best"]),
            f_ts=np.array([float(r["f_ts"]) for r in body]),
            f_best=np.array([float(r["f_best"]) for r in body]),
            n_flipped=np.array([int(r["n_flipped"]) for r in body], dtype=np.int64),
            accepted=np.array([r["accepted"] == "1" for r in body], dtype=bool),
            reason=reason,
            problem=problem,
        )


class _TenureDraws:
    """Stream of ``Random(rTT)`` values, uniform on ``1..rTT`` (all zero when rTT = 0)."""

    def __init__(self, rng: np.random.Generator, rand_tenure: int):
        self.rng = rng
        self.r = rand_tenure

    def take(self, size: int) -> np.ndarray:
        if self.r == 0:
            return np.zeros(size, dtype=np.int64)
        return np.floor(self.rng.random(size) * self.r).astype(np.int64) + 1


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    tenure_seq, search_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(tenure_seq), np.random.default_rng(search_seq)


def basic_tabu_search(q: Qubo, x0, params: TabuParams) -> tuple[np.ndarray, float, RunTrace]:
    state = TabuState.start(q, x0)
    target = -np.inf if params.target is None else params.target
    empty = np.empty(0)
    if state.f_best <= target:
        trace = RunTrace(state.f_best, empty, empty, np.empty(0, dtype=np.int64), np.empty(0, bool), "target")
        return state.x_best, state.f_best, trace

    tenure_rng, _ = _streams(params.seed)
    draws = _TenureDraws(tenure_rng, params.rand_tenure).take(params.max_iters)
    f_ts = np.empty(params.max_iters)
    f_best = np.empty(params.max_iters)
    flips = np.empty(params.max_iters, dtype=np.int64)
    its, code, _, _ = kernels.tabu_run(
        q.couplings, state.x_ts, state.move_table, state.tabu, state.f_ts, state.f_best,
        state.x_best, params.tenure, draws, params.max_iters, target,
        params.improvement_cutoff or 0, f_ts, f_best, flips,
    )
    if code == kernels.STOP_STUCK:
        raise TabuConfigError(
            f"all {q.n} variables are tabu at iteration {its + 1} and no move aspires; "
            f"tenure {params.tenure}+{params.rand_tenure} is too large"
        )
    trace = RunTrace(
        f_init=state.f_ts,
        f_ts=f_ts[:its],
        f_best=f_best[:its],
        n_flipped=np.ones(its, dtype=np.int64),
        accepted=np.zeros(its, dtype=bool),
        reason=_REASONS[code],
        flipped=[[int(j)] for j in flips[:its]],
    )
    return state.x_best, evaluate(q, state.x_best), trace


def select_variables(table, tabu, k: int, mode: str, rng: np.random.Generator) -> np.ndarray:
    """Choose ``k`` non-tabu variables, greedily by move value or at random by rank."""
    delta = np.asarray(table.delta if isinstance(table, MoveTable) else table, dtype=np.float64)
    free = np.flatnonzero(np.asarray(tabu) == 0)
    if free.size < k:
        raise TabuConfigError(f"only {free.size} non-tabu variables, cannot select k={k}")
    order = free[np.lexsort((free, delta[free]))]
    if mode == GREEDY:
        return order[:k].copy()
    if mode == WEIGHTED_RANDOM:
        # rank weights: the best move gets len(free), the worst gets 1
        w = np.arange(free.size, 0, -1, dtype=np.float64)
        return rng.choice(order, size=k, replace=False, p=w / w.sum())
    raise ValueError(f"unknown selection mode {mode!r}")


def sampler_tabu_search(
    q: Qubo, x0, params: TabuParams, sampler: "NeighborhoodSampler"
) -> tuple[np.ndarray, float, RunTrace]:
    from .samplers import SamplerContext

    if params.k is None:
        raise ValueError("sampler_tabu_search needs params.k")
    if params.k > q.n:
        raise ValueError(f"k={params.k} exceeds n={q.n}")
    state = TabuState.start(q, x0)
    f_init = state.f_ts
    target = -np.inf if params.target is None else params.target
    tenure_rng, rng = _streams(params.seed)
    draws = _TenureDraws(tenure_rng, params.rand_tenure)
    W = q.couplings

    rows_fts, rows_fbest, rows_n, rows_acc, rows_cand, rows_flipped = [], [], [], [], [], []
    reason = "max_iters"
    stall = 0
    if state.f_best <= target:
        reason = "target"
    else:
        for it in range(1, params.max_iters + 1):
            delta = state.move_table
            free = state.tabu == 0
            if not free.any():
                raise TabuConfigError(f"all {q.n} variables are tabu at iteration {it}")
            j = int(np.argmin(np.where(free, delta, np.inf)))
            f_one = state.f_ts + delta[j]

            chosen = select_variables(delta, state.tabu, params.k, params.selection_mode, rng)
            sub = clamp(q, state.x_ts, chosen)
            ctx = SamplerContext(delta=delta[sub.parent_indices].copy(), x_ts=sub.restrict(state.x_ts))
            try:
                y = as_bits(sampler.sample_best(sub, rng, ctx), sub.k)
            except Exception as exc:
                raise SamplerError(it, exc) from exc
            f_cand = evaluate(sub.reduced, y)
            changed = sub.parent_indices[y != ctx.x_ts]
            accepted = f_cand < f_one and changed.size > 0
            flips = changed if accepted else np.array([j])

            for i in flips:
                state.f_ts += delta[i]
                kernels.flip_update(W, state.x_ts, delta, int(i))
            aspiration = state.f_ts < state.f_best
            if aspiration:
                state.f_best = state.f_ts
                state.x_best = state.x_ts.copy()
                stall = 0
            else:
                stall += 1
            np.subtract(state.tabu, 1, out=state.tabu, where=state.tabu > 0)
            if aspiration:
                state.tabu[flips] = 0
            else:
                state.tabu[flips] = params.tenure + draws.take(flips.size)
            state.iteration = it

            rows_fts.append(state.f_ts)
            rows_fbest.append(state.f_best)
            rows_n.append(flips.size)
            rows_acc.append(accepted)
            rows_cand.append(f_cand)
            rows_flipped.append(sorted(int(i) for i in flips))
            if state.f_best <= target:
                reason = "target"
                break
            if params.improvement_cutoff and stall >= params.improvement_cutoff:
                reason = "cutoff"
                break

    trace = RunTrace(
        f_init=f_init,
        f_ts=np.array(rows_fts, dtype=np.float64),
        f_best=np.array(rows_fbest, dtype=np.float64),
        n_flipped=np.array(rows_n, dtype=np.int64),
        accepted=np.array(rows_acc, dtype=bool),
        reason=reason,
        candidate=np.array(rows_cand, dtype=np.float64),
        flipped=rows_flipped,
    )
    return state.x_best, evaluate(q, state.x_best), trace
