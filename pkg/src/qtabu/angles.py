"""Budgeted derivative-free search over QAOA angles.

The optimizer is a separable (mu/mu_w, lambda) evolution strategy with
per-coordinate step sizes driven by a cumulative path, restarted in the
BIPOP pattern: runs with the default population alternate with runs whose
population doubles each time, and the regime that has consumed less budget
goes next.  The first evaluation is always the all-zero angle vector (the
uniform superposition), so the result can never be worse than that point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qaoa import diagonal_energies
from .qubo import SubProblem

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class OptBudget:
    max_evals: int = 2000
    restarts: str = "doubling-population"
    seed: int = 0
    gamma_box: tuple[float, float] = (0.0, TWO_PI)
    beta_box: tuple[float, float] = (0.0, math.pi)

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")
        if self.restarts not in ("none", "doubling-population"):
            raise ValueError(f"unknown restart strategy {self.restarts!r}")


@dataclass
class OptResult:
    best_angles: np.ndarray
    best_value: float
    evals_used: int
    history: list[tuple[np.ndarray, float]] = field(default_factory=list, repr=False)

    def dump_history_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        p = len(self.best_angles) // 2
        w.writerow(["eval"] + [f"gamma_{i + 1}" for i in range(p)] + [f"beta_{i + 1}" for i in range(p)] + ["value"])
        for i, (a, v) in enumerate(self.history):
            w.writerow([i] + [repr(float(t)) for t in a] + [repr(v)])


class _Budget(Exception):
    pass


def wrap_angles(angles: np.ndarray, p: int) -> np.ndarray:
    out = np.array(angles, dtype=np.float64)
    out[:p] = np.mod(out[:p], TWO_PI)
    out[p:] = np.mod(out[p:], math.pi)
    return out


def optimize_angles(
    objective: Callable[[np.ndarray], float],
    p: int,
    budget: OptBudget = OptBudget(),
    x0: np.ndarray | None = None,
) -> OptResult:
    """Minimize ``objective`` over ``[gamma_1..gamma_p, beta_1..beta_p]``.

    ``x0`` optionally seeds the first run's mean (warm start).  The objective
    is called strictly sequentially, at most ``budget.max_evals`` times.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    dim = 2 * p
    rng = np.random.default_rng(budget.seed)
    lo = np.array([budget.gamma_box[0]] * p + [budget.beta_box[0]] * p)
    hi = np.array([budget.gamma_box[1]] * p + [budget.beta_box[1]] * p)
    width = hi - lo
    history: list[tuple[np.ndarray, float]] = []
    best = [None, math.inf]

    def f(theta):
        if len(history) >= budget.max_evals:
            raise _Budget
        a = wrap_angles(theta, p)
        v = float(objective(a))
        if not math.isfinite(v):
            raise ValueError(f"objective returned {v} at angles {a.tolist()}")
        history.append((a, v))
        if v < best[1]:
            best[0], best[1] = a, v
        return v

    base_pop = 4 + int(3 * math.log(dim))
    try:
        f(np.zeros(dim))
        large_runs = 0
        used = {"small": 0, "large": 0}
        first = True
        while True:
            if first:
                regime, lam = "small", base_pop
                sigma0 = 0.3 * width
            elif used["small"] < used["large"]:
                regime, lam = "small", base_pop
                sigma0 = 0.3 * width * 10 ** (-2 * rng.random())
            else:
                large_runs += 1
                regime, lam = "large", base_pop * 2**large_runs
                sigma0 = 0.3 * width
            if first and x0 is not None:
                mean = wrap_angles(np.asarray(x0, dtype=np.float64), p)
            else:
                mean = lo + rng.random(dim) * width
            start = len(history)
            try:
                _es_run(f, mean, sigma0, lam, rng, width)
            finally:
                used[regime] += len(history) - start
            if budget.restarts == "none":
                break
            first = False
    except _Budget:
        pass
    return OptResult(np.asarray(best[0]), float(best[1]), len(history), history)


def _es_run(f, mean, sigma0, lam, rng, width, max_stall: int = 20):
    dim = mean.size
    mu = lam // 2
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mu_eff = 1.0 / np.sum(w**2)
    c_s = (mu_eff + 2) / (dim + mu_eff + 5)
    damp = 1 + c_s + 2 * max(0.0, math.sqrt((mu_eff - 1) / (dim + 1)) - 1)
    chi = math.sqrt(2 / math.pi)  # E|N(0,1)|
    sigma = np.array(sigma0, dtype=np.float64)
    path = np.zeros(dim)
    run_best = math.inf
    stall = 0
    while True:
        z = rng.standard_normal((lam, dim))
        values = np.array([f(mean + sigma * zi) for zi in z])
        order = np.argsort(values, kind="stable")
        zw = w @ z[order[:mu]]
        mean = mean + sigma * zw
        path = (1 - c_s) * path + math.sqrt(c_s * (2 - c_s) * mu_eff) * zw
        sigma = sigma * np.exp((c_s / damp) * (np.abs(path) / chi - 1))
        sigma = np.minimum(sigma, width)
        gen_best = values[order[0]]
        if gen_best < run_best - 1e-12 * max(1.0, abs(run_best)):
            run_best = gen_best
            stall = 0
        else:
            stall += 1
        if stall >= max_stall or np.all(sigma < 1e-8 * width):
            return


def subproblem_quality_ratio(sub: SubProblem, result: OptResult | None = None,
                             sampler_best: float | None = None) -> float:
    """Range-normalized quality of a value found on ``sub``.

    ``(E_max - v) / (E_max - E_min)`` over the subproblem's exact spectrum:
    1.0 at the optimum, 0.0 at the worst assignment.  ``v`` defaults to
    ``result.best_value``.  A flat spectrum scores 1.0.
    """
    v = result.best_value if sampler_best is None else sampler_best
    e = diagonal_energies(sub)
    lo, hi = float(e.min()), float(e.max())
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        return 1.0
    return (hi - v) / (hi - lo)
