"""Neighborhood samplers: brute force, fixed-temperature SA, and QAOA.

A sampler receives a clamped :class:`~qtabu.qubo.SubProblem` and returns one
length-``k`` candidate.  The tabu engine also hands over a
:class:`SamplerContext` with the parent's move values and the current
solution restricted to the subproblem; only the penalized QAOA sampler uses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from . import kernels
from .angles import OptBudget, OptResult, optimize_angles
from .qaoa import (
    MAX_QUBITS,
    PenaltySpec,
    QaoaParams,
    QaoaState,
    TooManyQubits,
    diagonal_energies,
    evolve,
    improvement_probability,
    index_to_bits,
    penalty_diagonal,
    sample_indices,
)
from .qubo import SubProblem

__all__ = [
    "NeighborhoodSampler",
    "SamplerContext",
    "BruteForceSampler",
    "SimulatedAnnealingSampler",
    "QaoaSampler",
    "SaConfig",
    "QaoaSamplerConfig",
    "brute_force_best",
    "sa_best",
    "sa_energies",
    "qaoa_best",
    "improvement_probability",
]


@dataclass(frozen=True)
class SamplerContext:
    delta: np.ndarray
    x_ts: np.ndarray


class NeighborhoodSampler(Protocol):
    def sample_best(self, sub: SubProblem, rng: np.random.Generator,
                    context: SamplerContext | None = None) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# brute force


def brute_force_best(sub: SubProblem) -> np.ndarray:
    """Exact minimizer; ties go to the lowest state index."""
    e = diagonal_energies(sub)
    return index_to_bits(int(np.argmin(e)), sub.k)


class BruteForceSampler:
    def sample_best(self, sub, rng=None, context=None):
        return brute_force_best(sub)


# ---------------------------------------------------------------------------
# simulated annealing


@dataclass(frozen=True)
class SaConfig:
    temperature: float = 17.5
    steps: int = 100
    restarts: int = 1

    def __post_init__(self):
        if not (self.temperature > 0 and self.steps > 0 and self.restarts > 0):
            raise ValueError("temperature, steps and restarts must all be positive")


def sa_energies(sub: SubProblem, cfg: SaConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Best-of-chain energy and state for each of ``cfg.restarts`` chains."""
    q = sub.reduced
    starts = rng.integers(0, 2, size=(cfg.restarts, q.n), dtype=np.uint8)
    uniforms = rng.random((cfg.restarts, cfg.steps))
    return kernels.sa_run(q.couplings, q.linear, q.offset, starts, uniforms, float(cfg.temperature))


def sa_best(sub: SubProblem, cfg: SaConfig, rng: np.random.Generator) -> np.ndarray:
    e, states = sa_energies(sub, cfg, rng)
    return states[int(np.argmin(e))].copy()


@dataclass
class SimulatedAnnealingSampler:
    config: SaConfig = field(default_factory=SaConfig)

    def sample_best(self, sub, rng, context=None):
        return sa_best(sub, self.config, rng)


# ---------------------------------------------------------------------------
# QAOA


@dataclass(frozen=True)
class QaoaSamplerConfig:
    p: int = 1
    penalized: bool = False
    A: float = 1.0
    m: int = 10
    use_optimizer_history: bool = False
    budget: OptBudget = field(default_factory=OptBudget)
    shots: int = 1000
    warm_start: bool = False
    angles: tuple[float, ...] | None = None  # fixed angles skip the optimizer
    label: str = ""

    def __post_init__(self):
        if self.p < 1 or self.m < 1 or self.shots < 1:
            raise ValueError("p, m and shots must be positive")
        if self.angles is not None and len(self.angles) != 2 * self.p:
            raise ValueError(f"expected {2 * self.p} fixed angles, got {len(self.angles)}")


@dataclass
class QaoaRun:
    """Everything one ``qaoa_best`` call produced, for diagnostics."""

    best: np.ndarray
    best_energy: float
    state: QaoaState
    angles: np.ndarray
    opt: OptResult | None


def qaoa_run(sub: SubProblem, cfg: QaoaSamplerConfig, context: SamplerContext | None,
             rng: np.random.Generator, x0: np.ndarray | None = None) -> QaoaRun:
    k = sub.k
    if k > MAX_QUBITS:
        raise TooManyQubits(f"subproblem of {k} variables exceeds {MAX_QUBITS} qubits")
    energies = diagonal_energies(sub)
    penalty = None
    if cfg.penalized:
        if context is None:
            raise ValueError("penalized QAOA needs the move values and current solution")
        penalty = penalty_diagonal(PenaltySpec(context.delta, context.x_ts, cfg.A))

    seen = [math.inf, -1]

    def note(idx):
        j = idx[np.argmin(energies[idx])]
        if energies[j] < seen[0] or (energies[j] == seen[0] and j < seen[1]):
            seen[0], seen[1] = float(energies[j]), int(j)

    opt = None
    if cfg.angles is not None:
        angles = np.asarray(cfg.angles, dtype=np.float64)
    else:
        shot_rng = np.random.default_rng(rng.integers(2**63))
        budget = replace(cfg.budget, seed=int(rng.integers(2**63)))

        def objective(a):
            state = evolve(None, QaoaParams.from_angles(a), energies, penalty)
            idx = sample_indices(state, cfg.shots, shot_rng)
            if cfg.use_optimizer_history:
                note(idx)
            return float(energies[idx].mean())

        opt = optimize_angles(objective, cfg.p, budget, x0=x0)
        angles = opt.best_angles

    state = evolve(None, QaoaParams.from_angles(angles), energies, penalty)
    final = sample_indices(state, cfg.m, rng)
    if not cfg.use_optimizer_history:
        seen = [math.inf, -1]
    note(final)
    return QaoaRun(index_to_bits(seen[1], k), seen[0], state, angles, opt)


def qaoa_best(sub: SubProblem, cfg: QaoaSamplerConfig, context: SamplerContext | None,
              rng: np.random.Generator) -> np.ndarray:
    """Optimize angles against the shot-noise expectation, then return the best of ``m`` draws."""
    return qaoa_run(sub, cfg, context, rng).best


class QaoaSampler:
    def __init__(self, config: QaoaSamplerConfig | None = None):
        self.config = config or QaoaSamplerConfig()
        self._last_angles = None

    def sample_best(self, sub, rng, context=None):
        x0 = self._last_angles if self.config.warm_start else None
        run = qaoa_run(sub, self.config, context, rng, x0=x0)
        self._last_angles = run.angles
        return run.best
