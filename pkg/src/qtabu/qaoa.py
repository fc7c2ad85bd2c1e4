"""Dense statevector QAOA on clamped subproblems.

Bit ``j`` of a state index is subproblem variable ``j`` (little-endian), and
a bit value of 0 corresponds to spin +1.  The cost phase is applied with the
QUBO energies themselves; they differ from the Ising Hamiltonian only by a
constant, i.e. a global phase.

A layer is ``exp(-i beta X...) exp(-i gamma H_pen) exp(-i gamma H_C)``; the two
diagonal factors commute.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qubo import Qubo, SubProblem

MAX_QUBITS = 24


class TooManyQubits(ValueError):
    pass


@dataclass(frozen=True)
class PenaltySpec:
    """Locality penalty relative to a reference bitstring.

    Flipping variable ``j`` away from ``reference`` costs ``scale * weights[j]``.
    Uniform unit weights give ``scale * Hamming distance``.
    """

    weights: np.ndarray
    reference: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        r = np.asarray(self.reference, dtype=np.uint8)
        if w.shape != r.shape or w.ndim != 1:
            raise ValueError("weights and reference must be vectors of equal length")
        if self.scale < 0:
            raise ValueError("penalty scale must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "reference", r)

    @property
    def k(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class QaoaParams:
    gammas: Sequence[float]
    betas: Sequence[float]
    penalty: PenaltySpec | None = None
    shots: int = 1000

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gammas, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.betas, dtype=np.float64))
        if g.shape != b.shape or g.size < 1:
            raise ValueError("need p >= 1 and as many gammas as betas")
        if self.shots < 1:
            raise ValueError("shots must be positive")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_angles(cls, angles, **kwargs) -> "QaoaParams":
        """Split a flat ``[g_1..g_p, b_1..b_p]`` vector."""
        a = np.asarray(angles, dtype=np.float64)
        p = a.size // 2
        return cls(a[:p], a[p:], **kwargs)


@dataclass
class QaoaState:
    amplitudes: np.ndarray
    energies: np.ndarray

    @property
    def k(self) -> int:
        return int(self.energies.size).bit_length() - 1

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def uniform(cls, energies: np.ndarray) -> "QaoaState":
        n = energies.size
        return cls(np.full(n, 1 / np.sqrt(n), dtype=np.complex128), energies)

    @classmethod
    def basis(cls, energies: np.ndarray, index: int) -> "QaoaState":
        amp = np.zeros(energies.size, dtype=np.complex128)
        amp[index] = 1.0
        return cls(amp, energies)


def _check_k(k: int):
    if k > MAX_QUBITS:
        raise TooManyQubits(f"{k} qubits exceeds the {MAX_QUBITS}-qubit limit")


def qubo_energies(q: Qubo) -> np.ndarray:
    """``E[b] = q.evaluate(bits(b))`` for every index ``b`` in ``[0, 2^n)``."""
    n = q.n
    _check_k(n)
    c = q.coeffs
    e = np.array([q.offset])
    for j in range(n):
        # energy added by setting bit j, as a function of bits 0..j-1
        add = np.array([c[j, j]])
        for i in range(j):
            add = np.concatenate((add, add + c[i, j]))
        e = np.concatenate((e, e + add))
    return e


def diagonal_energies(sub: SubProblem | Qubo) -> np.ndarray:
    return qubo_energies(sub.reduced if isinstance(sub, SubProblem) else sub)


def _signs(k: int) -> np.ndarray:
    """``s[j, b]`` is +1 when bit j of b is 0, else -1."""
    idx = np.arange(1 << k)
    return 1.0 - 2.0 * ((idx[None, :] >> np.arange(k)[:, None]) & 1)


def penalty_diagonal(spec: PenaltySpec) -> np.ndarray:
    k = spec.k
    _check_k(k)
    coef = -0.5 * spec.scale * spec.weights * (1.0 - 2.0 * spec.reference)
    out = np.zeros(1 << k)
    for j in range(k):
        # bit j has period 2^(j+1): first half +1, second half -1
        block = np.concatenate((np.full(1 << j, coef[j]), np.full(1 << j, -coef[j])))
        out += np.tile(block, 1 << (k - j - 1))
    return out


def _mix(amp: np.ndarray, k: int, beta: float) -> None:
    c, s = np.cos(beta), -1j * np.sin(beta)
    for j in range(k):
        v = amp.reshape(-1, 2, 1 << j)
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :]
        v[:, 0, :] = c * a0 + s * a1
        v[:, 1, :] = s * a0 + c * a1


def apply_layer(state: QaoaState, gamma: float, beta: float, penalty: np.ndarray | None = None) -> QaoaState:
    """One cost (+ penalty) phase and mixer on a copy of ``state``."""
    amp = state.amplitudes * np.exp(-1j * gamma * state.energies)
    if penalty is not None:
        amp *= np.exp(-1j * gamma * penalty)
    _mix(amp, state.k, beta)
    return QaoaState(amp, state.energies)


def evolve(sub: SubProblem | Qubo, params: QaoaParams, energies: np.ndarray | None = None,
           penalty: np.ndarray | None = None) -> QaoaState:
    """Prepare the depth-p QAOA state from ``|+>^k``.

    ``energies`` and ``penalty`` may be passed precomputed to skip rebuilding
    the diagonals on every call.
    """
    if energies is None:
        energies = diagonal_energies(sub)
    _check_k(int(energies.size).bit_length() - 1)
    if penalty is None and params.penalty is not None:
        penalty = penalty_diagonal(params.penalty)
    state = QaoaState.uniform(energies)
    for g, b in zip(params.gammas, params.betas):
        state = apply_layer(state, g, b, penalty)
    return state


def exact_expectation(state: QaoaState) -> float:
    return float(state.probabilities @ state.energies)


def sample_indices(state: QaoaState, m: int, rng: np.random.Generator) -> np.ndarray:
    if m < 1:
        raise ValueError("need at least one sample")
    cdf = np.cumsum(state.probabilities)
    idx = np.searchsorted(cdf, rng.random(m) * cdf[-1], side="right")
    return np.minimum(idx, cdf.size - 1)


def index_to_bits(index: int, k: int) -> np.ndarray:
    return ((int(index) >> np.arange(k)) & 1).astype(np.uint8)


def bits_to_index(bits) -> int:
    return int(sum(int(b) << j for j, b in enumerate(bits)))


def sample(state: QaoaState, m: int, rng: np.random.Generator) -> list[tuple[np.ndarray, float]]:
    k = state.k
    return [(index_to_bits(i, k), float(state.energies[i])) for i in sample_indices(state, m, rng)]


def shot_expectation(state: QaoaState, m: int, rng: np.random.Generator) -> float:
    return float(state.energies[sample_indices(state, m, rng)].mean())


def improvement_probability(state: QaoaState, f_ref: float) -> float:
    """Probability mass on outcomes strictly better than ``f_ref``."""
    return float(state.probabilities[state.energies < f_ref].sum())


def dump_state_csv(state: QaoaState, fh) -> None:
    """Write ``index,re,im,energy`` rows; meant for small debugging states."""
    if state.k > 10:
        raise TooManyQubits("state dumps are limited to 10 qubits")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "re", "im", "energy"])
    for i, (a, e) in enumerate(zip(state.amplitudes, state.energies)):
        w.writerow([i, repr(float(a.real)), repr(float(a.imag)), repr(float(e))])
