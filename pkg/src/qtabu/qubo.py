"""QUBO data model, OR-LIB ingestion, Ising conversion, move values and clamping.

A :class:`Qubo` stores an upper-triangular coefficient matrix ``Q`` and a
constant ``offset``; its objective is

    f(x) = offset + sum_{i <= j} x_i Q[i, j] x_j

Everything in this package minimizes.  OR-LIB ``bqp`` files describe
maximization problems, so :func:`parse_orlib` negates them on the way in and
records that in :attr:`Qubo.sense`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from . import kernels

MINIMIZE = "minimize"
MAXIMIZE_NEGATED = "maximize-negated"


class ParseError(ValueError):
    """Malformed OR-LIB input; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Qubo:
    """Upper-triangular QUBO over ``n`` binary variables.

    ``coeffs`` is an ``(n, n)`` float array; entries below the diagonal must
    be zero (use :meth:`from_terms` to fold arbitrary ``(i, j)`` records).
    """

    coeffs: np.ndarray
    offset: float = 0.0
    sense: str = MINIMIZE
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        q = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"coeffs must be square, got shape {q.shape}")
        if np.any(np.tril(q, -1)):
            raise ValueError("coeffs must be upper triangular")
        if self.sense not in (MINIMIZE, MAXIMIZE_NEGATED):
            raise ValueError(f"unknown sense {self.sense!r}")
        q.setflags(write=False)
        object.__setattr__(self, "coeffs", q)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_terms(
        cls,
        n: int,
        terms: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]],
        offset: float = 0.0,
        **kwargs,
    ) -> "Qubo":
        """Build from ``(i, j) -> value`` records; ``i > j`` is folded, repeats add up."""
        q = np.zeros((n, n))
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = (((t[0], t[1]), t[2]) for t in terms)
        for (i, j), v in items:
            if not (0 <= i < n and 0 <= j < n):
                raise IndexError(f"index ({i}, {j}) out of range for n={n}")
            if i > j:
                i, j = j, i
            q[i, j] += v
        return cls(q, offset, **kwargs)

    @classmethod
    def zeros(cls, n: int) -> "Qubo":
        return cls(np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @cached_property
    def linear(self) -> np.ndarray:
        return np.ascontiguousarray(np.diag(self.coeffs))

    @cached_property
    def couplings(self) -> np.ndarray:
        """Symmetric pairwise matrix ``W = U + U.T`` with a zero diagonal."""
        u = np.triu(self.coeffs, 1)
        w = np.ascontiguousarray(u + u.T)
        w.setflags(write=False)
        return w

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coeffs))

    def terms(self) -> dict[tuple[int, int], float]:
        ii, jj = np.nonzero(self.coeffs)
        return {(int(i), int(j)): float(self.coeffs[i, j]) for i, j in zip(ii, jj)}

    def evaluate(self, x) -> float:
        return evaluate(self, x)

    def report_value(self, value: float) -> float:
        """Map an internal (minimized) value back to the source instance's sense."""
        return -value if self.sense == MAXIMIZE_NEGATED else value


@dataclass(frozen=True)
class IsingModel:
    """Spin model ``sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset``."""

    h: np.ndarray
    J: dict[tuple[int, int], float]
    offset: float = 0.0

    @property
    def n(self) -> int:
        return len(self.h)

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=np.float64)
        e = float(self.h @ s) + self.offset
        for (i, j), v in self.J.items():
            e += v * s[i] * s[j]
        return e


def as_bits(x, n: int | None = None) -> np.ndarray:
    """Validate and copy ``x`` into a ``uint8`` 0/1 vector."""
    b = np.asarray(x)
    if b.ndim != 1:
        raise ValueError("bitstring must be one-dimensional")
    if n is not None and b.shape[0] != n:
        raise ValueError(f"bitstring length {b.shape[0]} does not match n={n}")
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ValueError("bitstring entries must be 0 or 1")
    return b.astype(np.uint8)


def spins(x) -> np.ndarray:
    """Bits to spins under ``x = (1 - s) / 2`` (bit 0 is spin +1)."""
    return 1 - 2 * np.asarray(x, dtype=np.int64)


def evaluate(q: Qubo, x) -> float:
    b = as_bits(x, q.n).astype(np.float64)
    return q.offset + float(b @ q.coeffs @ b)


def to_ising(q: Qubo) -> IsingModel:
    d = q.linear
    w = q.couplings
    h = -d / 2 - w.sum(axis=1) / 4
    J = {(i, j): v / 4 for (i, j), v in q.terms().items() if i != j}
    offset = q.offset + d.sum() / 2 + np.triu(q.coeffs, 1).sum() / 4
    return IsingModel(h=h, J=J, offset=float(offset))


# ---------------------------------------------------------------------------
# OR-LIB bqp format


def parse_orlib(text: str | TextIO) -> list[Qubo]:
    """Parse an OR-LIB ``bqp`` stream into minimization QUBOs.

    The stream holds an instance count, then for each instance a header
    ``n m`` followed by ``m`` records ``i j v`` with 1-based indices.
    Coefficients are negated because the source problems maximize.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    lines = ((no, ln.split()) for no, ln in enumerate(stream, start=1))
    lines = ((no, toks) for no, toks in lines if toks)

    def next_line(what: str, last: int):
        try:
            return next(lines)
        except StopIteration:
            raise ParseError(f"unexpected end of input, expected {what}", last + 1) from None

    lineno, toks = next_line("instance count", 0)
    if len(toks) != 1:
        raise ParseError(f"expected instance count, got {' '.join(toks)!r}", lineno)
    count = _parse_int(toks[0], lineno)
    if count < 0:
        raise ParseError("negative instance count", lineno)

    out = []
    for inst in range(count):
        lineno, toks = next_line(f"header of instance {inst + 1}", lineno)
        if len(toks) != 2:
            raise ParseError(f"malformed header {' '.join(toks)!r}, expected 'n m'", lineno)
        n, m = _parse_int(toks[0], lineno), _parse_int(toks[1], lineno)
        if n < 1 or m < 0:
            raise ParseError(f"invalid header n={n} m={m}", lineno)
        q = np.zeros((n, n))
        for rec in range(m):
            lineno, toks = next_line(f"record {rec + 1} of {m} for instance {inst + 1}", lineno)
            if len(toks) != 3:
                raise ParseError(f"malformed record {' '.join(toks)!r}, expected 'i j v'", lineno)
            i, j = _parse_int(toks[0], lineno) - 1, _parse_int(toks[1], lineno) - 1
            try:
                v = float(toks[2])
            except ValueError:
                raise ParseError(f"bad coefficient {toks[2]!r}", lineno) from None
            if not (0 <= i < n and 0 <= j < n):
                raise ParseError(f"index ({i + 1}, {j + 1}) out of range for n={n}", lineno)
            if i > j:
                i, j = j, i
            q[i, j] -= v
        out.append(Qubo(q, sense=MAXIMIZE_NEGATED, name=str(inst)))
    return out


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer, got {tok!r}", lineno) from None


def write_orlib(qubos: Sequence[Qubo]) -> str:
    """Serialize QUBOs in the OR-LIB ``bqp`` layout.

    Instances whose sense is ``maximize-negated`` are negated back so that
    ``parse_orlib(write_orlib(qs))`` reproduces the coefficients.  Offsets
    have no place in the format and are dropped.
    """
    parts = [f"{len(qubos)}\n"]
    for q in qubos:
        sign = -1.0 if q.sense == MAXIMIZE_NEGATED else 1.0
        terms = q.terms()
        parts.append(f"{q.n} {len(terms)}\n")
        for (i, j), v in terms.items():
            parts.append(f"{i + 1} {j + 1} {_fmt(sign * v)}\n")
    return "".join(parts)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 2**53 else repr(float(v))


def load_orlib(path) -> list[Qubo]:
    with open(path) as fh:
        return parse_orlib(fh)


# ---------------------------------------------------------------------------
# one-flip move values


def _owner_token(q: Qubo, x: np.ndarray) -> int:
    return hash((id(q), x.tobytes()))


@dataclass(frozen=True, eq=False)
class MoveTable:
    """``delta[i]`` is ``f(flip(x, i)) - f(x)`` for the owning ``(q, x)`` pair."""

    delta: np.ndarray
    owner_hash: int

    def __post_init__(self):
        self.delta.setflags(write=False)


def move_values(q: Qubo, x: np.ndarray) -> np.ndarray:
    """Unchecked O(n^2) one-flip gains as a fresh writable array."""
    xf = x.astype(np.float64)
    return (1.0 - 2.0 * xf) * (q.linear + q.couplings @ xf)


def init_move_table(q: Qubo, x) -> MoveTable:
    b = as_bits(x, q.n)
    return MoveTable(move_values(q, b), _owner_token(q, b))


def apply_flip(q: Qubo, x, table: MoveTable, i: int) -> tuple[np.ndarray, MoveTable]:
    """Flip bit ``i`` and update the move table in O(n)."""
    b = as_bits(x, q.n)
    if not 0 <= i < q.n:
        raise IndexError(f"flip index {i} out of range for n={q.n}")
    if table.owner_hash != _owner_token(q, b):
        raise ValueError("move table does not belong to this (qubo, bitstring) pair")
    delta = np.array(table.delta, dtype=np.float64)
    kernels.flip_update(q.couplings, b, delta, i)
    return b, MoveTable(delta, _owner_token(q, b))


# ---------------------------------------------------------------------------
# clamping


@dataclass(frozen=True, eq=False)
class SubProblem:
    """QUBO over a subset of a parent's variables, the rest fixed from ``base``."""

    parent_indices: np.ndarray
    reduced: Qubo
    base: np.ndarray

    @property
    def k(self) -> int:
        return len(self.parent_indices)

    def embed(self, y) -> np.ndarray:
        y = as_bits(y, self.k)
        x = self.base.copy()
        x[self.parent_indices] = y
        return x

    def restrict(self, x) -> np.ndarray:
        return np.asarray(x)[self.parent_indices].astype(np.uint8)


def clamp(q: Qubo, x_ts, selected) -> SubProblem:
    """Fix every variable outside ``selected`` to its value in ``x_ts``."""
    base = as_bits(x_ts, q.n)
    sel = np.asarray(list(selected), dtype=np.int64)
    if sel.size == 0:
        raise ValueError("empty selection")
    if np.unique(sel).size != sel.size:
        raise ValueError("duplicate indices in selection")
    if sel.min() < 0 or sel.max() >= q.n:
        raise IndexError("selection index out of range")
    sel = np.sort(sel)

    fixed = base.astype(np.float64)
    fixed[sel] = 0.0
    sub = q.coeffs[np.ix_(sel, sel)].copy()
    sub[np.diag_indices_from(sub)] += (q.couplings @ fixed)[sel]
    offset = q.offset + float(fixed @ q.coeffs @ fixed)
    reduced = Qubo(sub, offset, sense=q.sense, name=q.name)
    sel.setflags(write=False)
    base.setflags(write=False)
    return SubProblem(sel, reduced, base)
