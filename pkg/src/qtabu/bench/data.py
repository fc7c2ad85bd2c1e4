"""Instance catalogue: bqpgka naming, best-known values, references, JSON mirror.

An instance reference is ``path``, ``path:index`` (zero-based) or
``path:name``.  Files ending in ``.json`` are read as the JSON mirror of
:class:`~qtabu.qubo.Qubo`; everything else is parsed as OR-LIB ``bqp`` text.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from ..qubo import MAXIMIZE_NEGATED, Qubo, load_orlib, parse_orlib, write_orlib

# bqpgka holds 45 instances in this order; sizes are known for the d/e/f series.
BQPGKA_SERIES = (("a", 8), ("b", 10), ("c", 7), ("d", 10), ("e", 5), ("f", 5))
BQPGKA_NAMES = tuple(f"{i}{s}" for s, count in BQPGKA_SERIES for i in range(1, count + 1))
BQPGKA_SIZES = {"d": 100, "e": 200, "f": 500}

# Best-known maxima, used as stop targets.
BEST_KNOWN = {
    "1d": 6333, "2d": 6579, "3d": 9261, "4d": 10727, "5d": 11626,
    "1e": 16464, "2e": 23395, "3e": 25243, "4e": 35594, "5e": 35154,
    "1f": 61194, "2f": 100161, "3f": 138035, "4f": 172771, "5f": 190507,
}

BQPGKA_ENV = "QTABU_BQPGKA"


class InstanceError(ValueError):
    """A reference could not be resolved to an instance."""


def name_bqpgka(qubos: list[Qubo]) -> list[Qubo]:
    """Attach bqpgka names to a freshly parsed 45-instance file."""
    if len(qubos) != len(BQPGKA_NAMES):
        raise InstanceError(f"bqpgka holds {len(BQPGKA_NAMES)} instances, file has {len(qubos)}")
    out = []
    for q, name in zip(qubos, BQPGKA_NAMES):
        want = BQPGKA_SIZES.get(name[-1])
        if want is not None and q.n != want:
            raise InstanceError(f"instance {name} has n={q.n}, expected {want}")
        out.append(Qubo(q.coeffs, q.offset, q.sense, name, dict(q.meta)))
    return out


def bqpgka_path() -> Path | None:
    """Location of a local bqpgka file from ``$QTABU_BQPGKA``, if it exists."""
    p = os.environ.get(BQPGKA_ENV)
    return Path(p) if p and Path(p).is_file() else None


def best_known_min(q: Qubo) -> float | None:
    """Best-known value of ``q`` in the minimization convention, if tabulated."""
    v = BEST_KNOWN.get(q.name)
    if v is None:
        return None
    return -float(v) if q.sense == MAXIMIZE_NEGATED else float(v)


# ---------------------------------------------------------------------------
# JSON mirror


def qubo_to_json(q: Qubo) -> dict:
    return {
        "n": q.n,
        "offset": q.offset,
        "sense": q.sense,
        "name": q.name,
        "terms": [[i, j, v] for (i, j), v in q.terms().items()],
        "meta": q.meta,
    }


def qubo_from_json(obj: dict) -> Qubo:
    base = Qubo.from_terms(int(obj["n"]), [tuple(t) for t in obj["terms"]], obj.get("offset", 0.0))
    return Qubo(base.coeffs, base.offset, obj.get("sense", "minimize"), obj.get("name", ""), dict(obj.get("meta", {})))


def dump_qubos_json(qubos: list[Qubo], fh) -> None:
    json.dump({"format": "qtabu.qubo/1", "instances": [qubo_to_json(q) for q in qubos]}, fh, indent=1, sort_keys=True)


def load_qubos_json(fh) -> list[Qubo]:
    obj = json.load(fh)
    if isinstance(obj, dict) and "instances" in obj:
        return [qubo_from_json(o) for o in obj["instances"]]
    return [qubo_from_json(obj)]


# ---------------------------------------------------------------------------
# references


def load_file(path) -> list[Qubo]:
    path = Path(path)
    if not path.is_file():
        raise InstanceError(f"no such instance file: {path}")
    if path.suffix == ".json":
        with open(path) as fh:
            return load_qubos_json(fh)
    qubos = load_orlib(path)
    if len(qubos) == len(BQPGKA_NAMES) and "gka" in path.name.lower():
        return name_bqpgka(qubos)
    out = []
    for i, q in enumerate(qubos):
        name = path.stem if len(qubos) == 1 else f"{path.stem}:{i}"
        out.append(Qubo(q.coeffs, q.offset, q.sense, name, dict(q.meta)))
    return out


def split_ref(ref: str) -> tuple[str, str | None]:
    # the path is the shortest colon-delimited prefix naming a file;
    # the selector may itself contain colons (e.g. generated names "stem:3")
    if Path(ref).is_file():
        return ref, None
    pos = ref.find(":")
    while pos != -1:
        if Path(ref[:pos]).is_file():
            return ref[:pos], ref[pos + 1 :]
        pos = ref.find(":", pos + 1)
    path, sep, sel = ref.rpartition(":")
    return (path, sel) if sep else (ref, None)


def resolve(ref: str) -> list[Qubo]:
    """All instances named by ``ref`` (a whole file when no selector is given)."""
    path, sel = split_ref(ref)
    qubos = load_file(path)
    if sel is None:
        return qubos
    if sel.isdigit():
        idx = int(sel)
        if idx >= len(qubos):
            raise InstanceError(f"{path} has {len(qubos)} instances, index {idx} is out of range")
        return [qubos[idx]]
    hits = [q for q in qubos if q.name == sel]
    if not hits:
        raise InstanceError(f"no instance named {sel!r} in {path}")
    return hits


def resolve_one(ref: str) -> Qubo:
    qubos = resolve(ref)
    if len(qubos) != 1:
        raise InstanceError(f"{ref} names {len(qubos)} instances, expected one")
    return qubos[0]


# ---------------------------------------------------------------------------
# synthetic stand-in for the first bqpgka series


def synthetic_a_series(seed: int = 0, sizes=(30, 40, 50, 60, 70, 80, 90, 100), density: float = 0.3) -> list[Qubo]:
    """Eight small integer maximization instances in the style of bqpgka 1a-8a.

    Coefficients are uniform integers in [-100, 100].  The instances go
    through the OR-LIB writer and parser so they carry the same sense and
    negation as real files.
    """
    rng = np.random.default_rng(seed)
    raw = []
    for n in sizes:
        q = np.triu(rng.integers(-100, 101, size=(n, n)).astype(np.float64))
        mask = np.triu(rng.random((n, n)) < density, 1) | np.eye(n, dtype=bool)
        raw.append(Qubo(q * mask))
    parsed = parse_orlib(write_orlib(raw))
    return [Qubo(q.coeffs, q.offset, q.sense, f"syn{i + 1}a", {"synthetic": True, "seed": seed})
            for i, q in enumerate(parsed)]
