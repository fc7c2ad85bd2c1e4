"""Experiment matrix: instances x algorithms x tenures x k x seeds."""

from __future__ import annotations

import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache, partial
from pathlib import Path

import numpy as np

from .. import __version__
from ..angles import OptBudget
from ..kernels import BACKEND
from ..qubo import MAXIMIZE_NEGATED, Qubo
from ..samplers import (
    BruteForceSampler,
    QaoaSampler,
    QaoaSamplerConfig,
    SaConfig,
    SimulatedAnnealingSampler,
)
from ..tabu import GREEDY, WEIGHTED_RANDOM, RunTrace, TabuParams, basic_tabu_search, sampler_tabu_search
from .data import BEST_KNOWN, resolve_one

MANIFEST_SCHEMA = "qtabu.manifest/1"
ALGORITHMS = ("basic", "brute-force", "sa", "qaoa", "qaoa-penalized")


class ConfigError(ValueError):
    """The experiment description itself is invalid."""


@dataclass
class ExperimentSpec:
    """Full description of a run matrix.

    ``targets`` is ``"best-known"`` (the shipped table), ``"none"``, or the
    path of a JSON object mapping instance name to a target in the
    instance's reporting convention (maxima for OR-LIB files).
    """

    instances: list
    seeds: list
    algorithms: list = field(default_factory=lambda: ["basic"])
    tenures: list = field(default_factory=lambda: [5])
    rand_tenure: int = 0
    ks: list = field(default_factory=lambda: [10])
    max_iters: int = 1000
    improvement_cutoff: int | None = None
    selection_mode: str = GREEDY
    targets: str = "best-known"
    p: int = 1
    A: float = 1.0
    m: int = 10
    shots: int = 1000
    max_evals: int = 2000
    sa_temperature: float = 17.5
    sa_steps: int = 100
    sa_restarts: int = 1

    def validate(self) -> None:
        if not self.instances:
            raise ConfigError("at least one instance is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for name in ("algorithms", "tenures", "ks"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithm(s) {bad}; choose from {list(ALGORITHMS)}")
        if any(t < 0 for t in self.tenures) or self.rand_tenure < 0:
            raise ConfigError("tenures must be nonnegative")
        if any(k < 1 for k in self.ks):
            raise ConfigError("k values must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if self.selection_mode not in (GREEDY, WEIGHTED_RANDOM):
            raise ConfigError(f"unknown selection mode {self.selection_mode!r}")
        if min(self.p, self.m, self.shots, self.max_evals, self.sa_steps, self.sa_restarts) < 1:
            raise ConfigError("p, m, shots, max_evals, sa_steps and sa_restarts must be positive")
        if self.sa_temperature <= 0:
            raise ConfigError("sa_temperature must be positive")
        if self.targets not in ("best-known", "none") and not Path(self.targets).is_file():
            raise ConfigError(f"targets file {self.targets!r} not found")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown experiment fields {sorted(extra)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def cells(self) -> list["Cell"]:
        out = []
        for ref in self.instances:
            for alg in self.algorithms:
                for tt in self.tenures:
                    for k in ([None] if alg == "basic" else self.ks):
                        for seed in self.seeds:
                            out.append(Cell(len(out), ref, alg, int(tt), None if k is None else int(k), int(seed)))
        return out


@dataclass(frozen=True)
class Cell:
    index: int
    instance: str
    algorithm: str
    tenure: int
    k: int | None
    seed: int

    @property
    def slug(self) -> str:
        inst = re.sub(r"[^A-Za-z0-9]+", "-", Path(self.instance).name).strip("-")
        k = "" if self.k is None else f"_k{self.k}"
        return f"{self.index:05d}_{inst}_{self.algorithm}_tt{self.tenure}{k}_s{self.seed}"


@dataclass
class ExperimentResult:
    rows: list
    manifest: dict

    @property
    def failed(self) -> int:
        return sum(r["status"] != "ok" for r in self.rows)


@lru_cache(maxsize=64)
def _instance(ref: str) -> Qubo:
    return resolve_one(ref)


@lru_cache(maxsize=8)
def _target_table(source: str) -> dict:
    if source == "best-known":
        return dict(BEST_KNOWN)
    if source == "none":
        return {}
    with open(source) as fh:
        return {str(k): float(v) for k, v in json.load(fh).items()}


def _target_min(q: Qubo, source: str) -> float | None:
    v = _target_table(source).get(q.name)
    if v is None:
        return None
    return -float(v) if q.sense == MAXIMIZE_NEGATED else float(v)


def _sampler(spec: ExperimentSpec, algorithm: str):
    if algorithm == "brute-force":
        return BruteForceSampler()
    if algorithm == "sa":
        return SimulatedAnnealingSampler(SaConfig(spec.sa_temperature, spec.sa_steps, spec.sa_restarts))
    cfg = QaoaSamplerConfig(
        p=spec.p,
        penalized=algorithm == "qaoa-penalized",
        A=spec.A,
        m=spec.m,
        shots=spec.shots,
        budget=OptBudget(max_evals=spec.max_evals),
        label=algorithm,
    )
    return QaoaSampler(cfg)


def run_cell(spec: ExperimentSpec, out_dir: Path | None, cell: Cell, trace_path=None) -> dict:
    """Execute one cell; failures become a row with ``status="error"``.

    The trace goes to ``trace_path`` if given, else under ``out_dir/traces``.
    """
    row = {
        "cell": cell.index,
        "instance": cell.instance,
        "algorithm": cell.algorithm,
        "tenure": cell.tenure,
        "rand_tenure": spec.rand_tenure,
        "k": cell.k,
        "seed": cell.seed,
        "status": "ok",
    }
    try:
        q = _instance(cell.instance)
        target = _target_min(q, spec.targets)
        params = TabuParams(
            tenure=cell.tenure,
            rand_tenure=spec.rand_tenure,
            max_iters=spec.max_iters,
            improvement_cutoff=spec.improvement_cutoff,
            target=target,
            seed=cell.seed,
            k=cell.k,
            selection_mode=spec.selection_mode,
        )
        x0 = np.zeros(q.n, dtype=np.uint8)
        if cell.algorithm == "basic":
            x, f, trace = basic_tabu_search(q, x0, params)
        else:
            x, f, trace = sampler_tabu_search(q, x0, params, _sampler(spec, cell.algorithm))
        row.update(
            name=q.name,
            n=q.n,
            best=q.report_value(f),
            best_min=f,
            target=None if target is None else q.report_value(target),
            target_min=target,
            first_hit=None if target is None else trace.first_hit(target),
            iterations=trace.iterations,
            reason=trace.reason,
            solution="".join(map(str, x.tolist())),
        )
        if trace_path is not None:
            with open(trace_path, "w", newline="") as fh:
                trace.to_csv(fh)
            row["trace"] = str(trace_path)
        elif out_dir is not None:
            rel = Path("traces") / f"{cell.slug}.csv"
            with open(out_dir / rel, "w", newline="") as fh:
                trace.to_csv(fh)
            row["trace"] = rel.as_posix()
    except Exception as exc:  # reported per cell, the matrix continues
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def manifest(spec: ExperimentSpec, cells: list[Cell]) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "toolkit_version": __version__,
        "kernel_backend": BACKEND,
        "spec": asdict(spec),
        "cells": [asdict(c) | {"slug": c.slug} for c in cells],
    }


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1) -> ExperimentResult:
    """Run the whole matrix and, if ``out_dir`` is given, persist it.

    Writes ``manifest.json``, ``summary.json`` and one trace CSV per cell
    under ``traces/``.  Cells are independent; with ``jobs > 1`` they run in
    worker processes and rows are collected in cell order.
    """
    spec.validate()
    cells = spec.cells()
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    work = partial(run_cell, spec, out_dir)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(c) for c in cells]
    man = manifest(spec, cells)
    if out_dir is not None:
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(man, fh, indent=1, sort_keys=True)
        with open(out_dir / "summary.json", "w") as fh:
            json.dump({"schema": MANIFEST_SCHEMA, "rows": rows}, fh, indent=1, sort_keys=True)
    return ExperimentResult(rows, man)


def load_result(out_dir) -> tuple[list[dict], list[RunTrace]]:
    """Read ``summary.json`` and the trace of every successful cell.

    Each trace's ``problem`` is set to the instance name so traces can be
    fed straight into :func:`~qtabu.bench.ecdf.compute_ecdf`.
    """
    out_dir = Path(out_dir)
    with open(out_dir / "summary.json") as fh:
        rows = [r for r in json.load(fh)["rows"] if r["status"] == "ok" and r.get("trace")]
    traces = []
    for r in rows:
        with open(out_dir / r["trace"], newline="") as fh:
            traces.append(RunTrace.from_csv(fh, reason=r["reason"], problem=r["name"]))
    return rows, traces
