"""Energy/Hamming datasets of sampler outputs around the current solution."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..qaoa import bits_to_index, sample_indices
from ..qubo import SubProblem
from ..samplers import QaoaSamplerConfig, SaConfig, SamplerContext, qaoa_run, sa_energies

EXACT_MAX_K = 20
FIELDS = ("label", "kind", "index", "energy", "hamming", "probability")


@dataclass
class EnergyDataset:
    """Rows of ``(label, kind, index, energy, hamming, probability)``.

    ``kind`` is ``sample`` for a measured shot, ``exact`` for one basis
    state with its Born probability, and ``sa`` for the best state of one
    annealing restart.  ``index`` encodes the subproblem bits with variable
    0 as the least significant bit; ``hamming`` counts bits that differ from
    the current solution.
    """

    k: int
    reference: int
    rows: list = field(default_factory=list)

    def column(self, name: str, label: str | None = None, kind: str | None = None) -> list:
        j = FIELDS.index(name)
        return [r[j] for r in self.rows if (label is None or r[0] == label) and (kind is None or r[1] == kind)]

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)
        for label, kind, idx, e, h, prob in self.rows:
            w.writerow([label, kind, idx, repr(float(e)), h, "" if prob is None else repr(float(prob))])
        return fh.getvalue() if own else None


def energy_distribution_export(
    sub: SubProblem,
    configs: Sequence[QaoaSamplerConfig],
    sa: SaConfig | None,
    draws: int,
    rng: np.random.Generator,
    context: SamplerContext | None = None,
) -> EnergyDataset:
    """Sample every QAOA config ``draws`` times and run ``sa`` once.

    Penalized configs need ``context``.  Exact per-outcome probabilities are
    added for subproblems of at most 20 variables.
    """
    if draws < 1:
        raise ValueError("draws must be at least 1")
    x_ts = sub.restrict(sub.base)
    ref = bits_to_index(x_ts)
    data = EnergyDataset(sub.k, ref)
    for n, cfg in enumerate(configs):
        label = cfg.label or f"qaoa{n}"
        run = qaoa_run(sub, cfg, context, rng)
        st = run.state
        idx = sample_indices(st, draws, rng)
        ham = np.bitwise_count(idx ^ ref)
        data.rows.extend((label, "sample", int(i), float(st.energies[i]), int(h), None) for i, h in zip(idx, ham))
        if sub.k <= EXACT_MAX_K:
            allidx = np.arange(2**sub.k)
            ham_all = np.bitwise_count(allidx ^ ref)
            probs = st.probabilities
            data.rows.extend(
                (label, "exact", int(i), float(st.energies[i]), int(ham_all[i]), float(probs[i])) for i in allidx
            )
    if sa is not None:
        energies, states = sa_energies(sub, sa, rng)
        for e, s in zip(energies, states):
            data.rows.append(("sa", "sa", bits_to_index(s), float(e), int(np.count_nonzero(s != x_ts)), None))
    return data
