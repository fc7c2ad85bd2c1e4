"""Pure numpy implementations of the hot loops.

Each function mirrors its counterpart in ``_ckernels.pyx`` argument for
argument and mutates the same buffers, so callers can swap backends freely.
All randomness arrives pre-drawn, which keeps the two backends bit-identical
on integer-valued instances.
"""

import numpy as np

STOP_MAX_ITERS = 0
STOP_TARGET = 1
STOP_CUTOFF = 2
STOP_STUCK = -1


def flip_update(W, x, delta, i):
    s = 1.0 - 2.0 * x.astype(np.float64)
    d_i = delta[i]
    delta += s[i] * s * W[i]
    delta[i] = -d_i
    x[i] ^= 1


def tabu_run(W, x, delta, tabu, f_ts, f_best, best_x, tenure, tenure_draws,
             max_iters, target, cutoff, out_fts, out_fbest, out_flip):
    """Run basic one-flip tabu iterations in place.

    Returns ``(iterations, reason, f_ts, f_best)``.
    """
    draw = 0
    stall = 0
    for it in range(max_iters):
        free = tabu == 0
        if free.any():
            j = int(np.argmin(np.where(free, delta, np.inf)))
        else:
            # every move is tabu: only an aspiring move may be taken
            gains = np.where(f_ts + delta < f_best, delta, np.inf)
            j = int(np.argmin(gains))
            if not np.isfinite(gains[j]):
                return it, STOP_STUCK, f_ts, f_best
        f_ts += delta[j]
        flip_update(W, x, delta, j)
        aspiration = f_ts < f_best
        if aspiration:
            f_best = f_ts
            best_x[:] = x
            stall = 0
        else:
            stall += 1
        np.subtract(tabu, 1, out=tabu, where=tabu > 0)
        if aspiration:
            tabu[j] = 0
        else:
            tabu[j] = tenure + tenure_draws[draw]
            draw += 1
        out_fts[it] = f_ts
        out_fbest[it] = f_best
        out_flip[it] = j
        if f_best <= target:
            return it + 1, STOP_TARGET, f_ts, f_best
        if cutoff > 0 and stall >= cutoff:
            return it + 1, STOP_CUTOFF, f_ts, f_best
    return max_iters, STOP_MAX_ITERS, f_ts, f_best


def sa_run(W, lin, offset, starts, uniforms, temperature):
    """Fixed-temperature single-flip Metropolis chains, one per row of ``starts``.

    Variables are proposed in sweep order ``t mod k``.  Returns the lowest
    energy each chain visited and the state where it was first seen.
    """
    x = starts.astype(np.float64)
    r, k = x.shape
    e = offset + x @ lin + 0.5 * np.einsum("ri,ij,rj->r", x, W, x)
    best_e = e.copy()
    best_x = x.copy()
    for t in range(uniforms.shape[1]):
        i = t % k
        d = (1.0 - 2.0 * x[:, i]) * (lin[i] + x @ W[i])
        accept = (d <= 0) | (uniforms[:, t] < np.exp(-np.maximum(d, 0.0) / temperature))
        x[accept, i] = 1.0 - x[accept, i]
        e = np.where(accept, e + d, e)
        better = e < best_e
        best_e[better] = e[better]
        best_x[better] = x[better]
    return best_e, best_x.astype(np.uint8)
