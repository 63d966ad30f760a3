"""Pure-numpy kernel backend.

Vectorizes the flooding schedule over edges and over the batch dimension;
per-check leave-one-out products use forward/backward cumulative products
on a padded (checks, max_deg) grid, which handles zero messages (erasures)
without special cases.
"""

from __future__ import annotations

import numpy as np

_ATANH_LIM = 1.0 - 1e-15


def _segment_sum(values: np.ndarray, order: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    """Sum `values` (batch, n_edges) over the segments defined by ptr."""
    n = values.shape[1]
    starts = ptr[:-1].astype(np.int64)
    if n == 0:
        return np.zeros((values.shape[0], len(starts)))
    seg = np.add.reduceat(values[:, order], np.minimum(starts, n - 1), axis=1)
    seg[:, ptr[1:] == ptr[:-1]] = 0.0
    return seg


def _pad(graph, edge_values: np.ndarray, fill: float) -> np.ndarray:
    b = edge_values.shape[0]
    grid = np.full((b, graph.n_checks * graph.max_deg), fill)
    grid[:, graph.pad_pos] = edge_values
    return grid.reshape(b, graph.n_checks, graph.max_deg)


def _check_update_tanh(graph, v2c: np.ndarray, clamp: float) -> np.ndarray:
    # Work on the negated-LLR (bit-0-positive) domain where the textbook
    # tanh rule applies, then negate back.
    tau = _pad(graph, np.tanh(-0.5 * v2c), 1.0)
    fwd = np.ones_like(tau)
    np.cumprod(tau[:, :, :-1], axis=2, out=fwd[:, :, 1:])
    bwd = np.ones_like(tau)
    np.cumprod(tau[:, :, :0:-1], axis=2, out=bwd[:, :, -2::-1])
    loo = (fwd * bwd).reshape(tau.shape[0], -1)[:, graph.pad_pos]
    c2v = -2.0 * np.arctanh(np.clip(loo, -_ATANH_LIM, _ATANH_LIM))
    return np.clip(c2v, -clamp, clamp)


def _check_update_minsum(graph, v2c: np.ndarray, clamp: float) -> np.ndarray:
    mu = -v2c
    sgn = _pad(graph, np.where(mu < 0, -1.0, 1.0), 1.0)
    mag = _pad(graph, np.abs(mu), np.inf)
    sf = np.ones_like(sgn)
    np.cumprod(sgn[:, :, :-1], axis=2, out=sf[:, :, 1:])
    sb = np.ones_like(sgn)
    np.cumprod(sgn[:, :, :0:-1], axis=2, out=sb[:, :, -2::-1])
    mf = np.full_like(mag, np.inf)
    np.minimum.accumulate(mag[:, :, :-1], axis=2, out=mf[:, :, 1:])
    mb = np.full_like(mag, np.inf)
    np.minimum.accumulate(mag[:, :, :0:-1], axis=2, out=mb[:, :, -2::-1])
    loo = (sf * sb) * np.minimum(mf, mb)
    c2v = -loo.reshape(sgn.shape[0], -1)[:, graph.pad_pos]
    return np.clip(c2v, -clamp, clamp)


def _syndrome_ok(graph, bits: np.ndarray) -> np.ndarray:
    at_edges = bits[:, graph.edge_var].astype(np.int64)
    seg = _segment_sum(at_edges.astype(np.float64),
                       np.arange(graph.n_edges), graph.chk_ptr)
    return (seg.astype(np.int64) & 1 == 0).all(axis=1)


def bp_run_batch(graph, llrs, max_iters, clamp, min_sum, early_stop):
    b, n = llrs.shape
    update = _check_update_minsum if min_sum else _check_update_tanh
    c2v = np.zeros((b, graph.n_edges))
    totals = llrs.copy()
    out = llrs.copy()
    iters = np.full(b, max_iters, dtype=np.int64)
    conv = np.zeros(b, dtype=bool)
    for it in range(1, max_iters + 1):
        v2c = np.clip(totals[:, graph.edge_var] - c2v, -clamp, clamp)
        c2v = update(graph, v2c, clamp)
        totals = llrs + _segment_sum(c2v, graph.var_edges, graph.var_ptr)
        if early_stop:
            # Freeze each item's posterior at its first zero syndrome so a
            # batch behaves like independent single decodes.
            newly = _syndrome_ok(graph, totals > 0) & ~conv
            out[newly] = totals[newly]
            iters[newly] = it
            conv |= newly
            if conv.all():
                break
    out[~conv] = totals[~conv]
    if not early_stop:
        conv = _syndrome_ok(graph, totals > 0)
    return out, iters, conv


def peel_run(graph, known, values):
    resolved = known.copy()
    vals = values.copy()
    vals[resolved == 0] = 0
    unknowns = np.diff(graph.chk_ptr).astype(np.int64)
    acc = np.zeros(graph.n_checks, dtype=np.uint8)
    for c in range(graph.n_checks):
        sup = graph.edge_var[graph.chk_ptr[c]:graph.chk_ptr[c + 1]]
        k = resolved[sup] == 1
        unknowns[c] -= int(k.sum())
        acc[c] = vals[sup[k]].sum() & 1
    queue = [c for c in range(graph.n_checks) if unknowns[c] == 1]
    steps = 0
    while queue:
        c = queue.pop()
        if unknowns[c] != 1:
            continue
        sup = graph.edge_var[graph.chk_ptr[c]:graph.chk_ptr[c + 1]]
        v = int(sup[resolved[sup] == 0][0])
        val = acc[c]
        resolved[v] = 1
        vals[v] = val
        steps += 1
        for e in graph.var_edges[graph.var_ptr[v]:graph.var_ptr[v + 1]]:
            c2 = int(graph.edge_chk[e])
            unknowns[c2] -= 1
            acc[c2] ^= val
            if unknowns[c2] == 1:
                queue.append(c2)
    return resolved, vals, steps
