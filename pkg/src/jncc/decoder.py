"""Destination decoding: joint sum-product BP, erasure peeling, and the
layered baseline (point-to-point decode, hard decision, packet solve)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2 import Gf2Matrix
from .kernels import bp_run, bp_run_batch, build_graph, peel_run


@dataclass(frozen=True)
class BpConfig:
    """Flooding-schedule sum-product settings.

    The exact tanh check rule is the default; min-sum is available for
    speed sweeps.  Ties (zero posterior) decode to bit 0.
    """

    max_iterations: int = 200
    early_stop: bool = True
    llr_clamp: float = 30.0
    min_sum: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if self.llr_clamp <= 0:
            raise ValueError("clamp must be positive")


@dataclass
class DecodeResult:
    """Decoder outcome for one trial.

    `word_error` / `per_source_error` are filled when the true information
    bits are supplied (a word error means any of the m_s*K information
    bits is wrong or unresolved); `info_bits` always holds the decoder's
    per-source decisions.
    """

    info_bits: np.ndarray
    word_error: bool | None = None
    per_source_error: np.ndarray | None = None
    iterations_used: int = 0
    converged: bool = False
    resolved: np.ndarray | None = field(default=None, repr=False)

    def score(self, true_info: np.ndarray) -> "DecodeResult":
        errs = (self.info_bits != np.asarray(true_info, dtype=np.uint8)).any(axis=1)
        if self.resolved is not None:
            errs |= ~self.resolved.all(axis=1)
        self.per_source_error = errs
        self.word_error = bool(errs.any())
        return self


def _split_info(code, bits: np.ndarray) -> np.ndarray:
    return bits[code.info_columns()].reshape(code.topology.m_s, code.K)


def bp_decode(code, llrs: np.ndarray, cfg: BpConfig = BpConfig(),
              true_info: np.ndarray | None = None) -> DecodeResult:
    """Joint sum-product decoding over the full factor graph."""
    post, iters, conv = bp_run(code.graph(), np.asarray(llrs, dtype=np.float64),
                               cfg.max_iterations, cfg.llr_clamp,
                               min_sum=cfg.min_sum, early_stop=cfg.early_stop)
    bits = (post > 0).astype(np.uint8)
    res = DecodeResult(_split_info(code, bits), iterations_used=iters, converged=conv)
    return res.score(true_info) if true_info is not None else res


def bp_marginals(h: Gf2Matrix, llrs: np.ndarray, cfg: BpConfig = BpConfig()):
    """Posterior LLRs of BP on an arbitrary parity-check matrix.

    Convenience entry for oracle comparisons on small graphs; returns
    (posteriors, iterations, converged).
    """
    return bp_run(build_graph(h), np.asarray(llrs, dtype=np.float64),
                  cfg.max_iterations, cfg.llr_clamp, min_sum=cfg.min_sum,
                  early_stop=cfg.early_stop)


def peel_resolve(h: Gf2Matrix, known: np.ndarray, values: np.ndarray):
    """Bit-level erasure peeling over a parity-check matrix."""
    return peel_run(build_graph(h), np.asarray(known, dtype=np.uint8),
                    np.asarray(values, dtype=np.uint8))


def peel_decode(code, known: np.ndarray, values: np.ndarray,
                true_info: np.ndarray | None = None) -> DecodeResult:
    """Erasure decoding by iterative single-unknown resolution."""
    resolved, vals, steps = peel_run(code.graph(), np.asarray(known, dtype=np.uint8),
                                     np.asarray(values, dtype=np.uint8))
    res = DecodeResult(
        _split_info(code, vals),
        iterations_used=steps,
        converged=bool(resolved[code.info_columns()].all()),
        resolved=_split_info(code, resolved).astype(bool),
    )
    return res.score(true_info) if true_info is not None else res


def layered_decode(code, llrs: np.ndarray, cfg: BpConfig = BpConfig(),
                   true_info: np.ndarray | None = None) -> DecodeResult:
    """Decode point-to-point slots first, then solve packets.

    Each slot is BP-decoded against the point-to-point matrix alone and
    hard-decided; slots with a residual syndrome (or no signal at all)
    become packet erasures, and erased source packets are recovered by
    Gaussian elimination over the surviving relay equations.  Only packet
    XOR layers (identity blocks) admit this route.
    """
    if code.glnc.kind != "identity":
        raise ValueError("layered decoding applies to identity-layer codes only")
    if code.p2p is None:
        raise ValueError("layered decoding needs point-to-point codes")
    m_s, m_r = code.topology.m_s, code.topology.m_r
    graph = code.p2p.graph()
    slot_llrs = np.stack([llrs[a:b] for a, b in code.slot_columns])
    post, iters, conv = bp_run_batch(graph, slot_llrs, cfg.max_iterations,
                                     cfg.llr_clamp, min_sum=cfg.min_sum,
                                     early_stop=cfg.early_stop)
    alive = conv & (np.abs(slot_llrs).sum(axis=1) > 0)
    packets = (post[:, code.p2p.systematic_map] > 0).astype(np.uint8)

    info = np.zeros((m_s, code.K), dtype=np.uint8)
    resolved = np.zeros((m_s, code.K), dtype=bool)
    info[alive[:m_s]] = packets[:m_s][alive[:m_s]]
    resolved[alive[:m_s]] = True

    missing = [u for u in range(m_s) if not alive[u]]
    if missing:
        rows = []
        rhs = []
        for r in range(m_r):
            if not alive[m_s + r]:
                continue
            acc = packets[m_s + r].copy()
            row = np.zeros(len(missing), dtype=np.uint8)
            for u in code.topology.transmission_sets[r]:
                if alive[u - 1]:
                    acc ^= packets[u - 1]
                else:
                    row[missing.index(u - 1)] = 1
            rows.append(row)
            rhs.append(acc)
        solved, values = _solve_packets(rows, rhs, len(missing), code.K)
        for j, u in enumerate(missing):
            if solved[j]:
                info[u] = values[j]
                resolved[u] = True

    res = DecodeResult(info, iterations_used=int(iters.sum()),
                       converged=bool(resolved.all()), resolved=resolved)
    return res.score(true_info) if true_info is not None else res


def _solve_packets(rows, rhs, n_unknown: int, k: int):
    """Gaussian elimination over packet unknowns with K-bit payload rows."""
    solved = np.zeros(n_unknown, dtype=bool)
    values = np.zeros((n_unknown, k), dtype=np.uint8)
    if not rows:
        return solved, values
    a = np.array(rows, dtype=np.uint8)
    payload = np.array(rhs, dtype=np.uint8)
    n_rows = a.shape[0]
    r = 0
    pivots = []
    for c in range(n_unknown):
        hit = next((i for i in range(r, n_rows) if a[i, c]), None)
        if hit is None:
            continue
        a[[r, hit]] = a[[hit, r]]
        payload[[r, hit]] = payload[[hit, r]]
        for i in range(n_rows):
            if i != r and a[i, c]:
                a[i] ^= a[r]
                payload[i] ^= payload[r]
        pivots.append((r, c))
        r += 1
    for row, col in pivots:
        others = np.nonzero(a[row])[0]
        if len(others) == 1:
            solved[col] = True
            values[col] = payload[row]
    return solved, values
