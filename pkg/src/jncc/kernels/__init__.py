"""Message-passing kernels: compiled core with a pure-numpy fallback.

The sum-product and erasure-peeling inner loops dominate Monte Carlo
sweeps, so they live in a Cython extension (`_fast`).  When the extension
is unavailable, or JNCC_PURE_KERNELS is set, a vectorized numpy
implementation with identical semantics is used instead.  Both backends
consume the same flat Tanner-graph arrays.

LLR convention throughout the package: L = log P(bit=1)/P(bit=0), i.e.
positive favors bit 1 (ties decode to 0).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..gf2 import Gf2Matrix


@dataclass(frozen=True)
class TannerGraph:
    """Flat edge-list view of a parity-check matrix.

    Edges are numbered grouped by check (row); `var_edges` re-lists edge
    ids grouped by variable.  `pad_pos` maps each edge to its slot in a
    (n_checks, max_deg) padded grid for vectorized per-check scans.
    """

    n_vars: int
    n_checks: int
    chk_ptr: np.ndarray
    edge_var: np.ndarray
    edge_chk: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray
    pad_pos: np.ndarray
    max_deg: int

    @property
    def n_edges(self) -> int:
        return len(self.edge_var)


def build_graph(h: Gf2Matrix) -> TannerGraph:
    supports = h.row_supports()
    degrees = np.array([len(s) for s in supports], dtype=np.int64)
    chk_ptr = np.zeros(h.rows + 1, dtype=np.int32)
    np.cumsum(degrees, out=chk_ptr[1:])
    edge_var = (np.concatenate(supports) if supports else np.zeros(0)).astype(np.int32)
    edge_chk = np.repeat(np.arange(h.rows, dtype=np.int32), degrees)
    order = np.argsort(edge_var, kind="stable").astype(np.int32)
    var_ptr = np.zeros(h.cols + 1, dtype=np.int32)
    np.cumsum(np.bincount(edge_var, minlength=h.cols), out=var_ptr[1:])
    max_deg = int(degrees.max()) if len(degrees) else 0
    offs = np.arange(len(edge_var), dtype=np.int64) - chk_ptr[edge_chk]
    pad_pos = edge_chk.astype(np.int64) * max_deg + offs
    return TannerGraph(h.cols, h.rows, chk_ptr, edge_var, edge_chk,
                       var_ptr, order, pad_pos, max_deg)


def _load_backend():
    if not os.environ.get("JNCC_PURE_KERNELS"):
        try:
            from . import _fast

            return _fast, "compiled"
        except ImportError:
            pass
    from . import _pure

    return _pure, "pure"


_impl, BACKEND = _load_backend()


def bp_run_batch(graph: TannerGraph, llrs: np.ndarray, max_iters: int,
                 clamp: float, min_sum: bool = False, early_stop: bool = True):
    """Flooding sum-product over a batch of LLR vectors.

    Returns (posteriors, iterations, converged) where convergence means
    the hard decisions satisfy every check.
    """
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    if llrs.ndim != 2 or llrs.shape[1] != graph.n_vars:
        raise ValueError("llrs must have shape (batch, n_vars)")
    return _impl.bp_run_batch(graph, llrs, int(max_iters), float(clamp),
                              bool(min_sum), bool(early_stop))


def bp_run(graph: TannerGraph, llr: np.ndarray, max_iters: int, clamp: float,
           min_sum: bool = False, early_stop: bool = True):
    post, iters, conv = bp_run_batch(graph, llr[None, :], max_iters, clamp,
                                     min_sum, early_stop)
    return post[0], int(iters[0]), bool(conv[0])


def peel_run(graph: TannerGraph, known: np.ndarray, values: np.ndarray):
    """Erasure peeling: resolve unknowns through single-unknown checks.

    Returns (resolved, values, steps); `resolved` covers the initially
    known bits plus everything peeling could reach.
    """
    known = np.ascontiguousarray(known, dtype=np.uint8)
    values = np.ascontiguousarray(values, dtype=np.uint8)
    if known.shape != (graph.n_vars,) or values.shape != (graph.n_vars,):
        raise ValueError("mask/value length mismatch")
    return _impl.peel_run(graph, known, values)
