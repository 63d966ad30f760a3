"""Parity-check matrix construction.

Builds the point-to-point LDPC code from edge-perspective degree
distributions (progressive edge growth), the per-relay network-layer
blocks (triangular MARC sub-blocks with fresh random fillers, or plain
identities for the baseline), and stacks everything into the overall
joint parity-check matrix with per-slot column metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .gf2 import Gf2Matrix
from .topology import NetworkTopology
from .util import rng_for

VARIANTS = ("smarc", "identity", "identity-irregular", "glnc-only")


class ConstructionError(Exception):
    """Code construction failed (infeasible degrees, rank retries exhausted)."""


@dataclass(frozen=True)
class DegreeDistributions:
    """Edge-perspective bit (lam) and check (rho) degree fractions.

    Fractions must sum to 1 within 1e-3 per side; they are renormalized
    exactly on construction.
    """

    lam: tuple[tuple[int, float], ...]
    rho: tuple[tuple[int, float], ...]

    def __post_init__(self):
        for name, side in (("lam", self.lam), ("rho", self.rho)):
            total = sum(f for _, f in side)
            if abs(total - 1.0) > 1e-3:
                raise ValueError(f"{name} fractions sum to {total}, expected 1")
            if any(f < 0 or d < 1 for d, f in side):
                raise ValueError(f"{name} has a negative fraction or degree < 1")
            normed = tuple((int(d), f / total) for d, f in sorted(side))
            object.__setattr__(self, name, normed)

    @classmethod
    def from_dicts(cls, lam: dict, rho: dict) -> "DegreeDistributions":
        return cls(tuple(lam.items()), tuple(rho.items()))

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistributions":
        return cls(((dv, 1.0),), ((dc, 1.0),))

    @property
    def design_rate(self) -> float:
        inv_bit = sum(f / d for d, f in self.lam)
        inv_chk = sum(f / d for d, f in self.rho)
        return 1.0 - inv_chk / inv_bit


def _largest_remainder_counts(fracs: list[tuple[int, float]], n_nodes: int) -> np.ndarray:
    weights = np.array([f / d for d, f in fracs])
    weights /= weights.sum()
    raw = weights * n_nodes
    counts = np.floor(raw).astype(np.int64)
    short = n_nodes - counts.sum()
    for i in np.argsort(raw - np.floor(raw))[::-1][:short]:
        counts[i] += 1
    return counts


def _repair_edge_total(degrees: np.ndarray, counts: np.ndarray, fracs: np.ndarray,
                       target_edges: int) -> np.ndarray:
    """Move nodes between degree classes until the edge total matches.

    Each single-node move is chosen to bring the edge count toward the
    target while keeping the realized edge fractions as close to the
    requested ones as possible (minimax over classes).
    """
    counts = counts.copy()
    for _ in range(4 * int(abs(degrees @ counts - target_edges)) + 4):
        gap = int(degrees @ counts) - target_edges
        if gap == 0:
            return counts
        best = None
        for a in range(len(degrees)):
            if counts[a] == 0:
                continue
            for b in range(len(degrees)):
                step = degrees[b] - degrees[a]
                if a == b or step * gap >= 0 or abs(gap + step) >= abs(gap):
                    continue
                trial = counts.copy()
                trial[a] -= 1
                trial[b] += 1
                dev = np.abs(degrees * trial / target_edges - fracs).max()
                if best is None or dev < best[0]:
                    best = (dev, a, b)
        if best is None:
            raise ConstructionError("infeasible degree sequence: cannot match edge total")
        counts[best[1]] -= 1
        counts[best[2]] += 1
    raise ConstructionError("infeasible degree sequence: repair did not converge")


def realize_degree_sequences(dd: DegreeDistributions, L: int, m: int):
    """Integer per-node degrees for L bit nodes and m check nodes.

    The check side (fewer, tightly clustered classes) fixes the edge
    total; the bit side absorbs the residual rounding mismatch.
    """
    chk_deg = np.array([d for d, _ in dd.rho], dtype=np.int64)
    chk_counts = _largest_remainder_counts(list(dd.rho), m)
    n_edges = int(chk_deg @ chk_counts)
    bit_deg = np.array([d for d, _ in dd.lam], dtype=np.int64)
    bit_fracs = np.array([f for _, f in dd.lam])
    bit_counts = _largest_remainder_counts(list(dd.lam), L)
    bit_counts = _repair_edge_total(bit_deg, bit_counts, bit_fracs, n_edges)
    var_degrees = np.repeat(bit_deg, bit_counts)
    check_caps = np.repeat(chk_deg, chk_counts)
    return var_degrees, check_caps


def _peg_place(var_degrees: np.ndarray, check_caps: np.ndarray,
               rng: np.random.Generator) -> list[list[int]]:
    """Progressive edge growth: per-variable supports (check indices).

    Each new edge attaches to a lowest-fill check among those farthest
    from the variable in the current graph, under per-check degree caps.
    """
    n_vars, n_chk = len(var_degrees), len(check_caps)
    caps = check_caps.copy()
    rng.shuffle(caps)
    chk_fill = np.zeros(n_chk, dtype=np.int64)
    var_adj: list[list[int]] = [[] for _ in range(n_vars)]
    chk_adj: list[list[int]] = [[] for _ in range(n_chk)]

    def pick(cands: np.ndarray) -> int:
        fills = chk_fill[cands]
        best = cands[fills == fills.min()]
        return int(best[rng.integers(len(best))])

    order = np.argsort(var_degrees, kind="stable")
    for v in order:
        for k in range(var_degrees[v]):
            if k == 0:
                cands = np.nonzero(chk_fill < caps)[0]
            else:
                seen_chk = np.zeros(n_chk, dtype=bool)
                seen_var = np.zeros(n_vars, dtype=bool)
                seen_var[v] = True
                frontier = [v]
                levels = []
                while frontier:
                    new_chk = []
                    for fv in frontier:
                        for c in var_adj[fv]:
                            if not seen_chk[c]:
                                seen_chk[c] = True
                                new_chk.append(c)
                    if not new_chk:
                        break
                    levels.append(new_chk)
                    frontier = []
                    for c in new_chk:
                        for nv in chk_adj[c]:
                            if not seen_var[nv]:
                                seen_var[nv] = True
                                frontier.append(nv)
                unreached = np.nonzero(~seen_chk & (chk_fill < caps))[0]
                if unreached.size:
                    cands = unreached
                else:
                    # levels[0] holds the direct neighbors: never eligible,
                    # a repeat edge would cancel over GF(2).
                    cands = np.zeros(0, dtype=np.int64)
                    for lvl in reversed(levels[1:]):
                        lvl = np.asarray(lvl)
                        lvl = lvl[chk_fill[lvl] < caps[lvl]]
                        if lvl.size:
                            cands = lvl
                            break
            if cands.size == 0:
                raise ConstructionError("edge growth ran out of check capacity")
            c = pick(cands)
            var_adj[v].append(c)
            chk_adj[c].append(int(v))
            chk_fill[c] += 1
    return var_adj


@dataclass
class PointToPointCode:
    """Systematic point-to-point LDPC code.

    Columns are arranged information-first: `systematic_map` lists the K
    information columns (always 0..K-1 here) and the trailing L-K columns
    form an invertible parity block, so encoding is parity = P @ info.
    """

    h_p: Gf2Matrix
    L: int
    K: int
    systematic_map: np.ndarray
    parity_gen: Gf2Matrix = field(repr=False)
    _graph: object = field(default=None, repr=False)

    @property
    def rate(self) -> float:
        return self.K / self.L

    def encode(self, info: np.ndarray) -> np.ndarray:
        word = np.zeros(self.L, dtype=np.uint8)
        word[: self.K] = info
        if self.L > self.K:
            word[self.K:] = self.parity_gen.matvec(info)
        return word

    def graph(self):
        if self._graph is None:
            from .kernels import build_graph

            self._graph = build_graph(self.h_p)
        return self._graph

    def edge_fractions(self) -> tuple[dict[int, float], dict[int, float]]:
        """Realized edge-perspective (lambda, rho) of the built matrix."""
        cw = self.h_p.col_weights()
        rw = self.h_p.row_weights()
        total = cw.sum()
        lam = {int(d): int(cw[cw == d].sum()) / total for d in np.unique(cw)}
        rho = {int(d): int(rw[rw == d].sum()) / total for d in np.unique(rw)}
        return lam, rho


def uncoded_code(L: int) -> PointToPointCode:
    """Rate-1 degenerate code (no parity checks); slots carry raw bits."""
    return PointToPointCode(Gf2Matrix.zeros(0, L), L, L, np.arange(L),
                            Gf2Matrix.zeros(0, L))


def _arrange_systematic(h: Gf2Matrix) -> Gf2Matrix:
    """Permute columns so the trailing (L-K) block is invertible."""
    work = h.words.copy()
    pivots = gf2._forward_eliminate(work, h.cols)
    piv = np.zeros(h.cols, dtype=bool)
    piv[pivots] = True
    order = np.concatenate([np.nonzero(~piv)[0], np.nonzero(piv)[0]])
    return h.take_cols(order)


def build_p2p_code(dd: DegreeDistributions, L: int, K: int, seed: int,
                   max_tries: int = 20) -> PointToPointCode:
    """Point-to-point code from degree distributions via edge growth.

    Retries construction (fresh randomness) until the matrix has full row
    rank; raises ConstructionError when the degree sequence is infeasible
    or retries run out.
    """
    if not 0 < K < L:
        raise ValueError("need 0 < K < L")
    if abs(dd.design_rate - K / L) > 0.02:
        raise ValueError(
            f"degree distributions imply rate {dd.design_rate:.4f}, "
            f"inconsistent with K/L = {K / L:.4f}")
    m = L - K
    var_degrees, check_caps = realize_degree_sequences(dd, L, m)
    for attempt in range(max_tries):
        rng = rng_for(seed, attempt)
        try:
            var_adj = _peg_place(var_degrees, check_caps, rng)
        except ConstructionError:
            continue
        dense = np.zeros((m, L), dtype=np.uint8)
        for v, checks in enumerate(var_adj):
            dense[checks, v] = 1
        h = Gf2Matrix.from_dense(dense)
        if gf2.rank(h) != m:
            continue
        h = _arrange_systematic(h)
        parity_block = h.take_cols(np.arange(K, L))
        info_block = h.take_cols(np.arange(K))
        parity_gen = gf2.inverse(parity_block).matmul(info_block)
        return PointToPointCode(h, L, K, np.arange(K), parity_gen)
    raise ConstructionError("could not reach full rank within retry budget")


# -- network-layer (GLNC) blocks -------------------------------------------


@dataclass
class GlncLayer:
    """Per-relay K x L transform blocks.

    `source_blocks[r]` maps 1-based source index -> (block kind, matrix)
    for relay r+1, in transmission-set order; `relay_block` multiplies the
    relay's own codeword and is shared across relays.
    """

    kind: str
    source_blocks: list[dict[int, tuple[str, Gf2Matrix]]]
    relay_block: Gf2Matrix


def _random_half_block(half: int, rng: np.random.Generator) -> np.ndarray:
    """Random (half x half) filler with column weight 2."""
    dense = np.zeros((half, half), dtype=np.uint8)
    for j in range(half):
        dense[rng.choice(half, size=2, replace=False), j] = 1
    return dense


def _marc_sub_block(kind: str, K: int, L: int, filler: np.ndarray) -> Gf2Matrix:
    """One of the four triangular MARC sub-blocks (K x L).

    The information half-columns carry an identity and the filler; the
    trailing L-K parity columns are zero.  Every variant is upper or lower
    block-triangular with a unit diagonal, which is what makes one-unknown
    back-substitution go through.
    """
    half = K // 2
    eye = np.eye(half, dtype=np.uint8)
    dense = np.zeros((K, L), dtype=np.uint8)
    top, bot = dense[:half], dense[half:K]
    if kind == "H1":
        top[:, :half], top[:, half:K] = eye, filler
        bot[:, half:K] = eye
    elif kind == "H1p":
        top[:, :half], top[:, half:K] = filler, eye
        bot[:, :half] = eye
    elif kind == "H2":
        top[:, half:K] = eye
        bot[:, :half], bot[:, half:K] = eye, filler
    elif kind == "H2p":
        top[:, :half] = eye
        bot[:, :half], bot[:, half:K] = filler, eye
    else:
        raise ValueError(kind)
    return Gf2Matrix.from_dense(dense)


def _primed_assignment(t: NetworkTopology) -> list[list[bool]]:
    """Primed/unprimed choice per (relay, slot).

    Base pattern alternates by relay index; then any source whose two-plus
    appearances all landed on the same variant gets its last appearance
    flipped, so both information half-columns of every source meet a
    random filler block.
    """
    primed = [[r % 2 == 0, r % 2 == 0] for r in range(1, t.m_r + 1)]
    apps: dict[int, list[tuple[int, int]]] = {u: [] for u in range(1, t.m_s + 1)}
    for r, tx in enumerate(t.transmission_sets):
        for slot, u in enumerate(tx):
            apps[u].append((r, slot))
    for u in range(1, t.m_s + 1):
        entries = sorted(apps[u])
        if len(entries) < 2:
            continue
        marks = [primed[r][slot] for r, slot in entries]
        if all(marks) or not any(marks):
            r, slot = entries[-1]
            primed[r][slot] = not primed[r][slot]
    return primed


def build_smarc_glnc(t: NetworkTopology, L: int, K: int, seed: int,
                     relay_block: Gf2Matrix | None = None) -> GlncLayer:
    """Triangular-MARC network layer for transmission sets of size two.

    Information bits split into two halves; the first source in each set
    gets an H1-type block, the second an H2-type, with fresh random
    fillers per relay and the primed/unprimed alternation chosen so every
    information half-column receives at least one random filler.
    """
    if K % 2:
        raise ValueError("information length K must be even")
    if K < 4:
        raise ValueError("need K >= 4 to split information bits")
    if any(len(tx) != 2 for tx in t.transmission_sets):
        raise ValueError("this layer requires exactly two sources per relay")
    rng = rng_for(seed, "glnc")
    primed = _primed_assignment(t)
    half = K // 2
    blocks: list[dict[int, tuple[str, Gf2Matrix]]] = []
    for r, tx in enumerate(t.transmission_sets):
        per_relay: dict[int, tuple[str, Gf2Matrix]] = {}
        for slot, u in enumerate(tx):
            base = "H1" if slot == 0 else "H2"
            kind = base + ("p" if primed[r][slot] else "")
            per_relay[u] = (kind, _marc_sub_block(kind, K, L, _random_half_block(half, rng)))
        blocks.append(per_relay)
    if relay_block is None:
        relay_block = accumulator_relay_block(K, L)
    return GlncLayer("smarc", blocks, relay_block)


def build_identity_glnc(t: NetworkTopology, L: int, K: int) -> GlncLayer:
    """Baseline layer: every block is [I_K | 0] (plain packet XOR)."""
    ident = Gf2Matrix.from_dense(
        np.concatenate([np.eye(K, dtype=np.uint8),
                        np.zeros((K, L - K), dtype=np.uint8)], axis=1))
    blocks = [{u: ("I", ident) for u in tx} for tx in t.transmission_sets]
    return GlncLayer("identity", blocks, ident)


def accumulator_relay_block(K: int, L: int) -> Gf2Matrix:
    """Lower-bidiagonal relay transform (unit diagonal + subdiagonal).

    Acts on the relay codeword's K information columns; the L-K parity
    columns carry no network-layer support, mirroring the source-side
    convention.  Column weight 2 except the last column, and the stacked
    system [H_p; transform] is invertible by construction (triangular on
    the information block, then the parity block of H_p), which is what
    the relay encoding equation and the one-unknown rank condition need.
    A random column-weight-2 transform cannot do this: even column
    weights force its rows to XOR to zero, and at large K isolated rows
    make the rank deficit grow with K, so no redraw ever succeeds.
    """
    dense = np.zeros((K, L), dtype=np.uint8)
    dense[:, :K] = np.eye(K, dtype=np.uint8) + np.eye(K, dtype=np.uint8, k=-1)
    return Gf2Matrix.from_dense(dense)


# -- assembly ----------------------------------------------------------------


@dataclass
class JnccCode:
    """The overall parity-check matrix with its slot metadata.

    Slots 0..m_s-1 carry source codewords, slots m_s..m_s+m_r-1 relay
    codewords; `slot_columns` gives each slot's half-open column range.
    """

    h: Gf2Matrix
    topology: NetworkTopology
    L: int
    K: int
    slot_columns: list[tuple[int, int]]
    glnc_row_range: tuple[int, int]
    variant: str
    p2p: PointToPointCode | None
    glnc: GlncLayer = field(repr=False)
    relay_solver: Gf2Matrix = field(repr=False)
    _graph: object = field(default=None, repr=False)

    @property
    def n_slots(self) -> int:
        return self.topology.m_s + self.topology.m_r

    @property
    def n(self) -> int:
        return self.h.cols

    @property
    def rate(self) -> float:
        return self.K * self.topology.m_s / (self.L * self.n_slots)

    def info_columns(self) -> np.ndarray:
        sysmap = self.p2p.systematic_map if self.p2p else np.arange(self.K)
        cols = [self.slot_columns[u][0] + sysmap for u in range(self.topology.m_s)]
        return np.concatenate(cols)

    def graph(self):
        if self._graph is None:
            from .kernels import build_graph

            self._graph = build_graph(self.h)
        return self._graph

    def slot_of_node(self, node: int) -> list[int]:
        """Slots silenced/erased with 1-based node `node` (source: both phases)."""
        out = [self.topology.m_s + node - 1]
        if node <= self.topology.m_s:
            out.insert(0, node - 1)
        return out


def _relay_solver(p2p: PointToPointCode | None, relay_block: Gf2Matrix,
                  L: int, K: int) -> Gf2Matrix:
    """Solve matrix W with r = W @ rhs for the relay codeword equation.

    The relay codeword must satisfy both its point-to-point checks and
    its own network-layer equation; stacking them gives an L x L system
    that must be invertible (raises on singular input).
    """
    stacked = Gf2Matrix.vstack([p2p.h_p, relay_block]) if p2p and p2p.L > p2p.K \
        else relay_block
    if stacked.rows != L:
        raise ConstructionError("relay equation system is not square")
    inv = gf2.inverse(stacked)
    return inv.take_cols(np.arange(L - K, L))


def assemble(variant: str, topology: NetworkTopology,
             p2p: PointToPointCode | None = None, *, L: int | None = None,
             K: int | None = None, seed: int = 0) -> JnccCode:
    """Stack the channel-code block diagonal over the network layer.

    variant: "smarc" (triangular MARC blocks), "identity" /
    "identity-irregular" (packet-XOR baseline), or "glnc-only" (MARC
    blocks with K = L, no point-to-point rows).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if p2p is not None:
        if L is not None and L != p2p.L or K is not None and K != p2p.K:
            raise ValueError("L/K disagree with the point-to-point code")
        L, K = p2p.L, p2p.K
    if L is None or K is None:
        raise ValueError("need a point-to-point code or explicit L and K")
    if variant == "glnc-only" and L != K:
        raise ValueError("glnc-only requires K = L")
    if L == K:
        p2p = None

    m_s, m_r = topology.m_s, topology.m_r
    n_slots = m_s + m_r
    n = n_slots * L
    rng = rng_for(seed, "assemble")

    if variant in ("identity", "identity-irregular"):
        glnc = build_identity_glnc(topology, L, K)
    else:
        glnc = build_smarc_glnc(topology, L, K, seed)
    solver = _relay_solver(p2p, glnc.relay_block, L, K)

    slot_columns = [(s * L, (s + 1) * L) for s in range(n_slots)]
    n_hc_rows = n_slots * (L - K)
    dense = np.zeros((n_hc_rows + m_r * K, n), dtype=np.uint8)
    if p2p is not None:
        hp = p2p.h_p.dense
        for s in range(n_slots):
            dense[s * (L - K):(s + 1) * (L - K), s * L:(s + 1) * L] = hp
    for r in range(m_r):
        rows = slice(n_hc_rows + r * K, n_hc_rows + (r + 1) * K)
        for u, (_, block) in glnc.source_blocks[r].items():
            a, b = slot_columns[u - 1]
            dense[rows, a:b] ^= block.dense
        a, b = slot_columns[m_s + r]
        dense[rows, a:b] = glnc.relay_block.dense
    code = JnccCode(
        h=Gf2Matrix.from_dense(dense),
        topology=topology,
        L=L,
        K=K,
        slot_columns=slot_columns,
        glnc_row_range=(n_hc_rows, n_hc_rows + m_r * K),
        variant=variant,
        p2p=p2p,
        glnc=glnc,
        relay_solver=solver,
    )
    # Construction self-check: a random encode must satisfy every parity
    # equation (validates the relay-transform identity).
    probe = rng_for(seed, "probe").integers(0, 2, (m_s, K), dtype=np.uint8)
    if code.h.matvec(encode(code, probe)).any():
        raise ConstructionError("assembled code fails its own parity checks")
    return code


def encode(code: JnccCode, info: np.ndarray, silent=()) -> np.ndarray:
    """Encode per-source information bits into the overall codeword.

    Source slots are systematic point-to-point codewords; each relay slot
    solves its network-layer equation and extends to a point-to-point
    codeword.  Relays listed in `silent` yield all-erased marker slots
    (value -1); the remaining slots are 0/1.
    """
    info = np.asarray(info, dtype=np.uint8)
    m_s, m_r = code.topology.m_s, code.topology.m_r
    if info.shape != (m_s, code.K):
        raise ValueError(f"info must be shaped ({m_s}, {code.K})")
    x = np.zeros(code.n, dtype=np.int8)
    words = []
    for u in range(m_s):
        w = code.p2p.encode(info[u]) if code.p2p else info[u]
        words.append(w)
        a, b = code.slot_columns[u]
        x[a:b] = w
    for r in range(m_r):
        rhs = np.zeros(code.K, dtype=np.uint8)
        for u, (_, block) in code.glnc.source_blocks[r].items():
            rhs ^= block.matvec(words[u - 1])
        relay_word = code.relay_solver.matvec(rhs)
        a, b = code.slot_columns[m_s + r]
        x[a:b] = relay_word
    for r in silent:
        a, b = code.slot_columns[m_s + r - 1]
        x[a:b] = -1
    return x
