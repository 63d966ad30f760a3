"""Relay-network description and transmission-set construction.

A network has m_s sources that all also act as relays, plus m_r - m_s
pure relays.  Each relay listens to a decoding set of sources and, on
success, transmits a transform of the sources in its (ordered)
transmission set.  Node and source indices are 1-based at this interface,
matching the usual engineering convention; anything array-shaped below
this module is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2 import Gf2Matrix


def wrap_index(m_s: int, x: int) -> int:
    """Cyclic source index map ((x-1) mod m_s) + 1, range 1..m_s."""
    return (x - 1) % m_s + 1


@dataclass(frozen=True)
class NetworkTopology:
    """Static network structure: who listens to whom, who forwards whom.

    `transmission_sets[r]` is the ordered tuple of source indices whose
    codewords relay r+1 transforms; the order fixes which per-source
    sub-block each one receives in a joint code.  Relay silence is a
    per-realization channel event, not part of the topology.
    """

    m_s: int
    m_r: int
    decoding_sets: tuple[tuple[int, ...], ...]
    transmission_sets: tuple[tuple[int, ...], ...]
    interuser_reciprocal: bool = False
    allow_self_help: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.m_s < 1 or self.m_r < self.m_s:
            raise ValueError("need m_r >= m_s >= 1")
        if len(self.decoding_sets) != self.m_r or len(self.transmission_sets) != self.m_r:
            raise ValueError("need one decoding and one transmission set per relay")
        for r, (dec, tx) in enumerate(zip(self.decoding_sets, self.transmission_sets), start=1):
            if not set(tx) <= set(dec):
                raise ValueError(f"relay {r}: transmission set not within decoding set")
            if not set(dec) <= set(range(1, self.m_s + 1)):
                raise ValueError(f"relay {r}: decoding set outside 1..m_s")
            if len(set(tx)) != len(tx):
                raise ValueError(f"relay {r}: duplicate sources in transmission set")
            if r <= self.m_s and r in tx and not self.allow_self_help:
                raise ValueError(f"relay {r} includes its own source message")

    @property
    def n_per_relay(self) -> tuple[int, ...]:
        return tuple(len(tx) for tx in self.transmission_sets)

    def t_counts(self) -> np.ndarray:
        """Per source, how many other relays include it (t_{u_s})."""
        t = np.zeros(self.m_s, dtype=np.int64)
        for r, tx in enumerate(self.transmission_sets, start=1):
            for u in tx:
                if u != r:
                    t[u - 1] += 1
        return t


def algorithm1_transmission_sets(m_s: int, m_r: int, reciprocal: bool = False) -> NetworkTopology:
    """Deterministic cyclic construction: relay r forwards the next two
    sources after it in cyclic order.

    Rejects m_s < 3: at m_s = 2 the wrap maps a relay into its own
    transmission set, which the system model forbids.
    """
    if m_s < 3:
        raise ValueError("cyclic construction needs m_s >= 3")
    if m_r < m_s:
        raise ValueError("need m_r >= m_s")
    sets = tuple(
        (wrap_index(m_s, r + 1), wrap_index(m_s, r + 2)) for r in range(1, m_r + 1)
    )
    return NetworkTopology(m_s, m_r, sets, sets, interuser_reciprocal=reciprocal)


def random_transmission_sets(m_s: int, m_r: int, n: int, seed: int,
                             reciprocal: bool = False) -> NetworkTopology:
    """Each relay draws n distinct sources uniformly, excluding itself."""
    if not 0 < n < m_s:
        raise ValueError("need 0 < n < m_s")
    rng = np.random.default_rng(seed)
    sets = []
    for r in range(1, m_r + 1):
        pool = [u for u in range(1, m_s + 1) if u != r]
        sets.append(tuple(int(u) for u in rng.choice(pool, size=n, replace=False)))
    sets = tuple(sets)
    return NetworkTopology(m_s, m_r, sets, sets, interuser_reciprocal=reciprocal)


def explicit_topology(m_s: int, m_r: int, transmission_sets,
                      reciprocal: bool = False, allow_self_help: bool = False) -> NetworkTopology:
    """Topology from literal per-relay source tuples.

    `allow_self_help` admits sets that include the relay's own source,
    needed to reproduce published irregular-set examples that bend the
    self-exclusion rule.
    """
    sets = tuple(tuple(int(u) for u in tx) for tx in transmission_sets)
    return NetworkTopology(m_s, m_r, sets, sets, interuser_reciprocal=reciprocal,
                           allow_self_help=allow_self_help)


@dataclass(frozen=True)
class CodingMatrix:
    """(m_s + m_r) x m_s indicator of which source rides in which slot."""

    m: Gf2Matrix
    m_s: int
    m_r: int


def coding_matrix(t: NetworkTopology) -> CodingMatrix:
    """Identity over the source slots, transmission-set indicators below."""
    dense = np.zeros((t.m_s + t.m_r, t.m_s), dtype=np.uint8)
    dense[: t.m_s] = np.eye(t.m_s, dtype=np.uint8)
    for r, tx in enumerate(t.transmission_sets):
        for u in tx:
            dense[t.m_s + r, u - 1] = 1
    return CodingMatrix(Gf2Matrix.from_dense(dense), t.m_s, t.m_r)


def restrict_to_unerased(cm: CodingMatrix, erased) -> Gf2Matrix:
    """Drop the rows carried by the erased nodes (1-based node indices).

    Erasing node i removes its relay-slot row m_s+i and, when i is also a
    source, its source-slot row i.
    """
    erased = set(int(e) for e in erased)
    if not erased <= set(range(1, cm.m_r + 1)):
        raise ValueError("erased set outside 1..m_r")
    drop = set()
    for e in erased:
        if e <= cm.m_s:
            drop.add(e - 1)
        drop.add(cm.m_s + e - 1)
    keep = [i for i in range(cm.m_s + cm.m_r) if i not in drop]
    return cm.m.take_rows(keep)


def save_topology(t: NetworkTopology, path) -> None:
    """Plain-text form: `m_s m_r` header, then `relay: s1 s2 ...` lines."""
    with open(path, "w") as f:
        f.write(f"{t.m_s} {t.m_r}\n")
        for r, tx in enumerate(t.transmission_sets, start=1):
            f.write(f"{r}: " + " ".join(str(u) for u in tx) + "\n")


def load_topology(path, reciprocal: bool = False,
                  allow_self_help: bool = False) -> NetworkTopology:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError("expected `m_s m_r` header line")
        m_s, m_r = int(header[0]), int(header[1])
        sets: dict[int, tuple[int, ...]] = {}
        for line in f:
            line = line.strip()
            if not line:
                continue
            left, _, right = line.partition(":")
            sets[int(left)] = tuple(int(u) for u in right.split())
    if sorted(sets) != list(range(1, m_r + 1)):
        raise ValueError("need one line per relay 1..m_r")
    return explicit_topology(m_s, m_r, [sets[r] for r in range(1, m_r + 1)],
                             reciprocal=reciprocal, allow_self_help=allow_self_help)
