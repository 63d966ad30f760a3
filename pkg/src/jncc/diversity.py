"""Diversity metrics and exhaustive erasure verification.

Gathers the analytic quantities (maximum achievable diversity order, the
space diversity bound 1 + t_min, the coding-matrix rank metric) and a
brute-force check that measures the diversity order of a concrete code on
the block binary erasure channel by enumerating node-erasure patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import gf2
from .topology import CodingMatrix, NetworkTopology, restrict_to_unerased


def d_max(m_s: int, m_r: int) -> int:
    """Maximum diversity order any linear joint code can reach here."""
    if not 1 <= m_s <= m_r:
        raise ValueError("need m_r >= m_s >= 1")
    if m_r <= 2 * m_s:
        return (1 + m_r + 1) // 2  # ceil((1+m_r)/2)
    return 1 + m_r - m_s


def full_diversity_min_tmin(m_s: int, m_r: int) -> int:
    """Least t_min compatible with full diversity (threshold q)."""
    if m_r <= 2 * m_s:
        return m_r // 2
    return m_r - m_s


def min_n_for_full_diversity(m_s: int, m_r: int) -> int:
    """Smallest constant transmission-set size that keeps full diversity
    achievable."""
    if not 1 <= m_s <= m_r:
        raise ValueError("need m_r >= m_s >= 1")
    if m_r == m_s:
        return m_s // 2
    if m_r <= 2 * m_s:
        return (m_s + 1) // 2
    return m_s - (m_s * m_s) // m_r


def t_min(t: NetworkTopology) -> int:
    return int(t.t_counts().min())


def d_r(t: NetworkTopology) -> int:
    """Space diversity order: one direct link plus t_min relayed copies."""
    return 1 + t_min(t)


def d_m(cm: CodingMatrix) -> int:
    """Coding-matrix diversity metric.

    Enumerates erasure sets in increasing cardinality and returns e*+1
    where e* is the largest count for which every restricted matrix keeps
    full column rank.  Stops at the first rank-deficient restriction.
    """
    for e in range(1, cm.m_r + 1):
        for pattern in combinations(range(1, cm.m_r + 1), e):
            if gf2.rank(restrict_to_unerased(cm, pattern)) < cm.m_s:
                return e
    return cm.m_r + 1


@dataclass
class DiversityReport:
    d_max: int
    t_min: int
    d_r: int
    d_m: int
    full_diversity_feasible: bool
    measured_d_bec: int | None = None

    def as_dict(self) -> dict:
        out = {
            "d_max": self.d_max,
            "t_min": self.t_min,
            "d_R": self.d_r,
            "d_M": self.d_m,
            "full_diversity_feasible": self.full_diversity_feasible,
        }
        if self.measured_d_bec is not None:
            out["measured_d_bec"] = self.measured_d_bec
        return out


def analyze_topology(t: NetworkTopology, cm: CodingMatrix | None = None) -> DiversityReport:
    from .topology import coding_matrix  # local to keep module import light

    cm = cm or coding_matrix(t)
    tm = t_min(t)
    return DiversityReport(
        d_max=d_max(t.m_s, t.m_r),
        t_min=tm,
        d_r=1 + tm,
        d_m=d_m(cm),
        full_diversity_feasible=tm >= full_diversity_min_tmin(t.m_s, t.m_r),
    )


def _erased_slots(code, pattern) -> list[int]:
    """Slot indices removed by erasing the given 1-based node indices.

    A source-node erasure takes out both its source slot and its relay
    slot (one fading gain covers both phases); a pure relay loses only its
    relay slot.
    """
    m_s = code.topology.m_s
    slots = []
    for node in pattern:
        if node <= m_s:
            slots.append(node - 1)
        slots.append(m_s + node - 1)
    return slots


def bec_pattern_recoverable(code, pattern, decoder: str = "peeling") -> bool:
    """Whether every information bit survives erasing the given nodes.

    Assumes perfect interuser links (no relay silence); recoverability on
    the block erasure channel is codeword-independent, so the all-zero
    codeword is used.
    """
    n = code.h.cols
    known = np.ones(n, dtype=bool)
    for s in _erased_slots(code, pattern):
        a, b = code.slot_columns[s]
        known[a:b] = False
    info_cols = code.info_columns()
    if decoder == "peeling":
        from .decoder import peel_resolve

        resolved, _, _ = peel_resolve(code.h, known, np.zeros(n, dtype=np.uint8))
        return bool(resolved[info_cols].all())
    if decoder == "gaussian":
        unknown_idx = np.nonzero(~known)[0]
        sub = code.h.take_cols(unknown_idx)
        determined, _ = gf2.solve_determined(sub, np.zeros(sub.rows, dtype=np.uint8))
        info_unknown = np.isin(unknown_idx, info_cols)
        return bool(determined[info_unknown].all())
    raise ValueError(f"unknown decoder {decoder!r}")


def bec_failure_patterns(code, e: int, decoder: str = "peeling") -> list[tuple[int, ...]]:
    m_r = code.topology.m_r
    return [p for p in combinations(range(1, m_r + 1), e)
            if not bec_pattern_recoverable(code, p, decoder)]


def verify_bec_diversity(code, max_e: int = 3, decoder: str = "peeling") -> int | None:
    """Measured diversity order on the block erasure channel.

    Enumerates all node-erasure patterns of size 1..max_e and returns the
    smallest size at which some pattern defeats the chosen decoder (that
    size being the measured diversity order), or None when every pattern
    up to max_e is recoverable.
    """
    for e in range(1, max_e + 1):
        if bec_failure_patterns(code, e, decoder):
            return e
    return None
