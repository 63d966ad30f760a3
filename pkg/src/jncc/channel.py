"""Physical layer: BPSK over Rayleigh block fading with AWGN.

One fading gain per transmitting node covers both its source-phase and
relay-phase slot (slow fading).  The noise convention is real Gaussian
with per-sample variance 1/(2*gamma), which makes the channel LLR exactly
4*alpha*gamma*y and keeps it consistent with the mutual-information
kernel used by the outage bounds.  LLRs follow the package convention:
positive favors bit 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import NetworkTopology
from .util import rng_for

INTERUSER_MODELS = ("perfect", "rayleigh", "gaussian", "bec")
DECODE_RULES = ("threshold", "full-bp")


DESTINATION_MODELS = ("rayleigh", "bec")

# LLR magnitude standing in for a perfect (noiseless) link on erasure
# channels; decoders clamp it to their own bound anyway.
BEC_LLR = 50.0


@dataclass(frozen=True)
class ChannelConfig:
    """Average SNR and link-model selection for one experiment."""

    gamma: float
    interuser_model: str = "perfect"
    interuser_eps: float = 0.0
    destination_model: str = "rayleigh"
    destination_eps: float = 0.0
    relay_decode_rule: str = "threshold"
    decode_threshold_db: float = 5.5
    reciprocal: bool = False

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.interuser_model not in INTERUSER_MODELS:
            raise ValueError(f"unknown interuser model {self.interuser_model!r}")
        if self.destination_model not in DESTINATION_MODELS:
            raise ValueError(f"unknown destination model {self.destination_model!r}")
        for eps in (self.interuser_eps, self.destination_eps):
            if not 0.0 <= eps <= 1.0:
                raise ValueError("erasure probability must be in [0, 1]")
        if self.relay_decode_rule not in DECODE_RULES:
            raise ValueError(f"unknown relay decode rule {self.relay_decode_rule!r}")

    @property
    def decode_threshold(self) -> float:
        return 10.0 ** (self.decode_threshold_db / 10.0)

    def with_gamma(self, gamma: float) -> "ChannelConfig":
        return ChannelConfig(gamma, self.interuser_model, self.interuser_eps,
                             self.destination_model, self.destination_eps,
                             self.relay_decode_rule, self.decode_threshold_db,
                             self.reciprocal)


@dataclass
class FadingRealization:
    """One trial's fading state.

    `alpha` holds the node-to-destination gains (index 0 = node 1), valid
    for both phases; `interuser_ok[u, r]` says whether relay r+1 could
    decode source u+1; `silent_relays` is the derived 1-based set.
    """

    alpha: np.ndarray
    interuser_ok: np.ndarray
    silent_relays: frozenset[int] = field(default_factory=frozenset)


def _rayleigh(rng: np.random.Generator, size) -> np.ndarray:
    # E[alpha^2] = 1: alpha^2 is unit-mean exponential.
    return np.sqrt(rng.exponential(1.0, size=size))


def draw_realization(cfg: ChannelConfig, t: NetworkTopology, seed=None,
                     rng: np.random.Generator | None = None) -> FadingRealization:
    """Sample destination gains, interuser outcomes and relay silence.

    Under the threshold rule a relay goes silent as soon as one member of
    its decoding set arrives below the decode threshold.  The full-BP
    rule leaves `interuser_ok` all-true here; actual decoding is done by
    the caller, which has the transmitted codewords.
    """
    rng = rng if rng is not None else rng_for(seed, "fading")
    if cfg.destination_model == "bec":
        alpha = (rng.random(t.m_r) >= cfg.destination_eps).astype(np.float64)
    else:
        alpha = _rayleigh(rng, t.m_r)
    ok = np.ones((t.m_s, t.m_r), dtype=bool)
    if cfg.relay_decode_rule == "threshold":
        if cfg.interuser_model == "rayleigh":
            a2 = rng.exponential(1.0, size=(t.m_s, t.m_r))
            if cfg.reciprocal:
                sq = a2[:, : t.m_s]
                i, j = np.tril_indices(t.m_s, k=-1)
                sq[j, i] = sq[i, j]
            ok = a2 * cfg.gamma > cfg.decode_threshold
        elif cfg.interuser_model == "gaussian":
            ok[:] = cfg.gamma > cfg.decode_threshold
        elif cfg.interuser_model == "bec":
            ok = rng.random((t.m_s, t.m_r)) >= cfg.interuser_eps
            if cfg.reciprocal:
                sq = ok[:, : t.m_s]
                i, j = np.tril_indices(t.m_s, k=-1)
                sq[j, i] = sq[i, j]
    silent = set()
    if cfg.interuser_model != "perfect":
        for r in range(t.m_r):
            if any(not ok[u - 1, r] for u in t.decoding_sets[r]):
                silent.add(r + 1)
    return FadingRealization(alpha, ok, frozenset(silent))


def transmit(x: np.ndarray, real: FadingRealization, cfg: ChannelConfig,
             code, rng: np.random.Generator) -> np.ndarray:
    """Destination LLRs for one overall codeword.

    Silent-relay slots (and -1 marker bits) produce zero LLRs; everything
    else sees y = alpha * (2b - 1) + n and LLR = 4 * alpha * gamma * y.
    """
    m_s = code.topology.m_s
    llr = np.zeros(code.n, dtype=np.float64)
    sigma = np.sqrt(1.0 / (2.0 * cfg.gamma))
    for s, (a, b) in enumerate(code.slot_columns):
        node = s if s < m_s else s - m_s
        if s >= m_s and (node + 1) in real.silent_relays:
            continue
        bits = x[a:b]
        if (bits < 0).any():
            continue
        alpha = real.alpha[node]
        if cfg.destination_model == "bec":
            llr[a:b] = alpha * BEC_LLR * (2.0 * bits - 1.0)
        else:
            y = alpha * (2.0 * bits - 1.0) + rng.normal(0.0, sigma, b - a)
            llr[a:b] = 4.0 * alpha * cfg.gamma * y
    return llr


def bec_transmit(x: np.ndarray, erased_nodes, code) -> tuple[np.ndarray, np.ndarray]:
    """Block-erasure view: (known mask, bit values).

    Erasing a source node wipes both its slots (2L bits); a pure relay
    node loses just its relay slot (L bits).
    """
    known = np.ones(code.n, dtype=np.uint8)
    values = np.asarray(x, dtype=np.int16).clip(min=0).astype(np.uint8)
    for node in erased_nodes:
        for s in code.slot_of_node(node):
            a, b = code.slot_columns[s]
            known[a:b] = 0
    known[np.asarray(x) < 0] = 0
    return known.astype(bool), values


def bec_llrs(known: np.ndarray, values: np.ndarray, clamp: float) -> np.ndarray:
    """Saturated-LLR encoding of an erasure pattern for the BP decoder."""
    return np.where(known, clamp * (2.0 * values - 1.0), 0.0)
