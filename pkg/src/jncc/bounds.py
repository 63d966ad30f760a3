"""Outage lower bounds and mutual-information machinery.

The conditional mutual information of BPSK over a known-gain Gaussian
channel is I(s) = 1 - E[log2(1 + exp(-LLR))] with LLR ~ N(4s, 8s) and
s = alpha^2 * gamma, evaluated by Gauss-Hermite quadrature and cached on
a log grid.  The tightened word-error bound replaces the raw channel
mutual information by that of the point-to-point decoder's output LLR,
whose density is captured by Monte Carlo on the actual factor graph.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .decoder import BpConfig
from .kernels import bp_run_batch
from .topology import NetworkTopology
from .util import rng_for, wilson_interval

_LN2 = np.log(2.0)


def _mi_of_llrs(llrs: np.ndarray) -> float:
    """1 - E[log2(1 + e^-L)] over LLR samples conditioned on bit 1."""
    return float(1.0 - np.mean(np.logaddexp(0.0, -llrs)) / _LN2)


def bpsk_mi(s, nodes: int = 129):
    """BPSK mutual information at effective SNR s = alpha^2 * gamma."""
    s = np.asarray(s, dtype=np.float64)
    if (s < 0).any():
        raise ValueError("effective SNR must be nonnegative")
    x, w = np.polynomial.hermite.hermgauss(nodes)
    z = np.sqrt(2.0) * x
    llr = 4.0 * s[..., None] + 2.0 * np.sqrt(2.0 * s)[..., None] * z
    vals = 1.0 - (w * np.logaddexp(0.0, -llr)).sum(axis=-1) / (np.sqrt(np.pi) * _LN2)
    return np.clip(vals, 0.0, 1.0) if vals.ndim else float(np.clip(vals, 0.0, 1.0))


@dataclass
class MiTable:
    """Monotone (alpha^2 gamma -> MI) lookup table on a log grid."""

    s_grid: np.ndarray
    mi: np.ndarray

    def __post_init__(self):
        self.mi = np.maximum.accumulate(np.clip(self.mi, 0.0, 1.0))
        self._log_s = np.log10(self.s_grid)

    def lookup(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.interp(np.log10(s), self._log_s, self.mi, left=0.0)

    def inverse(self, target: float) -> float:
        """Smallest s on the grid reaching the target MI (interpolated)."""
        if target <= self.mi[0]:
            return float(self.s_grid[0])
        if target > self.mi[-1]:
            return float("inf")
        keep = np.concatenate([[True], np.diff(self.mi) > 0])
        return float(10.0 ** np.interp(target, self.mi[keep], self._log_s[keep]))

    def save(self, path, kind: str = "raw") -> None:
        with open(path, "w") as f:
            f.write(f"# mi-table kind={kind} points={len(self.s_grid)}\n")
            f.write("alpha2gamma,mi\n")
            for s, m in zip(self.s_grid, self.mi):
                f.write(f"{s:.9e},{m:.9f}\n")

    @classmethod
    def load(cls, path) -> "MiTable":
        data = np.loadtxt(path, delimiter=",", skiprows=2)
        return cls(data[:, 0], data[:, 1])


def log_grid(s_lo: float, s_hi: float, per_decade: int = 60) -> np.ndarray:
    n = int(round(np.log10(s_hi / s_lo) * per_decade)) + 1
    return np.logspace(np.log10(s_lo), np.log10(s_hi), n)


@dataclass
class MiEstimator:
    """Raw-channel MI evaluator: quadrature (default) or Monte Carlo."""

    method: str = "gauss-hermite-quadrature"
    samples: int = 200_000
    seed: int = 0
    cache: MiTable | None = None

    def __call__(self, s):
        if self.method == "gauss-hermite-quadrature":
            return bpsk_mi(s)
        if self.method == "monte-carlo":
            rng = rng_for(self.seed, "mi-mc")
            z = rng.standard_normal(self.samples)
            s = np.atleast_1d(np.asarray(s, dtype=np.float64))
            out = np.array([_mi_of_llrs(4.0 * si + np.sqrt(8.0 * si) * z) for si in s])
            return np.clip(out, 0.0, 1.0)
        raise ValueError(f"unknown method {self.method!r}")

    def table(self, s_lo: float = 1e-6, s_hi: float = 1e4,
              per_decade: int = 60) -> MiTable:
        if self.cache is None:
            grid = log_grid(s_lo, s_hi, per_decade)
            self.cache = MiTable(grid, np.asarray(self(grid)))
        return self.cache


_raw_table: MiTable | None = None


def raw_mi_table() -> MiTable:
    global _raw_table
    if _raw_table is None:
        _raw_table = MiEstimator().table()
    return _raw_table


# -- decoder output-LLR density ------------------------------------------------


@dataclass
class LlrDensity:
    """Samples of the decoder's full output LLR, folded to bit 1."""

    samples: np.ndarray
    source: str = "monte-carlo-decoder"

    def consistency_gap(self) -> float:
        """|E[e^-L] - 1|; zero for an exactly symmetric-consistent density."""
        return float(abs(np.mean(np.exp(-np.clip(self.samples, -700, 700))) - 1.0))


def capture_llr_density(p2p, alpha: float, gamma: float, samples: int, seed: int,
                        cfg: BpConfig = BpConfig(max_iterations=60)) -> LlrDensity:
    """Output-LLR density of the point-to-point decoder at fixed gain.

    Runs BP on the point-to-point factor graph for `samples` random
    codewords over the alpha-gain channel, records the final posterior
    LLR of every bit and folds by the transmitted bit's sign, so all
    samples are conditioned on +1.
    """
    rng = rng_for(seed, "llr-capture")
    s = alpha * alpha * gamma
    info = rng.integers(0, 2, size=(samples, p2p.K), dtype=np.uint8)
    words = np.zeros((samples, p2p.L), dtype=np.uint8)
    for i in range(samples):
        words[i] = p2p.encode(info[i])
    signs = 2.0 * words - 1.0
    llr = signs * (4.0 * s) + np.sqrt(8.0 * s) * rng.standard_normal(words.shape)
    if p2p.L > p2p.K:
        post, _, _ = bp_run_batch(p2p.graph(), llr, cfg.max_iterations,
                                  cfg.llr_clamp, min_sum=cfg.min_sum,
                                  early_stop=cfg.early_stop)
    else:
        post = llr
    return LlrDensity((post * signs).ravel())


def mi_from_density(d: LlrDensity, consistency_tol: float | None = None) -> float:
    """MI of the new observation L under the symmetry condition.

    Uses p(l | -1)/p(l | +1) = e^-l, so MI = 1 - E[log2(1 + e^-L)].  The
    consistency check is only meaningful where the negative tail is
    actually sampled (moderate SNR); pass a tolerance to enforce it.
    """
    if len(d.samples) == 0:
        raise ValueError("empty density")
    if consistency_tol is not None and d.consistency_gap() > consistency_tol:
        warnings.warn(f"LLR density fails the consistency check "
                      f"(gap {d.consistency_gap():.3f})", stacklevel=2)
    return float(np.clip(_mi_of_llrs(d.samples), 0.0, 1.0))


def decoded_mi_table(p2p, s_lo: float = 1e-4, s_hi: float = 1e3,
                     per_decade: int = 60, samples: int = 120, seed: int = 0,
                     cfg: BpConfig = BpConfig(max_iterations=60)) -> MiTable:
    """(alpha^2 gamma -> post-decoding MI) table for the tightened bound.

    Projects onto the known constraints: at least the raw channel MI
    (the decoder only adds code information), monotone, in [0, 1].
    """
    grid = log_grid(s_lo, s_hi, per_decade)
    raw = bpsk_mi(grid)
    mi = np.empty_like(grid)
    for i, s in enumerate(grid):
        d = capture_llr_density(p2p, float(np.sqrt(s)), 1.0, samples, seed + i, cfg)
        mi[i] = mi_from_density(d)
    return MiTable(grid, np.maximum(mi, raw))


# -- outage events -------------------------------------------------------------


def _carrier_lists(t: NetworkTopology) -> list[np.ndarray]:
    return [np.array([r for r, tx in enumerate(t.transmission_sets) if u in tx],
                     dtype=np.int64) for u in range(1, t.m_s + 1)]


def jncc_outage_events(mi_node: np.ndarray, b: np.ndarray,
                       t: NetworkTopology, r_c: float) -> np.ndarray:
    """Joint-code outage: sum-rate clause plus per-source clauses.

    `mi_node[i, u]` is trial i's destination-link MI of node u+1 (one
    gain covers both phases), `b[i, j]` the relay-decoded indicator.
    Outage uses the non-strict comparison (rate >= mutual information).
    """
    m_s, m_r = t.m_s, t.m_r
    relay_terms = b * mi_node
    total = mi_node[:, :m_s].sum(axis=1) + relay_terms.sum(axis=1)
    out = total <= r_c * (m_s + m_r)
    thr = r_c * (m_s + m_r) / m_s
    for u, carriers in enumerate(_carrier_lists(t)):
        per = mi_node[:, u] + relay_terms[:, carriers].sum(axis=1)
        out |= per <= thr
    return out


def layered_outage_events(erased_src: np.ndarray, erased_relay: np.ndarray,
                          t: NetworkTopology) -> np.ndarray:
    """Layered-construction outage from per-packet erasure indicators.

    Outage when more packets are lost than the network code's redundancy,
    or some source has its own packet and every carrying relay packet
    erased.
    """
    out = erased_src.sum(axis=1) + erased_relay.sum(axis=1) > t.m_r
    for u, carriers in enumerate(_carrier_lists(t)):
        out |= erased_src[:, u] & erased_relay[:, carriers].all(axis=1)
    return out


def tightened_outage_events(mi_node: np.ndarray, b: np.ndarray,
                            t: NetworkTopology, r_n: float) -> np.ndarray:
    """Concatenated-decoding outage: decoder-output MI against the
    network coding rate (the clauses are the joint-code ones with the
    overall rate replaced by the network coding rate)."""
    return jncc_outage_events(mi_node, b, t, r_n)


# -- Monte Carlo sweep ----------------------------------------------------------


@dataclass(frozen=True)
class OutageConfig:
    """One outage sweep: rates, link models, grid, and trial budget."""

    topology: NetworkTopology
    r_cp: float
    bound_kind: str
    snr_grid_db: tuple[float, ...]
    trials: int = 1_000_000
    interuser_model: str = "rayleigh"
    seed: int = 0
    chunk: int = 1_000_000

    def __post_init__(self):
        if self.bound_kind not in ("jncc", "layered", "tightened"):
            raise ValueError(f"unknown bound kind {self.bound_kind!r}")
        if self.interuser_model not in ("perfect", "rayleigh", "gaussian"):
            raise ValueError(f"unknown interuser model {self.interuser_model!r}")
        if not self.snr_grid_db:
            raise ValueError("empty SNR grid")
        if not 0 < self.r_cp <= 1:
            raise ValueError("point-to-point rate must be in (0, 1]")

    @property
    def r_n(self) -> float:
        return self.topology.m_s / (self.topology.m_s + self.topology.m_r)

    @property
    def r_c(self) -> float:
        return self.r_cp * self.r_n


@dataclass
class OutagePoint:
    snr_db: float
    eb_n0_db: float
    trials: int
    events: int
    p_out: float
    ci_low: float
    ci_high: float


@dataclass
class OutageCurve:
    kind: str
    points: list[OutagePoint] = field(default_factory=list)

    def snr_at(self, target_p: float) -> float:
        """SNR (dB) where the curve crosses target_p, by log-linear
        interpolation on the probability axis."""
        db = np.array([p.snr_db for p in self.points])
        logp = np.log10(np.array([max(p.p_out, 1e-300) for p in self.points]))
        order = np.argsort(logp)
        return float(np.interp(np.log10(target_p), logp[order], db[order]))

    def ebn0_at(self, target_p: float) -> float:
        off = self.points[0].eb_n0_db - self.points[0].snr_db
        return self.snr_at(target_p) + off

    def slope(self, top_decade_from: float | None = None) -> float:
        """Log-log diversity slope fitted over the lowest usable decade.

        Fits -dlog10(P)/dlog10(gamma) over the points whose outage lies
        within one decade above the smallest well-estimated probability.
        """
        pts = [p for p in self.points if p.events >= 50]
        p_min = min(p.p_out for p in pts)
        lo = top_decade_from if top_decade_from is not None else p_min
        sel = [p for p in pts if lo <= p.p_out <= 10 * lo]
        if len(sel) < 2:
            raise ValueError("not enough points in the top decade")
        x = np.array([p.snr_db / 10.0 for p in sel])
        y = np.log10(np.array([p.p_out for p in sel]))
        return float(-np.polyfit(x, y, 1)[0])


def _interuser_b(cfg: OutageConfig, gamma: float, s_thr: float, n: int,
                 rng: np.random.Generator) -> np.ndarray:
    t = cfg.topology
    if cfg.interuser_model == "perfect":
        return np.ones((n, t.m_r), dtype=bool)
    if cfg.interuser_model == "gaussian":
        ok = gamma > s_thr  # unit gain on every interuser link
        return np.full((n, t.m_r), ok)
    b = np.empty((n, t.m_r), dtype=bool)
    for r in range(t.m_r):
        deg = len(t.transmission_sets[r])
        links = rng.exponential(1.0, size=(n, deg)) * gamma
        b[:, r] = (links > s_thr).all(axis=1)
    return b


def outage_curve(cfg: OutageConfig, dec_table: MiTable | None = None) -> OutageCurve:
    """Monte Carlo outage sweep for one bound kind.

    The per-link MI is a table lookup on alpha^2 * gamma; relay-decoded
    indicators come from thresholding the interuser SNR at the point
    where the raw MI crosses the point-to-point rate.  The tightened kind
    requires `dec_table` (post-decoding MI).
    """
    t = cfg.topology
    raw = raw_mi_table()
    if cfg.bound_kind == "tightened":
        if dec_table is None:
            raise ValueError("tightened bound needs the post-decoding MI table")
        node_table = dec_table
    else:
        node_table = raw
    s_thr = raw.inverse(cfg.r_cp)
    curve = OutageCurve(cfg.bound_kind)
    for i, db in enumerate(cfg.snr_grid_db):
        gamma = 10.0 ** (db / 10.0)
        events = 0
        done = 0
        chunk_idx = 0
        while done < cfg.trials:
            n = min(cfg.chunk, cfg.trials - done)
            rng = rng_for(cfg.seed, "outage", cfg.bound_kind, i, chunk_idx)
            s_node = rng.exponential(1.0, size=(n, t.m_r)) * gamma
            b = _interuser_b(cfg, gamma, s_thr, n, rng)
            if cfg.bound_kind == "layered":
                erased_src = s_node[:, : t.m_s] < s_thr
                erased_relay = ~b | (s_node < s_thr)
                out = layered_outage_events(erased_src, erased_relay, t)
            else:
                mi_node = node_table.lookup(s_node)
                if cfg.bound_kind == "jncc":
                    out = jncc_outage_events(mi_node, b, t, cfg.r_c)
                else:
                    out = tightened_outage_events(mi_node, b, t, cfg.r_n)
            events += int(out.sum())
            done += n
            chunk_idx += 1
        lo, hi = wilson_interval(events, done)
        curve.points.append(OutagePoint(
            snr_db=float(db),
            eb_n0_db=float(db - 10.0 * np.log10(cfg.r_c)),
            trials=done, events=events, p_out=events / done,
            ci_low=lo, ci_high=hi))
    return curve
