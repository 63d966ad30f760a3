"""Experiment harness: spec files, Monte Carlo WER sweeps, CSV output.

Spec files are flat `key = value` text with `include` support.  Sweeps
are deterministic for a given master seed regardless of worker count:
per-trial generators are seeded by (master_seed, point index, trial
index) and tallies are order-independent sums, with the stopping rule
applied at fixed batch boundaries.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import bounds, channel, codes, decoder, diversity, topology as topo
from .util import rng_for, wilson_interval


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


_DEFAULTS = {
    "name": "experiment",
    "sets": "algorithm1",
    "sets_n": "2",
    "sets_seed": "0",
    "sets_file": "",
    "reciprocal": "false",
    "variant": "smarc",
    "lambda": "",
    "rho": "",
    "code_seed": "1",
    "interuser": "perfect",
    "relay_decode": "threshold:5.5",
    "decoder": "bp",
    "max_iterations": "200",
    "llr_clamp": "30",
    "min_sum": "false",
    "min_errors": "100",
    "max_trials": "1000000",
    "master_seed": "1",
    "bound": "jncc",
    "trials": "1000000",
}


def _parse_spec_text(path, seen=None) -> dict[str, str]:
    seen = seen or set()
    real = os.path.realpath(path)
    if real in seen:
        raise ConfigError(f"include cycle at {path}")
    seen.add(real)
    values: dict[str, str] = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise ConfigError(str(e)) from e
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "include":
            inc = os.path.join(os.path.dirname(path), val)
            base = _parse_spec_text(inc, seen)
            base.update(values)
            values = base
        else:
            values[key] = val
    return values


def _parse_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        raise ConfigError("empty SNR grid")
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid range {text!r}")
        n = int(round((stop - start) / step))
        return tuple(start + k * step for k in range(n + 1))
    return tuple(float(v) for v in text.split(","))


def _parse_dd(text: str) -> dict[int, float]:
    out = {}
    for item in text.split():
        d, _, f = item.partition(":")
        out[int(d)] = float(f)
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one sweep."""

    name: str
    m_s: int
    m_r: int
    sets: str
    sets_n: int
    sets_seed: int
    sets_file: str
    reciprocal: bool
    variant: str
    L: int
    K: int
    lam: tuple[tuple[int, float], ...]
    rho: tuple[tuple[int, float], ...]
    code_seed: int
    interuser: str
    interuser_eps: float
    relay_decode: str
    decode_threshold_db: float
    decoder: str
    max_iterations: int
    llr_clamp: float
    min_sum: bool
    ebn0_grid_db: tuple[float, ...]
    min_errors: int
    max_trials: int
    master_seed: int
    bound: str
    trials: int
    raw: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        return cls.from_dict(_parse_spec_text(path))

    @classmethod
    def from_dict(cls, given: dict[str, str]) -> "ExperimentSpec":
        vals = dict(_DEFAULTS)
        vals.update(given)
        try:
            interuser, _, eps = vals["interuser"].partition(":")
            rule, _, thr = vals["relay_decode"].partition(":")
            spec = cls(
                name=vals["name"],
                m_s=int(vals["m_s"]),
                m_r=int(vals["m_r"]),
                sets=vals["sets"],
                sets_n=int(vals["sets_n"]),
                sets_seed=int(vals["sets_seed"]),
                sets_file=vals["sets_file"],
                reciprocal=vals["reciprocal"].lower() == "true",
                variant=vals["variant"],
                L=int(vals["L"]),
                K=int(vals["K"]),
                lam=tuple(_parse_dd(vals["lambda"]).items()),
                rho=tuple(_parse_dd(vals["rho"]).items()),
                code_seed=int(vals["code_seed"]),
                interuser=interuser,
                interuser_eps=float(eps) if eps else 0.0,
                relay_decode=rule,
                decode_threshold_db=float(thr) if thr else 5.5,
                decoder=vals["decoder"],
                max_iterations=int(vals["max_iterations"]),
                llr_clamp=float(vals["llr_clamp"]),
                min_sum=vals["min_sum"].lower() == "true",
                ebn0_grid_db=_parse_grid(vals["ebn0_db"]),
                min_errors=int(vals["min_errors"]),
                max_trials=int(vals["max_trials"]),
                master_seed=int(vals["master_seed"]),
                bound=vals["bound"],
                trials=int(vals["trials"]),
                raw=tuple(sorted(vals.items())),
            )
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad experiment spec: {e}") from e
        if spec.decoder not in ("bp", "layered"):
            raise ConfigError(f"unknown decoder {spec.decoder!r}")
        return spec

    def spec_hash(self) -> str:
        canon = "\n".join(f"{k}={v}" for k, v in self.raw)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @property
    def r_cp(self) -> float:
        return self.K / self.L

    @property
    def spectral_efficiency(self) -> float:
        return self.r_cp * self.m_s / (self.m_s + self.m_r)

    def gamma_for(self, ebn0_db: float) -> float:
        return self.spectral_efficiency * 10.0 ** (ebn0_db / 10.0)

    def snr_db_for(self, ebn0_db: float) -> float:
        return ebn0_db + 10.0 * np.log10(self.spectral_efficiency)


def build_topology(spec: ExperimentSpec) -> topo.NetworkTopology:
    if spec.sets == "algorithm1":
        return topo.algorithm1_transmission_sets(spec.m_s, spec.m_r, spec.reciprocal)
    if spec.sets == "random":
        return topo.random_transmission_sets(spec.m_s, spec.m_r, spec.sets_n,
                                             spec.sets_seed, spec.reciprocal)
    if spec.sets == "explicit":
        if not spec.sets_file:
            raise ConfigError("explicit sets need sets_file")
        return topo.load_topology(spec.sets_file, reciprocal=spec.reciprocal,
                                  allow_self_help=True)
    raise ConfigError(f"unknown set construction {spec.sets!r}")


def build_code(spec: ExperimentSpec, t: topo.NetworkTopology | None = None) -> codes.JnccCode:
    t = t or build_topology(spec)
    if spec.L == spec.K:
        p2p = None
    else:
        dd = codes.DegreeDistributions(spec.lam, spec.rho)
        p2p = codes.build_p2p_code(dd, spec.L, spec.K, spec.code_seed)
    return codes.assemble(spec.variant, t, p2p, L=spec.L, K=spec.K,
                          seed=spec.code_seed)


def channel_config(spec: ExperimentSpec, gamma: float) -> channel.ChannelConfig:
    return channel.ChannelConfig(
        gamma=gamma,
        interuser_model=spec.interuser,
        interuser_eps=spec.interuser_eps,
        relay_decode_rule=spec.relay_decode,
        decode_threshold_db=spec.decode_threshold_db,
        reciprocal=spec.reciprocal,
    )


def bp_config(spec: ExperimentSpec) -> decoder.BpConfig:
    return decoder.BpConfig(max_iterations=spec.max_iterations,
                            llr_clamp=spec.llr_clamp, min_sum=spec.min_sum)


@dataclass
class SweepPoint:
    eb_n0_db: float
    snr_db: float
    trials: int
    word_errors: int
    wer: float
    ci_low: float
    ci_high: float
    mean_iters: float
    per_source_errors: np.ndarray
    hit_max_trials: bool
    wall_time_s: float


@dataclass
class SweepResult:
    name: str
    spec_hash: str
    points: list[SweepPoint] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(f"# spec_sha256={self.spec_hash} name={self.name}\n")
            f.write("eb_n0_db,snr_db,trials,word_errors,wer,ci_low,ci_high,mean_iters\n")
            for p in self.points:
                f.write(f"{p.eb_n0_db:.4f},{p.snr_db:.4f},{p.trials},{p.word_errors},"
                        f"{p.wer:.6e},{p.ci_low:.6e},{p.ci_high:.6e},{p.mean_iters:.2f}\n")

    def ebn0_at(self, target_wer: float) -> float:
        db = np.array([p.eb_n0_db for p in self.points])
        logw = np.log10([max(p.wer, 1e-300) for p in self.points])
        order = np.argsort(logw)
        return float(np.interp(np.log10(target_wer), logw[order], db[order]))

    def slope_between(self, wer_hi: float = 1e-1, wer_lo: float = 1e-3) -> float:
        """Diversity slope -dlog10(WER)/dlog10(gamma) over a WER band."""
        sel = [p for p in self.points if wer_lo <= p.wer <= wer_hi and p.word_errors > 0]
        if len(sel) < 2:
            raise ValueError("not enough points in the WER band")
        x = np.array([p.snr_db / 10.0 for p in sel])
        y = np.log10([p.wer for p in sel])
        return float(-np.polyfit(x, y, 1)[0])


_WORKER_STATE: dict = {}


def _init_worker(payload):
    _WORKER_STATE["payload"] = payload


def _run_trials(args):
    point_index, t0, t1 = args
    spec, code, t = _WORKER_STATE["payload"]
    return _trial_block(spec, code, t, point_index, t0, t1)


def _trial_block(spec, code, t, point_index: int, t0: int, t1: int):
    """Tallies for trials [t0, t1) of one SNR point (order-independent)."""
    gamma = spec.gamma_for(spec.ebn0_grid_db[point_index])
    cfg = channel_config(spec, gamma)
    bpcfg = bp_config(spec)
    errors = 0
    iters = 0
    per_source = np.zeros(t.m_s, dtype=np.int64)
    for trial in range(t0, t1):
        rng = rng_for(spec.master_seed, point_index, trial)
        info = rng.integers(0, 2, size=(t.m_s, code.K), dtype=np.uint8)
        x = codes.encode(code, info)
        if code.h.matvec(x).any():
            raise AssertionError("encoder produced an invalid codeword")
        real = channel.draw_realization(cfg, t, rng=rng)
        if cfg.relay_decode_rule == "full-bp":
            real = _full_bp_silence(code, cfg, x, real, rng, bpcfg)
        llrs = channel.transmit(x, real, cfg, code, rng)
        if spec.decoder == "layered":
            res = decoder.layered_decode(code, llrs, bpcfg, true_info=info)
        else:
            res = decoder.bp_decode(code, llrs, bpcfg, true_info=info)
        errors += res.word_error
        iters += res.iterations_used
        per_source += res.per_source_error
    return errors, iters, per_source


def _full_bp_silence(code, cfg, x, real, rng, bpcfg):
    """Relay decode outcomes by actually running BP on each interuser link."""
    from .kernels import bp_run

    t = code.topology
    silent = set()
    for r in range(t.m_r):
        for u in t.decoding_sets[r]:
            a, b = code.slot_columns[u - 1]
            word = np.asarray(x[a:b], dtype=np.float64)
            if cfg.interuser_model == "perfect":
                continue
            alpha = 1.0 if cfg.interuser_model == "gaussian" else \
                float(np.sqrt(rng.exponential(1.0)))
            y = alpha * (2.0 * word - 1.0) + rng.normal(
                0.0, np.sqrt(1.0 / (2.0 * cfg.gamma)), len(word))
            llr = 4.0 * alpha * cfg.gamma * y
            if code.p2p is None:
                ok = bool(((llr > 0) == (word > 0.5)).all())
            else:
                post, _, conv = bp_run(code.p2p.graph(), llr, bpcfg.max_iterations,
                                       bpcfg.llr_clamp, min_sum=bpcfg.min_sum)
                ok = bool(conv and ((post > 0) == (word > 0.5)).all())
            if not ok:
                silent.add(r + 1)
                break
    return replace(real, silent_relays=frozenset(silent))


def _batch_schedule(max_trials: int, start: int = 256, cap: int = 32768):
    done = 0
    size = start
    while done < max_trials:
        n = min(size, max_trials - done)
        yield done, done + n
        done += n
        size = min(size * 2, cap)


def run_wer_sweep(spec: ExperimentSpec, threads: int = 1,
                  progress=None) -> SweepResult:
    """Word-error-rate sweep across the E_b/N_0 grid.

    Each point runs until `min_errors` word errors or `max_trials`,
    checked at fixed batch boundaries so results do not depend on the
    worker count.
    """
    t = build_topology(spec)
    code = build_code(spec, t)
    if spec.decoder == "layered" and code.glnc.kind != "identity":
        raise ConfigError("layered decoding needs an identity-layer variant")
    result = SweepResult(spec.name, spec.spec_hash())
    pool = None
    if threads > 1:
        pool = ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                   initargs=((spec, code, t),))
    try:
        for i, ebn0 in enumerate(spec.ebn0_grid_db):
            tic = time.perf_counter()
            errors = 0
            iters = 0
            trials = 0
            per_source = np.zeros(t.m_s, dtype=np.int64)
            for t0, t1 in _batch_schedule(spec.max_trials):
                if pool is None:
                    block = [_trial_block(spec, code, t, i, t0, t1)]
                else:
                    n_ch = min(threads, t1 - t0)
                    edges = np.linspace(t0, t1, n_ch + 1, dtype=int)
                    block = list(pool.map(_run_trials,
                                          [(i, a, b) for a, b in zip(edges, edges[1:])]))
                for e, it, ps in block:
                    errors += e
                    iters += it
                    per_source += ps
                trials = t1
                if errors >= spec.min_errors:
                    break
                if progress:
                    progress(i, ebn0, trials, errors)
            lo, hi = wilson_interval(errors, trials)
            result.points.append(SweepPoint(
                eb_n0_db=ebn0, snr_db=spec.snr_db_for(ebn0), trials=trials,
                word_errors=errors, wer=errors / trials, ci_low=lo, ci_high=hi,
                mean_iters=iters / trials, per_source_errors=per_source,
                hit_max_trials=errors < spec.min_errors,
                wall_time_s=time.perf_counter() - tic))
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def run_bound_sweep(spec: ExperimentSpec, dec_table=None) -> bounds.OutageCurve:
    """Outage sweep for the spec's bound kind on the spec's grid."""
    t = build_topology(spec)
    grid_snr = tuple(spec.snr_db_for(e) for e in spec.ebn0_grid_db)
    cfg = bounds.OutageConfig(
        topology=t, r_cp=spec.r_cp, bound_kind=spec.bound,
        snr_grid_db=grid_snr, trials=spec.trials,
        interuser_model="perfect" if spec.interuser == "perfect" else spec.interuser,
        seed=spec.master_seed)
    if spec.bound == "tightened" and dec_table is None:
        if spec.L == spec.K:
            raise ConfigError("tightened bound needs a point-to-point code (L > K)")
        dd = codes.DegreeDistributions(spec.lam, spec.rho)
        p2p = codes.build_p2p_code(dd, spec.L, spec.K, spec.code_seed)
        dec_table = bounds.decoded_mi_table(p2p, seed=spec.master_seed)
    return bounds.outage_curve(cfg, dec_table=dec_table)


def bound_curve_to_csv(curve: bounds.OutageCurve, path, spec_hash: str,
                       name: str) -> None:
    with open(path, "w") as f:
        f.write(f"# spec_sha256={spec_hash} name={name} bound={curve.kind}\n")
        f.write("eb_n0_db,snr_db,trials,outage_events,p_out,ci_low,ci_high\n")
        for p in curve.points:
            f.write(f"{p.eb_n0_db:.4f},{p.snr_db:.4f},{p.trials},{p.events},"
                    f"{p.p_out:.6e},{p.ci_low:.6e},{p.ci_high:.6e}\n")


def run_analyze(spec: ExperimentSpec, measure_bec: bool = False,
                max_e: int = 3) -> diversity.DiversityReport:
    t = build_topology(spec)
    report = diversity.analyze_topology(t)
    if measure_bec:
        code = build_code(spec, t)
        report.measured_d_bec = diversity.verify_bec_diversity(code, max_e=max_e)
    return report
