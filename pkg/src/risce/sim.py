"""Monte Carlo experiment engine.

Runs the estimator comparison sweeps with deterministic seeding.  Every
random draw comes from a named substream derived from the master seed, so
results are a pure function of the configuration.  The channel substream
is keyed only by quantities that physically affect the channel (geometry,
scatterer counts, trial index); protocol quantities such as the pilot
budget or SNR key the other substreams.  Sweep points that differ only in
protocol therefore see identical channel realizations, which turns the
cross-point comparisons into paired ones.
"""

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import estimators as est
from . import grouping
from . import phase
from .channel import Geometry, draw_channel

logger = logging.getLogger(__name__)

# canonical ordering, also the legend/serialization order downstream
METHOD_NAMES = ("conv2tce", "omp", "noperm", "greedy")
GROUPED_METHODS = ("noperm", "greedy")

THREADS_ENV = "RISCE_THREADS"


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SimConfig:
    """Experiment description; field names mirror the config-file keys."""

    N: int = 64
    M: int = 256
    Q: int = 16
    B: int = 8
    snr_db: float = 20.0
    L_rb: int = 16
    L_ur: int = 16
    trials: int = 200
    master_seed: int = 7
    methods: tuple = METHOD_NAMES
    f_hat_rel_error: float = 0.0
    geometry: Geometry = field(default_factory=Geometry)

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if self.M % self.Q:
            raise ValueError(
                f"m={self.M} is not divisible by q={self.Q}")
        if not _is_pow2(self.Q) or not _is_pow2(self.M // self.Q):
            raise ValueError("q and m/q must both be powers of two")
        if not 1 <= self.B <= self.M // self.Q:
            raise ValueError("b must lie in [1, m/q]")
        if self.f_hat_rel_error < 0.0:
            raise ValueError("f_hat_rel_error must be nonnegative")
        bad = [m for m in self.methods if m not in METHOD_NAMES]
        if bad:
            raise ValueError(f"unknown methods: {bad}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.geometry.n_bs != self.N or self.geometry.n_ris != self.M:
            raise ValueError("geometry array sizes disagree with n/m")
        return self

    def canonical_methods(self):
        return tuple(m for m in METHOD_NAMES if m in self.methods)


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one method on one trial."""

    nmse: float
    worst_condition: float
    est_seconds: float
    flagged: bool
    partition: object  # Partition or None


@dataclass(frozen=True)
class MethodRecord:
    """Aggregated row for one (sweep point, method) pair."""

    sweep: str
    point: str
    method: str
    T: int
    Q: int
    B: int
    L_rb: int
    L_ur: int
    snr_db: float
    trials: int
    mean_nmse: float
    median_nmse: float
    mean_worst_cond: float
    mean_est_seconds: float
    seed: int
    partition_hash: str


@dataclass(frozen=True)
class SweepResult:
    records: tuple


def snr_to_noise_var(snr_db, P=1.0):
    """Noise variance for a target SNR under unit-mean channel scaling."""
    if P <= 0.0:
        raise ValueError("P must be positive")
    return P * 10.0 ** (-snr_db / 10.0)


def _stream(master_seed, *key):
    """Independent generator for a named substream of the master seed."""
    digest = hashlib.blake2b(repr(key).encode(), digest_size=16).digest()
    words = [int.from_bytes(digest[i:i + 8], "little") for i in (0, 8)]
    return np.random.default_rng(np.random.SeedSequence([master_seed] + words))


def _channel_key(cfg):
    """Substream key: only things that alter the physical channel draw."""
    g = cfg.geometry
    return ("channel",
            tuple(g.bs_position), tuple(g.ris_position),
            tuple(g.user_region_center), g.user_region_radius,
            g.carrier_frequency, g.bs_array.count, g.bs_array.spacing_wl,
            g.ris_array.rows, g.ris_array.cols, g.ris_array.spacing_wl,
            g.los_kappa, cfg.L_rb, cfg.L_ur)


def _point_key(cfg, sweep, point, T):
    return (sweep, point, T, cfg.N, cfg.M, cfg.Q, cfg.B, cfg.snr_db,
            cfg.L_rb, cfg.L_ur, cfg.f_hat_rel_error)


def _partition_cache_key(cfg, trial):
    return (trial, cfg.L_rb, cfg.L_ur, cfg.f_hat_rel_error, cfg.Q)


def channel_estimate_for_trial(cfg, trial):
    """Replay the (possibly perturbed) channel estimate of one trial."""
    rng = _stream(cfg.master_seed, _channel_key(cfg), trial)
    realization = draw_channel(cfg.geometry, cfg.L_rb, cfg.L_ur, rng)
    return est.perturb_channel_estimate(
        realization.ris_bs, cfg.f_hat_rel_error, rng)


def run_trial(cfg, T, trial, sweep="adhoc", point="0", caches=None):
    """One full pipeline pass; returns {method: TrialRecord}.

    All requested methods see the same channel and an equal pilot budget
    of T slots.  Singular solves are flagged in the record, not raised.
    """
    caches = caches if caches is not None else {}
    ms = cfg.master_seed
    noise_var = snr_to_noise_var(cfg.snr_db)
    pkey = _point_key(cfg, sweep, point, T)

    ch_rng = _stream(ms, _channel_key(cfg), trial)
    realization = draw_channel(cfg.geometry, cfg.L_rb, cfg.L_ur, ch_rng)
    F_hat = est.perturb_channel_estimate(
        realization.ris_bs, cfg.f_hat_rel_error, ch_rng)

    methods = cfg.canonical_methods()
    out = {}

    if "conv2tce" in methods or "omp" in methods:
        vec_rng = _stream(ms, "phases", pkey, trial)
        vectors = phase.random_phase_vectors(cfg.M, T, vec_rng)
        noise_rng = _stream(ms, "noise-random", pkey, trial)
        obs = phase.received_pilots(realization, vectors, 1.0,
                                    noise_var, noise_rng)
        if "conv2tce" in methods:
            t0 = time.perf_counter()
            r = est.conv_2tce(F_hat, vectors, obs)
            dt = time.perf_counter() - t0
            out["conv2tce"] = TrialRecord(
                est.nmse(r.h_hat, realization.user_ris),
                r.condition, dt, r.flagged, None)
        if "omp" in methods:
            t0 = time.perf_counter()
            D = est.panel_dictionary(cfg.geometry.ris_array)
            r = est.omp_estimate(F_hat, vectors, obs, D, cfg.L_ur)
            dt = time.perf_counter() - t0
            out["omp"] = TrialRecord(
                est.nmse(r.h_hat, realization.user_ris),
                r.condition, dt, r.flagged, None)

    grouped = [m for m in methods if m in GROUPED_METHODS]
    if grouped:
        if T != cfg.Q * cfg.B:
            raise ValueError("grouped methods need T = Q * B")
        parts = {}
        if "noperm" in grouped:
            parts["noperm"] = grouping.contiguous_partition(cfg.M, cfg.Q)
        if "greedy" in grouped:
            ckey = _partition_cache_key(cfg, trial)
            part = caches.get(ckey)
            if part is None:
                W = grouping.correlation_weights(F_hat)
                part = grouping.greedy_partition(W, cfg.Q, cfg.M // cfg.Q)
                caches[ckey] = part
            parts["greedy"] = part
        for name, part in parts.items():
            schedule = phase.build_schedule(cfg.M, cfg.Q, cfg.B, part)
            noise_rng = _stream(ms, "noise-" + name, pkey, trial)
            obs_p = phase.simulate_pilot_rx(realization, schedule, 1.0,
                                            noise_var, noise_rng)
            t0 = time.perf_counter()
            z = phase.decouple(obs_p, schedule)
            r = est.piecewise_ls(F_hat, schedule, z)
            dt = time.perf_counter() - t0
            out[name] = TrialRecord(
                est.nmse(r.h_hat, realization.user_ris),
                r.condition, dt, r.flagged, part)
    return out


def _partition_fingerprint(parts):
    if not parts:
        return "-"
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p.groups).encode())
    return h.hexdigest()


def _thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1
    return max(1, n)


def _run_point(cfg, sweep, point, T, caches):
    """All trials of one sweep point, reduced in trial order."""
    workers = _thread_count()
    trial_ids = range(cfg.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda i: run_trial(cfg, T, i, sweep, point, caches),
                trial_ids))
    else:
        results = [run_trial(cfg, T, i, sweep, point, caches)
                   for i in trial_ids]

    records = []
    for method in cfg.canonical_methods():
        per = [r[method] for r in results]
        nm = np.array([p.nmse for p in per])
        conds = np.array([p.worst_condition for p in per])
        secs = np.array([p.est_seconds for p in per])
        parts = [p.partition for p in per if p.partition is not None]
        records.append(MethodRecord(
            sweep=sweep, point=point, method=method, T=T,
            Q=cfg.Q, B=cfg.B, L_rb=cfg.L_rb, L_ur=cfg.L_ur,
            snr_db=cfg.snr_db, trials=cfg.trials,
            mean_nmse=float(np.mean(nm)),
            median_nmse=float(np.median(nm)),
            mean_worst_cond=float(np.mean(conds)),
            mean_est_seconds=float(np.mean(secs)),
            seed=cfg.master_seed,
            partition_hash=_partition_fingerprint(parts)))
    return records


def sweep_pilot_overhead(cfg, t_values):
    """NMSE versus total pilot budget; Q fixed, B swept as T / Q."""
    cfg.validate()
    records = []
    caches = {}
    grouped = any(m in GROUPED_METHODS for m in cfg.methods)
    for T in t_values:
        if grouped:
            if T % cfg.Q:
                raise ValueError(
                    f"T={T} is not a multiple of q={cfg.Q}")
            point_cfg = replace(cfg, B=T // cfg.Q).validate()
        else:
            point_cfg = cfg
        records.extend(_run_point(point_cfg, "pilots", str(T), T, caches))
    return SweepResult(tuple(records))


def sweep_scatterers(cfg, l_values):
    """NMSE versus scatterer count, applied to both links; T held fixed."""
    cfg.validate()
    T = cfg.Q * cfg.B
    records = []
    caches = {}
    for L in l_values:
        if L < 1:
            raise ValueError("scatterer counts must be positive")
        point_cfg = replace(cfg, L_rb=L, L_ur=L).validate()
        records.extend(_run_point(point_cfg, "scatterers", str(L), T, caches))
    return SweepResult(tuple(records))


def sweep_groups(cfg, q_values, T):
    """NMSE versus group count at a fixed pilot budget T.

    Group counts that cannot realize T (non-divisor, subframes exceeding
    the group size, non-power-of-two) are skipped with a warning.
    """
    cfg.validate()
    records = []
    caches = {}
    for Q in q_values:
        if (Q < 1 or T % Q or cfg.M % Q
                or not _is_pow2(Q) or not _is_pow2(cfg.M // Q)
                or T // Q > cfg.M // Q):
            logger.warning("skipping q=%d: incompatible with T=%d, m=%d",
                           Q, T, cfg.M)
            continue
        point_cfg = replace(cfg, Q=Q, B=T // Q).validate()
        records.extend(_run_point(point_cfg, "groups", str(Q), T, caches))
    return SweepResult(tuple(records))
