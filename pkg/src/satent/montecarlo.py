"""Discrete-event oracle for the full attempt loop.

Replays the protocol attempt by attempt: every live slot pair samples one
of {two-sided herald, lone click left, lone click right, nothing}; lone
clicks lock that station's slot for L attempts; attempts with two or more
heralds discard the whole trial (the analytic formulas condition on that
never happening); the qubit-mode cutoff restarts a cycle when the second
pair misses its window.  Pair fidelities are attached analytically as
F(storage time) -- the randomness here covers timing and combinatorics
only, which is exactly what the closed forms claim to capture.

Trials are vectorized across a numpy axis and partitioned into
independent substreams: a fixed (seed, algorithm, partition count)
reproduces every per-trial output bit for bit, regardless of worker
parallelism.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError
from .analytics import attempt_duration, mode_slots
from .availability import (availability_pi00, lockout_attempt_count,
                           lone_click_probability)
from .cutoff import CutoffParams
from .link import LinkConfig, heralding_time, p_t_at_distance
from .spdc import ExpMixture, MemoryConfig, SourceConfig, fidelity_mixture, herald_trace

_ALGORITHMS = ("philox", "pcg64")


@dataclass(frozen=True)
class RngSpec:
    """Seed plus generator family; fixes the whole simulation stream."""

    seed: int
    algorithm_id: str = "philox"

    def __post_init__(self):
        if self.algorithm_id not in _ALGORITHMS:
            raise ValueError(f"algorithm_id must be one of {_ALGORITHMS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def generator(self, partition_index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(partition_index,))
        if self.algorithm_id == "philox":
            return np.random.Generator(np.random.Philox(seq))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class TrialRecord:
    """One Monte Carlo realization."""

    total_attempts: int
    per_pair_success_attempt: tuple[int, ...]
    per_pair_storage_time: tuple[float, ...]
    discard_events: int
    multi_click_discards: int
    sampled_fidelities: tuple[float, ...]


@dataclass(frozen=True)
class McSummary:
    """Batch aggregates; per-trial arrays kept for cross-validation."""

    trials: int
    completed: int
    mean_attempts: float
    stderr_attempts: float
    mean_fidelity: float
    stderr_fidelity: float
    rate_hz: float
    availability_fraction: float
    availability_stderr: float
    multi_click_rate: float
    multi_click_stderr: float
    click_frequency: float
    mean_discard_events: float
    tau_c: float
    tau_h: float
    attempts: np.ndarray = field(repr=False, compare=False)
    first_pair_attempts: np.ndarray = field(repr=False, compare=False)
    pair_fidelities: np.ndarray = field(repr=False, compare=False)
    availability: np.ndarray = field(repr=False, compare=False)
    discard_counts: np.ndarray = field(repr=False, compare=False)
    completed_mask: np.ndarray = field(repr=False, compare=False)
    records: tuple[TrialRecord, ...] | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class _EngineParams:
    p_suc: float
    p_lone: float
    lockout: int
    D: int
    N: int
    window: int | None  # stage-2 attempts allowed (N_cut - 1), qubit cutoff only
    tau_c: float
    tau_h: float
    mixture: ExpMixture
    max_attempts: int


def simulate_batch(src: SourceConfig, mem: MemoryConfig, link: LinkConfig,
                   mode: str | None, trials: int, rng: RngSpec,
                   partitions: int = 1, workers: int = 1,
                   keep_records: bool = False,
                   max_attempts: int | None = None) -> McSummary:
    """Run ``trials`` independent protocol realizations and aggregate.

    Means and standard errors cover completed (non-discarded) trials;
    ``multi_click_rate`` is the discarded fraction of started trials.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if partitions < 1 or partitions > trials:
        raise ValueError("partitions must lie in [1, trials]")
    if mode is not None and mode != src.mode:
        raise ValueError(f"mode argument {mode!r} contradicts source mode {src.mode!r}")

    params = _engine_params(src, mem, link, max_attempts)
    counts = [trials // partitions] * partitions
    for i in range(trials % partitions):
        counts[i] += 1

    payloads = [(params, counts[i], rng, i) for i in range(partitions)]
    if workers > 1 and partitions > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_partition, payloads))
    else:
        parts = [_run_partition(p) for p in payloads]

    return _aggregate(parts, params, trials, keep_records)


def _engine_params(src: SourceConfig, mem: MemoryConfig, link: LinkConfig,
                   max_attempts: int | None) -> _EngineParams:
    p_T = p_t_at_distance(link, link.ground_separation)
    tau_c = attempt_duration(src)
    tau_h = heralding_time(link)
    p_suc = herald_trace(src, mem, p_T)
    if p_suc <= 0.0:
        raise ValueError("herald probability is zero; trials would never complete")
    if p_suc > 1.0:
        raise ValueError("herald probability exceeds 1; outside the model's validity range")
    p_lone = lone_click_probability(src, mem, p_T)
    if p_suc + 2.0 * p_lone > 1.0 + 1e-12:
        raise ValueError("click probabilities exceed one window; outside validity range")
    lockout = lockout_attempt_count(tau_h, tau_c)
    D, N = mode_slots(src)
    window = None
    if src.mode == "qubit" and mem.t_cut is not None:
        if N != 2:
            raise ValueError("storage cutoff is only defined for two-pair batches (m = 2)")
        window = CutoffParams.from_times(mem.t_cut, D, tau_c).N_cut - 1
    if max_attempts is None:
        p_eff = p_suc * availability_pi00(p_lone, lockout)
        expected = N / max(p_eff, 1e-300) + lockout
        if window is not None:
            # cutoff restarts multiply the horizon by the expected cycle count
            p_fail = math.exp(window * math.log1p(-min(p_eff, 1.0 - 1e-12)))
            expected = (expected + window) / max(1.0 - p_fail, 1e-9)
        max_attempts = int(min(1e12, 5000 + 500 * expected))
    return _EngineParams(p_suc=p_suc, p_lone=p_lone, lockout=lockout, D=D, N=N,
                         window=window, tau_c=tau_c, tau_h=tau_h,
                         mixture=fidelity_mixture(src, mem, p_T),
                         max_attempts=max_attempts)


def _mixture_values(mix: ExpMixture, t: np.ndarray) -> np.ndarray:
    out = np.full(t.shape, mix.offset)
    for amp, rate in mix.terms:
        out += amp * np.exp(-rate * t)
    return out


def _run_partition(payload) -> dict:
    params, n_trials, rng, index = payload
    gen = rng.generator(index)
    D, N = params.D, params.N
    p_suc, p_lone, lockout = params.p_suc, params.p_lone, params.lockout
    window = params.window

    # fresh memories at trial start; the lockout renewal identity makes the
    # mean attempt count from an unlocked start match the stationary
    # availability the analytics assume
    lock_a = np.zeros((n_trials, D), dtype=np.int64)
    lock_b = np.zeros((n_trials, D), dtype=np.int64)
    ids = np.arange(n_trials)
    held = np.zeros((n_trials, D), dtype=bool)
    succ_count = np.zeros(n_trials, dtype=np.int64)
    succ_att = np.zeros((n_trials, N), dtype=np.int64)
    stage2 = np.full(n_trials, -1, dtype=np.int64)
    dead = np.zeros(n_trials, dtype=bool)
    avail_cells = np.zeros(n_trials, dtype=np.int64)
    pool_cells = np.zeros(n_trials, dtype=np.int64)
    discards = np.zeros(n_trials, dtype=np.int64)

    out_attempts = np.zeros(n_trials, dtype=np.int64)
    out_first = np.zeros(n_trials, dtype=np.int64)
    out_succ_att = np.zeros((n_trials, N), dtype=np.int64)
    out_fid_pairs = np.zeros((n_trials, N))
    out_fid_mean = np.zeros(n_trials)
    out_avail_cells = np.zeros(n_trials, dtype=np.int64)
    out_pool_cells = np.zeros(n_trials, dtype=np.int64)
    out_discards = np.zeros(n_trials, dtype=np.int64)
    completed = np.zeros(n_trials, dtype=bool)
    discarded = np.zeros(n_trials, dtype=bool)

    clicks = 0
    windows_seen = 0
    attempt = 0
    while ids.size:
        attempt += 1
        if attempt > params.max_attempts:
            raise ResourceLimitError(
                f"simulation exceeded {params.max_attempts} attempts with "
                f"{ids.size} trials unfinished")
        u = gen.random((ids.size, D))
        live = ~held & ~dead[:, None]
        free_a = live & (lock_a == 0)
        free_b = live & (lock_b == 0)
        cand = free_a & free_b
        meas = ~dead
        pool_cells[meas] += (~held[meas]).sum(axis=1)
        avail_cells[meas] += cand[meas].sum(axis=1)

        succ_cells = cand & (u < p_suc)
        click_a = cand & (u < p_suc + p_lone)
        clicks += int(click_a.sum())
        windows_seen += int(cand.sum())
        lone_a = click_a & (u >= p_suc)
        lone_b = cand & (u >= p_suc + p_lone) & (u < p_suc + 2.0 * p_lone)
        # a station whose partner is locked still receives photons; its
        # clicks are necessarily lone and lock it at the chain's rate
        lone_a |= free_a & ~free_b & (u < p_lone)
        lone_b |= free_b & ~free_a & (u < p_lone)

        np.maximum(lock_a - 1, 0, out=lock_a)
        np.maximum(lock_b - 1, 0, out=lock_b)
        lock_a[lone_a] = lockout
        lock_b[lone_b] = lockout

        n_succ_row = succ_cells.sum(axis=1)
        was_waiting = succ_count == 1
        multi = n_succ_row >= 2
        single_rows = np.nonzero(n_succ_row == 1)[0]
        if single_rows.size:
            slots = np.argmax(succ_cells[single_rows], axis=1)
            held[single_rows, slots] = True
            counts_before = succ_count[single_rows]
            succ_att[single_rows, counts_before] = attempt
            succ_count[single_rows] = counts_before + 1
            if window is not None:
                entered = single_rows[counts_before == 0]
                stage2[entered] = 0

        dead[:] = False

        if window is not None:
            still_waiting = was_waiting & (succ_count == 1) & ~multi
            stage2[still_waiting] += 1
            expired = still_waiting & (stage2 >= window)
            if np.any(expired):
                held[expired] = False
                succ_count[expired] = 0
                succ_att[expired] = 0
                stage2[expired] = -1
                discards[expired] += 1
                dead[expired] = True

        finishing = (succ_count == N) & ~multi
        if np.any(finishing):
            rows = np.nonzero(finishing)[0]
            orig = ids[rows]
            att_matrix = succ_att[rows]
            storage = (attempt - att_matrix) * params.tau_c + params.tau_h
            fid = _mixture_values(params.mixture, storage)
            out_attempts[orig] = attempt
            out_first[orig] = att_matrix[:, 0]
            out_succ_att[orig] = att_matrix
            out_fid_pairs[orig] = fid
            out_fid_mean[orig] = fid.mean(axis=1)
            out_avail_cells[orig] = avail_cells[rows]
            out_pool_cells[orig] = pool_cells[rows]
            out_discards[orig] = discards[rows]
            completed[orig] = True
        if np.any(multi):
            orig = ids[multi]
            discarded[orig] = True
            out_attempts[orig] = attempt
            out_succ_att[orig] = succ_att[multi]
            out_discards[orig] = discards[multi]

        drop = multi | finishing
        if np.any(drop):
            keep = ~drop
            ids = ids[keep]
            lock_a = lock_a[keep]
            lock_b = lock_b[keep]
            held = held[keep]
            succ_count = succ_count[keep]
            succ_att = succ_att[keep]
            stage2 = stage2[keep]
            dead = dead[keep]
            avail_cells = avail_cells[keep]
            pool_cells = pool_cells[keep]
            discards = discards[keep]

    return {
        "attempts": out_attempts,
        "first": out_first,
        "succ_att": out_succ_att,
        "fid_pairs": out_fid_pairs,
        "fid_mean": out_fid_mean,
        "avail_cells": out_avail_cells,
        "pool_cells": out_pool_cells,
        "discards": out_discards,
        "completed": completed,
        "discarded": discarded,
        "clicks": clicks,
        "windows": windows_seen,
    }


def _aggregate(parts: list[dict], params: _EngineParams, trials: int,
               keep_records: bool) -> McSummary:
    attempts = np.concatenate([p["attempts"] for p in parts])
    first = np.concatenate([p["first"] for p in parts])
    succ_att = np.concatenate([p["succ_att"] for p in parts])
    fid_pairs = np.concatenate([p["fid_pairs"] for p in parts])
    fid_mean = np.concatenate([p["fid_mean"] for p in parts])
    avail_cells = np.concatenate([p["avail_cells"] for p in parts])
    pool_cells = np.concatenate([p["pool_cells"] for p in parts])
    discards = np.concatenate([p["discards"] for p in parts])
    completed = np.concatenate([p["completed"] for p in parts])
    discarded = np.concatenate([p["discarded"] for p in parts])
    clicks = sum(p["clicks"] for p in parts)
    windows = sum(p["windows"] for p in parts)

    n_done = int(completed.sum())
    if n_done == 0:
        raise ResourceLimitError("every trial was discarded; nothing to aggregate")
    att_done = attempts[completed].astype(float)
    fid_done = fid_mean[completed]
    mean_att = float(att_done.mean())
    n_disc = int(discarded.sum())
    rate_disc = n_disc / trials

    # pooled ratio: per-trial fractions over-weight short (free-rich) trials
    free_done = avail_cells[completed].astype(float)
    pool_done = pool_cells[completed].astype(float)
    avail_frac = float(free_done.sum() / pool_done.sum())
    # delta-method stderr of the ratio of sums
    influence = free_done - avail_frac * pool_done
    if n_done > 1:
        avail_stderr = float(influence.std(ddof=1) * math.sqrt(n_done) / pool_done.sum())
    else:
        avail_stderr = 0.0
    avail = np.divide(avail_cells, pool_cells, out=np.zeros(len(attempts)),
                      where=pool_cells > 0)

    records = None
    if keep_records:
        records = tuple(_build_record(i, params, attempts, succ_att, fid_pairs,
                                      discards, completed, discarded)
                        for i in range(trials))

    return McSummary(
        trials=trials,
        completed=n_done,
        mean_attempts=mean_att,
        stderr_attempts=_stderr(att_done),
        mean_fidelity=float(fid_done.mean()),
        stderr_fidelity=_stderr(fid_done),
        rate_hz=1.0 / (mean_att * params.tau_c),
        availability_fraction=avail_frac,
        availability_stderr=avail_stderr,
        multi_click_rate=rate_disc,
        multi_click_stderr=math.sqrt(max(rate_disc * (1.0 - rate_disc), 0.0) / trials),
        click_frequency=clicks / windows if windows else 0.0,
        mean_discard_events=float(discards[completed].mean()),
        tau_c=params.tau_c,
        tau_h=params.tau_h,
        attempts=attempts,
        first_pair_attempts=first,
        pair_fidelities=fid_pairs,
        availability=avail,
        discard_counts=discards,
        completed_mask=completed,
        records=records,
    )


def _build_record(i: int, params: _EngineParams, attempts, succ_att, fid_pairs,
                  discards, completed, discarded) -> TrialRecord:
    if completed[i]:
        att = tuple(int(a) for a in succ_att[i])
        storage = tuple((int(attempts[i]) - a) * params.tau_c + params.tau_h
                        for a in att)
        fids = tuple(float(f) for f in fid_pairs[i])
    else:
        att = tuple(int(a) for a in succ_att[i] if a > 0)
        storage = ()
        fids = ()
    return TrialRecord(
        total_attempts=int(attempts[i]),
        per_pair_success_attempt=att,
        per_pair_storage_time=storage,
        discard_events=int(discards[i]),
        multi_click_discards=1 if discarded[i] else 0,
        sampled_fidelities=fids,
    )


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))
