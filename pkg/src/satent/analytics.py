"""Attempt statistics, distribution rate, and waiting-time-averaged fidelity.

The protocol needs N heralded successes across D memory slots, at most
one success per attempt (attempts with simultaneous heralds are
discarded).  With per-slot per-attempt success probability p_ent the
accepted trajectories are N independent stage waits: after k-1 pairs are
secured, D-k+1 slots remain live and the wait for the next clean success
is geometric with per-attempt probability 1 - (1-p)^(D-k+1).

Everything here is conditioned on the trajectory staying clean; the
probability of that event is ``p_approx``, and the Monte Carlo engine
reproduces the same conditioning by discarding multi-herald trials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, ResourceLimitError
from . import geomsum
from .spdc import ExpMixture, SourceConfig

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_MAX_TERMS = 5_000_000


@dataclass(frozen=True)
class ProtocolMetrics:
    """Derived per-operating-point quantities."""

    D: int
    N: int
    p_ent: float
    tau_c: float
    avg_attempts: float
    p_approx: float
    rate_hz: float
    avg_fidelity: float


def mode_slots(src: SourceConfig) -> tuple[int, int]:
    """(D, N): available slots per attempt and required successes.

    Qubit mode spreads m pairs over m*n slots; qudit mode needs a single
    herald on one of n slots.
    """
    if src.mode == "qubit":
        return src.m * src.n, src.m
    return src.n, 1


def attempt_duration(src: SourceConfig) -> float:
    """Time to cycle once through every memory slot.

    Each slot consumes one transmission window: 2 bins per qubit pair,
    2**m bins per qudit.
    """
    if src.mode == "qubit":
        return 2.0 * src.m * src.n / src.r_rep
    return (2 ** src.m) * src.n / src.r_rep


def entanglement_probability(p_suc: float, pi_00: float) -> float:
    """Per-slot per-attempt probability of a confirmed two-sided success."""
    for name, val in (("p_suc", p_suc), ("pi_00", pi_00)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return p_suc * pi_00


def _check_stage_args(D: int, N: int, p_ent: float) -> None:
    if N < 1 or D < N:
        raise ValueError("need 1 <= N <= D")
    if not 0.0 < p_ent <= 1.0:
        if p_ent == 0.0:
            raise DivergenceError("mean attempts diverge at p_ent = 0")
        raise ValueError("p_ent must lie in (0, 1]")


def avg_attempts_closed_form(D: int, N: int, p_ent: float) -> float:
    """Expected attempts to secure all N pairs (clean trajectories).

    N plus one geometric excess-wait term per stage:
    (1-p)^(D+1-k) / (1 - (1-p)^(D+1-k)) for k = 1..N.
    """
    _check_stage_args(D, N, p_ent)
    if p_ent == 1.0:
        return float(N)
    log_x = math.log1p(-p_ent)
    total = float(N)
    for k in range(1, N + 1):
        total += geomsum.geometric_mean_index((D + 1 - k) * log_x)
    return total


def avg_attempts_sum_form(D: int, N: int, p_ent: float,
                          tail_tol: float = DEFAULT_TAIL_TOL,
                          max_terms: int = DEFAULT_MAX_TERMS) -> float:
    """Expected attempts by direct nested summation over ordered successes.

    Sums (i_N + 1) (1-p)^((D-N+1) i_N + sum_(k<N) i_k) over strictly
    increasing attempt indices i_1 < ... < i_N, scaled by the trajectory
    prefactor and normalized by ``p_approx``.  Each level is truncated
    once its geometric tail drops below ``tail_tol``; kept independent of
    the closed form as an internal cross-check oracle.
    """
    _check_stage_args(D, N, p_ent)
    if p_ent == 1.0:
        raise ValueError("sum form needs p_ent < 1 (use the closed form at 1)")
    x = 1.0 - p_ent
    log_x = math.log(x)
    # composite decay per unit shift of i_k: every later index shifts too
    caps = []
    for k in range(1, N + 1):
        weight = D - k + 1
        cap = int(math.ceil(math.log(tail_tol) / (weight * log_x))) + 20
        caps.append(cap)
    if sum(caps) > max_terms:
        raise ResourceLimitError(
            f"nested summation would need ~{sum(caps)} terms (cap {max_terms})")

    w_last = D - N + 1
    cap_last = caps[-1]
    level = np.zeros(cap_last + 2)
    for s in range(cap_last, -1, -1):
        level[s] = (s + 1) * math.exp(w_last * s * log_x) + level[s + 1]
    for k in range(N - 1, 0, -1):
        cap = caps[k - 1]
        nxt = level
        level = np.zeros(cap + 2)
        for s in range(cap, -1, -1):
            inner = nxt[s + 1] if s + 1 < len(nxt) else 0.0
            level[s] = math.exp(s * log_x) * inner + level[s + 1]

    prefactor = p_ent ** N * x ** (D - N)
    for k in range(N):
        prefactor *= D - k
    return prefactor * level[0] / p_approx(D, N, p_ent)


def p_approx(D: int, N: int, p_ent: float) -> float:
    """Probability that all N pairs arrive without a multi-herald attempt.

    Product over stages of P(exactly one success before two-or-more):
    d p (1-p)^(d-1) / (1 - (1-p)^d) with d = D+1-k live slots.  Tends to
    1 as p_ent -> 0 and equals 1 whenever every stage has a single slot.
    """
    _check_stage_args(D, N, p_ent)
    if p_ent == 1.0:
        out = 1.0
        for k in range(1, N + 1):
            if D + 1 - k > 1:
                return 0.0
        return out
    log_x = math.log1p(-p_ent)
    out = 1.0
    for k in range(1, N + 1):
        d = D + 1 - k
        out *= d * p_ent * geomsum.power(log_x, d - 1) / geomsum.one_minus_power(log_x, d)
    return out


def distribution_rate(avg_attempts: float, tau_c: float) -> float:
    """Event-ready batches (m pairs each, in either mode) per second: 1/(<A> tau_c)."""
    if avg_attempts <= 0.0 or tau_c <= 0.0:
        raise ValueError("avg_attempts and tau_c must be strictly positive")
    return 1.0 / (avg_attempts * tau_c)


def stage_gap_log_ratios(D: int, N: int, p_ent: float) -> list[float]:
    """log of the per-attempt failure ratio (1-p)^(D+1-k) for stages 2..N."""
    log_x = math.log1p(-p_ent)
    return [(D + 1 - k) * log_x for k in range(2, N + 1)]


def avg_fidelity_no_cutoff(D: int, N: int, p_ent: float, tau_h: float, tau_c: float,
                           fidelity: Callable[[float], float],
                           tail_tol: float = DEFAULT_TAIL_TOL,
                           max_terms: int = 2_000_000) -> float:
    """Mean per-pair fidelity over the waiting-time distribution.

    The k-th pair is stored for tau_h plus tau_c times the later stages'
    gaps; gaps are independent shifted geometrics.  Their sum
    distribution is built by truncated convolution and the callable F is
    averaged over it (and over the N pairs).  For N = 1 this is exactly
    F(tau_h).
    """
    _check_stage_args(D, N, p_ent)
    if p_ent == 1.0:
        return fidelity(tau_h)
    if N == 1:
        return fidelity(tau_h)

    log_qs = stage_gap_log_ratios(D, N, p_ent)
    lengths = []
    for lq in log_qs:
        lengths.append(int(math.ceil(math.log(tail_tol) / lq)) + 10)
    if sum(lengths) > max_terms:
        raise ResourceLimitError(
            f"fidelity sum would need ~{sum(lengths)} terms (cap {max_terms}); "
            "use the mixture form for very small p_ent")

    # gap_dists[j] is P over i>=0 for stage j+2's failed-attempt count
    gap_dists = []
    for lq, length in zip(log_qs, lengths):
        idx = np.arange(length + 1)
        pmf = -math.expm1(lq) * np.exp(idx * lq)
        gap_dists.append(pmf)

    fid_cache: dict[int, float] = {}

    def fid_at(extra_attempts: int) -> float:
        if extra_attempts not in fid_cache:
            fid_cache[extra_attempts] = fidelity(tau_h + extra_attempts * tau_c)
        return fid_cache[extra_attempts]

    total = fid_at(0)  # last pair waits only the heralding time
    # accumulate distributions of sum_(j>k)(i_j + 1) from the back
    tail_dist = np.ones(1)
    tail_shift = 0
    for k in range(N - 1, 0, -1):
        tail_dist = np.convolve(tail_dist, gap_dists[k - 1])
        tail_shift += 1
        values = np.fromiter(
            (fid_at(tail_shift + s) for s in range(len(tail_dist))),
            dtype=float, count=len(tail_dist))
        total += float(np.dot(tail_dist, values))
    return total / N


def avg_fidelity_no_cutoff_mixture(D: int, N: int, p_ent: float, tau_h: float,
                                   tau_c: float, mixture: ExpMixture) -> float:
    """Closed form of ``avg_fidelity_no_cutoff`` for exponential-mixture F.

    E[e^(-r tau_c (i+1))] over a geometric gap is itself a closed
    geometric expression, so each mixture term averages exactly; valid
    for arbitrarily small p_ent at O(N * terms) cost.
    """
    _check_stage_args(D, N, p_ent)
    if p_ent == 1.0 or N == 1:
        return mixture.value(tau_h)
    log_qs = stage_gap_log_ratios(D, N, p_ent)
    total = 0.0
    for k in range(N, 0, -1):
        acc = mixture.offset
        for amp, rate in mixture.terms:
            factor = math.exp(-rate * tau_h)
            for lq in log_qs[k - 1:]:
                # E[e^(-r tau_c (i+1))] for i geometric with log-ratio lq
                shifted = lq - rate * tau_c
                factor *= math.exp(-rate * tau_c) * (-math.expm1(lq)) / (-math.expm1(shifted))
            acc += amp * factor
        total += acc
    return total / N


def metrics_for_point(src: SourceConfig, p_ent: float, tau_h: float,
                      mixture: ExpMixture) -> ProtocolMetrics:
    """Assemble the no-cutoff metrics bundle for one operating point."""
    D, N = mode_slots(src)
    tau_c = attempt_duration(src)
    attempts = avg_attempts_closed_form(D, N, p_ent)
    return ProtocolMetrics(
        D=D, N=N, p_ent=p_ent, tau_c=tau_c,
        avg_attempts=attempts,
        p_approx=p_approx(D, N, p_ent),
        rate_hz=distribution_rate(attempts, tau_c),
        avg_fidelity=avg_fidelity_no_cutoff_mixture(D, N, p_ent, tau_h, tau_c, mixture),
    )
