"""Qubit-mode attempt statistics with a storage cutoff (two-pair batches).

Once the first pair is secured it is held for at most the cutoff window;
the second pair must arrive within N_cut - 1 attempts of the first or the
stored pair is discarded and the cycle restarts.  N_cut counts whole
attempts inside the cutoff time: the D per-slot transmission windows of
one attempt together last tau_c, so N_cut = floor(t_cut / (D tau_slot))
= floor(t_cut / tau_c), and the first pair is stored for at most
(N_cut - 1) tau_c ~ t_cut.  Scoped to batches of exactly two pairs;
larger batches are rejected rather than extrapolated.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

from .errors import CutoffConsistencyWarning, DivergenceError, InvalidCutoffError
from . import geomsum
from .analytics import avg_attempts_closed_form
from .spdc import ExpMixture

_GAP_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class CutoffParams:
    """Cutoff window in attempts for a given slot count."""

    N_cut: int
    t_cut: float
    D: int

    def __post_init__(self):
        if self.D < 2:
            raise InvalidCutoffError("cutoff needs at least two memory slots")
        if self.N_cut < 2:
            raise InvalidCutoffError(
                f"N_cut={self.N_cut} leaves no room for the second pair (need >= 2)")

    @classmethod
    def from_times(cls, t_cut: float, D: int, tau_c: float) -> "CutoffParams":
        """Window from the cutoff time and the attempt duration ``tau_c``.

        The attempt bundles D slot windows of tau_c / D each, so the
        attempt count inside t_cut is t_cut / (D * (tau_c / D)), rounded
        down so the storage guarantee is never exceeded.
        """
        if t_cut <= 0.0 or tau_c <= 0.0:
            raise InvalidCutoffError("t_cut and tau_c must be strictly positive")
        slot_window = tau_c / D
        n_cut = math.floor(t_cut / (D * slot_window) + 1e-9)
        return cls(N_cut=n_cut, t_cut=t_cut, D=D)


def _check_args(D: int, p_ent: float, N_cut: int) -> None:
    if D < 2:
        raise InvalidCutoffError("cutoff statistics need D >= 2")
    if N_cut < 2:
        raise InvalidCutoffError("N_cut must be at least 2")
    if not 0.0 < p_ent < 1.0:
        if p_ent == 0.0:
            raise DivergenceError("mean attempts diverge at p_ent = 0")
        raise ValueError("p_ent must lie in (0, 1)")


def n_succ_and_p2p(D: int, p_ent: float, N_cut: int) -> tuple[float, float]:
    """Mean attempts of a successful cycle, and the cycle's clean-success probability.

    The first-pair wait is a full geometric over D live slots; the
    second-pair wait runs over D-1 slots and is truncated at N_cut - 1
    attempts.  p_2p is the unconditional probability that a cycle secures
    both pairs inside the window with single heralds throughout.
    """
    _check_args(D, p_ent, N_cut)
    log_x = math.log1p(-p_ent)
    lq1 = D * log_x
    lq2 = (D - 1) * log_x
    top = N_cut - 2  # inner index i2 runs 0 .. N_cut-2
    mean_i1 = geomsum.geometric_mean_index(lq1)
    mean_i2 = geomsum.truncated_geometric_mean_index(lq2, top)
    n_succ = mean_i1 + mean_i2 + 2.0
    p_2p = (D * (D - 1) * p_ent ** 2 * geomsum.power(log_x, 2 * D - 3)
            * geomsum.geometric_sum(lq1) * geomsum.geometric_sum(lq2, top))
    return n_succ, p_2p


def n_fail_and_p_fail(D: int, p_ent: float, N_cut: int) -> tuple[float, float]:
    """Mean attempts of a failed cycle, and the probability a cycle fails.

    A failed cycle pays the first-pair wait plus the full window:
    <n_fail> = N_cut + <n_1> with <n_1> the geometric first-pair mean;
    the window is missed with probability (1-p_ent)^N_cut.
    """
    _check_args(D, p_ent, N_cut)
    log_x = math.log1p(-p_ent)
    n_one = 1.0 + geomsum.geometric_mean_index(D * log_x)
    p_fail = geomsum.power(log_x, N_cut)
    return N_cut + n_one, p_fail


def avg_attempts_with_cutoff(D: int, p_ent: float, N_cut: int) -> float:
    """Expected total attempts including restarted cycles.

    Renewal composition ((<n_fail> - <n_succ>) p_fail + <n_succ>) / p_succ
    with p_succ = 1 - p_fail.  Warns when p_succ and p_2p disagree by more
    than 1%, which flags regimes where the two bookkeepings diverge.
    """
    n_succ, p_2p = n_succ_and_p2p(D, p_ent, N_cut)
    n_fail, p_fail = n_fail_and_p_fail(D, p_ent, N_cut)
    if p_fail >= 1.0:
        raise DivergenceError("every cycle fails (p_fail = 1); mean attempts diverge")
    p_succ = 1.0 - p_fail
    if p_2p > 0.0 and abs(p_succ - p_2p) / p_2p > _GAP_WARN_FRACTION:
        warnings.warn(
            f"cycle success probability {p_succ:.6g} differs from two-pair "
            f"probability {p_2p:.6g} by more than 1%",
            CutoffConsistencyWarning, stacklevel=2)
    return ((n_fail - n_succ) * p_fail + n_succ) / p_succ


def avg_fidelity_with_cutoff(D: int, p_ent: float, N_cut: int, tau_h: float,
                             tau_c: float, fidelity: Callable[[float], float]) -> float:
    """Mean pair fidelity of a successful cycle.

    The second pair waits only the heralding time; the first pair is
    stored for tau_h + (i2 + 1) tau_c with i2 the truncated second-stage
    wait, so every counted pair was held for at most the cutoff window.
    """
    _check_args(D, p_ent, N_cut)
    log_x = math.log1p(-p_ent)
    lq2 = (D - 1) * log_x
    top = N_cut - 2
    norm = geomsum.geometric_sum(lq2, top)
    acc = 0.0
    for i2 in range(top + 1):
        acc += geomsum.power(lq2, i2) * fidelity(tau_h + (i2 + 1) * tau_c)
    return 0.5 * (fidelity(tau_h) + acc / norm)


def avg_fidelity_with_cutoff_mixture(D: int, p_ent: float, N_cut: int, tau_h: float,
                                     tau_c: float, mixture: ExpMixture) -> float:
    """Closed form of ``avg_fidelity_with_cutoff`` for exponential-mixture F.

    Truncated geometric averages of e^(-r tau_c (i2+1)) evaluate exactly,
    so the window may be arbitrarily long at O(terms) cost.
    """
    _check_args(D, p_ent, N_cut)
    log_x = math.log1p(-p_ent)
    lq2 = (D - 1) * log_x
    top = N_cut - 2
    norm = geomsum.geometric_sum(lq2, top)
    first_pair = mixture.offset
    for amp, rate in mixture.terms:
        shifted = lq2 - rate * tau_c
        avg_decay = math.exp(-rate * tau_c) * geomsum.geometric_sum(shifted, top) / norm
        first_pair += amp * math.exp(-rate * tau_h) * avg_decay
    return 0.5 * (mixture.value(tau_h) + first_pair)


def converges_to_no_cutoff(D: int, p_ent: float, N_cut: int, rel_tol: float = 1e-6) -> bool:
    """True when the cutoff mean is within rel_tol of the unbounded two-pair mean."""
    unbounded = avg_attempts_closed_form(D, 2, p_ent)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CutoffConsistencyWarning)
        bounded = avg_attempts_with_cutoff(D, p_ent, N_cut)
    return abs(bounded - unbounded) <= rel_tol * unbounded
