"""Memory-slot availability under heralding lockouts.

A detector click at one station closes the slot's memory while the
stations exchange classical confirmation; a lone (unmatched) click
therefore wastes L = ceil(tau_h / tau_c) attempts.  Each station-side
slot is modeled as a lockout chain: state 0 accepts photons, a lone
click sends it to state L, and locked states count down one per
attempt.  Both sides of a slot pair must be in state 0 for the pair to
participate, and the two stations are treated as independent, so the
joint availability is the squared single-station weight pi_0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import StationarySolveError
from .spdc import MemoryConfig, SourceConfig, herald_trace

_DENSE_LIMIT = 2000  # build the transition matrix dense below this size
_MAX_STATES = 5_000_000

_ROW_SUM_TOL = 1e-12


def local_click_probability(src: SourceConfig, mem: MemoryConfig, p_T: float) -> float:
    """Probability that one station clicks at least once in one window.

    Each of the window's time bins clicks with probability
    lambda^2 p_T eta + p_dark; the window spans ``photon_dim`` bins.
    Clamped to [0, 1].
    """
    per_bin = src.lambda_ ** 2 * p_T * mem.eta + mem.p_dark
    per_bin = min(max(per_bin, 0.0), 1.0)
    if per_bin >= 1.0:
        return 1.0
    return -math.expm1(src.photon_dim * math.log1p(-per_bin))


def lone_click_probability(src: SourceConfig, mem: MemoryConfig, p_T: float) -> float:
    """Probability of a click that is not part of a two-sided herald.

    Two-sided heralds park the slot with a finished pair instead of
    locking it, so only the unmatched remainder drives the lockout chain.
    """
    lone = local_click_probability(src, mem, p_T) - herald_trace(src, mem, p_T)
    return min(max(lone, 0.0), 1.0)


def lockout_attempt_count(tau_h: float, tau_c: float) -> int:
    """Number of whole attempts covered by the heralding latency."""
    if tau_c <= 0.0:
        raise ValueError("tau_c must be strictly positive")
    if tau_h < 0.0:
        raise ValueError("tau_h must be non-negative")
    return max(0, math.ceil(tau_h / tau_c - 1e-9))


@dataclass(frozen=True)
class AvailabilityChain:
    """Single-station lockout chain over states 0 (free) .. L (just locked)."""

    lockout_attempts: int
    p_local_click: float
    transition_matrix: object = field(repr=False, compare=False)

    @classmethod
    def build(cls, p_local_click: float, lockout_attempts: int) -> "AvailabilityChain":
        if not 0.0 <= p_local_click <= 1.0:
            raise ValueError("p_local_click must lie in [0, 1]")
        if lockout_attempts < 0:
            raise ValueError("lockout_attempts must be non-negative")
        size = lockout_attempts + 1
        if size > _MAX_STATES:
            raise StationarySolveError(
                f"lockout chain with {size} states exceeds the supported maximum")
        p = p_local_click
        if size <= _DENSE_LIMIT:
            mat = np.zeros((size, size))
            mat[0, 0] = 1.0 - p
            if lockout_attempts > 0:
                mat[0, lockout_attempts] += p
                for k in range(1, size):
                    mat[k, k - 1] = 1.0
            else:
                mat[0, 0] = 1.0
        else:
            rows = [0, 0] + list(range(1, size))
            cols = [0, lockout_attempts] + list(range(size - 1))
            vals = [1.0 - p, p] + [1.0] * lockout_attempts
            mat = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
        chain = cls(lockout_attempts=lockout_attempts, p_local_click=p_local_click,
                    transition_matrix=mat)
        chain._check_row_sums()
        return chain

    def _check_row_sums(self) -> None:
        mat = self.transition_matrix
        sums = np.asarray(mat.sum(axis=1)).ravel()
        if np.max(np.abs(sums - 1.0)) > _ROW_SUM_TOL:
            raise ValueError("transition matrix rows must sum to 1")


def stationary_availability(chain: AvailabilityChain) -> float:
    """Joint probability pi_(0,0) that both stations' slots are free.

    Solves pi P = pi, sum pi = 1 for the single-station chain and returns
    pi_0 squared under station independence.
    """
    pi0 = _stationary_vector(chain)[0]
    return pi0 * pi0


def _stationary_vector(chain: AvailabilityChain) -> np.ndarray:
    mat = chain.transition_matrix
    size = chain.lockout_attempts + 1
    if size == 1:
        return np.ones(1)
    dense = not scipy.sparse.issparse(mat)
    try:
        if dense:
            system = mat.T - np.eye(size)
            system[0, :] = 1.0
            rhs = np.zeros(size)
            rhs[0] = 1.0
            pi = np.linalg.solve(system, rhs)
        else:
            system = (mat.T - scipy.sparse.identity(size, format="csc")).tolil()
            system[0, :] = 1.0
            rhs = np.zeros(size)
            rhs[0] = 1.0
            pi = scipy.sparse.linalg.spsolve(system.tocsc(), rhs)
    except Exception as exc:  # LinAlgError or sparse solver failure
        raise StationarySolveError(
            f"stationary solve failed for L={chain.lockout_attempts}, "
            f"p={chain.p_local_click}: {exc}") from exc
    residual = np.max(np.abs(_left_apply(mat, pi) - pi))
    if residual > 1e-9 or np.min(pi) < -1e-9 or abs(pi.sum() - 1.0) > 1e-9:
        raise StationarySolveError(
            f"stationary solve did not converge: residual={residual:.3e}, "
            f"min={pi.min():.3e}, sum={pi.sum():.12f}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _left_apply(mat, pi: np.ndarray) -> np.ndarray:
    if scipy.sparse.issparse(mat):
        return np.asarray(pi @ mat).ravel()
    return pi @ mat


def availability_pi00(p_local_click: float, lockout_attempts: int) -> float:
    """Closed form of ``stationary_availability``: (1 / (1 + p L))^2.

    The lockout chain's stationary weight on state 0 is 1/(1 + pL) (each
    locked state carries mass p pi_0); kept as the fast path for sweeps
    and proven equal to the matrix solve in the test suite.
    """
    if not 0.0 <= p_local_click <= 1.0:
        raise ValueError("p_local_click must lie in [0, 1]")
    if lockout_attempts < 0:
        raise ValueError("lockout_attempts must be non-negative")
    pi0 = 1.0 / (1.0 + p_local_click * lockout_attempts)
    return pi0 * pi0
