"""SPDC pair source and memory decoherence model.

The source emits approximate entangled photon pairs across time-bin
windows; stored pairs decohere in the ground-station memories.  This
module evaluates, through fourth order in the squeezing parameter:

* the overlap of a stored pair with the target Bell state after a
  storage time t (``bell_overlap_numerator``),
* the total heralding probability of one transmission window, including
  multiphoton emissions and detector dark counts (``herald_trace``),
* their ratio, the single-pair fidelity F(t) (``pair_fidelity``).

Dark counts and multiphoton contaminations are booked as zero-fidelity
states, so F is a lower bound.  F(t) is exactly a constant plus three
decaying exponentials; ``fidelity_mixture`` exposes that structure so
waiting-time averages can be taken in closed form downstream.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import UndefinedFidelityError

_EPS_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SourceConfig:
    """Pump and encoding parameters of the entangled-pair source.

    ``lambda_`` is the squeezing parameter (pair-emission amplitude per
    time bin); ``r_rep`` the pulse rate in Hz; ``m`` the number of
    event-ready pairs a batch must deliver; ``n`` the memory multiplexing
    factor; ``mode`` selects time-bin qubit pairs or 2**m-dimensional
    qudit pairs.
    """

    lambda_: float = 0.05
    r_rep: float = 1e7
    m: int = 2
    n: int = 1
    mode: str = "qudit"

    def __post_init__(self):
        if not 0.0 <= self.lambda_ < 1.0:
            raise ValueError("lambda must lie in [0, 1)")
        if self.r_rep <= 0.0:
            raise ValueError("r_rep must be strictly positive")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.mode not in ("qubit", "qudit"):
            raise ValueError(f"mode must be 'qubit' or 'qudit', got {self.mode!r}")

    @property
    def photon_dim(self) -> int:
        """Hilbert-space dimension of one transmission window.

        A time-bin qubit pair spans 2 bins; the qudit encoding spans 2**m.
        """
        return 2 if self.mode == "qubit" else 2 ** self.m


@dataclass(frozen=True)
class MemoryConfig:
    """Quantum-memory storage and noise parameters.

    ``eta`` folds storage and detection efficiency; ``T_A``/``T_B`` are the
    coherence times at the two stations; the ``eps_*`` weights set the
    Pauli composition of the decoherence channel (uniform 1/4 by default);
    ``p_dark`` is the dark-count probability per detection window;
    ``t_cut`` bounds the storage time of the first pair (qubit mode only).
    """

    eta: float = 0.5
    T_A: float = 10.0
    T_B: float = 10.0
    eps_1: float = 0.25
    eps_x: float = 0.25
    eps_y: float = 0.25
    eps_z: float = 0.25
    p_dark: float = 1.6e-5
    t_cut: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.T_A <= 0.0 or self.T_B <= 0.0:
            raise ValueError("coherence times must be strictly positive")
        eps_sum = self.eps_1 + self.eps_x + self.eps_y + self.eps_z
        if abs(eps_sum - 1.0) > _EPS_SUM_TOL:
            raise ValueError(f"eps weights must sum to 1, got {eps_sum}")
        if min(self.eps_1, self.eps_x, self.eps_y, self.eps_z) < 0.0:
            raise ValueError("eps weights must be non-negative")
        if not 0.0 <= self.p_dark < 1.0:
            raise ValueError("p_dark must lie in [0, 1)")
        if self.t_cut is not None:
            if self.t_cut <= 0.0:
                raise ValueError("t_cut must be strictly positive when set")
            if self.t_cut >= min(self.T_A, self.T_B):
                warnings.warn(
                    f"t_cut={self.t_cut} is not smaller than the coherence time "
                    f"{min(self.T_A, self.T_B)}; the cutoff will not protect fidelity",
                    stacklevel=2,
                )


def _decay_bracket(t: float, mem: MemoryConfig) -> float:
    """Bell-overlap decay factor at storage time t (equals 1 at t = 0)."""
    u = math.exp(-t / mem.T_A)
    v = math.exp(-t / mem.T_B)
    pauli = mem.eps_x ** 2 + mem.eps_y ** 2 + mem.eps_z ** 2
    return ((u + (1.0 - u) * mem.eps_1) * (v + (1.0 - v) * mem.eps_1)
            + (1.0 - u) * (1.0 - v) * pauli)


def bell_overlap_numerator(t: float, src: SourceConfig, mem: MemoryConfig, p_T: float) -> float:
    """Unnormalized overlap of a stored pair with the target Bell state.

    Scales as dim * p_T^2 eta^2 lambda^2 times a decay bracket that starts
    at 1 and relaxes to the channel's mixed-state value.
    """
    if t < 0.0:
        raise ValueError("storage time must be non-negative")
    _check_p_t(p_T)
    d = src.photon_dim
    scale = d * (p_T * mem.eta * src.lambda_) ** 2
    return scale * _decay_bracket(t, mem)


def herald_trace(src: SourceConfig, mem: MemoryConfig, p_T: float) -> float:
    """Total heralding probability of one transmission window (p_suc).

    Series through fourth order in lambda: the wanted single-pair term,
    double-pair emissions in their surviving loss configurations, and the
    photon/dark-count cross terms, plus the pure dark-coincidence block.
    Higher orders are dropped.
    """
    _check_p_t(p_T)
    d = src.photon_dim
    x = p_T * mem.eta
    l2 = src.lambda_ ** 2
    l4 = l2 * l2
    pd = mem.p_dark
    one = 1.0 - x
    t_pair = d * x * x * l2
    t_double = 0.5 * d * (d + 1) * x ** 4 * l4
    t_pair_dark = 2.0 * d * x * one * l2 * pd
    t_double_both_half = d * (d + 1) * x * x * one * one * l4 * (pd + 2.0)
    t_double_mixed = 2.0 * d * (d + 1) * (x ** 3 * one * l4 + x * one ** 3 * l4 * pd)
    t_dark_dark = pd * pd * (0.5 * d * (d + 1) * one ** 4 * l4 + d * one * one * l2 + 1.0)
    return (t_pair + t_double + t_pair_dark + t_double_both_half
            + t_double_mixed + t_dark_dark)


def pair_fidelity(t: float, src: SourceConfig, mem: MemoryConfig, p_T: float) -> float:
    """Single-pair fidelity F(t) after a storage time t.

    F can be below 1 even at t = 0: multiphoton and dark-count heralds are
    counted as zero-fidelity successes.
    """
    trace = herald_trace(src, mem, p_T)
    if trace <= 0.0:
        raise UndefinedFidelityError(
            "heralding probability is zero; fidelity undefined (lambda and p_dark both 0?)")
    return bell_overlap_numerator(t, src, mem, p_T) / trace


@dataclass(frozen=True)
class ExpMixture:
    """A constant plus a sum of decaying exponentials: offset + sum a_i e^(-r_i t)."""

    offset: float
    terms: tuple[tuple[float, float], ...]  # (amplitude, decay rate 1/s)

    def value(self, t: float) -> float:
        return self.offset + sum(a * math.exp(-r * t) for a, r in self.terms)


def fidelity_mixture(src: SourceConfig, mem: MemoryConfig, p_T: float) -> ExpMixture:
    """F(t) in explicit exponential-mixture form.

    The decay bracket expands into 1, e^(-t/T_A), e^(-t/T_B) and
    e^(-t (1/T_A + 1/T_B)) components; dividing by the (time-independent)
    heralding trace gives F(t) exactly.
    """
    trace = herald_trace(src, mem, p_T)
    if trace <= 0.0:
        raise UndefinedFidelityError(
            "heralding probability is zero; fidelity undefined (lambda and p_dark both 0?)")
    d = src.photon_dim
    scale = d * (p_T * mem.eta * src.lambda_) ** 2 / trace
    e1 = mem.eps_1
    pauli = mem.eps_x ** 2 + mem.eps_y ** 2 + mem.eps_z ** 2
    c_const = e1 * e1 + pauli
    c_a = e1 * (1.0 - e1) - pauli
    c_ab = (1.0 - e1) ** 2 + pauli
    ra = 1.0 / mem.T_A
    rb = 1.0 / mem.T_B
    return ExpMixture(
        offset=scale * c_const,
        terms=(
            (scale * c_a, ra),
            (scale * c_a, rb),
            (scale * c_ab, ra + rb),
        ),
    )


def _check_p_t(p_T: float) -> None:
    if not 0.0 <= p_T <= 1.0:
        raise ValueError("p_T must lie in [0, 1]")
