"""Grid search over squeezing (and qubit-mode cutoff) per distance point.

For each (distance, mode, multiplexing) combination the optimizer scans
the squeezing grid -- and the cutoff grid in qubit mode -- evaluates the
analytic rate and mean fidelity, and keeps the fastest point that clears
the fidelity floor while keeping the multi-herald discard probability
below 1%.  Infeasibility is reported as a zero-rate row, not an error.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

from .errors import CutoffConsistencyWarning, InvalidCutoffError
from . import analytics, cutoff
from .availability import (availability_pi00, lockout_attempt_count,
                           lone_click_probability)
from .link import LinkConfig, heralding_time, p_t_at_distance
from .spdc import MemoryConfig, SourceConfig, fidelity_mixture, herald_trace

MAX_MULTI_HERALD_FRACTION = 0.01

DEFAULT_LAMBDA_GRID = tuple(round(0.001 * i, 6) for i in range(101))
DEFAULT_T_CUT_GRID = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, None)
DEFAULT_DISTANCES = tuple(1e3 * d for d in
                          (200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100, 1200, 1250))


@dataclass(frozen=True)
class SweepSpec:
    """Search grids and the feasibility constraint."""

    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    t_cut_grid: tuple[float | None, ...] = DEFAULT_T_CUT_GRID
    fidelity_floor: float = 0.9
    distance_points: tuple[float, ...] = DEFAULT_DISTANCES
    modes: tuple[str, ...] = ("qubit", "qudit")
    n_values: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        if not self.lambda_grid or not self.t_cut_grid or not self.distance_points:
            raise ValueError("grids must be non-empty")
        if not self.modes or not self.n_values:
            raise ValueError("modes and n_values must be non-empty")
        if not 0.0 <= self.fidelity_floor < 1.0:
            raise ValueError("fidelity_floor must lie in [0, 1)")
        for lam in self.lambda_grid:
            if not 0.0 <= lam <= 0.1:
                raise ValueError(f"lambda grid value {lam} outside the weak-pump range [0, 0.1]")
        for t in self.t_cut_grid:
            if t is not None and t <= 0.0:
                raise ValueError("t_cut grid values must be positive or none")
        for mode in self.modes:
            if mode not in ("qubit", "qudit"):
                raise ValueError(f"unknown mode {mode!r}")
        for n in self.n_values:
            if n < 1:
                raise ValueError("n values must be positive")


@dataclass(frozen=True)
class PointEvaluation:
    """Full analytic evaluation of one operating point."""

    distance_m: float
    mode: str
    m: int
    n: int
    lambda_: float
    t_cut: float | None
    p_T: float
    p_suc: float
    pi_00: float
    tau_h: float
    metrics: analytics.ProtocolMetrics


@dataclass(frozen=True)
class OptimizeResult:
    """Outcome of one grid search; ``best`` is None when infeasible."""

    distance_m: float
    mode: str
    n: int
    feasible: bool
    best_lambda: float | None
    best_t_cut: float | None
    rate_hz: float
    fidelity: float | None
    best: PointEvaluation | None


def evaluate_operating_point(link: LinkConfig, src: SourceConfig, mem: MemoryConfig,
                             distance: float | None = None) -> PointEvaluation:
    """Analytic rate/fidelity bundle for one fully specified configuration."""
    if distance is None:
        distance = link.ground_separation
    link_d = replace(link, ground_separation=distance)
    p_T = p_t_at_distance(link_d, distance)
    tau_h = heralding_time(link_d)
    tau_c = analytics.attempt_duration(src)
    D, N = analytics.mode_slots(src)

    p_suc = herald_trace(src, mem, p_T)
    if p_suc <= 0.0:
        raise ValueError("herald probability is zero at this point")
    pi_00 = availability_pi00(lone_click_probability(src, mem, p_T),
                              lockout_attempt_count(tau_h, tau_c))
    p_ent = analytics.entanglement_probability(p_suc, pi_00)
    mixture = fidelity_mixture(src, mem, p_T)

    use_cutoff = src.mode == "qubit" and mem.t_cut is not None
    if use_cutoff:
        if N != 2:
            raise InvalidCutoffError("storage cutoff is only defined for two-pair batches")
        params = cutoff.CutoffParams.from_times(mem.t_cut, D, tau_c)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CutoffConsistencyWarning)
            attempts = cutoff.avg_attempts_with_cutoff(D, p_ent, params.N_cut)
        fidelity = cutoff.avg_fidelity_with_cutoff_mixture(
            D, p_ent, params.N_cut, tau_h, tau_c, mixture)
        metrics = analytics.ProtocolMetrics(
            D=D, N=N, p_ent=p_ent, tau_c=tau_c,
            avg_attempts=attempts,
            p_approx=analytics.p_approx(D, N, p_ent),
            rate_hz=analytics.distribution_rate(attempts, tau_c),
            avg_fidelity=fidelity,
        )
    else:
        metrics = analytics.metrics_for_point(src, p_ent, tau_h, mixture)

    return PointEvaluation(
        distance_m=distance, mode=src.mode, m=src.m, n=src.n,
        lambda_=src.lambda_, t_cut=mem.t_cut if use_cutoff else None,
        p_T=p_T, p_suc=p_suc, pi_00=pi_00, tau_h=tau_h, metrics=metrics,
    )


def meets_constraints(point: PointEvaluation, fidelity_floor: float) -> bool:
    """Fidelity floor plus the multi-herald discard guard."""
    return (point.metrics.avg_fidelity >= fidelity_floor
            and 1.0 - point.metrics.p_approx < MAX_MULTI_HERALD_FRACTION)


def optimize_point(link: LinkConfig, src: SourceConfig, mem: MemoryConfig,
                   spec: SweepSpec, distance: float, mode: str, n: int) -> OptimizeResult:
    """Best feasible grid point for one (distance, mode, n) combination."""
    t_cuts = spec.t_cut_grid if mode == "qubit" else (None,)
    best: PointEvaluation | None = None
    for lam in spec.lambda_grid:
        src_pt = replace(src, lambda_=lam, n=n, mode=mode)
        for t_cut in t_cuts:
            mem_pt = replace(mem, t_cut=t_cut)
            try:
                point = evaluate_operating_point(link, src_pt, mem_pt, distance)
            except (ValueError, InvalidCutoffError):
                continue  # degenerate grid point (no herald channel / window too short)
            if not meets_constraints(point, spec.fidelity_floor):
                continue
            if best is None or point.metrics.rate_hz > best.metrics.rate_hz:
                best = point
    if best is None:
        return OptimizeResult(distance_m=distance, mode=mode, n=n, feasible=False,
                              best_lambda=None, best_t_cut=None, rate_hz=0.0,
                              fidelity=None, best=None)
    return OptimizeResult(
        distance_m=distance, mode=mode, n=n, feasible=True,
        best_lambda=best.lambda_, best_t_cut=best.t_cut,
        rate_hz=best.metrics.rate_hz, fidelity=best.metrics.avg_fidelity, best=best,
    )


def sweep(link: LinkConfig, src: SourceConfig, mem: MemoryConfig,
          spec: SweepSpec) -> list[OptimizeResult]:
    """Grid search over every (mode, n, distance) combination, stably ordered."""
    results = []
    for mode in sorted(set(spec.modes)):
        for n in sorted(set(spec.n_values)):
            for distance in sorted(set(spec.distance_points)):
                results.append(optimize_point(link, src, mem, spec, distance, mode, n))
    return results
