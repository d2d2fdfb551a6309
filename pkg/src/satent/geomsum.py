"""Numerically stable geometric-series building blocks.

Ratios are passed as log values so that quantities like (1-p)^k stay
accurate for p down to ~1e-12 and exponents up to ~1e9.  All helpers
assume log_ratio <= 0 (ratio in (0, 1]).
"""
from __future__ import annotations

import math


def power(log_ratio: float, k: float) -> float:
    """ratio**k evaluated from the log."""
    return math.exp(k * log_ratio)


def one_minus_power(log_ratio: float, k: float) -> float:
    """1 - ratio**k without cancellation."""
    return -math.expm1(k * log_ratio)


def geometric_sum(log_ratio: float, count: int | None = None) -> float:
    """Sum of ratio**i over i = 0..count (inclusive); count=None sums to infinity.

    The finite form expm1((count+1)*lr)/expm1(lr) stays exact as ratio -> 1,
    where it tends to count+1.
    """
    if log_ratio == 0.0:
        if count is None:
            raise DivisionByOneError()
        return float(count + 1)
    if count is None:
        return 1.0 / -math.expm1(log_ratio)
    return math.expm1((count + 1) * log_ratio) / math.expm1(log_ratio)


class DivisionByOneError(ZeroDivisionError):
    """Infinite geometric sum requested with ratio exactly 1."""


def geometric_mean_index(log_ratio: float) -> float:
    """E[i] for P(i) proportional to ratio**i on i = 0, 1, 2, ...

    Equals ratio/(1-ratio) = 1/(exp(-log_ratio) - 1).
    """
    if log_ratio >= 0.0:
        raise ValueError("geometric mean needs ratio < 1")
    return 1.0 / math.expm1(-log_ratio)


def truncated_geometric_mean_index(log_ratio: float, top: int) -> float:
    """E[i] for P(i) proportional to ratio**i on i = 0..top (inclusive).

    Uses the untruncated mean minus the tail correction
    (top+1) * ratio^(top+1) / (1 - ratio^(top+1)); switches to a series
    when the whole window is nearly flat to dodge the cancellation.
    """
    if top < 0:
        raise ValueError("empty support")
    if top == 0:
        return 0.0
    if log_ratio >= 0.0:
        raise ValueError("needs ratio < 1")
    spread = -(top + 1) * log_ratio
    if spread < 1e-6:
        # nearly uniform window: E ~= top/2 * (1 - spread/6)
        return 0.5 * top * (1.0 - spread / 6.0)
    tail = (top + 1) / math.expm1(-(top + 1) * log_ratio)
    return geometric_mean_index(log_ratio) - tail
