import math
import warnings

import numpy as np
import pytest

from satent.analytics import (attempt_duration, avg_attempts_closed_form,
                              avg_fidelity_no_cutoff_mixture, mode_slots, p_approx)
from satent.availability import (availability_pi00, local_click_probability,
                                 lockout_attempt_count, lone_click_probability)
from satent.cutoff import avg_attempts_with_cutoff
from satent.errors import CutoffConsistencyWarning
from satent.link import LinkConfig, heralding_time
from satent.montecarlo import RngSpec, simulate_batch
from satent.spdc import MemoryConfig, SourceConfig, fidelity_mixture, herald_trace

LIGHT_SPEED = 299_792_458.0


def _lossless_qubit(p_suc_target: float, n: int = 1) -> tuple[SourceConfig, MemoryConfig]:
    """x = p_T*eta = 1 kills every lone-click channel: pure combinatorics."""
    lam2 = _solve_lambda2(2, p_suc_target)
    src = SourceConfig(lambda_=math.sqrt(lam2), mode="qubit", m=2, n=n)
    return src, MemoryConfig(eta=1.0, p_dark=0.0, T_A=2e-3, T_B=2e-3)


def _lossless_qudit(p_suc_target: float, n: int = 1) -> tuple[SourceConfig, MemoryConfig]:
    lam2 = _solve_lambda2(4, p_suc_target)
    src = SourceConfig(lambda_=math.sqrt(lam2), mode="qudit", m=2, n=n)
    return src, MemoryConfig(eta=1.0, p_dark=0.0, T_A=2e-3, T_B=2e-3)


def _solve_lambda2(dim: int, p_suc: float) -> float:
    # invert d*l2 + (d/2)(d+1)*l2^2 = p_suc
    a = 0.5 * dim * (dim + 1)
    return (-dim + math.sqrt(dim * dim + 4 * a * p_suc)) / (2 * a)


SHORT_LINK = LinkConfig(mode="direct", p_T_direct=1.0, ground_separation=1200.0)


def test_certain_success_single_slot():
    # m=1 window with 2*l2 + 3*l2^2 ~ 1: success on effectively every attempt
    src = SourceConfig(lambda_=math.sqrt(0.3333), mode="qudit", m=1, n=1)
    mem = MemoryConfig(eta=1.0, p_dark=0.0, T_A=1.0, T_B=1.0)
    p = herald_trace(src, mem, 1.0)
    assert p > 0.9997
    s = simulate_batch(src, mem, SHORT_LINK, "qudit", 2000, RngSpec(1))
    assert s.mean_attempts >= 1.0
    assert s.mean_attempts < 1.005
    expected = avg_attempts_closed_form(1, 1, p)
    # the residual failure probability is ~1.3e-4, so the sample can be
    # exactly deterministic (stderr 0); allow that margin on top of 3 sigma
    assert abs(s.mean_attempts - expected) <= 3 * s.stderr_attempts + 2e-4


def test_geometric_mean_attempts():
    src, mem = _lossless_qudit(0.1)
    p = herald_trace(src, mem, 1.0)
    s = simulate_batch(src, mem, SHORT_LINK, "qudit", 100_000, RngSpec(7))
    assert abs(s.mean_attempts - 1.0 / p) <= 3 * s.stderr_attempts
    assert s.multi_click_rate == 0.0  # one slot cannot double-herald
    assert s.availability_fraction == 1.0


def test_two_pair_statistics_match_analytics():
    src, mem = _lossless_qubit(0.1)
    p = herald_trace(src, mem, 1.0)
    D, N = mode_slots(src)
    tau_c = attempt_duration(src)
    tau_h = heralding_time(SHORT_LINK)
    s = simulate_batch(src, mem, SHORT_LINK, "qubit", 100_000, RngSpec(5))
    assert abs(s.mean_attempts - avg_attempts_closed_form(D, N, p)) \
        <= 3 * s.stderr_attempts
    mix = fidelity_mixture(src, mem, 1.0)
    expected_f = avg_fidelity_no_cutoff_mixture(D, N, p, tau_h, tau_c, mix)
    assert abs(s.mean_fidelity - expected_f) <= 3 * s.stderr_fidelity
    expected_mc = 1.0 - p_approx(D, N, p)
    assert abs(s.multi_click_rate - expected_mc) <= 3 * s.multi_click_stderr


def test_determinism_bit_exact():
    src, mem = _lossless_qubit(0.05, n=2)
    a = simulate_batch(src, mem, SHORT_LINK, "qubit", 20_000, RngSpec(123), partitions=4)
    b = simulate_batch(src, mem, SHORT_LINK, "qubit", 20_000, RngSpec(123), partitions=4)
    assert np.array_equal(a.attempts, b.attempts)
    assert np.array_equal(a.pair_fidelities, b.pair_fidelities)
    assert np.array_equal(a.first_pair_attempts, b.first_pair_attempts)
    assert a.mean_attempts == b.mean_attempts
    c = simulate_batch(src, mem, SHORT_LINK, "qubit", 20_000, RngSpec(124), partitions=4)
    assert not np.array_equal(a.attempts, c.attempts)


def test_records_and_conservation():
    src, mem = _lossless_qubit(0.08)
    tau_h = heralding_time(SHORT_LINK)
    s = simulate_batch(src, mem, SHORT_LINK, "qubit", 3000, RngSpec(9), keep_records=True)
    assert len(s.records) == 3000
    for rec in s.records:
        if rec.multi_click_discards:
            continue
        # single herald per attempt: success attempts strictly increase
        assert list(rec.per_pair_success_attempt) == sorted(set(rec.per_pair_success_attempt))
        assert rec.total_attempts == rec.per_pair_success_attempt[-1]
        assert all(t >= tau_h for t in rec.per_pair_storage_time)
        assert len(rec.sampled_fidelities) == 2


def test_lockout_availability_matches_chain():
    # lone-click rate ~1e-2 with a 5-attempt lockout
    src = SourceConfig(lambda_=math.sqrt(0.0275), mode="qudit", m=2, n=1)
    mem = MemoryConfig(eta=1.0, p_dark=2.5e-4, T_A=2e-3, T_B=2e-3)
    tau_c = attempt_duration(src)
    link = LinkConfig(mode="direct", p_T_direct=0.1,
                      ground_separation=5 * tau_c * LIGHT_SPEED)
    p_suc = herald_trace(src, mem, 0.1)
    p_lone = lone_click_probability(src, mem, 0.1)
    lockout = lockout_attempt_count(heralding_time(link), tau_c)
    assert lockout == 5
    assert p_lone == pytest.approx(0.0106, rel=0.05)
    pi00 = availability_pi00(p_lone, lockout)
    s = simulate_batch(src, mem, link, "qudit", 5000, RngSpec(31))
    assert abs(s.availability_fraction - pi00) <= 3 * s.availability_stderr
    expected = avg_attempts_closed_form(1, 1, p_suc * pi00)
    assert abs(s.mean_attempts - expected) <= 3 * s.stderr_attempts


def test_click_frequency_matches_window_probability():
    src = SourceConfig(lambda_=math.sqrt(0.0275), mode="qudit", m=2, n=1)
    mem = MemoryConfig(eta=1.0, p_dark=2.5e-4, T_A=2e-3, T_B=2e-3)
    link = LinkConfig(mode="direct", p_T_direct=0.1, ground_separation=1200.0)
    p_click = local_click_probability(src, mem, 0.1)
    s = simulate_batch(src, mem, link, "qudit", 3000, RngSpec(17))
    windows = s.attempts[s.completed_mask].sum()
    sigma = math.sqrt(p_click * (1 - p_click) / windows)
    assert abs(s.click_frequency - p_click) <= 4 * sigma


def test_cutoff_first_pair_mean():
    src, mem = _lossless_qubit(0.1)
    p = herald_trace(src, mem, 1.0)
    s = simulate_batch(src, mem, SHORT_LINK, "qubit", 100_000, RngSpec(21))
    first = s.first_pair_attempts[s.completed_mask]
    expected = 1.0 / -math.expm1(2 * math.log1p(-p))
    stderr = first.std(ddof=1) / math.sqrt(first.size)
    assert abs(first.mean() - expected) <= 3 * stderr


def test_cutoff_total_attempts_match_composition():
    # window chosen long enough that the cutoff seldom binds (D=4, N_cut=500)
    src, mem0 = _lossless_qubit(0.05, n=2)
    tau_c = attempt_duration(src)
    mem = MemoryConfig(eta=1.0, p_dark=0.0, T_A=2e-3, T_B=2e-3,
                       t_cut=500 * tau_c)
    p = herald_trace(src, mem, 1.0)
    s = simulate_batch(src, mem, SHORT_LINK, "qubit", 100_000, RngSpec(22))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CutoffConsistencyWarning)
        expected = avg_attempts_with_cutoff(4, p, 500)
    assert abs(s.mean_attempts - expected) <= 3 * s.stderr_attempts
    assert s.mean_discard_events < 0.01


def test_cutoff_requires_two_pair_batches():
    src = SourceConfig(lambda_=0.1, mode="qubit", m=3, n=1)
    mem = MemoryConfig(eta=1.0, p_dark=0.0, T_A=2e-3, T_B=2e-3, t_cut=1e-4)
    with pytest.raises(ValueError):
        simulate_batch(src, mem, SHORT_LINK, "qubit", 10, RngSpec(1))


def test_mode_mismatch_rejected():
    src, mem = _lossless_qudit(0.1)
    with pytest.raises(ValueError):
        simulate_batch(src, mem, SHORT_LINK, "qubit", 10, RngSpec(1))


def test_worker_parallelism_preserves_results():
    src, mem = _lossless_qudit(0.05)
    serial = simulate_batch(src, mem, SHORT_LINK, "qudit", 8000, RngSpec(77), partitions=4)
    parallel = simulate_batch(src, mem, SHORT_LINK, "qudit", 8000, RngSpec(77),
                              partitions=4, workers=2)
    assert np.array_equal(serial.attempts, parallel.attempts)
    assert serial.mean_fidelity == parallel.mean_fidelity
