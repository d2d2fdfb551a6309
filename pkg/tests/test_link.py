import math

import pytest

from satent.link import (LinkConfig, SPEED_OF_LIGHT, heralding_time, interpolated_p_t,
                         p_t_at_distance, slant_range_over_midpoint,
                         transmission_probability)


def test_direct_mode_returns_injected_value():
    cfg = LinkConfig(mode="direct", p_T_direct=8e-3, ground_separation=200e3)
    assert transmission_probability(cfg, 550e3) == 8e-3
    cfg2 = LinkConfig(mode="direct", p_T_direct=2e-3, ground_separation=1200e3)
    assert transmission_probability(cfg2, 1.3e6) == 2e-3


def test_transmission_rejects_nonpositive_range():
    cfg = LinkConfig()
    with pytest.raises(ValueError):
        transmission_probability(cfg, 0.0)
    with pytest.raises(ValueError):
        transmission_probability(cfg, -1.0)


def test_parametric_vanishing_receiver_aperture():
    cfg = LinkConfig(mode="parametric", receiver_aperture=1e-9)
    assert transmission_probability(cfg, 500e3) < 1e-10


def test_parametric_monotone_in_slant_range():
    cfg = LinkConfig(mode="parametric")
    ranges = [300e3 + 50e3 * i for i in range(40)]
    values = [transmission_probability(cfg, r) for r in ranges]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


def test_heralding_time_is_light_time():
    cfg = LinkConfig(ground_separation=SPEED_OF_LIGHT)
    assert heralding_time(cfg) == pytest.approx(1.0, rel=1e-12)
    cfg2 = LinkConfig(ground_separation=1.2e6)
    assert heralding_time(cfg2) == pytest.approx(4.00276914237782459e-3, rel=1e-9)


def test_heralding_time_linear_in_separation():
    t1 = heralding_time(LinkConfig(ground_separation=3e5))
    t2 = heralding_time(LinkConfig(ground_separation=6e5))
    assert t2 == pytest.approx(2.0 * t1, rel=1e-12)


def test_zero_separation_rejected():
    with pytest.raises(ValueError):
        LinkConfig(ground_separation=0.0)


def test_heralding_override_wins():
    cfg = LinkConfig(ground_separation=1.2e6, heralding_time_override=5e-3)
    assert heralding_time(cfg) == 5e-3


def test_interpolated_p_t_hits_anchors_and_extrapolates():
    anchors = ((200e3, 8e-3), (1200e3, 2e-3))
    assert interpolated_p_t(200e3, anchors) == pytest.approx(8e-3, rel=1e-12)
    assert interpolated_p_t(1200e3, anchors) == pytest.approx(2e-3, rel=1e-12)
    mid = interpolated_p_t(700e3, anchors)
    assert 2e-3 < mid < 8e-3
    # beyond the far anchor the value keeps dropping
    assert interpolated_p_t(1250e3, anchors) == pytest.approx(1.8660659830736154e-3, rel=1e-9)


def test_p_t_at_distance_uses_anchor_table():
    cfg = LinkConfig(mode="direct", p_T_by_distance=((200e3, 8e-3), (1200e3, 2e-3)))
    assert p_t_at_distance(cfg, 200e3) == pytest.approx(8e-3)
    assert p_t_at_distance(cfg, 1200e3) == pytest.approx(2e-3)
    fixed = LinkConfig(mode="direct", p_T_direct=5e-3)
    assert p_t_at_distance(fixed, 987e3) == 5e-3


def test_slant_range_geometry():
    cfg = LinkConfig(satellite_altitude=500e3)
    assert slant_range_over_midpoint(cfg, 600e3) == pytest.approx(
        math.hypot(500e3, 300e3), rel=1e-12)
