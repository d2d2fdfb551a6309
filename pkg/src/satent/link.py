"""Satellite-to-ground channel model.

Produces the effective one-photon transmission probability p_T and the
classical heralding latency between the two ground stations.  Two modes:

* ``direct``      -- p_T is injected verbatim (optionally as a per-distance
                     anchor table with log-linear interpolation), so measured
                     or published link values can be reproduced exactly.
* ``parametric``  -- a far-field Gaussian-beam budget (divergence, jitter-
                     averaged pointing loss, elevation-scaled atmospheric
                     transmittance) for exploratory studies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Representative downlink anchors: ~8e-3 at 200 km, ~2e-3 at 1200 km.
DEFAULT_PT_ANCHORS = ((200e3, 8e-3), (1200e3, 2e-3))

_MAX_AIRMASS = 38.0  # horizon cap for the plane-parallel airmass model


@dataclass(frozen=True)
class LinkConfig:
    """Channel geometry and loss parameters.

    In ``direct`` mode only ``p_T_direct`` (or ``p_T_by_distance``) and
    ``ground_separation`` are consulted; the remaining fields keep their
    defaults.  ``heralding_time_override`` replaces the light-time default
    when classical processing latency should be included.
    """

    mode: str = "direct"
    p_T_direct: float = 8e-3
    ground_separation: float = 600e3
    satellite_altitude: float = 500e3
    transmitter_aperture: float = 0.3
    receiver_aperture: float = 1.0
    wavelength: float = 810e-9
    pointing_jitter: float = 1e-6
    atmospheric_transmittance_zenith: float = 0.8
    heralding_time_override: float | None = None
    p_T_by_distance: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.mode not in ("direct", "parametric"):
            raise ValueError(f"link mode must be 'direct' or 'parametric', got {self.mode!r}")
        if not 0.0 <= self.p_T_direct <= 1.0:
            raise ValueError("p_T_direct must lie in [0, 1]")
        if not 0.0 <= self.atmospheric_transmittance_zenith <= 1.0:
            raise ValueError("atmospheric_transmittance_zenith must lie in [0, 1]")
        for name in ("ground_separation", "satellite_altitude", "transmitter_aperture",
                     "receiver_aperture", "wavelength"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.pointing_jitter < 0.0:
            raise ValueError("pointing_jitter must be non-negative")
        if self.heralding_time_override is not None and self.heralding_time_override <= 0.0:
            raise ValueError("heralding_time_override must be strictly positive")
        if self.p_T_by_distance is not None:
            if len(self.p_T_by_distance) < 2:
                raise ValueError("p_T_by_distance needs at least two anchors")
            dists = [d for d, _ in self.p_T_by_distance]
            if sorted(dists) != dists or len(set(dists)) != len(dists):
                raise ValueError("p_T_by_distance anchors must have strictly increasing distances")
            for d, p in self.p_T_by_distance:
                if d <= 0.0 or not 0.0 < p <= 1.0:
                    raise ValueError("p_T_by_distance anchors need d > 0 and p in (0, 1]")


def transmission_probability(cfg: LinkConfig, slant_range: float) -> float:
    """Effective one-photon transmission probability for a given slant range.

    Direct mode returns ``p_T_direct`` unconditionally.  Parametric mode
    multiplies far-field geometric collection, the jitter-averaged pointing
    factor 1/(1 + 4 sigma^2/theta^2), and zenith transmittance raised to the
    airmass.
    """
    if slant_range <= 0.0:
        raise ValueError("slant_range must be strictly positive")
    if cfg.mode == "direct":
        return cfg.p_T_direct

    waist = cfg.transmitter_aperture / 2.0
    divergence = cfg.wavelength / (math.pi * waist)
    beam_radius = divergence * slant_range
    rx_radius = cfg.receiver_aperture / 2.0
    p_geo = -math.expm1(-2.0 * (rx_radius / beam_radius) ** 2)
    p_point = 1.0 / (1.0 + 4.0 * (cfg.pointing_jitter / divergence) ** 2)
    sin_elev = min(1.0, cfg.satellite_altitude / slant_range)
    airmass = min(_MAX_AIRMASS, 1.0 / max(sin_elev, 1e-9))
    p_atm = cfg.atmospheric_transmittance_zenith ** airmass
    return p_geo * p_point * p_atm


def heralding_time(cfg: LinkConfig) -> float:
    """One-way classical communication latency between the ground stations.

    Defaults to the straight-line light time ground_separation / c; an
    explicit override wins when set.
    """
    if cfg.heralding_time_override is not None:
        return cfg.heralding_time_override
    if cfg.ground_separation <= 0.0:
        raise ValueError("ground_separation must be strictly positive")
    return cfg.ground_separation / SPEED_OF_LIGHT


def slant_range_over_midpoint(cfg: LinkConfig, ground_distance: float) -> float:
    """Slant range with the satellite directly above the midpoint of the pair."""
    if ground_distance <= 0.0:
        raise ValueError("ground_distance must be strictly positive")
    return math.hypot(cfg.satellite_altitude, ground_distance / 2.0)


def interpolated_p_t(ground_distance: float,
                     anchors: tuple[tuple[float, float], ...] = DEFAULT_PT_ANCHORS) -> float:
    """Log-linear interpolation (and extrapolation) of p_T over distance anchors."""
    if ground_distance <= 0.0:
        raise ValueError("ground_distance must be strictly positive")
    pts = list(anchors)
    if ground_distance <= pts[0][0]:
        lo, hi = pts[0], pts[1]
    elif ground_distance >= pts[-1][0]:
        lo, hi = pts[-2], pts[-1]
    else:
        lo, hi = pts[0], pts[-1]
        for a, b in zip(pts, pts[1:]):
            if a[0] <= ground_distance <= b[0]:
                lo, hi = a, b
                break
    frac = (ground_distance - lo[0]) / (hi[0] - lo[0])
    value = math.exp(math.log(lo[1]) + frac * (math.log(hi[1]) - math.log(lo[1])))
    return min(1.0, value)


def p_t_at_distance(cfg: LinkConfig, ground_distance: float) -> float:
    """p_T for two stations separated by ``ground_distance``.

    Direct mode uses the anchor table when present, else the fixed value;
    parametric mode evaluates the budget at the midpoint slant range.
    """
    if cfg.mode == "direct":
        if cfg.p_T_by_distance is not None:
            return interpolated_p_t(ground_distance, cfg.p_T_by_distance)
        return cfg.p_T_direct
    return transmission_probability(cfg, slant_range_over_midpoint(cfg, ground_distance))
