"""Luminous flux, Lambertian illuminance and daylight for the desk plane.

All functions are pure.  Positions are metres in a right-handed frame with
``z`` pointing up; sample points lie on a horizontal desk plane whose normal
is ``+z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

#: luminous efficacy of sunlight, lm per optical watt
SUNLIGHT_EFFICACY = 93.0


class GeometryError(ValueError):
    """Raised when a source and a receiver coincide."""


@dataclass(frozen=True)
class Luminaire:
    position: tuple[float, float, float]
    beam_axis: tuple[float, float, float]
    semi_angle_half_power: float  # degrees
    efficacy_G: float  # lm per optical watt
    p_on: float  # W, DC-only electrical power
    eta_dc: float
    room_id: str = ""

    def __post_init__(self):
        lambertian_order(self.semi_angle_half_power)
        if not 0.0 <= self.eta_dc <= 1.0:
            raise ValueError(f"eta_dc must lie in [0, 1], got {self.eta_dc}")
        if self.p_on < 0 or self.efficacy_G < 0:
            raise ValueError("p_on and efficacy_G must be non-negative")
        axis = np.asarray(self.beam_axis, dtype=float)
        norm = float(np.linalg.norm(axis))
        if norm == 0.0:
            raise ValueError("beam_axis must be non-zero")
        object.__setattr__(self, "beam_axis", tuple(float(v) for v in axis / norm))
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))

    @property
    def order(self) -> float:
        return lambertian_order(self.semi_angle_half_power)

    @property
    def p_op(self) -> float:
        """Average optical output power in W."""
        return self.p_on * self.eta_dc


@dataclass(frozen=True)
class SamplePoint:
    position: tuple[float, float, float]
    room_id: str
    required_lux: float = 300.0
    daylight_factor: float = 0.0  # percent

    def __post_init__(self):
        if not math.isfinite(self.required_lux) or self.required_lux < 0:
            raise ValueError(f"required_lux must be finite and >= 0, got {self.required_lux}")
        if self.daylight_factor < 0:
            raise ValueError("daylight_factor must be >= 0")


def lambertian_order(semi_angle_half_power: float) -> float:
    """Lambertian order ``g = -ln 2 / ln cos(phi_half)`` for an angle in degrees."""
    if not 0.0 < semi_angle_half_power < 90.0:
        raise ValueError(
            f"semi-angle at half power must lie in (0, 90) degrees, got {semi_angle_half_power}"
        )
    return -math.log(2.0) / math.log(math.cos(math.radians(semi_angle_half_power)))


def luminous_flux(lum: Luminaire) -> float:
    return lum.efficacy_G * lum.p_on * lum.eta_dc


def aim_axis(source, target) -> tuple[float, float, float]:
    """Unit vector pointing from ``source`` to ``target``."""
    d = np.asarray(target, dtype=float) - np.asarray(source, dtype=float)
    n = float(np.linalg.norm(d))
    if n == 0.0:
        raise GeometryError("cannot aim a luminaire at its own position")
    return tuple(float(v) for v in d / n)


def lambertian_geometry(source, axis, point, normal=(0.0, 0.0, 1.0)):
    """Return ``(r, cos_irradiance, cos_incidence)`` for one source/receiver pair.

    Cosines are not clamped here; callers decide what a negative value means.
    """
    d = np.asarray(point, dtype=float) - np.asarray(source, dtype=float)
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise GeometryError("sample point coincides with the luminaire")
    cos_irr = float(np.dot(d, axis)) / r
    cos_inc = float(np.dot(-d, normal)) / (r * float(np.linalg.norm(normal)))
    return r, cos_irr, cos_inc


def single_illuminance(lum: Luminaire, point: SamplePoint) -> float:
    """Horizontal illuminance (lux) that one luminaire produces at a point.

    Zero across rooms and behind either horizon.
    """
    if lum.room_id != point.room_id:
        return 0.0
    r, cos_irr, cos_inc = lambertian_geometry(lum.position, lum.beam_axis, point.position)
    if cos_irr <= 0.0 or cos_inc <= 0.0:
        return 0.0
    g = lum.order
    return (g + 1.0) / (2.0 * math.pi) * cos_irr**g * cos_inc / r**2 * luminous_flux(lum)


def horizontal_illuminance(on_aps: Iterable[Luminaire], point: SamplePoint) -> float:
    return math.fsum(single_illuminance(lum, point) for lum in on_aps)


def illuminance_matrix(lums, points) -> np.ndarray:
    """Coefficients ``a[m, w]``: lux at point ``w`` from luminaire ``m`` when on."""
    a = np.zeros((len(lums), len(points)))
    for i, lum in enumerate(lums):
        for j, p in enumerate(points):
            a[i, j] = single_illuminance(lum, p)
    return a


def ambient_illuminance(point: SamplePoint, r_sun: float) -> float:
    """Daylight at a point; ``daylight_factor`` is a percentage."""
    if r_sun < 0:
        raise ValueError("solar radiation must be >= 0")
    return point.daylight_factor * SUNLIGHT_EFFICACY * r_sun * 0.01


def residual_requirement(point: SamplePoint, r_sun: float) -> float:
    """Lux the VLC luminaires still owe the point once daylight is counted."""
    return max(0.0, point.required_lux - ambient_illuminance(point, r_sun))


def desk_grid(x0, y0, width, depth, height, n=3):
    """Cell-centred ``n x n`` grid of desk-plane coordinates inside a room."""
    xs = x0 + (np.arange(n) + 0.5) * width / n
    ys = y0 + (np.arange(n) + 0.5) * depth / n
    return [(float(x), float(y), float(height)) for x in xs for y in ys]
