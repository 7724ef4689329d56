"""Per-(AP, user) additive power for VLC and WiFi links.

VLC: Lambertian line-of-sight gain -> Shannon capacity -> TDM share of the
AC switching loss.  WiFi: Shannon receive power -> Friis transmit power ->
electrical power through a fixed amplifier efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .photometry import Luminaire, lambertian_geometry

# 2**60 is where the Shannon inversion stops being a meaningful power.
_MAX_SPECTRAL_EFFICIENCY = 60.0


class InfeasibleLink(ValueError):
    """The link cannot carry the requested rate; solvers treat its cost as +inf."""


@dataclass(frozen=True)
class VlcReceiver:
    detector_area: float = 1.0e-4  # m^2
    oe_responsivity: float = 0.54  # A/W
    optical_filter_gain: float = 1.0
    lens_refractive_index: float = 1.5
    fov: float = 90.0  # degrees
    noise_power: float = 4.7e-14  # A^2

    def __post_init__(self):
        for name in ("detector_area", "oe_responsivity", "optical_filter_gain",
                     "lens_refractive_index", "fov", "noise_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"receiver {name} must be positive")
        if self.fov > 90.0:
            raise ValueError("receiver fov must be <= 90 degrees")

    @property
    def concentrator_gain(self) -> float:
        return self.lens_refractive_index**2 / math.sin(math.radians(self.fov)) ** 2


@dataclass(frozen=True)
class VlcApRadio:
    luminaire: Luminaire
    eta_ac: float
    bandwidth: float = 100e6  # Hz
    channel_id: int = 0

    def __post_init__(self):
        if not 0.0 < self.eta_ac <= self.luminaire.eta_dc:
            raise ValueError(
                f"eta_ac must lie in (0, eta_dc={self.luminaire.eta_dc}], got {self.eta_ac}"
            )
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0 <= self.channel_id <= 3:
            raise ValueError("channel_id must be in 0..3")

    @property
    def p_on(self) -> float:
        return self.luminaire.p_on

    @property
    def p_max(self) -> float:
        lum = self.luminaire
        return lum.p_on * lum.eta_dc / self.eta_ac

    @property
    def switching_overhead(self) -> float:
        """Extra electrical power (W) when the AP sends AC for a full time slot."""
        lum = self.luminaire
        return lum.p_on * (lum.eta_dc / self.eta_ac - 1.0)


@dataclass(frozen=True)
class WifiAp:
    position: tuple[float, float, float]
    p_on: float = 10.0
    p_max: float = 14.0
    bandwidth_per_user: float = 2e6
    carrier_wavelength: float = 0.125
    floor_attenuation_db: float = -30.0
    noise_floor: float = 1e-12  # W, -90 dBm
    eta_wifi: float = 0.1

    def __post_init__(self):
        if self.p_max <= 0 or self.carrier_wavelength <= 0 or self.bandwidth_per_user <= 0:
            raise ValueError("p_max, carrier_wavelength and bandwidth_per_user must be positive")
        if not 0 < self.eta_wifi <= 1:
            raise ValueError("eta_wifi must lie in (0, 1]")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def vlc_channel_gain(ap: VlcApRadio, rx: VlcReceiver, ut_position) -> float:
    """DC gain of the line-of-sight link, receiver facing up."""
    lum = ap.luminaire
    r, cos_irr, cos_inc = lambertian_geometry(lum.position, lum.beam_axis, ut_position)
    if cos_inc <= 0.0 or cos_irr <= 0.0:
        return 0.0
    # acos is exact enough here; fov boundary itself is inside the view.
    if math.degrees(math.acos(min(1.0, cos_inc))) > rx.fov:
        return 0.0
    g = lum.order
    return ((g + 1.0) * rx.detector_area / (2.0 * math.pi * r**2) * cos_irr**g
            * rx.optical_filter_gain * rx.concentrator_gain * cos_inc)


def vlc_snr(ap: VlcApRadio, rx: VlcReceiver, gain: float) -> float:
    # AC amplitude taken as twice the average optical (DC) power.
    signal = rx.oe_responsivity * gain * 2.0 * ap.luminaire.p_op
    return signal**2 / rx.noise_power


def vlc_capacity(ap: VlcApRadio, rx: VlcReceiver, ut_position) -> float:
    h = vlc_channel_gain(ap, rx, ut_position)
    if h == 0.0:
        return 0.0
    return ap.bandwidth * math.log2(1.0 + vlc_snr(ap, rx, h))


def vlc_power_for_capacity(ap: VlcApRadio, capacity: float, rate: float) -> float:
    """TDM share ``rate/capacity`` of the AP's AC switching overhead."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    if capacity <= 0.0:
        raise InfeasibleLink("VLC link has zero capacity")
    if rate > capacity:
        raise InfeasibleLink(f"rate {rate:.3g} b/s exceeds VLC capacity {capacity:.3g} b/s")
    return rate / capacity * ap.switching_overhead


def vlc_additive_power(ap: VlcApRadio, rx: VlcReceiver, ut_position, rate: float) -> float:
    return vlc_power_for_capacity(ap, vlc_capacity(ap, rx, ut_position), rate)


def wifi_rx_power(rate: float, ap: WifiAp) -> float:
    """Received power (W) needed for ``rate`` over the per-user bandwidth."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    ratio = rate / ap.bandwidth_per_user
    if ratio > _MAX_SPECTRAL_EFFICIENCY:
        raise InfeasibleLink(f"spectral efficiency {ratio:.1f} b/s/Hz is out of range")
    return ap.noise_floor * math.expm1(ratio * math.log(2.0))


def friis_tx_power(p_rx: float, distance: float, wavelength: float) -> float:
    """Transmit power for unit-gain antennas in free space."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return p_rx * (4.0 * math.pi * distance / wavelength) ** 2


def wifi_additive_power(rate: float, ap: WifiAp, ut_position) -> float:
    p_rx = wifi_rx_power(rate, ap)
    d = math.dist(ap.position, ut_position)
    p_tx = friis_tx_power(p_rx, d, ap.carrier_wavelength)
    return p_tx * 10.0 ** (-ap.floor_attenuation_db / 10.0) / ap.eta_wifi
