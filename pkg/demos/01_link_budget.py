#! /usr/bin/env python3
"""
Link budgets for one luminaire and one WiFi AP
==============================================

How much extra electrical power does it cost to carry a user's data over
light, and how does that compare with WiFi?  We put a single ceiling
luminaire 3 m up, walk a desk-height receiver away from it, and print
illuminance, channel gain, capacity and the additive power per Mbps.
"""

import numpy as np

from hybridvlc import linkmodel as lm
from hybridvlc import photometry as ph

# a 15 W luminaire, 10 % of it leaving as light at 1500 lm per optical watt
lum = ph.Luminaire((0.0, 0.0, 3.0), (0, 0, -1), 30.0, efficacy_G=1500.0, p_on=15.0,
                   eta_dc=0.1, room_id="R")
print(f"Lambertian order at 30 deg: {lum.order:.4f}")
print(f"luminous flux: {ph.luminous_flux(lum):.0f} lm")

ap = lm.VlcApRadio(lum, eta_ac=0.09)
rx = lm.VlcReceiver()
wifi = lm.WifiAp((0.0, 0.0, 3.0))
rate = 6e6

print(f"\nswitching overhead of a fully loaded slot: {ap.switching_overhead:.3f} W")
print(f"{'offset m':>9} {'lux':>8} {'H':>10} {'C Mbps':>9} {'VLC mW':>8} {'WiFi mW':>8}")
for d in np.linspace(0.0, 2.5, 6):
    pos = (float(d), 0.0, 0.85)
    lux = ph.single_illuminance(lum, ph.SamplePoint(pos, "R"))
    gain = lm.vlc_channel_gain(ap, rx, pos)
    cap = lm.vlc_capacity(ap, rx, pos)
    p_vlc = lm.vlc_additive_power(ap, rx, pos, rate) if cap > 0 else np.inf
    p_wifi = lm.wifi_additive_power(rate, wifi, pos)
    print(f"{d:9.2f} {lux:8.1f} {gain:10.3e} {cap / 1e6:9.1f} {p_vlc * 1e3:8.3f} {p_wifi * 1e3:8.3f}")

# The VLC cost is a share of the switching overhead: rate over capacity.
# Moving off-axis lowers the gain, the capacity, and so raises the share.
# WiFi pays for the transmit power, which grows with the square of distance.
