"""
Tuning the photon-pair source
=============================

The two color bins are set by the crystal temperature. A straight line through
the degeneracy point captures the measured tuning anchors to ~0.1 THz.
"""

import math

from colorent import source

curve = source.default_tuning_curve()
print(f"slope {curve.slope_thz_per_c:.4f} THz/C through ({curve.degenerate_temperature_c} C, 0 THz)")
for (t, df), r in zip(curve.anchors, curve.residuals()):
    print(f"  {t:5.1f} C  measured {df:4.1f} THz  model residual {r:+.3f}")

for t in (25.1, 33.7, 43.7, 68.1):
    df = source.detuning_from_temperature(t)
    l1, l2 = source.wavelengths_from_detuning(df)
    print(f"{t:5.1f} C -> {df:5.2f} THz -> {l1:.2f} nm / {l2:.2f} nm (separation {l1 - l2:.2f} nm)")

# bin bandwidth sets the width of the interference envelope
bw = source.bandwidth_nm_to_thz(0.66, 809.6)
print(f"0.66 nm bins = {bw:.3f} THz -> coherence time {source.coherence_time_from_bandwidth(bw):.2f} ps")

state = source.make_pol_state(2**-0.5, 2**-0.5, math.pi, 811.9, 807.3)
print("input polarization state:", state)
