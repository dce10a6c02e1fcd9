"""
Scanning the pulse rate across a 50 Hz line
===========================================

Amplitude noise of the control field at 50 Hz (mains pickup) shows up in the
spread of ``rho_y`` after a CPMG-4 train whenever one of the control filter
harmonics lands on 50 Hz. With 40 pulses that happens at pulse rates
``200 / (2m - 1)`` Hz.
"""
# %%
import numpy as np

from ddforge import Line, SpectralDensity, SpectrumKind, rho_y_variance_scan

line = SpectralDensity((Line(50.0, 1e-6),), SpectrumKind.CONTROL)
rates = np.arange(20.0, 220.01, 0.5)
var = rho_y_variance_scan(4, 40, rates, line)

# %%
# Local maxima of the scan next to the predicted rates.
is_max = np.r_[False, (var[1:-1] > var[:-2]) & (var[1:-1] >= var[2:]), var[-1] > var[-2]]
for m in range(1, 5):
    f0 = 200 / (2 * m - 1)
    near = rates[is_max][np.argmin(np.abs(rates[is_max] - f0))]
    print(f"m={m}: predicted {f0:6.1f} Hz, scan maximum at {near:6.1f} Hz")

# %%
# The strongest response sits at 200 Hz, where the fundamental of the
# control filter hits the line.
print("global maximum at", rates[np.argmax(var)], "Hz")
