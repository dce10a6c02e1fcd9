"""
Filter functions of CPMG sequences
==================================

A pulse sequence acts on noise through two filters: the dephasing filter
``F_d(f)`` weighs detuning noise and the control filter ``F_c(f)`` weighs
fluctuations of the pulse amplitude. This walk-through samples both for the
phase-cycled CPMG-4 sequence and shows where their peaks sit.
"""
# %%
# A 67 Hz CPMG-4 train with 40 ideal pulses.
import numpy as np

from ddforge import (FilterKind, build_cpmg, filter_grid, filter_norm, predicted_peaks,
                     with_pulse_duration)

seq = build_cpmg(4, 67.0, 40)
print(seq.label, "lasts", round(seq.total_duration, 4), "s")

# %%
# Phase cycling puts the control filter peaks at odd multiples of a quarter
# of the pulse rate. With ideal pulses the low harmonics have equal height,
# and the third one makes a 67 Hz train listen near 50 Hz.
ctrl = filter_grid(seq, FilterKind.CONTROL, 30.0, 70.0, 4001)
peak = ctrl.frequencies[np.argmax(ctrl.values)]
print(f"control filter peak between 30 and 70 Hz at {peak:.2f} Hz")
print("predicted control peaks:", predicted_peaks(seq, FilterKind.CONTROL, 3).round(2))

# %%
# The dephasing filter of CPMG-n peaks at half the pulse rate.
deph = filter_grid(seq, FilterKind.DEPHASING, 0.0, 200.0, 4001)
print(f"dephasing filter peak at {deph.frequencies[np.argmax(deph.values)]:.2f} Hz")

# %%
# Finite pulses tame the high-frequency tail of the control filter and make
# its total weight finite.
wide = with_pulse_duration(seq, 1e-3)
print("int F_c df, ideal pulses:", filter_norm(seq, FilterKind.CONTROL))
print("int F_c df, 1 ms pulses: ", round(filter_norm(wide, FilterKind.CONTROL), 1))
print("int F_d df equals T:      ", filter_norm(seq, FilterKind.DEPHASING), seq.total_duration)
