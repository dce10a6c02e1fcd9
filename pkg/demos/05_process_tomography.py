"""
Bloch-sphere deformation from four initial states
=================================================

Preparing +z, -z, +x and +y and recording the final Bloch vectors fixes an
affine process. Here the four final states come from the Monte Carlo
simulator and the fitted process is compared with the predicted one.
"""
# %%
import numpy as np

from ddforge import (BlochState, Line, SimulationConfig, SpectralDensity, SpectrumKind,
                     TOMOGRAPHY_STATES, build_cpmg, fit_process, monte_carlo,
                     noiseless_rotation, predict_process, sphere_samples,
                     with_pulse_duration)

cfg = SimulationConfig(dt=5e-5, realizations=2000, seed=11)
seq = with_pulse_duration(build_cpmg(4, 67.0, 40), cfg.pulse_duration)
ctrl = SpectralDensity((Line(50.0, 9.6e-6),), SpectrumKind.CONTROL)

# %%
# Simulate the four protocol states and undo the noiseless rotation.
rot = noiseless_rotation(seq, cfg.dt)
pairs = []
for s in TOMOGRAPHY_STATES:
    res = monte_carlo(seq, None, ctrl, s, cfg)
    pairs.append((s, BlochState.from_vector(rot.T @ res.mean_bloch.vector)))
fitted = fit_process(pairs)
predicted = predict_process(seq, None, ctrl)
print("fitted linear part:\n", fitted.linear.round(4))
print("predicted diagonal:", np.diag(predicted.linear).round(4))
print("fitted offset:", fitted.offset.round(4))

# %%
# Control noise squeezes the sphere along y and z and leaves x alone.
u, v = sphere_samples(predicted, 24)
print("semi-axes relative to the unit sphere:",
      (np.abs(v).max(axis=0) / np.abs(u).max(axis=0)).round(4))
