"""
Checking the perturbative prediction against Monte Carlo
========================================================

The simulator integrates the Bloch equations for sampled noise traces with
exact rotations. Averaging 2000 realizations and comparing with the
second-order prediction is the ground truth for every formula in the
library.
"""
# %%
from ddforge import (BlochState, Line, Lorentzian, SimulationConfig, SpectralDensity,
                     SpectrumKind, build_cpmg, compare_to_perturbative, rho_y_variance,
                     spin_echo, with_pulse_duration)

cfg = SimulationConfig(dt=5e-5, realizations=2000, seed=1)

# %%
# A weak 50 Hz control line and CPMG-4 at 67 Hz, starting from the south pole.
# The simulator gives ideal pulses a width of 1 ms; the line power is chosen
# so that <rho_y^2> = 0.01 for that sequence.
seq = build_cpmg(4, 67.0, 40)
unit = SpectralDensity((Line(50.0, 1.0),), SpectrumKind.CONTROL)
power = 0.01 / rho_y_variance(with_pulse_duration(seq, cfg.pulse_duration), unit)
ctrl = SpectralDensity((Line(50.0, power),), SpectrumKind.CONTROL)
rep = compare_to_perturbative(seq, None, ctrl, BlochState(0, 0, -1), cfg)
print("control line:", rep.verdict)
print("  predicted d rho:", rep.predicted.round(5))
print("  simulated d rho:", rep.simulated.round(5), "+-", rep.stderr.round(5))

# %%
# Lorentzian detuning noise and a 20 ms spin echo, starting along x.
env = SpectralDensity((Lorentzian(357.0, 2e-3),), SpectrumKind.ENVIRONMENT)
rep = compare_to_perturbative(spin_echo(0.02), env, None, BlochState(1, 0, 0), cfg)
print("Lorentzian echo:", rep.verdict)
print("  predicted d rho:", rep.predicted.round(5))
print("  simulated d rho:", rep.simulated.round(5), "+-", rep.stderr.round(5))

# %%
# Strong noise leaves the regime where the expansion means anything.
strong = SpectralDensity((Line(50.0, 1e-2),), SpectrumKind.CONTROL)
rep = compare_to_perturbative(build_cpmg(4, 67.0, 40), None, strong, BlochState(0, 1, 0),
                              SimulationConfig(dt=5e-5, realizations=50))
print("strong line:", rep.verdict)
