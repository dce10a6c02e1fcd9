"""
ddforge: filter functions, noise spectra and short-time process prediction
for dynamically decoupled two-level systems.

Frequencies are in Hz, times in seconds, detuning noise in rad/s and control
noise as a dimensionless fractional amplitude error. Spectra are two-sided.
"""
from .evolution import (BlochState, FidelityMap, OverlapReport, ProcessPrediction,
                        WORST_STATE, compute_overlaps, cpmg_pulse_count, delta_rho,
                        fidelity, fidelity_from_overlaps, fidelity_map, increment,
                        infidelity, infidelity_from_overlaps,
                        process_from_overlaps, process_prediction, rho_y_variance,
                        rho_y_variance_scan)
from .filters import (FilterKind, FilterSamples, filter_control, filter_dephasing,
                      filter_grid, filter_norm, filter_value, predicted_peaks)
from .inversion import (MeasurementRecord, SpectrumEstimate, filter_matrix,
                        invert_linear, invert_single_peak, peak_dominance,
                        quadrature_weights)
from .oracle import (ComparisonReport, SimulationConfig, SimulationResult,
                     compare_to_perturbative, evolve_realization, monte_carlo,
                     noiseless_rotation)
from .sequence import (Pulse, PulseSequence, accumulated_area, build_cpmg,
                       control_amplitude, free_evolution, spin_echo, toggling_function,
                       with_pulse_duration)
from .spectra import (DC, ConvergenceError, Line, Lorentzian, SpectralDensity,
                      SpectrumKind, White, control_comb_from_magnetic, overlap,
                      overlap_samples, psd, sample_noise)
from .tomography import (TOMOGRAPHY_STATES, ProcessMatrix, fit_process,
                         predict_process, sphere_samples)

__version__ = "0.1.0"
