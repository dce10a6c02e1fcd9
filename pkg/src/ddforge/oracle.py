"""
Monte Carlo simulation of the noisy two-level system.

In the frame rotating at the transition frequency and on resonance the
Hamiltonian is ``delta(t) sz / 2 + Omega_0(t) (1 + n_c(t)) sx / 2``, so the
Bloch vector rotates about ``(Omega_0 (1 + n_c), 0, delta)``. Each time step
is applied as an exact axis-angle rotation, which keeps the Bloch norm to
rounding error. Runs of steps without any pulse are pure z rotations and are
merged into a single rotation.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .evolution import (BlochState, VALIDITY_BOUND, WORST_STATE, compute_overlaps,
                        infidelity_from_overlaps, increment)
from .sequence import PulseSequence, accumulated_area, with_pulse_duration
from .spectra import SpectralDensity, SpectrumKind, sample_noise

__all__ = [
    "SimulationConfig",
    "SimulationResult",
    "ComparisonReport",
    "evolve_realization",
    "monte_carlo",
    "compare_to_perturbative",
    "noiseless_rotation",
]


@dataclass(frozen=True)
class SimulationConfig:
    """Monte Carlo settings.

    ``pulse_duration`` replaces the width of any ideal pulse in the simulated
    sequence. The noise of each realization is synthesized over
    ``padding * T`` and truncated to ``T``.
    """

    dt: float
    realizations: int = 2000
    seed: int = 0
    pulse_duration: float = 1e-3
    padding: float = 4.0
    batch_size: int = 250
    workers: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.pulse_duration <= 0:
            raise ValueError("the simulator needs a finite pulse_duration")
        if self.padding < 1:
            raise ValueError("padding must be >= 1")


@dataclass(frozen=True)
class SimulationResult:
    mean_bloch: BlochState
    stderr: np.ndarray
    realizations_used: int


@dataclass
class ComparisonReport:
    initial: BlochState
    predicted: np.ndarray
    simulated: np.ndarray
    stderr: np.ndarray
    z_scores: np.ndarray
    rel_errors: np.ndarray
    within_validity: bool
    passed: Optional[bool]
    realizations: int
    rel_tol: float = 0.1
    sigmas: float = 3.0

    @property
    def verdict(self) -> str:
        if not self.within_validity:
            return "outside perturbative validity"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in a]
        return {
            "initial": self.initial.vector.tolist(),
            "predicted_delta": clean(self.predicted),
            "simulated_delta": clean(self.simulated),
            "stderr": clean(self.stderr),
            "z_scores": clean(self.z_scores),
            "rel_errors": clean(self.rel_errors),
            "realizations": self.realizations,
            "within_validity": self.within_validity,
            "passed": self.passed,
            "verdict": self.verdict,
        }


def _step_grid(total: float, dt: float):
    steps = max(1, int(math.ceil(total / dt - 1e-9)))
    edges = np.minimum(np.arange(steps + 1) * dt, total)
    edges[-1] = total
    return edges


def _rotate_z(r, angle):
    c, s = np.cos(angle), np.sin(angle)
    x, y = r[:, 0].copy(), r[:, 1]
    r[:, 0] = x * c - y * s
    r[:, 1] = x * s + y * c


def _rotate(r, wx, wz):
    """Rotate rows of ``r`` about (wx, 0, wz) by angle |w| (Rodrigues)."""
    theta = np.hypot(wx, wz)
    safe = np.where(theta > 0, theta, 1.0)
    nx, nz = wx / safe, wz / safe
    c, s = np.cos(theta), np.sin(theta)
    x, y, z = r[:, 0].copy(), r[:, 1].copy(), r[:, 2].copy()
    dot = nx * x + nz * z
    # n x r with n = (nx, 0, nz)
    cx, cy, cz = -nz * y, nz * x - nx * z, nx * y
    k = 1 - c
    r[:, 0] = x * c + cx * s + nx * dot * k
    r[:, 1] = y * c + cy * s
    r[:, 2] = z * c + cz * s + nz * dot * k


def _segments(step_area):
    """Split steps into (active, start, stop) runs by whether a pulse is on."""
    active = step_area != 0
    bounds = np.flatnonzero(np.diff(active.astype(np.int8))) + 1
    starts = np.concatenate([[0], bounds])
    stops = np.concatenate([bounds, [active.size]])
    return [(bool(active[a]), int(a), int(b)) for a, b in zip(starts, stops)]


def _evolve(seq: PulseSequence, delta, nc, r0, dt):
    """Evolve a batch: ``delta`` and ``nc`` are (R, S) midpoint samples."""
    if seq.has_delta_pulses:
        raise ValueError("the simulator cannot integrate delta pulses")
    edges = _step_grid(seq.total_duration, dt)
    h = np.diff(edges)
    steps = h.size
    if delta.shape[1] < steps or nc.shape[1] < steps:
        raise ValueError(f"noise series cover {min(delta.shape[1], nc.shape[1])} "
                         f"steps, sequence needs {steps}")
    area = np.diff(accumulated_area(seq, edges))
    area[np.abs(area) < 1e-15] = 0.0
    r = np.tile(np.asarray(r0, dtype=float), (delta.shape[0], 1))
    for active, a, b in _segments(area):
        if not active:
            _rotate_z(r, delta[:, a:b] @ h[a:b])
            continue
        for k in range(a, b):
            _rotate(r, area[k] * (1 + nc[:, k]), delta[:, k] * h[k])
    return r


def evolve_realization(seq: PulseSequence, delta_series, nc_series,
                       initial: BlochState, dt: float) -> BlochState:
    """Propagate one noise realization through the sequence.

    ``delta_series`` (rad/s) and ``nc_series`` hold one sample per time step,
    taken as the value at the step midpoint.
    """
    d = np.atleast_2d(np.asarray(delta_series, dtype=float))
    n = np.atleast_2d(np.asarray(nc_series, dtype=float))
    return BlochState.from_vector(_evolve(seq, d, n, initial.vector, dt)[0])


def noiseless_rotation(seq: PulseSequence, dt: float) -> np.ndarray:
    """3x3 rotation applied by the noiseless sequence."""
    steps = _step_grid(seq.total_duration, dt).size - 1
    zeros = np.zeros((3, steps))
    out = np.empty((3, 3))
    for i, e in enumerate(np.eye(3)):
        out[:, i] = _evolve(seq, zeros[:1], zeros[:1], e, dt)[0]
    return out


def _check_config(seq: PulseSequence, env, ctrl, cfg: SimulationConfig):
    widths = seq.durations[seq.durations > 0]
    if widths.size and cfg.dt > widths.min() / 20 * (1 + 1e-9):
        raise ValueError(f"dt={cfg.dt} exceeds pulse_duration/20 = {widths.min() / 20}")
    f_max = max(env.highest_frequency(), ctrl.highest_frequency())
    if f_max > 0 and cfg.dt > 1 / (20 * f_max) * (1 + 1e-9):
        raise ValueError(f"dt={cfg.dt} exceeds 1/(20 f_max) = {1 / (20 * f_max)}")


def _noise(spec, dt, duration, seed, steps):
    if spec.is_zero:
        return np.zeros(steps)
    return sample_noise(spec, dt, duration, seed)[:steps]


def _defaults(env, ctrl):
    env = env if env is not None else SpectralDensity((), SpectrumKind.ENVIRONMENT)
    ctrl = ctrl if ctrl is not None else SpectralDensity((), SpectrumKind.CONTROL)
    return env, ctrl


def _final_states(seq, env, ctrl, initial, cfg):
    steps = _step_grid(seq.total_duration, cfg.dt).size - 1
    duration = max(cfg.padding * seq.total_duration, steps * cfg.dt)

    def batch(start):
        ids = range(start, min(start + cfg.batch_size, cfg.realizations))
        d = np.array([_noise(env, cfg.dt, duration, [cfg.seed, i, 0], steps) for i in ids])
        n = np.array([_noise(ctrl, cfg.dt, duration, [cfg.seed, i, 1], steps) for i in ids])
        return _evolve(seq, d, n, initial.vector, cfg.dt)

    starts = list(range(0, cfg.realizations, cfg.batch_size))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(batch, starts))
    else:
        parts = [batch(s) for s in starts]
    return np.concatenate(parts, axis=0)


def monte_carlo(seq: PulseSequence, env=None, ctrl=None,
                initial: BlochState = BlochState(0, 0, 1),
                cfg: SimulationConfig = None) -> SimulationResult:
    """Ensemble-averaged final Bloch vector with per-axis standard errors.

    Realization ``i`` draws its environment and control noise from the seeds
    ``[cfg.seed, i, 0]`` and ``[cfg.seed, i, 1]``, so results do not depend on
    batching or on the number of workers.
    """
    if cfg is None:
        raise ValueError("a SimulationConfig is required")
    env, ctrl = _defaults(env, ctrl)
    seq = with_pulse_duration(seq, cfg.pulse_duration)
    _check_config(seq, env, ctrl, cfg)
    finals = _final_states(seq, env, ctrl, initial.check(), cfg)
    r = finals.shape[0]
    mean = finals.mean(axis=0)
    stderr = finals.std(axis=0, ddof=1) / np.sqrt(r) if r > 1 else np.zeros(3)
    return SimulationResult(BlochState.from_vector(mean), stderr, r)


def compare_to_perturbative(seq: PulseSequence, env=None, ctrl=None,
                            initial: BlochState = BlochState(0, 0, 1),
                            cfg: SimulationConfig = None, rel_tol: float = 0.1,
                            sigmas: float = 3.0, atol: float = 1e-9) -> ComparisonReport:
    """Simulated versus predicted change of the Bloch vector.

    Both changes are measured relative to the noiseless final state; the
    prediction is mapped through the noiseless rotation of the sequence. An
    axis agrees if the difference is within ``max(rel_tol |pred|,
    sigmas * stderr, atol)``.
    """
    if cfg is None:
        raise ValueError("a SimulationConfig is required")
    env, ctrl = _defaults(env, ctrl)
    sim_seq = with_pulse_duration(seq, cfg.pulse_duration)
    report = compute_overlaps(sim_seq, env, ctrl)
    rot = noiseless_rotation(sim_seq, cfg.dt)
    predicted = rot @ increment(initial, report).vector
    # rotation matrix rounding leaves ~1e-19 residue on axes that should be 0
    predicted[np.abs(predicted) < 1e-15] = 0.0
    result = monte_carlo(sim_seq, env, ctrl, initial, cfg)
    simulated = result.mean_bloch.vector - rot @ initial.vector
    diff = simulated - predicted
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(result.stderr > 0, diff / result.stderr,
                     np.where(np.abs(diff) <= atol, 0.0, np.inf))
        rel = np.where(predicted != 0, np.abs(diff) / np.abs(predicted),
                       np.where(np.abs(diff) <= atol, 0.0, np.inf))
    valid = bool(infidelity_from_overlaps(WORST_STATE, report) <= VALIDITY_BOUND)
    allowed = np.maximum(np.maximum(rel_tol * np.abs(predicted), sigmas * result.stderr), atol)
    passed = bool(np.all(np.abs(diff) <= allowed)) if valid else None
    return ComparisonReport(initial, predicted, simulated, result.stderr, z, rel,
                            valid, passed, result.realizations_used, rel_tol, sigmas)
