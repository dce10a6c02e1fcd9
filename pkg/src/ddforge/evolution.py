"""
Short-time predictions from the environment and control overlap integrals.

Bloch-vector convention: the reduced density matrix is
``(rho_x sx + rho_y sy + rho_z sz + 1) / 2`` and every increment returned here
is an increment of the Bloch components. To second order in the noises,

    d rho_x = -rho_x O_env / 2
    d rho_y = -rho_y (O_env + O_ctrl) / 2
    d rho_z = -rho_z O_ctrl / 2

where ``O_env`` and ``O_ctrl`` are the overlaps of the two-sided spectra with
the dephasing and control filters. The Pauli coefficients of the density
matrix increment itself are half of these. The fidelity
``Tr[rho(T) rho(0)] = 1 - (rho_x**2 + rho_y**2) O_env / 4 - (rho_y**2 + rho_z**2) O_ctrl / 4``
follows for pure initial states.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .filters import FilterKind
from .sequence import PulseSequence, build_cpmg
from .spectra import SpectralDensity, SpectrumKind, overlap

__all__ = [
    "BlochState",
    "OverlapReport",
    "ProcessPrediction",
    "FidelityMap",
    "compute_overlaps",
    "delta_rho",
    "increment",
    "rho_y_variance",
    "rho_y_variance_scan",
    "fidelity",
    "fidelity_from_overlaps",
    "infidelity",
    "infidelity_from_overlaps",
    "process_prediction",
    "process_from_overlaps",
    "fidelity_map",
    "cpmg_pulse_count",
    "WORST_STATE",
]

LOG_FLOOR = -6.0
VALIDITY_BOUND = 0.5
FIRST_ORDER_BOUND = 0.2


@dataclass(frozen=True)
class BlochState:
    rho_x: float = 0.0
    rho_y: float = 0.0
    rho_z: float = 0.0

    @classmethod
    def from_vector(cls, v) -> "BlochState":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.rho_x, self.rho_y, self.rho_z])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def check(self, tol: float = 1e-9) -> "BlochState":
        if self.norm > 1 + tol:
            raise ValueError(f"Bloch vector {self.vector} lies outside the unit ball")
        return self


WORST_STATE = BlochState(0.0, 1.0, 0.0)


@dataclass(frozen=True)
class OverlapReport:
    """Overlap integrals entering the short-time evolution (dimensionless)."""

    env: float
    ctrl: float
    duration: float
    cross_dc: float = 0.0
    cross_cd: float = 0.0


@dataclass(frozen=True)
class ProcessPrediction:
    contraction: tuple
    fidelity_worst: float
    decay_rate_worst: float
    duration: float

    @property
    def beyond_first_order(self) -> bool:
        """True when some axis decays by more than 0.2."""
        return max(1 - lam for lam in self.contraction) > FIRST_ORDER_BOUND


@dataclass(frozen=True)
class FidelityMap:
    n_values: np.ndarray
    rate_values: np.ndarray
    log10_decay_rate: np.ndarray
    flagged: np.ndarray
    pulse_counts: np.ndarray
    total_time: float


def _empty(kind):
    return SpectralDensity((), kind)


def compute_overlaps(seq: PulseSequence, env: Optional[SpectralDensity] = None,
                     ctrl: Optional[SpectralDensity] = None, cross=None) -> OverlapReport:
    """Environment and control overlaps for one sequence.

    ``cross`` optionally supplies the two cross overlaps ``(O_dc, O_cd)``
    computed elsewhere (e.g. with :func:`ddforge.spectra.overlap_samples`).
    """
    env = env if env is not None else _empty(SpectrumKind.ENVIRONMENT)
    ctrl = ctrl if ctrl is not None else _empty(SpectrumKind.CONTROL)
    if env.kind is not SpectrumKind.ENVIRONMENT:
        raise ValueError("env must be an environment spectrum")
    if ctrl.kind is not SpectrumKind.CONTROL:
        raise ValueError("ctrl must be a control spectrum")
    o_env = overlap(env, seq, FilterKind.DEPHASING) if not env.is_zero else 0.0
    o_ctrl = overlap(ctrl, seq, FilterKind.CONTROL) if not ctrl.is_zero else 0.0
    dc, cd = cross if cross is not None else (0.0, 0.0)
    return OverlapReport(o_env, o_ctrl, seq.total_duration, float(dc), float(cd))


def increment(state: BlochState, report: OverlapReport) -> BlochState:
    x, y, z = state.vector
    return BlochState(
        -x * report.env / 2 + z * report.cross_dc / 2,
        -y * (report.env + report.ctrl) / 2,
        -z * report.ctrl / 2 + x * report.cross_cd / 2,
    )


def delta_rho(state: BlochState, seq: PulseSequence, env=None, ctrl=None,
              cross=None) -> BlochState:
    """Bloch-vector change after the sequence, to second order in the noise."""
    return increment(state.check(), compute_overlaps(seq, env, ctrl, cross))


def rho_y_variance(seq: PulseSequence, ctrl: SpectralDensity) -> float:
    """<rho_y**2> after the sequence for an initial pole state.

    Equal to the control overlap; the accompanying population change of
    ``rho_z`` is half of it, towards the equator.
    """
    if ctrl.is_zero:
        return 0.0
    return overlap(ctrl, seq, FilterKind.CONTROL)


def rho_y_variance_scan(n: int, num_pulses: int, rates, ctrl: SpectralDensity,
                        pulse_duration: float = 0.0) -> np.ndarray:
    """:func:`rho_y_variance` of CPMG-n with fixed pulse number versus pulse rate."""
    return np.array([rho_y_variance(build_cpmg(n, r, num_pulses, pulse_duration), ctrl)
                     for r in np.asarray(rates, dtype=float)])


def infidelity_from_overlaps(state: BlochState, report: OverlapReport) -> float:
    x, y, z = state.vector
    return (x * x + y * y) * report.env / 4 + (y * y + z * z) * report.ctrl / 4


def fidelity_from_overlaps(state: BlochState, report: OverlapReport) -> float:
    return 1 - infidelity_from_overlaps(state, report)


def infidelity(state: BlochState, seq: PulseSequence, env=None, ctrl=None) -> float:
    """``1 - fidelity``, computed without the cancellation of ``1 - F``."""
    return infidelity_from_overlaps(state.check(), compute_overlaps(seq, env, ctrl))


def fidelity(state: BlochState, seq: PulseSequence, env=None, ctrl=None) -> float:
    """Short-time fidelity Tr[rho(T) rho(0)] of a pure initial state."""
    return fidelity_from_overlaps(state.check(), compute_overlaps(seq, env, ctrl))


def process_from_overlaps(report: OverlapReport) -> ProcessPrediction:
    lam = (1 - report.env / 2,
           1 - (report.env + report.ctrl) / 2,
           1 - report.ctrl / 2)
    loss = infidelity_from_overlaps(WORST_STATE, report)
    return ProcessPrediction(lam, 1 - loss, loss / report.duration,
                             report.duration)


def process_prediction(seq: PulseSequence, env=None, ctrl=None) -> ProcessPrediction:
    """Per-axis contraction factors and worst-case fidelity of the sequence."""
    return process_from_overlaps(compute_overlaps(seq, env, ctrl))


def cpmg_pulse_count(n: int, rate: float, total_time: float) -> int:
    """Pulses fitting in ``total_time``, rounded down to whole phase cycles."""
    count = int(round(rate * total_time))
    if n == 0:
        return max(1, count)
    return max(n, (count // n) * n)


def fidelity_map(n_values: Sequence[int], rate_values, total_time: float = 1.0,
                 env=None, ctrl=None, pulse_duration: float = 0.0,
                 threads: Optional[int] = None, log_floor: float = LOG_FLOOR,
                 validity: float = VALIDITY_BOUND) -> FidelityMap:
    """log10 of the worst-case fidelity decay rate over a (n, f_DD) grid.

    Each cell runs CPMG-n at rate f_DD for :func:`cpmg_pulse_count` pulses;
    the decay rate is ``(1 - F_worst) / T`` with ``T = N / f_DD``. Cells where
    ``1 - F_worst`` exceeds ``validity`` are clamped there and flagged; cells
    with no decay sit at ``log_floor``.
    """
    n_values = np.asarray(n_values, dtype=int)
    rate_values = np.asarray(rate_values, dtype=float)
    if n_values.size == 0 or rate_values.size == 0:
        raise ValueError("fidelity map grid is empty")
    if total_time <= 0:
        raise ValueError("total_time must be > 0")
    if pulse_duration > 0 and pulse_duration >= 1 / rate_values.max():
        raise ValueError("pulse_duration too long for the highest pulse rate")
    for n in n_values:
        if n < 0 or n % 2:
            raise ValueError(f"phase cycle n must be even or 0, got {n}")

    cells = [(i, j) for i in range(n_values.size) for j in range(rate_values.size)]
    counts = np.zeros((n_values.size, rate_values.size), dtype=int)

    def cell(ij):
        i, j = ij
        n, rate = int(n_values[i]), float(rate_values[j])
        num = cpmg_pulse_count(n, rate, total_time)
        seq = build_cpmg(n, rate, num, pulse_duration)
        report = compute_overlaps(seq, env, ctrl)
        return num, infidelity_from_overlaps(WORST_STATE, report), report.duration

    workers = threads if threads is not None else min(8, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, cells))
    else:
        results = [cell(c) for c in cells]

    logs = np.empty(counts.shape)
    flagged = np.zeros(counts.shape, dtype=bool)
    for (i, j), (num, loss, duration) in zip(cells, results):
        counts[i, j] = num
        if loss > validity:
            flagged[i, j] = True
            loss = validity
        rate = loss / duration
        logs[i, j] = np.log10(rate) if rate > 10 ** log_floor else log_floor
    return FidelityMap(n_values, rate_values, logs, flagged, counts, total_time)
