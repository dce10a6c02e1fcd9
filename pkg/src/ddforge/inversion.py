"""
Spectrum reconstruction from measured overlap integrals.

A measurement of a sequence's overlap ``y = int G(f) F(f) df`` is linear in
the spectrum. With one dominant filter peak a single measurement gives the
density at the peak; with several sequences the discretized relation is
solved as a nonnegative least-squares problem.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .filters import FilterKind, filter_norm, filter_value
from .sequence import PulseSequence

__all__ = [
    "MeasurementRecord",
    "SpectrumEstimate",
    "quadrature_weights",
    "filter_matrix",
    "peak_dominance",
    "invert_single_peak",
    "invert_linear",
]


@dataclass(frozen=True)
class MeasurementRecord:
    sequence: PulseSequence
    kind: FilterKind
    value: float
    uncertainty: float = 0.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        if self.value < 0:
            raise ValueError(f"measured overlap must be >= 0, got {self.value}")
        if self.uncertainty < 0:
            raise ValueError("uncertainty must be >= 0")


@dataclass(frozen=True)
class SpectrumEstimate:
    frequencies: np.ndarray
    densities: np.ndarray
    residual_norm: float
    undetermined: np.ndarray
    iterations: int = 0
    converged: bool = True


def quadrature_weights(freq_grid) -> np.ndarray:
    """Trapezoid weights on a one-sided grid, doubled for f > 0.

    The doubling folds the mirror image at -f into the same unknown. A
    single-point grid gets unit width.
    """
    f = np.asarray(freq_grid, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("frequency grid must be a non-empty 1-D array")
    if np.any(f < 0) or np.any(np.diff(f) <= 0):
        raise ValueError("frequency grid must be nonnegative and strictly increasing")
    if f.size == 1:
        w = np.ones(1)
    else:
        d = np.diff(f)
        w = np.zeros(f.size)
        w[:-1] += d / 2
        w[1:] += d / 2
    return np.where(f > 0, 2 * w, w)


def filter_matrix(records: Sequence[MeasurementRecord], freq_grid) -> np.ndarray:
    """M[i, j] = F_i(f_j) * w_j, the discretized forward model."""
    w = quadrature_weights(freq_grid)
    f = np.asarray(freq_grid, dtype=float)
    return np.array([filter_value(r.sequence, r.kind, f) * w for r in records])


def _lobes(values):
    """Index ranges between consecutive local minima."""
    v = np.asarray(values)
    interior = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] < v[2:])) + 1
    bounds = np.concatenate([[0], interior, [v.size - 1]])
    return list(zip(bounds[:-1], bounds[1:]))


def peak_dominance(seq: PulseSequence, kind, peak_freq: float) -> float:
    """Weight of the filter lobe at ``peak_freq`` over the next largest lobe."""
    T = seq.total_duration
    fmax = max(8 * peak_freq, 20 / T)
    f = np.arange(0, fmax, 1 / (20 * T))
    v = filter_value(seq, kind, f)
    lobes = _lobes(v)
    weights = np.array([np.trapezoid(v[a:b + 1], f[a:b + 1]) for a, b in lobes])
    # lobe holding the largest filter value within one linewidth of peak_freq
    near = np.flatnonzero(np.abs(f - peak_freq) <= 1 / T)
    if near.size == 0:
        raise ValueError("peak frequency outside the filter band")
    top = near[np.argmax(v[near])]
    idx = next(i for i, (a, b) in enumerate(lobes) if a <= top <= b)
    others = np.delete(weights, idx)
    if others.size == 0 or others.max() == 0:
        return np.inf
    return float(weights[idx] / others.max())


def invert_single_peak(record: MeasurementRecord, peak_freq: float,
                       min_dominance: float = 10.0) -> float:
    """Density at ``peak_freq`` from one measurement, value / int F df.

    Assumes the spectrum is flat across a filter with one dominant lobe; the
    lobe at ``peak_freq`` must outweigh every other lobe by ``min_dominance``.
    """
    ratio = peak_dominance(record.sequence, record.kind, peak_freq)
    if ratio < min_dominance:
        raise ValueError(
            f"filter peak at {peak_freq} Hz is not dominant "
            f"(ratio {ratio:.3g} < {min_dominance})")
    norm = filter_norm(record.sequence, record.kind)
    if not np.isfinite(norm):
        raise ValueError("filter has infinite weight (ideal pulses in the control filter)")
    return record.value / norm


def _power_iteration(a, iters=100):
    v = np.ones(a.shape[1]) / np.sqrt(a.shape[1])
    lam = 0.0
    for _ in range(iters):
        u = a.T @ (a @ v)
        lam = float(np.linalg.norm(u))
        if lam == 0:
            return 0.0
        v = u / lam
    return lam


def invert_linear(records: Sequence[MeasurementRecord], freq_grid,
                  max_iter: int = 10_000, tol: float = 1e-10) -> SpectrumEstimate:
    """Nonnegative least-squares spectrum on ``freq_grid``.

    Solves ``min ||M g - y||`` subject to ``g >= 0`` by projected gradient
    descent on column-normalized variables, with step ``1/L`` where ``L``
    bounds the largest eigenvalue of the normal matrix. Iteration stops once
    the relative change of the objective falls below ``tol``. Rows are
    weighted by inverse uncertainty when every record has one. Grid points
    that no filter sees are reported as undetermined and set to 0.
    """
    records = list(records)
    f = np.asarray(freq_grid, dtype=float)
    if not records:
        raise ValueError("no measurement records")
    kinds = {r.kind for r in records}
    if len(kinds) > 1:
        raise ValueError("all records must share one filter kind")
    if len(records) < f.size:
        raise ValueError(
            f"underdetermined: {len(records)} records for {f.size} grid points")

    m = filter_matrix(records, f)
    y = np.array([r.value for r in records])
    sig = np.array([r.uncertainty for r in records])
    row_w = 1 / sig if np.all(sig > 0) else np.ones_like(y)
    a_full = m * row_w[:, None]
    b = y * row_w

    col = np.linalg.norm(a_full, axis=0)
    undetermined = col == 0
    g = np.zeros(f.size)
    iters, converged = 0, True
    if np.any(b != 0) and np.any(~undetermined):
        a = a_full[:, ~undetermined] / col[~undetermined]
        lip = _power_iteration(a) * 1.01
        h = np.zeros(a.shape[1])
        obj = 0.5 * float(b @ b)
        floor = 1e-28 * obj
        converged = False
        for iters in range(1, max_iter + 1):
            r = a @ h - b
            h = np.maximum(0.0, h - (a.T @ r) / lip)
            r = a @ h - b
            new = 0.5 * float(r @ r)
            if abs(obj - new) <= tol * obj or new <= floor:
                converged = True
                obj = new
                break
            obj = new
        g[~undetermined] = h / col[~undetermined]
    residual = float(np.linalg.norm(m @ g - y))
    return SpectrumEstimate(f, g, residual, undetermined, iters, converged)
