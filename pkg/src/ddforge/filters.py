"""
Dephasing and control filter functions.

Conventions: ordinary frequency ``f`` in Hz with kernel ``exp(-2 pi i f t)``;
the dephasing filter is in s**2 and the control filter in rad**2, so that
overlaps with the matching two-sided spectra are dimensionless.

Both filters are squared moduli of Fourier integrals of piecewise elementary
functions and are evaluated in closed form. Ideal pulses reduce the dephasing
integral to a sum over the jumps of the toggling function; finite pulses are
integrated segment by segment through :func:`_window`, which is regular at
``f = 0``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .sequence import PulseSequence

__all__ = [
    "FilterKind",
    "FilterSamples",
    "filter_dephasing",
    "filter_control",
    "filter_value",
    "filter_grid",
    "predicted_peaks",
    "filter_norm",
]

# max number of complex entries per vectorized block
_BLOCK = 2 ** 21


class FilterKind(str, enum.Enum):
    DEPHASING = "dephasing"
    CONTROL = "control"


@dataclass(frozen=True)
class FilterSamples:
    kind: FilterKind
    frequencies: np.ndarray
    values: np.ndarray
    sequence_label: str = ""

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if f.shape != v.shape:
            raise ValueError("frequencies and values differ in length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", FilterKind(self.kind))


def _window(f, a, b):
    """Integral of exp(-2 pi i f t) over [a, b], broadcasting f against a, b."""
    return np.exp(-1j * np.pi * f * (a + b)) * (b - a) * np.sinc(f * (b - a))


def _blocks(f, width):
    step = max(1, _BLOCK // max(width, 1))
    for i in range(0, f.size, step):
        yield slice(i, i + step)


def _split(a):
    c = 134217729.0 * a  # 2**27 + 1
    hi = c - (c - a)
    return hi, a - hi


def _cycles(f, t):
    """f * t reduced modulo 1, carrying the rounding error of the product.

    Filters near their zeros are differences of large phasor sums, so the
    phase must be accurate to a few ulps of the reduced value rather than of
    f * t itself.
    """
    p = f * t
    fh, fl = _split(f)
    th, tl = _split(t)
    err = ((fh * th - p) + fh * tl + fl * th) + fl * tl
    return (p - np.round(p)) + err


def _phasors(f, times, fast=False):
    """exp(-2 pi i f t_k) as an (F, K) matrix.

    With ``fast`` uniformly spaced times use a running product: several
    times cheaper, with rounding that is negligible inside integrals but
    not near filter zeros.
    """
    k = times.size
    if fast and k >= 3:
        step = times[1] - times[0]
        if np.all(np.abs(np.diff(times) - step) <= 1e-12 * times[-1]):
            m = np.empty((f.size, k), dtype=complex)
            m[:, 0] = np.exp(-2j * np.pi * f * times[0])
            m[:, 1:] = np.exp(-2j * np.pi * f[:, None] * step)
            return np.cumprod(m, axis=1)
    return np.exp(-2j * np.pi * _cycles(f[:, None], times))


def _dephasing_amplitude(seq: PulseSequence, f: np.ndarray, fast=False) -> np.ndarray:
    if seq.is_ideal and len(seq):
        return _dephasing_amplitude_ideal(seq, f, fast)
    return _dephasing_amplitude_segments(seq, f)


def _dephasing_amplitude_ideal(seq, f, fast=False):
    # integrate the +-1 toggling function by parts: only the jumps remain
    T = seq.total_duration
    y = np.cos(np.concatenate([[0.0], np.cumsum(seq.signs * seq.areas)]))
    jumps = y[:-1] - y[1:]
    out = np.empty(f.shape, dtype=complex)
    small = np.abs(f) * T < 1e-2
    if np.any(small):
        out[small] = _dephasing_amplitude_segments(seq, f[small])
    big = np.flatnonzero(~small)
    for sl in _blocks(big, len(seq)):
        fb = f[big[sl]]
        num = (np.sum(jumps * _phasors(fb, seq.centers, fast), axis=1)
               + y[-1] * np.exp(-2j * np.pi * _cycles(fb, T)) - y[0])
        out[big[sl]] = num / (-2j * np.pi * fb)
    return out


def _dephasing_amplitude_segments(seq: PulseSequence, f: np.ndarray) -> np.ndarray:
    T = seq.total_duration
    n = len(seq)
    # cumulative signed area before each free segment
    cum = np.concatenate([[0.0], np.cumsum(seq.signs * seq.areas)])
    seg_a = np.concatenate([[0.0], seq.ends])
    seg_b = np.concatenate([seq.starts, [T]])
    seg_y = np.cos(cum)
    finite = seq.durations > 0
    p_a, p_b = seq.starts[finite], seq.ends[finite]
    p_phase = cum[:-1][finite]
    p_rate = (seq.signs * seq.areas)[finite] / seq.durations[finite]

    out = np.empty(f.shape, dtype=complex)
    for sl in _blocks(f, n + 1 + 2 * p_a.size):
        ff = f[sl, None]
        amp = np.sum(seg_y * _window(ff, seg_a, seg_b), axis=-1)
        if p_a.size:
            # cos(phase + rate (t - a)) = (e^{i..} + e^{-i..}) / 2
            shift = p_rate / (2 * np.pi)
            up = np.exp(1j * (p_phase - p_rate * p_a)) * _window(ff - shift, p_a, p_b)
            down = np.exp(-1j * (p_phase - p_rate * p_a)) * _window(ff + shift, p_a, p_b)
            amp = amp + 0.5 * np.sum(up + down, axis=-1)
        out[sl] = amp
    return out


def _control_amplitude(seq: PulseSequence, f: np.ndarray, fast=False) -> np.ndarray:
    out = np.zeros(f.shape, dtype=complex)
    if not len(seq):
        return out
    d = seq.durations
    signed = seq.signs * seq.areas
    for sl in _blocks(f, len(seq)):
        ff = f[sl, None]
        # rectangular pulse: (area / d) * window = area * phasor * sinc(f d)
        weight = signed * np.sinc(ff * d) if np.any(d > 0) else signed
        out[sl] = np.sum(weight * _phasors(f[sl], seq.centers, fast), axis=1)
    return out


def filter_dephasing(seq: PulseSequence, f):
    """Dephasing filter |int_0^T exp(-2 pi i f t) cos(A(t)) dt|**2 in s**2."""
    f = np.asarray(f, dtype=float)
    amp = _dephasing_amplitude(seq, f.ravel()).reshape(f.shape)
    return np.abs(amp) ** 2


def filter_control(seq: PulseSequence, f):
    """Control filter |int_0^T exp(-2 pi i f t) Omega_0(t) dt|**2 in rad**2."""
    f = np.asarray(f, dtype=float)
    amp = _control_amplitude(seq, f.ravel()).reshape(f.shape)
    return np.abs(amp) ** 2


def filter_value(seq: PulseSequence, kind, f):
    kind = FilterKind(kind)
    if kind is FilterKind.DEPHASING:
        return filter_dephasing(seq, f)
    return filter_control(seq, f)


def _filter_value_fast(seq: PulseSequence, kind, f):
    """filter_value for integrands: same values up to rounding near zeros."""
    f = np.asarray(f, dtype=float)
    if FilterKind(kind) is FilterKind.DEPHASING:
        amp = _dephasing_amplitude(seq, f.ravel(), fast=True)
    else:
        amp = _control_amplitude(seq, f.ravel(), fast=True)
    return (np.abs(amp) ** 2).reshape(f.shape)


def filter_grid(seq: PulseSequence, kind, fmin: float, fmax: float,
                points: int) -> FilterSamples:
    """Evaluate a filter on ``points`` uniformly spaced frequencies."""
    if not fmin < fmax:
        raise ValueError("fmin must be < fmax")
    if points < 2:
        raise ValueError("points must be >= 2")
    f = np.linspace(fmin, fmax, int(points))
    return FilterSamples(FilterKind(kind), f, filter_value(seq, kind, f), seq.label)


def predicted_peaks(seq: PulseSequence, kind, max_order: int) -> np.ndarray:
    """Peak frequencies of a CPMG-n filter up to ``max_order``.

    Dephasing: odd harmonics of f_DD/2. Control: odd harmonics of f_DD/n for
    n >= 2; for plain CPMG, DC followed by harmonics of f_DD.
    """
    if not seq.is_cpmg:
        raise ValueError(f"sequence {seq.label!r} is not a CPMG-n sequence")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    kind = FilterKind(kind)
    m = np.arange(1, max_order + 1)
    rate = seq.rate_hz
    if kind is FilterKind.DEPHASING:
        return (2 * m - 1) * rate / 2
    if seq.cycle_n == 0:
        return (m - 1) * rate
    return (2 * m - 1) * rate / seq.cycle_n


def filter_norm(seq: PulseSequence, kind) -> float:
    """Integral of the filter over all frequencies, by Parseval.

    Infinite for the control filter of delta pulses.
    """
    kind = FilterKind(kind)
    if kind is FilterKind.CONTROL:
        if seq.has_delta_pulses:
            return np.inf
        return float(np.sum(seq.areas ** 2 / seq.durations))
    # free segments contribute cos^2(cum) * length; inside a pulse the
    # average of cos^2 over a linear phase ramp is closed form
    cum = np.concatenate([[0.0], np.cumsum(seq.signs * seq.areas)])
    seg = np.concatenate([seq.starts, [seq.total_duration]]) - np.concatenate([[0.0], seq.ends])
    total = np.sum(np.cos(cum) ** 2 * seg)
    finite = seq.durations > 0
    if np.any(finite):
        a0 = cum[:-1][finite]
        a1 = cum[1:][finite]
        d = seq.durations[finite]
        # int cos^2 = d/2 + d (sin 2a1 - sin 2a0) / (4 (a1 - a0))
        total += np.sum(d / 2 + d * (np.sin(2 * a1) - np.sin(2 * a0)) / (4 * (a1 - a0)))
    return float(total)
