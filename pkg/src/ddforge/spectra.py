"""
Two-sided noise spectral densities, overlap integrals and noise synthesis.

All densities are two-sided: the variance of the process is the integral of
the density over the whole real frequency axis. Discrete components (lines
and DC) carry their total variance in ``power``; a line at ``f0`` puts half
of it at ``+f0`` and half at ``-f0``.

Units: environment spectra (detuning noise) are in (rad/s)**2/Hz, control
spectra (relative amplitude noise) in 1/Hz.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .filters import FilterKind, FilterSamples, _filter_value_fast, filter_value, predicted_peaks
from .sequence import PulseSequence

__all__ = [
    "SpectrumKind",
    "Lorentzian",
    "Line",
    "White",
    "DC",
    "SpectralDensity",
    "ConvergenceError",
    "psd",
    "overlap",
    "overlap_samples",
    "control_comb_from_magnetic",
    "sample_noise",
]


class ConvergenceError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SpectrumKind(str, enum.Enum):
    ENVIRONMENT = "environment"
    CONTROL = "control"


_MATCHING_FILTER = {
    SpectrumKind.ENVIRONMENT: FilterKind.DEPHASING,
    SpectrumKind.CONTROL: FilterKind.CONTROL,
}


@dataclass(frozen=True)
class Lorentzian:
    """Exponentially correlated noise, density var * 2 tc / (1 + (2 pi f tc)**2)."""

    variance: float
    correlation_time: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be >= 0")
        if self.correlation_time <= 0:
            raise ValueError("correlation_time must be > 0")

    def density(self, f):
        tc = self.correlation_time
        return self.variance * 2 * tc / (1 + (2 * np.pi * f * tc) ** 2)

    def total(self):
        return self.variance

    def cutoff(self):
        # density down by 1e-6 from its DC value
        return 1e3 / (2 * np.pi * self.correlation_time)

    def tail_mass(self, f):
        return self.variance * (1 - 2 / np.pi * np.arctan(2 * np.pi * f * self.correlation_time))

    def scaled(self, c):
        return Lorentzian(self.variance * c, self.correlation_time)


@dataclass(frozen=True)
class Line:
    frequency: float
    power: float

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("line frequency must be > 0 (use DC for f = 0)")
        if self.power < 0:
            raise ValueError("line power must be >= 0")

    def total(self):
        return self.power

    def scaled(self, c):
        return Line(self.frequency, self.power * c)


@dataclass(frozen=True)
class White:
    """Flat density ``level`` on |f| <= fmax."""

    level: float
    fmax: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("white level must be >= 0")
        if self.fmax <= 0:
            raise ValueError("white band edge must be > 0")

    def density(self, f):
        return np.where(np.abs(f) <= self.fmax, self.level, 0.0)

    def total(self):
        return 2 * self.level * self.fmax

    def cutoff(self):
        return self.fmax

    def tail_mass(self, f):
        return 2 * self.level * max(0.0, self.fmax - f)

    def scaled(self, c):
        return White(self.level * c, self.fmax)


@dataclass(frozen=True)
class DC:
    """Quasi-static noise: variance ``power`` concentrated at f = 0."""

    power: float

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("DC power must be >= 0")

    def total(self):
        return self.power

    def scaled(self, c):
        return DC(self.power * c)


Component = Union[Lorentzian, Line, White, DC]
_CONTINUOUS = (Lorentzian, White)


@dataclass(frozen=True)
class SpectralDensity:
    components: tuple = ()
    kind: SpectrumKind = SpectrumKind.CONTROL

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "kind", SpectrumKind(self.kind))

    @property
    def continuous(self):
        return [c for c in self.components if isinstance(c, _CONTINUOUS)]

    @property
    def discrete(self):
        """(frequency, power) pairs of lines and DC parts."""
        out = []
        for c in self.components:
            if isinstance(c, Line):
                out.append((c.frequency, c.power))
            elif isinstance(c, DC):
                out.append((0.0, c.power))
        return out

    @property
    def variance(self) -> float:
        return float(sum(c.total() for c in self.components))

    @property
    def is_zero(self) -> bool:
        return self.variance == 0

    def scaled(self, c: float) -> "SpectralDensity":
        if c < 0:
            raise ValueError("scale factor must be >= 0")
        return SpectralDensity(tuple(x.scaled(c) for x in self.components), self.kind)

    def __add__(self, other: "SpectralDensity") -> "SpectralDensity":
        if other.kind != self.kind:
            raise ValueError("cannot add spectra of different kinds")
        return SpectralDensity(self.components + other.components, self.kind)

    def highest_frequency(self) -> float:
        """Largest line frequency or band edge, 0 if none."""
        fs = [c.frequency for c in self.components if isinstance(c, Line)]
        fs += [c.fmax for c in self.components if isinstance(c, White)]
        return max(fs, default=0.0)


def psd(spec: SpectralDensity, f):
    """Continuous part of the density at ``f``; lines are not included."""
    f = np.asarray(f, dtype=float)
    out = np.zeros(f.shape)
    for c in spec.continuous:
        out = out + c.density(f)
    return out


# ---------------------------------------------------------------------------
# overlap integrals

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _gl(func, a, b):
    """10-point Gauss-Legendre on each panel [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _GL_X
    return half * np.sum(func(x) * _GL_W, axis=1)


def _adaptive(func, breakpoints, width, epsabs, epsrel, max_rounds=40,
              max_panels=4_000_000):
    """Integrate ``func`` over the span of ``breakpoints``.

    Each interval between breakpoints is split into panels no wider than
    ``width``; panels whose whole/halves Gauss-Legendre estimates disagree are
    bisected until the error budget is met.
    """
    edges = []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        k = max(1, int(math.ceil((b - a) / width)))
        edges.append(np.linspace(a, b, k + 1))
    lo = np.concatenate([e[:-1] for e in edges])
    hi = np.concatenate([e[1:] for e in edges])
    span = breakpoints[-1] - breakpoints[0]
    done = 0.0
    for _ in range(max_rounds):
        mid = 0.5 * (lo + hi)
        whole = _gl(func, lo, hi)
        halves = _gl(func, lo, mid) + _gl(func, mid, hi)
        err = np.abs(whole - halves)
        total = done + float(np.sum(halves))
        budget = max(epsabs, epsrel * abs(total)) * (hi - lo) / span
        ok = err <= budget
        done += float(np.sum(halves[ok]))
        if ok.all():
            return done
        lo, mid, hi = lo[~ok], mid[~ok], hi[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        if lo.size > max_panels:
            break
    raise ConvergenceError(
        f"overlap quadrature did not converge ({lo.size} panels unresolved)")


def _breakpoints(seq: PulseSequence, kind: FilterKind, f_hi: float, order: int):
    pts = [0.0, f_hi]
    if seq.is_cpmg:
        pk = predicted_peaks(seq, kind, order)
        pts += [p for p in pk if 0 < p < f_hi]
    return pts


def _normalized(c, scale):
    # divide rather than multiply by 1/scale, which overflows for tiny spectra
    if isinstance(c, Lorentzian):
        return Lorentzian(c.variance / scale, c.correlation_time)
    return White(c.level / scale, c.fmax)


def _band_mass(cont, a, b):
    """Spectral mass on a <= |f| <= b, both signs."""
    return sum(c.tail_mass(a) - c.tail_mass(b) for c in cont)


def _mean_filter(seq, fkind, center, window, width):
    """Filter averaged over ``window`` around ``center``, fine structure resolved."""
    k = max(1, int(math.ceil(window / (width / 2))))
    e = np.linspace(center - window / 2, center + window / 2, k + 1)
    return float(np.sum(_gl(lambda f: _filter_value_fast(seq, fkind, f), e[:-1], e[1:]))) / window


def _envelope_tail(seq, fkind, cont, f_lo, f_cut, width, tol):
    """Integral of G F over |f| > ``f_lo`` from the local mean of F.

    Far above the pulse rate the filter is a fast oscillation under a slowly
    varying envelope, so each band of 1/8 octave contributes its spectral
    mass times the mean filter value in a window at the band center. The
    band sum stops once the remaining spectral mass times the current mean
    is below ``tol``; that bound is added as the remainder.
    """
    if len(seq) > 1:
        gap = float(np.min(np.diff(np.concatenate([[0.0], seq.centers, [seq.total_duration]]))))
    else:
        gap = seq.total_duration
    window_max = 8 / gap
    total = 0.0
    a = f_lo
    while True:
        rest = sum(c.tail_mass(a) for c in cont)
        if rest <= 0:
            return total
        b = min(a * 2 ** 0.125, f_cut) if a < f_cut else a * 2 ** 0.125
        mean = _mean_filter(seq, fkind, math.sqrt(a * b), min(b - a, window_max), width)
        if rest * mean <= tol or a >= f_cut:
            # spectrum and filter envelope both fall off: bound the remainder
            return total + rest * mean
        total += _band_mass(cont, a, b) * mean
        a = b


def overlap(spec: SpectralDensity, seq: PulseSequence, kind=None, *,
            peak_order: int = 50, epsabs: float = 1e-12,
            epsrel: float = 1e-6) -> float:
    """Overlap integral of a spectrum with the matching filter function.

    Discrete components are summed as ``power * F(f_line)``. The continuous
    part is integrated adaptively over ``[0, f_hi]`` (doubled, by evenness)
    with forced subdivision at the predicted filter peaks; the remainder above
    ``f_hi`` is estimated from the mean filter value near ``f_hi`` times the
    analytic spectral mass of the tail.

    ``epsabs`` refers to the continuous part rescaled to unit variance, so
    the result is exactly proportional to the spectrum scale.
    """
    fkind = _MATCHING_FILTER[spec.kind]
    if kind is not None and FilterKind(kind) is not fkind:
        raise ValueError(
            f"{spec.kind.value} spectrum pairs with the {fkind.value} filter, "
            f"not {FilterKind(kind).value}")

    total = 0.0
    disc = spec.discrete
    if disc:
        fl = np.array([f for f, _ in disc])
        pw = np.array([p for _, p in disc])
        total += float(np.sum(pw * filter_value(seq, fkind, fl)))

    cont = [c for c in spec.continuous if c.total() > 0]
    if not cont:
        return total

    scale = sum(c.total() for c in cont)
    cont = [_normalized(c, scale) for c in cont]
    f_cut = max(c.cutoff() for c in cont)
    width = 1.0 / seq.total_duration
    edges = [c.fmax for c in cont if isinstance(c, White)]

    def integrand(f):
        g = np.zeros(f.shape)
        for c in cont:
            g = g + c.density(f)
        return g * _filter_value_fast(seq, fkind, f)

    def band(a, b):
        pts = {a, b}
        pts.update(p for p in _breakpoints(seq, fkind, b, peak_order) if a < p < b)
        pts.update(e for e in edges if a < e < b)
        return 2 * _adaptive(integrand, np.array(sorted(pts)), width, epsabs / 2, epsrel)

    # base band covers the low-order filter structure, then a few octaves
    # until the contributions stop mattering or the spectrum is exhausted
    base = 4 * seq.rate_hz if seq.is_cpmg else 20 * width
    f_hi = min(f_cut, max(base, 20 * width))
    cont_total = band(0.0, f_hi)
    f_stop = min(f_cut, 16 * f_hi)
    while f_hi < f_stop:
        b = min(2 * f_hi, f_stop)
        part = band(f_hi, b)
        cont_total += part
        f_hi = b
        if abs(part) <= epsrel * abs(cont_total) + epsabs:
            break
    cont_total += _envelope_tail(seq, fkind, cont, f_hi, f_cut, width,
                                 epsrel * abs(cont_total) + epsabs)
    return total + scale * cont_total


def overlap_samples(spec_density, samples: FilterSamples) -> float:
    """Trapezoid overlap of a density callable with sampled filter values.

    The samples are taken to cover ``f >= 0`` and are mirrored, which is the
    entry point for externally supplied cross filters.
    """
    f = samples.frequencies
    g = spec_density(f) if callable(spec_density) else psd(spec_density, f)
    val = np.trapezoid(g * samples.values, f)
    return float(2 * val) if f[0] >= 0 else float(val)


# ---------------------------------------------------------------------------
# magnetic noise -> control noise


def control_comb_from_magnetic(line_fields: Iterable, sensitivity: float,
                               detuning: float) -> SpectralDensity:
    """Control noise lines produced by magnetic lines through Omega ~ 1/Delta.

    A detuning fluctuation dDelta changes the two-photon Rabi frequency by
    ``-dDelta / Delta`` to first order, so a magnetic line of rms ``B_rms``
    (gauss) becomes a relative-amplitude line of power
    ``(sensitivity * B_rms / Delta)**2``.

    Parameters
    ----------
    line_fields : iterable of (frequency_hz, b_rms_gauss)
    sensitivity : float
        Single-photon detuning sensitivity in Hz/G.
    detuning : float
        Mean single-photon detuning in Hz.
    """
    if detuning == 0:
        raise ValueError("detuning must be nonzero")
    comps = []
    for freq, b_rms in line_fields:
        if b_rms < 0:
            raise ValueError("B_rms must be >= 0")
        power = (sensitivity * b_rms / abs(detuning)) ** 2
        comps.append(Line(freq, power) if freq > 0 else DC(power))
    return SpectralDensity(tuple(comps), SpectrumKind.CONTROL)


# ---------------------------------------------------------------------------
# synthesis


def sample_noise(spec: SpectralDensity, dt: float, duration: float, seed) -> np.ndarray:
    """One realization of zero-mean noise with the given two-sided density.

    The continuous part is a random-phase sum of cosines on the grid
    ``j / duration`` evaluated with an inverse real FFT. Bin 0 has amplitude
    ``sqrt(2 G(0) df)``; bins ``j > 0`` stand for both ``+-f_j`` and get
    ``sqrt(4 G(f_j) df)``, so the autocovariance of the series is the
    periodized autocovariance of the target. Lines add ``sqrt(2 P) cos(...)``
    and DC adds ``sqrt(2 P) cos(phi)``.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if duration < dt:
        raise ValueError("duration must be >= dt")
    m = int(round(duration / dt))
    rng = np.random.default_rng(seed)
    x = np.zeros(m)
    disc = spec.discrete
    # line phases first so that a finer dt with the same seed reproduces the
    # same lines and the same low-frequency bins
    line_phases = rng.uniform(0, 2 * np.pi, len(disc))
    cont = spec.continuous
    if cont:
        df = 1.0 / (m * dt)
        nb = m // 2 + 1
        fj = np.arange(nb) * df
        g = psd(spec, fj)
        amp = np.sqrt(4 * g * df)
        amp[0] = np.sqrt(2 * g[0] * df)
        if m % 2 == 0:
            amp[-1] = np.sqrt(2 * g[-1] * df)
        phase = rng.uniform(0, 2 * np.pi, nb)
        coef = 0.5 * m * amp * np.exp(1j * phase)
        # irfft keeps only the real part of the self-conjugate bins
        coef[0] = m * amp[0] * np.cos(phase[0])
        if m % 2 == 0:
            coef[-1] = m * amp[-1] * np.cos(phase[-1])
        x += np.fft.irfft(coef, n=m)
    if disc:
        t = np.arange(m) * dt
        for (freq, power), phi in zip(disc, line_phases):
            x += np.sqrt(2 * power) * np.cos(2 * np.pi * freq * t + phi)
    return x
