"""
Pi-pulse control sequences.

A :class:`PulseSequence` is an ordered set of rectangular (or ideal delta)
pulses about the +x / -x axis together with a total duration ``T``. It fixes
the noiseless control field ``Omega_0(t)`` used by the filter functions and by
the Monte Carlo oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "Pulse",
    "PulseSequence",
    "build_cpmg",
    "spin_echo",
    "free_evolution",
    "control_amplitude",
    "toggling_function",
    "accumulated_area",
    "with_pulse_duration",
]

# relative slack for floating point comparisons of pulse windows
_EPS = 1e-12


@dataclass(frozen=True)
class Pulse:
    """A single rectangular pulse.

    ``duration == 0`` denotes an ideal delta pulse. ``sign`` selects the drive
    phase (+1 for pi_x, -1 for pi_-x).
    """

    center_time: float
    duration: float = 0.0
    sign: int = 1
    area: float = np.pi

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"pulse duration must be >= 0, got {self.duration}")
        if self.area <= 0:
            raise ValueError(f"pulse area must be > 0, got {self.area}")
        if self.sign not in (1, -1):
            raise ValueError(f"pulse sign must be +1 or -1, got {self.sign}")
        if self.start < -_EPS * max(1.0, abs(self.center_time)):
            raise ValueError("pulse starts before t = 0")

    @property
    def start(self) -> float:
        return self.center_time - self.duration / 2

    @property
    def end(self) -> float:
        return self.center_time + self.duration / 2

    @property
    def amplitude(self) -> float:
        """Signed Rabi frequency inside the pulse (rad/s)."""
        if self.duration == 0:
            raise ValueError("a delta pulse has no pointwise amplitude")
        return self.sign * self.area / self.duration


@dataclass(frozen=True)
class PulseSequence:
    """Ordered, non-overlapping pulses inside ``[0, total_duration]``.

    ``cycle_n`` and ``rate_hz`` are set for members of the CPMG-n family
    (``cycle_n == 0`` is plain CPMG); they are ``None`` otherwise.
    """

    pulses: tuple = ()
    total_duration: float = 0.0
    label: str = ""
    cycle_n: Optional[int] = None
    rate_hz: Optional[float] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        T = self.total_duration
        if T <= 0:
            raise ValueError(f"total duration must be > 0, got {T}")
        tol = _EPS * max(1.0, T)
        prev = None
        for p in self.pulses:
            if p.end > T + tol:
                raise ValueError(f"pulse at t={p.center_time} extends past T={T}")
            if prev is not None:
                if p.center_time <= prev.center_time:
                    raise ValueError("pulse centers must be strictly increasing")
                if p.start < prev.end - tol:
                    raise ValueError(
                        f"pulses at t={prev.center_time} and t={p.center_time} overlap")
            prev = p

    def __len__(self):
        return len(self.pulses)

    def _arr(self, name):
        if name not in self._cache:
            self._cache[name] = np.array([getattr(p, name) for p in self.pulses], dtype=float)
        return self._cache[name]

    @property
    def centers(self) -> np.ndarray:
        return self._arr("center_time")

    @property
    def durations(self) -> np.ndarray:
        return self._arr("duration")

    @property
    def signs(self) -> np.ndarray:
        return self._arr("sign")

    @property
    def areas(self) -> np.ndarray:
        return self._arr("area")

    @property
    def starts(self) -> np.ndarray:
        return self.centers - self.durations / 2

    @property
    def ends(self) -> np.ndarray:
        return self.centers + self.durations / 2

    @property
    def has_delta_pulses(self) -> bool:
        return bool(np.any(self.durations == 0))

    @property
    def is_ideal(self) -> bool:
        """True if every pulse is a delta pulse (or there are no pulses)."""
        return bool(np.all(self.durations == 0))

    @property
    def is_cpmg(self) -> bool:
        return self.cycle_n is not None and self.rate_hz is not None


def build_cpmg(n: int, pulse_rate: float, num_pulses: int,
               pulse_duration: float = 0.0) -> PulseSequence:
    """Build a CPMG-n sequence.

    Pulse ``k`` is centered at ``(k + 1/2) / pulse_rate`` and the sequence
    lasts ``num_pulses / pulse_rate``. The drive phase flips after every
    ``n/2`` pulses; ``n = 0`` gives plain CPMG with all signs positive.

    Parameters
    ----------
    n : int
        Phase cycle, an even number or 0.
    pulse_rate : float
        Pulse repetition rate f_DD in Hz.
    num_pulses : int
        Number of pi pulses N >= 1.
    pulse_duration : float
        Rectangular pulse length in seconds, 0 for ideal pulses.
    """
    if n < 0 or n % 2:
        raise ValueError(f"CPMG phase cycle n must be even (or 0), got {n}")
    if num_pulses < 1:
        raise ValueError(f"num_pulses must be >= 1, got {num_pulses}")
    if pulse_rate <= 0:
        raise ValueError(f"pulse_rate must be > 0, got {pulse_rate}")
    if pulse_duration < 0:
        raise ValueError("pulse_duration must be >= 0")
    if pulse_duration >= 1 / pulse_rate:
        raise ValueError(
            f"pulse_duration {pulse_duration} s overlaps at rate {pulse_rate} Hz")
    half = n // 2
    pulses = []
    for k in range(num_pulses):
        sign = 1 if half == 0 or (k // half) % 2 == 0 else -1
        pulses.append(Pulse((k + 0.5) / pulse_rate, pulse_duration, sign))
    label = f"CPMG-{n}" if n else "CPMG"
    label = f"{label} {pulse_rate:g} Hz x{num_pulses}"
    return PulseSequence(tuple(pulses), num_pulses / pulse_rate, label,
                         cycle_n=n, rate_hz=float(pulse_rate))


def spin_echo(total_duration: float, pulse_duration: float = 0.0) -> PulseSequence:
    """Single pi pulse at ``T/2``."""
    seq = build_cpmg(0, 1 / total_duration, 1, pulse_duration)
    return replace(seq, label=f"echo {total_duration:g} s")


def free_evolution(total_duration: float) -> PulseSequence:
    return PulseSequence((), total_duration, f"free {total_duration:g} s")


def with_pulse_duration(seq: PulseSequence, duration: float) -> PulseSequence:
    """Return a copy where delta pulses are widened to ``duration``."""
    if not seq.has_delta_pulses:
        return seq
    pulses = tuple(p if p.duration > 0 else replace(p, duration=duration)
                   for p in seq.pulses)
    return replace(seq, pulses=pulses)


def accumulated_area(seq: PulseSequence, t) -> np.ndarray:
    """Signed pulse area integrated from 0 to ``t``.

    Delta pulses count as passed for ``t >= center_time``.
    """
    t = np.asarray(t, dtype=float)
    if not len(seq):
        return np.zeros_like(t)
    tt = t[..., None]
    d = seq.durations
    frac = np.where(d > 0,
                    np.clip((tt - seq.starts) / np.where(d > 0, d, 1.0), 0.0, 1.0),
                    (tt >= seq.centers).astype(float))
    return np.sum(seq.signs * seq.areas * frac, axis=-1)


def toggling_function(seq: PulseSequence, t) -> np.ndarray:
    """cos of the accumulated pulse area; +-1 between pi pulses."""
    return np.cos(accumulated_area(seq, t))


def control_amplitude(seq: PulseSequence, t) -> np.ndarray:
    """Noiseless control field Omega_0(t) in rad/s."""
    if seq.has_delta_pulses:
        raise ValueError("control amplitude is undefined for delta pulses")
    t = np.asarray(t, dtype=float)
    if not len(seq):
        return np.zeros_like(t)
    tt = t[..., None]
    inside = (tt >= seq.starts) & (tt <= seq.ends)
    return np.sum(np.where(inside, seq.signs * seq.areas / seq.durations, 0.0), axis=-1)
