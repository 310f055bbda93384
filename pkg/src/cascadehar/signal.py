"""Raw multichannel segments, activity labels, windowing and decimation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, RateError


class IntensityClass(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @classmethod
    def parse(cls, value: str | int | IntensityClass) -> IntensityClass:
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise DomainError(f"unknown intensity class {value!r}") from None
        return cls(value)


@dataclass(frozen=True)
class ActivityLabel:
    id: int
    name: str
    intensity: IntensityClass


def round_half_up(x) -> int:
    """Round to the nearest integer, halves away from -inf. Exact for Fractions."""
    q = Fraction(x)
    return int((2 * q.numerator + q.denominator) // (2 * q.denominator))


def _as_duration(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**6)
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class Segment:
    """One fixed-duration window of samples, rows are time steps.

    ``duration_s`` defaults to ``rows / rate``. It is carried explicitly so that
    decimation to a rate that does not divide the source rate keeps the
    nominal window length (a 5 s window is 60 rows at 12 Hz).
    """

    data: np.ndarray
    rate: int
    duration_s: Fraction = field(default=None)

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise DomainError(f"segment data must be 2-D with >= 1 column, got {data.shape}")
        if int(self.rate) != self.rate or self.rate <= 0:
            raise DomainError(f"sampling rate must be a positive integer, got {self.rate}")
        if not np.all(np.isfinite(data)):
            raise DomainError("segment contains non-finite samples")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rate", int(self.rate))
        if self.duration_s is None:
            duration = Fraction(data.shape[0], self.rate)
        else:
            duration = _as_duration(self.duration_s)
        if duration <= 0:
            raise DomainError("segment duration must be positive")
        if round_half_up(duration * self.rate) != data.shape[0]:
            raise DomainError(
                f"{data.shape[0]} rows inconsistent with {self.rate} Hz x {float(duration)} s"
            )
        object.__setattr__(self, "duration_s", duration)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Segment):
            return NotImplemented
        return (
            self.rate == other.rate
            and self.duration_s == other.duration_s
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None


@dataclass(frozen=True)
class LabeledSegment:
    segment: Segment
    label: ActivityLabel


def decimation_indices(n_source: int, source_hz: int, target_hz: int, n_target: int) -> np.ndarray:
    """Row indices selected when reducing ``source_hz`` to ``target_hz``.

    Output row j takes input row round(j * source / target), clamped to the
    last input row. Integer arithmetic keeps ties deterministic (half up).
    """
    j = np.arange(n_target, dtype=np.int64)
    idx = (2 * j * source_hz + target_hz) // (2 * target_hz)
    return np.minimum(idx, n_source - 1)


def decimate(seg: Segment, target: int) -> Segment:
    if target <= 0:
        raise DomainError(f"target rate must be positive, got {target}")
    if target > seg.rate:
        raise RateError(f"cannot derive {target} Hz from a {seg.rate} Hz segment")
    if target == seg.rate:
        return seg
    n_target = round_half_up(seg.duration_s * target)
    if n_target < 1:
        raise DomainError(f"{float(seg.duration_s)} s at {target} Hz yields no samples")
    idx = decimation_indices(seg.n_rows, seg.rate, target, n_target)
    return Segment(seg.data[idx], target, seg.duration_s)


def segment_stream(samples, rate: int, window_s) -> list[Segment]:
    """Cut a continuous recording into consecutive non-overlapping windows.

    A trailing partial window is dropped.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        return []
    if samples.ndim == 1:
        samples = samples[:, None]
    window = _as_duration(window_s) * rate
    if window.denominator != 1 or window <= 0:
        raise DomainError(f"window of {float(window_s)} s is not a whole number of samples at {rate} Hz")
    n = int(window)
    return [
        Segment(samples[start:start + n], rate, _as_duration(window_s))
        for start in range(0, samples.shape[0] - n + 1, n)
    ]
