"""Time-domain statistical features grouped into three cost levels.

Each feature is computed independently on every channel of a segment and the
results are concatenated channel-major::

    [ch0:f0, ch0:f1, ..., ch1:f0, ch1:f1, ...]
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .signal import Segment


class FeatureId(enum.Enum):
    AMP = "AMP"          # peak magnitude, max |x|
    MED = "MED"
    MNVALUE = "MNVALUE"
    MAX = "MAX"
    MIN = "MIN"
    P2P = "P2P"
    STD = "STD"          # population (1/n)
    RMS = "RMS"
    S2E = "S2E"          # last sample minus first sample


class FeatureLevel(enum.Enum):
    L1 = 1
    L2 = 2
    L3 = 3

    @property
    def feature_set(self) -> tuple[FeatureId, ...]:
        return _LEVEL_FEATURES[self]

    @property
    def size(self) -> int:
        return len(_LEVEL_FEATURES[self])

    @classmethod
    def parse(cls, value) -> FeatureLevel:
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise DomainError(f"unknown feature level {value!r}") from None
        return cls(value)


_LEVEL_FEATURES = {
    FeatureLevel.L1: (FeatureId.AMP,),
    FeatureLevel.L2: (FeatureId.AMP, FeatureId.MNVALUE, FeatureId.STD),
    FeatureLevel.L3: tuple(FeatureId),
}


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    level: FeatureLevel
    channel_count: int

    def __post_init__(self):
        if len(self.values) != self.channel_count * self.level.size:
            raise DomainError(
                f"feature vector of length {len(self.values)} does not match "
                f"{self.channel_count} channels x {self.level.size} features"
            )

    def names(self) -> list[str]:
        return [
            f"ch{c}:{f.value}"
            for c in range(self.channel_count)
            for f in self.level.feature_set
        ]


def _check_channel(channel) -> np.ndarray:
    x = np.asarray(channel, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("feature input must be a non-empty 1-D channel")
    if not np.all(np.isfinite(x)):
        raise DomainError("feature input contains non-finite samples")
    return x


def _column_stats(data: np.ndarray, features) -> np.ndarray:
    """Vectorized features over the columns of ``data``; shape (len(features), channels)."""
    out = np.empty((len(features), data.shape[1]))
    for i, fid in enumerate(features):
        if fid is FeatureId.AMP:
            out[i] = np.max(np.abs(data), axis=0)
        elif fid is FeatureId.MED:
            out[i] = np.median(data, axis=0)
        elif fid is FeatureId.MNVALUE:
            out[i] = np.mean(data, axis=0)
        elif fid is FeatureId.MAX:
            out[i] = np.max(data, axis=0)
        elif fid is FeatureId.MIN:
            out[i] = np.min(data, axis=0)
        elif fid is FeatureId.P2P:
            out[i] = np.max(data, axis=0) - np.min(data, axis=0)
        elif fid is FeatureId.STD:
            out[i] = np.std(data, axis=0)
        elif fid is FeatureId.RMS:
            out[i] = np.sqrt(np.mean(data * data, axis=0))
        elif fid is FeatureId.S2E:
            out[i] = data[-1] - data[0]
        else:  # pragma: no cover
            raise DomainError(f"unknown feature {fid}")
    return out


def compute_feature(fid: FeatureId, channel) -> float:
    x = _check_channel(channel)
    return float(_column_stats(x[:, None], (FeatureId(fid),))[0, 0])


def extract(seg: Segment, level: FeatureLevel) -> FeatureVector:
    level = FeatureLevel.parse(level)
    stats = _column_stats(seg.data, level.feature_set)
    # (features, channels) -> channel-major flat vector
    values = stats.T.reshape(-1)
    return FeatureVector(values, level, seg.n_channels)


def feature_op_count(level: FeatureLevel, seg: Segment) -> int:
    """Unit-cost instruction count: one op per sample per feature per channel."""
    return FeatureLevel.parse(level).size * seg.n_channels * seg.n_rows
