"""Dataset ingestion and the synthetic activity generator.

On-disk layout (one directory per activity, one text file per segment)::

    root/
      sitting/   000.txt 001.txt ...
      running/   000.txt ...

Each file holds one segment: a row per time step, a column per channel,
values separated by commas and/or whitespace. Blank lines and lines starting
with ``#`` are ignored.

Synthetic model, per channel c of one segment::

    x_c(t) = offset_c + amplitude * sin(2 pi f t + phase_c) + U(-noise, noise)

with the phase drawn uniformly per segment and channel.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cascade import DEFAULT_LABELS, DEFAULT_RATES
from ..errors import ConfigError, IngestionError
from ..signal import IntensityClass, LabeledSegment, Segment

log = logging.getLogger(__name__)

_SEP = re.compile(r"[,\s]+")


@dataclass(frozen=True)
class ActivityProfile:
    amplitude: float
    frequency_hz: float
    offsets: tuple[float, ...]

    def amp_band(self, rate: int, window_s: float, noise: float) -> tuple[np.ndarray, np.ndarray]:
        """Guaranteed per-channel range of the AMP feature at ``rate``, for any phase.

        The sampled phases of the sinusoid leave gaps of at most ``g`` cycles,
        so some sample lies within ``g/2`` cycles of the crest on the offset's side.
        """
        offsets = np.abs(np.asarray(self.offsets, dtype=float))
        hi = offsets + self.amplitude + noise
        n = int(round(rate * window_s))
        cycles = np.sort((self.frequency_hz * np.arange(n) / rate) % 1.0)
        gap = max(np.max(np.diff(cycles), initial=0.0), 1.0 - cycles[-1] + cycles[0])
        crest = self.amplitude * math.cos(math.pi * gap) if gap < 1.0 else 0.0
        lo = np.maximum(offsets + max(crest, 0.0) - noise, 0.0)
        return lo, hi


DEFAULT_PROFILES = {
    # identical peak magnitude; only the sign of the mean tells them apart
    "sitting": ActivityProfile(0.05, 0.3, (0.3, 0.0, 0.0)),
    "standing": ActivityProfile(0.05, 0.3, (-0.3, 0.0, 0.0)),
    "walking_parking_lot": ActivityProfile(1.0, 1.6, (0.3, 0.0, 0.0)),
    "walking_treadmill": ActivityProfile(1.0, 2.0, (0.0, 0.3, 0.0)),
    "running": ActivityProfile(2.5, 2.4, (0.5, 0.0, 0.0)),
    "exercising": ActivityProfile(2.0, 1.2, (0.0, 0.5, 0.0)),
    "jumping": ActivityProfile(3.0, 2.0, (0.0, 0.0, 0.8)),
}


@dataclass(frozen=True)
class SynthParams:
    profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    segments_per_activity: int = 60
    noise: float = 0.05
    rate: int = 25
    window_s: float = 5
    require_separable: bool = True

    @property
    def channels(self) -> int:
        return len(next(iter(self.profiles.values())).offsets)

    @classmethod
    def from_dict(cls, record: dict, labels=DEFAULT_LABELS) -> SynthParams:
        profiles = dict(DEFAULT_PROFILES)
        for name, p in record.get("profiles", {}).items():
            profiles[name] = ActivityProfile(float(p["amplitude"]), float(p["frequency_hz"]), tuple(map(float, p["offsets"])))
        missing = [lab.name for lab in labels if lab.name not in profiles]
        if missing:
            raise ConfigError(f"no synthetic profile for activities {missing}")
        return cls(
            profiles={lab.name: profiles[lab.name] for lab in labels},
            segments_per_activity=int(record.get("segments_per_activity", 60)),
            noise=float(record.get("noise", 0.05)),
            rate=int(record.get("rate", 25)),
            window_s=record.get("window_s", 5),
            require_separable=bool(record.get("require_separable", True)),
        )

    def to_dict(self) -> dict:
        return {
            "segments_per_activity": self.segments_per_activity,
            "noise": self.noise,
            "require_separable": self.require_separable,
            "profiles": {
                name: {"amplitude": p.amplitude, "frequency_hz": p.frequency_hz, "offsets": list(p.offsets)}
                for name, p in self.profiles.items()
            },
        }


def render(profile: ActivityProfile, phases, rate: int, window_s, noise=None) -> Segment:
    """Noise-free sinusoid per channel, plus an optional additive noise matrix."""
    n = int(round(rate * window_s))
    t = np.arange(n)[:, None] / rate
    data = np.asarray(profile.offsets) + profile.amplitude * np.sin(
        2 * np.pi * profile.frequency_hz * t + np.asarray(phases)[None, :]
    )
    if noise is not None:
        data = data + noise
    return Segment(data, rate, window_s)


def check_separable(params: SynthParams, labels, rates=DEFAULT_RATES) -> None:
    """Raise ConfigError unless the intensity gates are AMP-separable by construction."""
    def separable(pos, neg, rate):
        lo_neg = hi_pos = None
        for name in pos:
            _, hi = params.profiles[name].amp_band(rate, params.window_s, params.noise)
            hi_pos = hi if hi_pos is None else np.maximum(hi_pos, hi)
        for name in neg:
            lo, _ = params.profiles[name].amp_band(rate, params.window_s, params.noise)
            lo_neg = lo if lo_neg is None else np.minimum(lo_neg, lo)
        if hi_pos is None or lo_neg is None:
            return True
        return bool(np.any(hi_pos < lo_neg))

    by_class = {c: [lab.name for lab in labels if lab.intensity == c] for c in IntensityClass}
    low, med, high = (by_class[c] for c in IntensityClass)
    if not separable(low, med + high, rates[IntensityClass.LOW]):
        raise ConfigError("synthetic AMP bands of low and higher intensities overlap at the low rate")
    if not separable(med, high, rates[IntensityClass.MEDIUM]):
        raise ConfigError("synthetic AMP bands of medium and high intensities overlap at the medium rate")
    for cls, names in by_class.items():
        seen = {}
        for name in names:
            p = params.profiles[name]
            key = (p.amplitude, p.offsets)
            if key in seen:
                raise ConfigError(f"{name} and {seen[key]} are indistinguishable by mean/spread")
            seen[key] = name


def synth(params: SynthParams, seed: int, labels=DEFAULT_LABELS, rates=DEFAULT_RATES) -> list[LabeledSegment]:
    channel_counts = {len(p.offsets) for p in params.profiles.values()}
    if len(channel_counts) != 1:
        raise ConfigError("all synthetic profiles must have the same number of channels")
    if params.require_separable:
        check_separable(params, labels, rates)
    rng = np.random.default_rng(seed)
    n_rows = int(round(params.rate * params.window_s))
    out = []
    for label in labels:
        profile = params.profiles[label.name]
        c = len(profile.offsets)
        for _ in range(params.segments_per_activity):
            phases = rng.uniform(0.0, 2 * np.pi, size=c)
            noise = rng.uniform(-params.noise, params.noise, size=(n_rows, c))
            out.append(LabeledSegment(render(profile, phases, params.rate, params.window_s, noise), label))
    return out


def parse_segment_file(path: Path) -> np.ndarray:
    rows = []
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(path, f"unreadable: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in _SEP.split(line) if tok]
        except ValueError as exc:
            raise IngestionError(path, f"line {lineno}: non-numeric token ({exc})") from None
        if rows and len(row) != len(rows[0]):
            raise IngestionError(path, f"line {lineno}: ragged row ({len(row)} columns, expected {len(rows[0])})")
        rows.append(row)
    if not rows:
        raise IngestionError(path, "no samples")
    data = np.asarray(rows)
    if not np.all(np.isfinite(data)):
        raise IngestionError(path, "non-finite sample")
    return data


def ingest(root, labels=DEFAULT_LABELS, rate: int = 25, window_s=5, label_dirs: dict | None = None) -> list[LabeledSegment]:
    """Read every segment file under ``root``; directories map to labels by name."""
    root = Path(root)
    if not root.is_dir():
        raise IngestionError(root, "dataset root is not a directory")
    by_name = {lab.name: lab for lab in labels}
    dir_to_label = dict(label_dirs or {})
    expected_rows = int(round(rate * window_s))
    channels = None
    out = []
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not subdirs:
        log.warning("dataset %s contains no activity directories", root)
    for sub in subdirs:
        name = dir_to_label.get(sub.name, sub.name)
        if name not in by_name:
            log.warning("skipping %s: no activity label named %r", sub, name)
            continue
        files = sorted(p for p in sub.iterdir() if p.is_file() and not p.name.startswith("."))
        if not files:
            log.warning("activity directory %s is empty", sub)
        for path in files:
            data = parse_segment_file(path)
            if data.shape[0] != expected_rows:
                raise IngestionError(path, f"{data.shape[0]} rows, expected {expected_rows} ({rate} Hz x {window_s} s)")
            if channels is None:
                channels = data.shape[1]
            elif data.shape[1] != channels:
                raise IngestionError(path, f"{data.shape[1]} channels, dataset has {channels}")
            out.append(LabeledSegment(Segment(data, rate, window_s), by_name[name]))
    return out


def write_dataset(segments, root) -> list[Path]:
    """Write segments in the ingestible layout; values round-trip exactly."""
    root = Path(root)
    counters: dict[str, int] = {}
    written = []
    for ls in segments:
        i = counters.get(ls.label.name, 0)
        counters[ls.label.name] = i + 1
        d = root / ls.label.name
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{i:04d}.txt"
        np.savetxt(path, ls.segment.data, fmt="%.17g")
        written.append(path)
    return written
