"""Cascade of binary Pegasos classifiers with rate and feature escalation.

Classification of one full-rate segment::

    gate_low     @ low rate,    gate level      -> Low?  -> low leaves    @ low rate
    gate_medium  @ medium rate, gate level      -> Med?  -> medium leaves @ medium rate
                                                   else  -> high leaves   @ high rate

Every stage works on the segment decimated to the stage rate; sensing and
feature extraction are charged to the branch the segment is routed to.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from .costmodel import CostLedger
from .errors import DomainError, SpecError
from .features import FeatureLevel, extract
from .pegasos import PegasosConfig, PegasosModel
from .signal import ActivityLabel, IntensityClass, LabeledSegment, Segment, decimate

ONE_VS_REST = "one-vs-rest"
PAIRWISE = "pairwise"

GATE_LOW = "gate_low"
GATE_MEDIUM = "gate_medium_vs_high"

DEFAULT_RATES = {IntensityClass.LOW: 5, IntensityClass.MEDIUM: 12, IntensityClass.HIGH: 25}
DEFAULT_GATE_LEVELS = {IntensityClass.LOW: FeatureLevel.L1, IntensityClass.MEDIUM: FeatureLevel.L2}
DEFAULT_LEAF_LEVELS = {
    IntensityClass.LOW: FeatureLevel.L2,
    IntensityClass.MEDIUM: FeatureLevel.L3,
    IntensityClass.HIGH: FeatureLevel.L3,
}

DEFAULT_LABELS = (
    ActivityLabel(0, "sitting", IntensityClass.LOW),
    ActivityLabel(1, "standing", IntensityClass.LOW),
    ActivityLabel(2, "walking_parking_lot", IntensityClass.MEDIUM),
    ActivityLabel(3, "walking_treadmill", IntensityClass.MEDIUM),
    ActivityLabel(4, "running", IntensityClass.HIGH),
    ActivityLabel(5, "exercising", IntensityClass.HIGH),
    ActivityLabel(6, "jumping", IntensityClass.HIGH),
)


@dataclass(frozen=True)
class NodeSpec:
    id: str
    rate: int
    level: FeatureLevel
    positives: frozenset[int]
    negatives: frozenset[int]

    @property
    def scope(self) -> frozenset[int]:
        return self.positives | self.negatives

    def target(self, label_id: int) -> int:
        return 1 if label_id in self.positives else -1


@dataclass(frozen=True)
class ModelParams:
    lam: float = 0.01
    k: int = 10
    use_projection: bool = False
    bias: float | None = 1.0     # constant feature appended to every input
    standardize: bool = True     # running per-node z-scoring of features

    def __post_init__(self):
        # same checks as each node's PegasosConfig, surfaced at construction
        PegasosConfig(dim=1, lam=self.lam, k=self.k, use_projection=self.use_projection)


@dataclass(frozen=True)
class CascadeSpec:
    labels: tuple[ActivityLabel, ...]
    rates: dict
    gate_low: NodeSpec
    gate_medium: NodeSpec
    discriminators: dict
    leaf_modes: dict
    leaf_levels: dict

    def __post_init__(self):
        ids = [lab.id for lab in self.labels]
        if len(set(ids)) != len(ids):
            raise SpecError("activity label ids must be unique")
        r = [self.rates[c] for c in IntensityClass]
        if not (0 < r[0] < r[1] < r[2]):
            raise SpecError(f"rates must be strictly increasing low -> high, got {r}")
        for cls in IntensityClass:
            members = self.members(cls)
            if not members:
                raise SpecError(f"intensity class {cls.name} has no activity labels")
            nodes = self.discriminators.get(cls, ())
            for node in nodes:
                if not node.scope <= members:
                    raise SpecError(f"node {node.id} covers labels outside {cls.name}")
                if node.rate != self.rates[cls]:
                    raise SpecError(f"node {node.id} must run at the {cls.name} rate")
            if len(members) >= 2:
                self._check_separable(cls, members, nodes)
        if self.gate_low.rate != self.rates[IntensityClass.LOW]:
            raise SpecError("low gate must run at the low rate")
        if self.gate_medium.rate != self.rates[IntensityClass.MEDIUM]:
            raise SpecError("medium/high gate must run at the medium rate")

    def _check_separable(self, cls, members, nodes):
        mode = self.leaf_modes.get(cls)
        if mode == ONE_VS_REST:
            covered = {next(iter(n.positives)) for n in nodes if len(n.positives) == 1}
            if covered != set(members):
                raise SpecError(f"missing one-vs-rest discriminators for {cls.name}")
        elif mode == PAIRWISE:
            pairs = {frozenset(n.scope) for n in nodes}
            for a, b in combinations(sorted(members), 2):
                if frozenset((a, b)) not in pairs:
                    raise SpecError(f"missing pairwise discriminator {a} vs {b} for {cls.name}")
        else:
            raise SpecError(f"unknown leaf mode {mode!r} for {cls.name}")

    def members(self, cls: IntensityClass) -> frozenset[int]:
        return frozenset(lab.id for lab in self.labels if lab.intensity == cls)

    def label(self, label_id: int) -> ActivityLabel:
        for lab in self.labels:
            if lab.id == label_id:
                return lab
        raise DomainError(f"label id {label_id} is not in the label space")

    def nodes(self) -> list[NodeSpec]:
        out = [self.gate_low, self.gate_medium]
        for cls in IntensityClass:
            out.extend(self.discriminators.get(cls, ()))
        return out

    def branch_charge(self, cls: IntensityClass) -> tuple[int, int]:
        """(rate, features charged per sample) for a segment routed to ``cls``."""
        n = self.leaf_levels[cls].size if self.discriminators.get(cls) else 0
        if cls == IntensityClass.LOW:
            n += self.gate_low.level.size
        elif cls == IntensityClass.MEDIUM:
            n += self.gate_medium.level.size
        return self.rates[cls], n

    @classmethod
    def build(
        cls,
        labels: Iterable[ActivityLabel] = DEFAULT_LABELS,
        rates: dict | None = None,
        gate_levels: dict | None = None,
        leaf_levels: dict | None = None,
        leaf_strategy: str = ONE_VS_REST,
    ) -> CascadeSpec:
        labels = tuple(labels)
        rates = {**DEFAULT_RATES, **(rates or {})}
        gate_levels = {**DEFAULT_GATE_LEVELS, **(gate_levels or {})}
        leaf_levels = {**DEFAULT_LEAF_LEVELS, **(leaf_levels or {})}
        if leaf_strategy not in (ONE_VS_REST, PAIRWISE):
            raise SpecError(f"unknown leaf strategy {leaf_strategy!r}")
        all_ids = frozenset(lab.id for lab in labels)
        by_class = {c: sorted(lab.id for lab in labels if lab.intensity == c) for c in IntensityClass}
        low = frozenset(by_class[IntensityClass.LOW])
        med = frozenset(by_class[IntensityClass.MEDIUM])
        high = frozenset(by_class[IntensityClass.HIGH])
        gate_low = NodeSpec(GATE_LOW, rates[IntensityClass.LOW], gate_levels[IntensityClass.LOW], low, all_ids - low)
        gate_medium = NodeSpec(GATE_MEDIUM, rates[IntensityClass.MEDIUM], gate_levels[IntensityClass.MEDIUM], med, high)

        discriminators, modes = {}, {}
        for c in IntensityClass:
            members = by_class[c]
            rate, level = rates[c], leaf_levels[c]
            prefix = f"leaf_{c.name.lower()}"
            nodes = []
            # two labels need a single binary node under either strategy
            if leaf_strategy == PAIRWISE or len(members) == 2:
                modes[c] = PAIRWISE
                for a, b in combinations(members, 2):
                    nodes.append(NodeSpec(f"{prefix}_{a}_vs_{b}", rate, level, frozenset([a]), frozenset([b])))
            else:
                modes[c] = ONE_VS_REST
                if len(members) > 1:
                    for a in members:
                        rest = frozenset(members) - {a}
                        nodes.append(NodeSpec(f"{prefix}_{a}_vs_rest", rate, level, frozenset([a]), rest))
            discriminators[c] = tuple(nodes)
        return cls(labels, rates, gate_low, gate_medium, discriminators, modes, leaf_levels)

    def to_dict(self) -> dict:
        strategy = PAIRWISE if any(
            m == PAIRWISE and len(self.members(c)) > 2 for c, m in self.leaf_modes.items()
        ) else ONE_VS_REST
        return {
            "labels": [{"id": l.id, "name": l.name, "intensity": l.intensity.name.lower()} for l in self.labels],
            "rates": {c.name.lower(): self.rates[c] for c in IntensityClass},
            "gate_levels": {"low": self.gate_low.level.name, "medium": self.gate_medium.level.name},
            "leaf_levels": {c.name.lower(): self.leaf_levels[c].name for c in IntensityClass},
            "leaf_strategy": strategy,
        }

    @classmethod
    def from_dict(cls, record: dict) -> CascadeSpec:
        try:
            labels = [
                ActivityLabel(int(item["id"]), str(item["name"]), IntensityClass.parse(item["intensity"]))
                for item in record.get("labels", [])
            ] or list(DEFAULT_LABELS)
            rates = {IntensityClass.parse(k): int(v) for k, v in record.get("rates", {}).items()}
            gate_levels = {IntensityClass.parse(k): FeatureLevel.parse(v) for k, v in record.get("gate_levels", {}).items()}
            leaf_levels = {IntensityClass.parse(k): FeatureLevel.parse(v) for k, v in record.get("leaf_levels", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed cascade description: {exc}") from exc
        return cls.build(labels, rates, gate_levels, leaf_levels, record.get("leaf_strategy", ONE_VS_REST))


@dataclass(frozen=True)
class Decision:
    label: ActivityLabel
    intensity: IntensityClass
    path: tuple[tuple[str, float], ...]
    rates_used: tuple[int, ...]
    levels_used: tuple[FeatureLevel, ...]


class RunningScaler:
    """Welford mean/variance; features with zero spread are left unscaled."""

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    def update(self, x: np.ndarray) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.n
        self._m2 = self._m2 + delta * (x - self.mean)

    def transform(self, x: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return x
        std = np.sqrt(self._m2 / self.n)
        std[std == 0] = 1.0
        return (x - self.mean) / std

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean.tolist(), "m2": self._m2.tolist()}


class Cascade:
    """Runtime state: one Pegasos model per node plus the current sensing rate.

    ``train_segment`` needs exclusive access; ``classify`` only reads models.
    """

    def __init__(self, spec: CascadeSpec, channels: int, params: ModelParams = ModelParams()):
        if channels < 1:
            raise DomainError("channel count must be positive")
        self.spec = spec
        self.channels = channels
        self.params = params
        self.models: dict[str, PegasosModel] = {}
        self.scalers: dict[str, RunningScaler] = {}
        for node in spec.nodes():
            n_raw = channels * node.level.size
            dim = n_raw + (1 if params.bias is not None else 0)
            self.models[node.id] = PegasosModel(
                PegasosConfig(dim=dim, lam=params.lam, k=params.k, use_projection=params.use_projection)
            )
            self.scalers[node.id] = RunningScaler(n_raw)
        self.current_rate = spec.rates[IntensityClass.LOW]
        self._nodes = {n.id: n for n in spec.nodes()}

    # -- feature plumbing ---------------------------------------------------

    def _check_segment(self, seg: Segment) -> None:
        if seg.n_channels != self.channels:
            raise DomainError(f"expected {self.channels} channels, got {seg.n_channels}")
        if seg.rate < self.spec.rates[IntensityClass.HIGH]:
            raise DomainError(
                f"segments must be recorded at {self.spec.rates[IntensityClass.HIGH]} Hz or above, got {seg.rate} Hz"
            )

    def _input(self, node: NodeSpec, raw: np.ndarray, learn: bool = False) -> np.ndarray:
        scaler = self.scalers[node.id]
        if self.params.standardize:
            if learn:
                scaler.update(raw)
            raw = scaler.transform(raw)
        if self.params.bias is not None:
            raw = np.append(raw, self.params.bias)
        return raw

    def node_margin(self, node_id: str, seg_full: Segment) -> float:
        """Margin of one node on ``seg_full`` regardless of routing."""
        node = self._nodes[node_id]
        raw = extract(decimate(seg_full, node.rate), node.level).values
        return self.models[node_id].margin(self._input(node, raw))

    # -- inference ----------------------------------------------------------

    def _route(self, seg_full, path, rates, levels, cache) -> IntensityClass:
        def margin(node):
            key = (node.rate, node.level)
            if key not in cache:
                cache[key] = extract(decimate(seg_full, node.rate), node.level).values
            m = self.models[node.id].margin(self._input(node, cache[key]))
            path.append((node.id, m))
            rates.append(node.rate)
            levels.append(node.level)
            return m

        if margin(self.spec.gate_low) >= 0:
            return IntensityClass.LOW
        if margin(self.spec.gate_medium) >= 0:
            return IntensityClass.MEDIUM
        return IntensityClass.HIGH

    def route_only(self, seg_full: Segment) -> IntensityClass:
        self._check_segment(seg_full)
        return self._route(seg_full, [], [], [], {})

    def classify(self, seg_full: Segment, force_intensity: IntensityClass | None = None):
        """Return ``(Decision, CostLedger)`` for one full-rate segment.

        ``force_intensity`` bypasses the gate decisions (gates are still
        evaluated and recorded) so leaves can be assessed under perfect routing.
        """
        self._check_segment(seg_full)
        path, rates, levels, cache = [], [], [], {}
        intensity = self._route(seg_full, path, rates, levels, cache)
        if force_intensity is not None:
            intensity = IntensityClass(force_intensity)
        label_id = self._resolve_leaf(intensity, seg_full, path, rates, levels)
        self.current_rate = self.spec.rates[intensity]

        ledger = CostLedger()
        rate, n_features = self.spec.branch_charge(intensity)
        sensed = decimate(seg_full, rate)
        samples = sensed.n_rows * sensed.n_channels
        ledger.charge(intensity, seg_full.duration_s, samples, samples * n_features)
        decision = Decision(
            self.spec.label(label_id), intensity, tuple(path), tuple(rates), tuple(levels)
        )
        return decision, ledger

    def _resolve_leaf(self, intensity, seg_full, path, rates, levels) -> int:
        members = sorted(self.spec.members(intensity))
        nodes = self.spec.discriminators.get(intensity, ())
        if len(members) == 1 or not nodes:
            return members[0]
        level = self.spec.leaf_levels[intensity]
        raw = extract(decimate(seg_full, self.spec.rates[intensity]), level).values
        rates.append(self.spec.rates[intensity])
        levels.append(level)
        margins = []
        for node in nodes:
            m = self.models[node.id].margin(self._input(node, raw))
            path.append((node.id, m))
            margins.append(m)
        if self.spec.leaf_modes[intensity] == ONE_VS_REST:
            # max margin, ties to the lowest label id
            best = max(zip(nodes, margins), key=lambda nm: (nm[1], -next(iter(nm[0].positives))))
            return next(iter(best[0].positives))
        votes = {m: 0 for m in members}
        for node, m in zip(nodes, margins):
            winner = node.positives if m >= 0 else node.negatives
            votes[next(iter(winner))] += 1
        return max(members, key=lambda lab: (votes[lab], -lab))

    # -- training -----------------------------------------------------------

    def _train_node(self, node: NodeSpec, raw: np.ndarray, label_id: int) -> None:
        x = self._input(node, raw, learn=True)
        self.models[node.id].observe(x, node.target(label_id)).step()

    def train_segment(self, ls: LabeledSegment) -> Cascade:
        """Stream one labeled segment through every node whose scope covers its label."""
        self._check_segment(ls.segment)
        label = self.spec.label(ls.label.id)
        seg = ls.segment
        cache = {}

        def features(rate, level):
            if (rate, level) not in cache:
                cache[rate, level] = extract(decimate(seg, rate), level).values
            return cache[rate, level]

        for node in self.spec.nodes():
            if label.id in node.scope:
                self._train_node(node, features(node.rate, node.level), label.id)
        return self

    def max_window_len(self) -> int:
        return max(len(m.window) for m in self.models.values())

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "channels": self.channels,
            "params": {
                "lambda": self.params.lam,
                "k": self.params.k,
                "use_projection": self.params.use_projection,
                "bias": self.params.bias,
                "standardize": self.params.standardize,
            },
            "nodes": {
                node_id: {"model": model.to_dict(), "scaler": self.scalers[node_id].to_dict()}
                for node_id, model in self.models.items()
            },
        }
