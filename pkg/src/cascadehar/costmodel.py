"""Unit-cost energy accounting for monolithic and cascaded recognition.

One cost unit is charged per sensed sample and one per feature per sample
(every feature is O(n) in the segment length). Arithmetic is done with
``Fraction`` so ledgers and closed-form costs can be compared exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError
from .features import FeatureLevel
from .signal import IntensityClass, _as_duration

# Reference figures reported for the original wearable deployment.
PUBLISHED_SENSING_SAVINGS_PCT = 44.0
PUBLISHED_COMPUTE_SAVINGS_PCT = 42.0


@dataclass(frozen=True)
class BranchCost:
    duration_s: Fraction = Fraction(0)
    sensed: int = 0
    feature_ops: int = 0

    def __add__(self, other: BranchCost) -> BranchCost:
        return BranchCost(
            self.duration_s + other.duration_s,
            self.sensed + other.sensed,
            self.feature_ops + other.feature_ops,
        )


@dataclass
class CostLedger:
    """Cumulative sensing/compute counters, broken down by intensity branch."""

    per_branch: dict[IntensityClass, BranchCost] = field(
        default_factory=lambda: {c: BranchCost() for c in IntensityClass}
    )

    @property
    def sensed_samples(self) -> int:
        return sum(b.sensed for b in self.per_branch.values())

    @property
    def feature_ops(self) -> int:
        return sum(b.feature_ops for b in self.per_branch.values())

    @property
    def total(self) -> int:
        return self.sensed_samples + self.feature_ops

    @property
    def duration_s(self) -> Fraction:
        return sum((b.duration_s for b in self.per_branch.values()), Fraction(0))

    def charge(self, branch: IntensityClass, duration_s, sensed: int, feature_ops: int) -> None:
        if sensed < 0 or feature_ops < 0:
            raise DomainError("ledger counts cannot decrease")
        self.per_branch[branch] = self.per_branch[branch] + BranchCost(
            _as_duration(duration_s), int(sensed), int(feature_ops)
        )

    def merge(self, other: CostLedger) -> CostLedger:
        """Return a new ledger holding the sum of both; order does not matter."""
        return CostLedger({c: self.per_branch[c] + other.per_branch[c] for c in IntensityClass})

    __add__ = merge

    def to_dict(self) -> dict:
        return {
            "sensed_samples": self.sensed_samples,
            "feature_ops": self.feature_ops,
            "total": self.total,
            "per_branch": {
                c.name: {
                    "duration_s": float(b.duration_s),
                    "sensed": b.sensed,
                    "feature_ops": b.feature_ops,
                }
                for c, b in self.per_branch.items()
            },
        }


@dataclass(frozen=True)
class Cost:
    sensing: Fraction
    compute: Fraction

    @property
    def total(self) -> Fraction:
        return self.sensing + self.compute


def monolithic_cost(rate: int, level: FeatureLevel, channels: int, duration_s) -> Cost:
    """A single classifier sensing at ``rate`` and extracting ``level`` throughout."""
    samples = _as_duration(duration_s) * rate * channels
    return Cost(samples, samples * FeatureLevel.parse(level).size)


def cascade_cost(spec, mix: dict, channels: int) -> Cost:
    """Closed-form cascade cost for a given time spent in each intensity class.

    Each branch senses at its own rate and pays for the feature levels it
    extracts there: low pays gate + low leaf, medium pays medium gate + medium
    leaf, high pays the high leaf only.
    """
    sensing = Fraction(0)
    compute = Fraction(0)
    for cls in IntensityClass:
        duration = _as_duration(mix.get(cls, 0))
        if duration < 0:
            raise DomainError(f"negative duration for {cls.name}")
        rate, n_features = spec.branch_charge(cls)
        samples = duration * rate * channels
        sensing += samples
        compute += samples * n_features
    return Cost(sensing, compute)


def savings_pct(baseline: Cost, candidate: Cost) -> dict[str, float]:
    def pct(a, b):
        return 0.0 if a == 0 else float(100 * (1 - Fraction(b) / Fraction(a)))

    return {
        "sensing": pct(baseline.sensing, candidate.sensing),
        "compute": pct(baseline.compute, candidate.compute),
        "total": pct(baseline.total, candidate.total),
    }


@dataclass(frozen=True)
class BudgetSpec:
    theta: float    # cost units per second
    epsilon: int    # cumulative misclassifications
    k: int          # memory blocks (stored segments per model)

    def __post_init__(self):
        if not (self.theta > 0 and self.epsilon > 0 and self.k > 0):
            raise DomainError("budgets must all be positive")


@dataclass(frozen=True)
class BudgetReport:
    power_ok: bool
    error_ok: bool
    memory_ok: bool
    power_rate: float

    @property
    def ok(self) -> bool:
        return self.power_ok and self.error_ok and self.memory_ok


def check_budgets(ledger: CostLedger, budgets: BudgetSpec, elapsed_s, errors_seen: int, window_len: int) -> BudgetReport:
    elapsed = _as_duration(elapsed_s)
    if elapsed <= 0:
        raise DomainError("elapsed time must be positive")
    rate = Fraction(ledger.total) / elapsed
    return BudgetReport(
        power_ok=rate <= _as_duration(budgets.theta),
        error_ok=errors_seen <= budgets.epsilon,
        memory_ok=window_len <= budgets.k,
        power_rate=float(rate),
    )
