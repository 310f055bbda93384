"""Run configuration loaded from JSON.

Every key is optional; missing keys fall back to the defaults below, which
describe the seven-activity, 5/12/25 Hz, k=10 setup.

Example::

    {
      "seed": 7,
      "cascade": {"leaf_strategy": "one-vs-rest", "rates": {"low": 5, "medium": 12, "high": 25}},
      "model": {"lambda": 0.01, "k": 10, "epochs": 1},
      "data": {"source": "synthetic", "segments_per_activity": 60},
      "split": {"test_fraction": 0.2},
      "budgets": {"theta": 1000, "epsilon": 5, "k": 10}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..cascade import CascadeSpec, ModelParams
from ..costmodel import BudgetSpec
from ..errors import CascadeHarError, ConfigError
from ..signal import IntensityClass
from .data import SynthParams


@dataclass(frozen=True)
class RunConfig:
    spec: CascadeSpec = field(default_factory=CascadeSpec.build)
    params: ModelParams = ModelParams()
    epochs: int = 1
    seed: int = 0
    dataset: str | None = None
    label_dirs: dict | None = None
    source_rate: int = 25
    window_s: float = 5
    synth: SynthParams = field(default_factory=SynthParams)
    test_fraction: float = 0.2
    eval_on_train: bool = False
    budgets: BudgetSpec = BudgetSpec(theta=1000.0, epsilon=5, k=10)

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie strictly between 0 and 1")
        if self.source_rate != self.spec.rates[IntensityClass.HIGH]:
            raise ConfigError("the high cascade rate must equal the source data rate")

    @classmethod
    def from_dict(cls, record: dict) -> RunConfig:
        try:
            spec = CascadeSpec.from_dict(record.get("cascade", {}))
            model = dict(record.get("model", {}))
            bias = model.get("bias", 1.0)
            params = ModelParams(
                lam=float(model.get("lambda", 0.01)),
                k=int(model.get("k", 10)),
                use_projection=bool(model.get("use_projection", False)),
                bias=None if bias is None else float(bias),
                standardize=bool(model.get("standardize", True)),
            )
            data = dict(record.get("data", {}))
            source = data.get("source", "synthetic")
            data.setdefault("rate", spec.rates[IntensityClass.HIGH])
            synth = SynthParams.from_dict(data, spec.labels) if source == "synthetic" else SynthParams()
            budgets = dict(record.get("budgets", {}))
            return cls(
                spec=spec,
                params=params,
                epochs=int(model.get("epochs", 1)),
                seed=int(record.get("seed", 0)),
                dataset=None if source == "synthetic" else str(source),
                label_dirs=data.get("label_dirs"),
                source_rate=int(data["rate"]),
                window_s=data.get("window_s", 5),
                synth=synth,
                test_fraction=float(record.get("split", {}).get("test_fraction", 0.2)),
                eval_on_train=bool(record.get("split", {}).get("eval_on_train", False)),
                budgets=BudgetSpec(
                    theta=float(budgets.get("theta", 1000.0)),
                    epsilon=int(budgets.get("epsilon", 5)),
                    k=int(budgets.get("k", params.k)),
                ),
            )
        except ConfigError:
            raise
        except (CascadeHarError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    def to_dict(self) -> dict:
        data = {"source": self.dataset or "synthetic", "rate": self.source_rate, "window_s": self.window_s}
        if self.dataset is None:
            data.update(self.synth.to_dict())
        elif self.label_dirs:
            data["label_dirs"] = dict(self.label_dirs)
        return {
            "seed": self.seed,
            "cascade": self.spec.to_dict(),
            "model": {
                "lambda": self.params.lam,
                "k": self.params.k,
                "use_projection": self.params.use_projection,
                "bias": self.params.bias,
                "standardize": self.params.standardize,
                "epochs": self.epochs,
            },
            "data": data,
            "split": {"test_fraction": self.test_fraction, "eval_on_train": self.eval_on_train},
            "budgets": {"theta": self.budgets.theta, "epsilon": self.budgets.epsilon, "k": self.budgets.k},
        }

    def with_overrides(self, **changes) -> RunConfig:
        record = self.to_dict()
        if "seed" in changes and changes["seed"] is not None:
            record["seed"] = int(changes["seed"])
        if changes.get("eval_on_train"):
            record["split"]["eval_on_train"] = True
        return RunConfig.from_dict(record)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        record = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return RunConfig.from_dict(record)
