"""Train/evaluate protocol, savings analysis and report serialization.

Reports are JSON objects written with sorted keys and fixed indentation so a
fixed config and seed reproduce the same bytes. Top-level keys of a
train-eval report:

``config``            the effective run configuration
``data``              segment counts, channel count, source
``accuracy``          end-to-end, intensity routing, per node (scope-restricted)
``confusion_matrix``  ``labels`` (names, id order) and ``counts`` (rows = true)
``ledger``            sensing/compute counters per intensity branch
``savings``           monolithic vs cascade cost on the evaluated stream
``budgets``           power/error/memory checks
``memory``            largest window length reached by any node model
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..cascade import Cascade
from ..costmodel import (
    PUBLISHED_COMPUTE_SAVINGS_PCT,
    PUBLISHED_SENSING_SAVINGS_PCT,
    CostLedger,
    cascade_cost,
    check_budgets,
    monolithic_cost,
    savings_pct,
)
from ..errors import ConfigError
from ..signal import IntensityClass
from .config import RunConfig
from .data import ingest, synth

log = logging.getLogger(__name__)


def load_segments(config: RunConfig):
    if config.dataset is None:
        return synth(config.synth, config.seed, config.spec.labels, config.spec.rates)
    return ingest(config.dataset, config.spec.labels, config.source_rate, config.window_s, config.label_dirs)


def stratified_split(segments, test_fraction: float, rng: np.random.Generator):
    """Per-label shuffle and split; returns (train, test) index lists."""
    by_label: dict[int, list[int]] = {}
    for i, ls in enumerate(segments):
        by_label.setdefault(ls.label.id, []).append(i)
    train, test = [], []
    for label_id in sorted(by_label):
        idx = by_label[label_id]
        perm = [idx[j] for j in rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx)))
        if n_test >= len(idx):
            raise ConfigError(f"split leaves no training segments for label {label_id}")
        test.extend(sorted(perm[:n_test]))
        train.extend(perm[n_test:])
    return train, sorted(test)


def empirical_mix(segments) -> dict[IntensityClass, Fraction]:
    mix = {c: Fraction(0) for c in IntensityClass}
    for ls in segments:
        mix[ls.label.intensity] += ls.segment.duration_s
    return mix


def savings_table(spec, mix: dict, channels: int) -> dict:
    """Monolithic (high rate, richest leaf level) vs cascade cost for a duration mix."""
    high = IntensityClass.HIGH
    total = sum((Fraction(v) for v in mix.values()), Fraction(0))
    richest = max(spec.leaf_levels.values(), key=lambda lv: lv.size)
    mono = monolithic_cost(spec.rates[high], richest, channels, total)
    casc = cascade_cost(spec, mix, channels)
    pct = savings_pct(mono, casc)
    return {
        "mix_s": {c.name: float(Fraction(mix.get(c, 0))) for c in IntensityClass},
        "channels": channels,
        "monolithic": {"sensing": _num(mono.sensing), "compute": _num(mono.compute), "total": _num(mono.total)},
        "cascade": {"sensing": _num(casc.sensing), "compute": _num(casc.compute), "total": _num(casc.total)},
        "savings_pct": {k: round(v, 4) for k, v in pct.items()},
        "published_reference": {
            "sensing_pct": PUBLISHED_SENSING_SAVINGS_PCT,
            "compute_pct": PUBLISHED_COMPUTE_SAVINGS_PCT,
            "note": "reported for the original deployment; not reproduced by the unit-cost model",
        },
    }


def _num(x: Fraction):
    x = Fraction(x)
    return int(x) if x.denominator == 1 else float(x)


def _acc(correct: int, total: int) -> float:
    return correct / total if total else 0.0


@dataclass
class EvalResult:
    report: dict
    cascade: Cascade
    ledger: CostLedger = field(default_factory=CostLedger)


def run_train_eval(config: RunConfig) -> EvalResult:
    segments = load_segments(config)
    if not segments:
        raise ConfigError("dataset is empty")
    spec = config.spec
    channels = segments[0].segment.n_channels
    present = {ls.label.id for ls in segments}
    absent = [lab.name for lab in spec.labels if lab.id not in present]
    if absent:
        raise ConfigError(f"no segments for activities {absent}")

    rng = np.random.default_rng(config.seed)
    train_idx, test_idx = stratified_split(segments, config.test_fraction, rng)
    if config.eval_on_train:
        test_idx = sorted(train_idx)

    cascade = Cascade(spec, channels, config.params)
    for epoch in range(config.epochs):
        order = [train_idx[j] for j in rng.permutation(len(train_idx))]
        for i in order:
            cascade.train_segment(segments[i])
        log.info("epoch %d: trained on %d segments", epoch + 1, len(order))

    ids = [lab.id for lab in spec.labels]
    pos = {lab_id: j for j, lab_id in enumerate(ids)}
    confusion = np.zeros((len(ids), len(ids)), dtype=int)
    ledger = CostLedger()
    routed_ok = 0
    node_hits = {n.id: [0, 0] for n in spec.nodes()}
    test = [segments[i] for i in test_idx]
    for ls in test:
        decision, delta = cascade.classify(ls.segment)
        ledger = ledger.merge(delta)
        confusion[pos[ls.label.id], pos[decision.label.id]] += 1
        routed_ok += decision.intensity == ls.label.intensity
        for node in spec.nodes():
            if ls.label.id in node.scope:
                m = cascade.node_margin(node.id, ls.segment)
                node_hits[node.id][0] += (1 if m >= 0 else -1) == node.target(ls.label.id)
                node_hits[node.id][1] += 1

    n_test = len(test)
    errors = n_test - int(np.trace(confusion))
    elapsed = ledger.duration_s
    budgets = check_budgets(ledger, config.budgets, elapsed, errors, cascade.max_window_len())
    report = {
        "config": config.to_dict(),
        "data": {
            "source": config.dataset or "synthetic",
            "segments": len(segments),
            "train": len(train_idx),
            "test": n_test,
            "channels": channels,
        },
        "accuracy": {
            "end_to_end": _acc(int(np.trace(confusion)), n_test),
            "intensity_routing": _acc(routed_ok, n_test),
            "per_node": {
                node_id: {"accuracy": _acc(c, t), "evaluated": t}
                for node_id, (c, t) in node_hits.items()
            },
        },
        "confusion_matrix": {
            "labels": [lab.name for lab in spec.labels],
            "counts": confusion.tolist(),
        },
        "ledger": ledger.to_dict(),
        "savings": savings_table(spec, empirical_mix(test), channels),
        "budgets": {
            "theta": config.budgets.theta,
            "epsilon": config.budgets.epsilon,
            "k": config.budgets.k,
            "power_rate": budgets.power_rate,
            "errors": errors,
            "power_ok": budgets.power_ok,
            "error_ok": budgets.error_ok,
            "memory_ok": budgets.memory_ok,
        },
        "memory": {"max_window_len": cascade.max_window_len(), "k": config.params.k},
    }
    return EvalResult(report, cascade, ledger)


def report_savings(config: RunConfig) -> dict:
    segments = load_segments(config)
    if not segments:
        raise ConfigError("dataset is empty")
    return savings_table(config.spec, empirical_mix(segments), segments[0].segment.n_channels)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def confusion_csv(report: dict) -> str:
    cm = report["confusion_matrix"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["true\\predicted", *cm["labels"]])
    for name, row in zip(cm["labels"], cm["counts"]):
        writer.writerow([name, *row])
    return buf.getvalue()


def flat_csv(record: dict) -> str:
    """Key/value CSV of a nested report, dotted keys in sorted order."""
    rows = []

    def walk(prefix, value):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else str(k), value[k])
        else:
            rows.append((prefix, value))

    walk("", record)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    return buf.getvalue()
