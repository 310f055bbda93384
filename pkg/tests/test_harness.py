import json
import logging
import math

import numpy as np
import pytest

from cascadehar.cascade import DEFAULT_LABELS, GATE_LOW, Cascade, CascadeSpec
from cascadehar.errors import ConfigError, IngestionError
from cascadehar.features import FeatureId, FeatureLevel, compute_feature, extract
from cascadehar.harness import RunConfig, SynthParams, ingest, report_savings, run_train_eval, synth, write_dataset
from cascadehar.harness.cli import main
from cascadehar.harness.data import DEFAULT_PROFILES, ActivityProfile, render
from cascadehar.harness.evaluate import confusion_csv, stratified_split
from cascadehar.signal import IntensityClass


def small_config(**record):
    base = {"data": {"segments_per_activity": 20}}
    for key, value in record.items():
        base.setdefault(key, {}).update(value) if isinstance(value, dict) else base.__setitem__(key, value)
    return RunConfig.from_dict(base)


# -- ingestion -----------------------------------------------------------------


def test_ingest_full_layout(tmp_path):
    rng = np.random.default_rng(0)
    for lab in DEFAULT_LABELS:
        d = tmp_path / lab.name
        d.mkdir()
        block = rng.normal(size=(125, 1))
        text = "\n".join(f"{v:.6f}" for v in block[:, 0]) + "\n"
        for i in range(480):
            (d / f"{i:03d}.txt").write_text(text)
    segments = ingest(tmp_path)
    assert len(segments) == 3360
    assert [ls.label.name for ls in segments[::480]] == sorted(lab.name for lab in DEFAULT_LABELS)


def test_ingest_separators_and_comments(tmp_path):
    d = tmp_path / "running"
    d.mkdir()
    rows = ["# header"] + [f"{i}, {i + 0.5}\t{-i}" for i in range(125)]
    (d / "a.csv").write_text("\n".join(rows))
    [ls] = ingest(tmp_path)
    assert ls.segment.data.shape == (125, 3)
    assert ls.segment.data[3].tolist() == [3, 3.5, -3]
    assert ls.label.intensity is IntensityClass.HIGH


def test_ingest_empty(tmp_path, caplog):
    (tmp_path / "sitting").mkdir()
    with caplog.at_level(logging.WARNING):
        assert ingest(tmp_path) == []
    assert "empty" in caplog.text


@pytest.mark.parametrize(
    "content, fragment",
    [
        ("\n".join(["1 2"] * 124), "124 rows"),
        ("\n".join(["1 2"] * 124 + ["1 x"]), "non-numeric"),
        ("\n".join(["1 2"] * 124 + ["1 2 3"]), "ragged"),
    ],
)
def test_ingest_errors_name_file(tmp_path, content, fragment):
    d = tmp_path / "sitting"
    d.mkdir()
    (d / "bad.txt").write_text(content)
    with pytest.raises(IngestionError) as exc:
        ingest(tmp_path)
    assert "bad.txt" in str(exc.value) and fragment in str(exc.value)


def test_ingest_inconsistent_channels(tmp_path):
    d = tmp_path / "sitting"
    d.mkdir()
    (d / "a.txt").write_text("\n".join(["1 2"] * 125))
    (d / "b.txt").write_text("\n".join(["1 2 3"] * 125))
    with pytest.raises(IngestionError, match="b.txt"):
        ingest(tmp_path)


def test_ingest_label_dirs_mapping(tmp_path):
    d = tmp_path / "A1"
    d.mkdir()
    (d / "0.txt").write_text("\n".join(["0.5"] * 125))
    [ls] = ingest(tmp_path, label_dirs={"A1": "sitting"})
    assert ls.label.name == "sitting"


def test_write_then_ingest_round_trip(tmp_path):
    stream = synth(SynthParams(segments_per_activity=2), seed=5)
    write_dataset(stream, tmp_path)
    back = ingest(tmp_path)
    key = lambda ls: ls.label.id
    assert sorted(map(key, back)) == sorted(map(key, stream))
    by_label = {}
    for ls in stream:
        by_label.setdefault(ls.label.id, []).append(ls.segment)
    for ls in back:
        assert any(ls.segment == s for s in by_label[ls.label.id])


# -- synthetic data --------------------------------------------------------------


def test_synth_is_deterministic():
    a = synth(SynthParams(segments_per_activity=15), seed=11)
    b = synth(SynthParams(segments_per_activity=15), seed=11)
    assert len(a) == 105
    assert all(x.segment == y.segment and x.label == y.label for x, y in zip(a, b))
    c = synth(SynthParams(segments_per_activity=15), seed=12)
    assert not all(x.segment == y.segment for x, y in zip(a, c))


def test_synth_separable_gate_reaches_100():
    stream = synth(SynthParams(segments_per_activity=40), seed=2)
    cascade = Cascade(CascadeSpec.build(), channels=3)
    for i in np.random.default_rng(0).permutation(len(stream)):
        cascade.train_segment(stream[i])
    assert all(
        (cascade.node_margin(GATE_LOW, ls.segment) >= 0) == (ls.label.intensity is IntensityClass.LOW)
        for ls in stream
    )


def test_synth_amp_bands_hold(rng):
    params = SynthParams(segments_per_activity=50)
    stream = synth(params, seed=4)
    for ls in stream:
        for rate in (5, 12, 25):
            from cascadehar.signal import decimate

            amp = extract(decimate(ls.segment, rate), FeatureLevel.L1).values
            lo, hi = params.profiles[ls.label.name].amp_band(rate, 5, params.noise)
            assert np.all(amp >= lo - 1e-12) and np.all(amp <= hi + 1e-12)


def test_zero_noise_closed_form():
    profile = ActivityProfile(1.5, 2.0, (0.25, -1.0))
    phases = [0.3, 1.1]
    seg = render(profile, phases, 25, 5)
    n, d = 125, 2 * math.pi * 2.0 / 25
    for c, phi in enumerate(phases):
        # sum_{j<n} sin(phi + j d) in closed form
        s = math.sin(n * d / 2) / math.sin(d / 2) * math.sin(phi + (n - 1) * d / 2)
        mean = profile.offsets[c] + profile.amplitude * s / n
        assert compute_feature(FeatureId.MNVALUE, seg.data[:, c]) == pytest.approx(mean, abs=1e-12)
        s2e = profile.amplitude * (math.sin(phi + (n - 1) * d) - math.sin(phi))
        assert compute_feature(FeatureId.S2E, seg.data[:, c]) == pytest.approx(s2e, abs=1e-12)
    flat = render(ActivityProfile(0.0, 1.0, (0.7, -0.2)), [0, 0], 25, 5)
    fv = extract(flat, FeatureLevel.L2).values
    np.testing.assert_allclose(fv, [0.7, 0.7, 0.0, 0.2, -0.2, 0.0], atol=1e-12)


def test_synth_rejects_overlapping_bands():
    profiles = dict(DEFAULT_PROFILES)
    profiles["sitting"] = ActivityProfile(2.0, 0.3, (0.3, 0.0, 0.0))
    with pytest.raises(ConfigError, match="overlap"):
        synth(SynthParams(profiles=profiles), seed=0)
    profiles = dict(DEFAULT_PROFILES)
    profiles["standing"] = profiles["sitting"]
    with pytest.raises(ConfigError, match="indistinguishable"):
        synth(SynthParams(profiles=profiles), seed=0)
    # without the separability requirement the same profiles are accepted
    assert synth(SynthParams(profiles=profiles, segments_per_activity=1, require_separable=False), seed=0)


# -- protocol --------------------------------------------------------------------


def test_stratified_split():
    stream = synth(SynthParams(segments_per_activity=10), seed=0)
    train, test = stratified_split(stream, 0.2, np.random.default_rng(0))
    assert len(train) == 56 and len(test) == 14
    assert not set(train) & set(test)
    for lab in DEFAULT_LABELS:
        assert sum(stream[i].label.id == lab.id for i in test) == 2
    with pytest.raises(ConfigError):
        stratified_split(synth(SynthParams(segments_per_activity=1), seed=0), 0.6, np.random.default_rng(0))


def test_run_train_eval_report():
    result = run_train_eval(small_config())
    r = result.report
    cm = np.array(r["confusion_matrix"]["counts"])
    assert cm.sum(axis=1).tolist() == [4] * 7
    assert r["accuracy"]["end_to_end"] == np.trace(cm) / cm.sum()
    assert r["memory"]["max_window_len"] == 10
    assert r["budgets"]["memory_ok"]
    assert 0 <= r["accuracy"]["intensity_routing"] <= 1
    # ledger equals the closed form on the test mix when routing is perfect
    if r["accuracy"]["intensity_routing"] == 1.0:
        assert r["ledger"]["sensed_samples"] == r["savings"]["cascade"]["sensing"]
        assert r["ledger"]["feature_ops"] == r["savings"]["cascade"]["compute"]


def test_run_train_eval_small_k():
    result = run_train_eval(small_config(model={"k": 3}))
    assert result.report["memory"]["max_window_len"] == 3


def test_eval_on_train():
    r = run_train_eval(small_config(split={"eval_on_train": True})).report
    assert r["data"]["test"] == r["data"]["train"]


def test_report_savings_uniform():
    table = report_savings(small_config())
    assert table["savings_pct"]["sensing"] == pytest.approx(37.7143, abs=1e-4)
    assert table["savings_pct"]["compute"] == pytest.approx(36.3175, abs=1e-4)
    assert table["published_reference"]["sensing_pct"] == 44.0


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"model": {"epochs": 0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"model": {"lambda": -1}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"cascade": {"rates": {"high": 10}}})
    with pytest.raises(ConfigError, match="source data rate"):
        RunConfig.from_dict({"data": {"rate": 50}})
    assert RunConfig.from_dict({"cascade": {"rates": {"high": 30}}}).synth.rate == 30


def test_config_round_trip():
    cfg = small_config(model={"k": 4, "use_projection": True}, cascade={"leaf_strategy": "pairwise"})
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


# -- CLI -------------------------------------------------------------------------


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3, "data": {"segments_per_activity": 10}}))
    return path


def test_cli_train_eval(tmp_path, config_file):
    out = tmp_path / "report.json"
    models = tmp_path / "models.json"
    assert main(["train-eval", "--config", str(config_file), "--out", str(out), "--models-out", str(models)]) == 0
    report = json.loads(out.read_text())
    assert report["config"]["seed"] == 3
    assert GATE_LOW in json.loads(models.read_text())["nodes"]
    csv_out = tmp_path / "cm.csv"
    assert main(["train-eval", "--config", str(config_file), "--format", "csv", "--out", str(csv_out)]) == 0
    assert csv_out.read_text() == confusion_csv(report)


def test_cli_seed_override(tmp_path, config_file):
    out = tmp_path / "r.json"
    assert main(["train-eval", "--config", str(config_file), "--seed", "8", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 8


def test_cli_savings_and_features(tmp_path, config_file, capsys):
    assert main(["savings", "--config", str(config_file)]) == 0
    table = json.loads(capsys.readouterr().out)
    assert round(table["savings_pct"]["sensing"], 2) == 37.71
    assert main(["inspect-features", "--config", str(config_file), "--level", "L2", "--rate", "5"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["rows"] == 25 and len(record["features"]) == 9


def test_cli_synth_gen_then_ingest(tmp_path, config_file):
    root = tmp_path / "data"
    assert main(["synth-gen", "--config", str(config_file), "--out", str(root)]) == 0
    assert len(list(root.glob("*/*.txt"))) == 70
    cfg = tmp_path / "real.json"
    cfg.write_text(json.dumps({"data": {"source": str(root)}}))
    out = tmp_path / "r.json"
    assert main(["train-eval", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["data"]["segments"] == 70
    assert main(["inspect-features", "--config", str(cfg), "--input", str(root / "running" / "0000.txt")]) == 0


def test_cli_errors_go_to_stderr(tmp_path, capsys):
    assert main(["train-eval", "--config", str(tmp_path / "missing.json")]) == 1
    captured = capsys.readouterr()
    assert captured.out == "" and "error:" in captured.err
    bad = tmp_path / "bad"
    (bad / "sitting").mkdir(parents=True)
    (bad / "sitting" / "x.txt").write_text("1\n2\n")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"data": {"source": str(bad)}}))
    assert main(["train-eval", "--config", str(cfg)]) == 1
    assert "x.txt" in capsys.readouterr().err
    assert main(["synth-gen"]) == 1
