"""Command-line entry point: ``cascadehar <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import CascadeHarError
from ..features import FeatureLevel, extract
from ..signal import Segment, decimate
from .config import load_config
from .data import parse_segment_file, synth, write_dataset
from .evaluate import confusion_csv, dumps, flat_csv, load_segments, report_savings, run_train_eval

log = logging.getLogger("cascadehar")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_train_eval(args) -> None:
    config = load_config(args.config).with_overrides(seed=args.seed, eval_on_train=args.eval_on_train)
    result = run_train_eval(config)
    if args.format == "csv":
        _emit(confusion_csv(result.report), args.out)
    else:
        _emit(dumps(result.report), args.out)
    if args.models_out:
        Path(args.models_out).write_text(json.dumps(result.cascade.to_dict(), indent=2, sort_keys=True) + "\n")
    acc = result.report["accuracy"]["end_to_end"]
    log.info("end-to-end accuracy %.4f on %d test segments", acc, result.report["data"]["test"])


def cmd_savings(args) -> None:
    config = load_config(args.config).with_overrides(seed=args.seed)
    table = report_savings(config)
    _emit(flat_csv(table) if args.format == "csv" else dumps(table), args.out)
    pct = table["savings_pct"]
    ref = table["published_reference"]
    log.info(
        "sensing savings %.2f%%, compute savings %.2f%% (published: %.0f%% / %.0f%%)",
        pct["sensing"], pct["compute"], ref["sensing_pct"], ref["compute_pct"],
    )


def cmd_synth_gen(args) -> None:
    if args.out is None:
        raise CascadeHarError("synth-gen needs --out <directory>")
    config = load_config(args.config).with_overrides(seed=args.seed)
    segments = synth(config.synth, config.seed, config.spec.labels, config.spec.rates)
    paths = write_dataset(segments, args.out)
    log.info("wrote %d segment files under %s", len(paths), args.out)


def cmd_inspect_features(args) -> None:
    config = load_config(args.config).with_overrides(seed=args.seed)
    if args.input:
        seg = Segment(parse_segment_file(Path(args.input)), config.source_rate, config.window_s)
    else:
        seg = load_segments(config)[0].segment
    if args.rate:
        seg = decimate(seg, args.rate)
    fv = extract(seg, FeatureLevel.parse(args.level))
    record = {
        "rate": seg.rate,
        "rows": seg.n_rows,
        "level": fv.level.name,
        "features": dict(zip(fv.names(), fv.values.tolist())),
    }
    _emit(flat_csv(record) if args.format == "csv" else dumps(record), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadehar", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=["structured", "csv"], default="structured")

    p = sub.add_parser("train-eval", help="train the cascade and evaluate it")
    common(p)
    p.add_argument("--eval-on-train", action="store_true", help="evaluate on the training split")
    p.add_argument("--models-out", help="also write trained node models as JSON")
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("savings", help="monolithic vs cascade cost on the dataset's intensity mix")
    common(p)
    p.set_defaults(func=cmd_savings)

    p = sub.add_parser("synth-gen", help="write a synthetic dataset in the ingestible layout")
    common(p)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("inspect-features", help="print the feature vector of one segment")
    common(p)
    p.add_argument("--input", help="segment file (default: first segment of the configured data)")
    p.add_argument("--level", default="L3", choices=["L1", "L2", "L3"])
    p.add_argument("--rate", type=int, help="decimate to this rate first")
    p.set_defaults(func=cmd_inspect_features)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except CascadeHarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
