"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import formats
from .datagen import GENERATOR_NAME, generate, paper_scenario_config
from .predictor import (
    DEFAULT_MIN_EVENTS,
    DEFAULT_THRESHOLD_BITS,
    build_model,
    compute_di_matrices,
    dataset_digest,
    evaluate,
    load_model,
    predict,
    save_model,
)
from .types import DI_MAX_BITS, ConfigError, DatasetError, ModelFormatError, validate_dataset

log = logging.getLogger("ditraffic")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _non_negative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_generate(args) -> int:
    if args.scenario == "paper":
        if args.profiles:
            raise UsageError("use either --scenario or --profiles, not both")
        config = paper_scenario_config(args.events or 1000, args.seed or 0, args.activity_prob)
    elif args.profiles:
        config = formats.read_profiles(args.profiles)
        overrides = {}
        if args.events is not None:
            overrides["num_events"] = args.events
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            config = dataclasses.replace(config, **overrides)
    else:
        raise UsageError("need --scenario paper or --profiles FILE")
    dataset = generate(config)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_dataset(dataset, out / "events.csv")
    _write_json(
        out / "events.meta.json",
        {"seed": config.seed, "generator": GENERATOR_NAME, "config": config.to_dict()},
    )
    print(
        f"wrote {out / 'events.csv'}: {len(dataset.device_ids)} devices x "
        f"{dataset.num_events} events x {dataset.slots_per_event} slots"
    )
    return EXIT_OK


def cmd_ingest(args) -> int:
    dataset = formats.read_request_log(args.log, args.slots)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_dataset(dataset, out / "events.csv")
    _write_json(out / "events.meta.json", {"source_log": str(args.log), "alignment": "earliest request = slot 1"})
    print(f"wrote {out / 'events.csv'}: L={dataset.slots_per_event}, E={dataset.num_events}")
    return EXIT_OK


def cmd_validate(args) -> int:
    problems = validate_dataset(formats.read_dataset(args.data))
    for p in problems:
        print(p)
    if problems:
        return EXIT_DATA
    print("valid")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = formats.read_dataset(args.data)
    if dataset.num_events < args.min_events:
        raise DatasetError(f"insufficient events: {dataset.num_events} < {args.min_events}")
    if dataset.slots_per_event < 2:
        raise DatasetError("need at least 2 slots per event")
    if args.threshold >= DI_MAX_BITS:
        log.warning("threshold %.3g bits is at or above the 2-bit DI maximum; causality sets will be empty", args.threshold)
    matrices = compute_di_matrices(dataset, alpha=args.smoothing, workers=args.workers)
    meta = {
        "training_events": dataset.num_events,
        "dataset_sha256": dataset_digest(dataset),
        "smoothing_alpha": args.smoothing,
    }
    sidecar = Path(args.data).with_name("events.meta.json")
    if sidecar.exists():
        side = json.loads(sidecar.read_text(encoding="utf-8"))
        if "seed" in side:
            meta["generator_seed"] = side["seed"]
    model = build_model(matrices, dataset.device_ids, dataset.slots_per_event, args.threshold, meta)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    model_path = Path(args.model) if args.model else out / "model.json"
    model_path.write_bytes(save_model(model))
    for mat in matrices.values():
        (out / formats.di_matrix_filename(mat)).write_text(formats.di_matrix_to_csv(mat), encoding="utf-8", newline="")
        if args.heatmaps:
            formats.write_heatmap(mat, out / formats.di_matrix_filename(mat, "png"))
    total = sum(len(cs) for cs in model.causality_sets.values())
    print(f"wrote {model_path} ({total} causality entries) and {len(matrices)} DI matrices to {out}")
    return EXIT_OK


def _load_model_file(path):
    return load_model(Path(path).read_bytes())


def cmd_predict(args) -> int:
    model = _load_model_file(args.model)
    if args.trigger not in model.causality_sets:
        raise UsageError(f"unknown trigger device {args.trigger!r}; model has {list(model.device_ids)}")
    if not 1 <= args.slot <= model.slots_per_event:
        raise UsageError(f"--slot must be in 1..{model.slots_per_event}")
    preds = predict(model, args.trigger, args.slot)
    if not preds:
        print("no predictions")
    else:
        print(f"{'target':<12}{'slot':>6}{'di_bits':>12}{'normalized':>12}")
        for p in preds:
            print(f"{p.target_id:<12}{p.predicted_slot:>6}{p.confidence:>12.6f}{p.normalized_confidence:>12.6f}")
    if args.json:
        _write_json(
            Path(args.json),
            {
                "trigger": args.trigger,
                "slot": args.slot,
                "predictions": [
                    {
                        "target": p.target_id,
                        "predicted_slot": p.predicted_slot,
                        "di_bits": p.confidence,
                        "normalized_confidence": p.normalized_confidence,
                    }
                    for p in preds
                ],
            },
        )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model_file(args.model)
    holdout = formats.read_dataset(args.data)
    report = evaluate(model, holdout, args.floor)
    print(f"events scored: {report.events_scored}   confidence floor: {report.confidence_floor}")
    print(f"{'device':<12}{'tp':>7}{'fp':>7}{'fn':>7}{'precision':>11}{'recall':>9}{'f1':>8}")
    rows = sorted(report.per_device.items()) + [("(overall)", report.overall)]
    for d, s in rows:
        flag = "*" if s.precision_undefined else " "
        print(
            f"{d:<12}{s.true_positives:>7}{s.false_positives:>7}{s.false_negatives:>7}"
            f"{s.precision:>10.4f}{flag}{s.recall:>9.4f}{s.f1:>8.4f}"
        )
    print("* precision undefined (no predictions), reported as 1.0")
    if args.json:
        _write_json(Path(args.json), report.to_dict())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ditraffic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic event dataset")
    g.add_argument("--scenario", choices=["paper"])
    g.add_argument("--profiles", help="generator config JSON")
    g.add_argument("--events", type=_positive_int)
    g.add_argument("--seed", type=_seed)
    g.add_argument("--activity-prob", type=float, default=0.5, help="per-slot probability for X and Y")
    g.add_argument("-o", "--output", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    ing = sub.add_parser("ingest", help="align a raw request log (event_id,device_id,time)")
    ing.add_argument("--log", required=True)
    ing.add_argument("--slots", type=_positive_int, help="pad events to this length")
    ing.add_argument("-o", "--output", required=True)
    ing.set_defaults(func=cmd_ingest)

    v = sub.add_parser("validate", help="check a dataset CSV")
    v.add_argument("--data", required=True)
    v.set_defaults(func=cmd_validate)

    t = sub.add_parser("train", help="learn causality sets and export DI matrices")
    t.add_argument("--data", required=True)
    t.add_argument("--threshold", type=_non_negative_float, default=DEFAULT_THRESHOLD_BITS)
    t.add_argument("--smoothing", type=_non_negative_float, default=0.0, help="add-alpha pseudo-count")
    t.add_argument("--min-events", type=_positive_int, default=DEFAULT_MIN_EVENTS)
    t.add_argument("--workers", type=_positive_int, default=1)
    t.add_argument("--heatmaps", action="store_true", help="also write PNG heatmaps")
    t.add_argument("--model", help="model path (default OUTPUT/model.json)")
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="rank devices expected after a trigger")
    p.add_argument("--model", required=True)
    p.add_argument("--trigger", required=True)
    p.add_argument("--slot", type=_positive_int, required=True)
    p.add_argument("--json")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="score predictions on held-out events")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--floor", type=_non_negative_float, default=0.0, help="minimum normalized confidence")
    e.add_argument("--json")
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except (DatasetError, ModelFormatError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, ValueError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
