"""Command-line pipeline driver.

Subcommands: plan (emit frame-selection plans), materialize (write packed
clips), eval (join predictions and print metrics), synth (generate a
synthetic corpus), stats (manifest summary). Exit codes: 0 success, 2 for
data/config validation failures, 1 for everything else. Set TKS_LOG to
DEBUG/INFO/WARNING/ERROR for verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as tkio
from .errors import ValidationError
from .labels import action_label, aggregate_logits, aggregate_outcomes, argmax_class
from .metrics import evaluate
from .roi import CropRect, attach_crops
from .sampling import (
    DEFAULT_FRAMES,
    DEFAULT_MAJORITY_FRACTION,
    DEFAULT_WINDOW_FRACTION,
    plan_action_subset,
    plan_baseline,
    plan_random_window,
    plan_single_action,
    plan_variable_rate,
    stamp_seed,
    tta_plan_set,
)
from .timeline import ACTION_SUBSET, ARMBENCH_CLASSES, TaskTimeline

log = logging.getLogger("tksample")


def _subset_for(t: TaskTimeline, args) -> list[str]:
    if args.subset:
        return [s.strip() for s in args.subset.split(",") if s.strip()]
    if args.strategy == "baseline":
        return t.action_names()
    return list(ACTION_SUBSET)


def _parse_region(text: str) -> CropRect:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValidationError(f"fixed region must be x1,y1,x2,y2, got {text!r}")
    x1, y1, x2, y2 = (int(p) for p in parts)
    return CropRect(x1, y1, x2, y2)


def _plans_for_timeline(t: TaskTimeline, args, rng: random.Random) -> list:
    subset = _subset_for(t, args)
    offset = rng.random() if args.jitter else args.offset

    if args.tta:
        if args.augment != "none":
            raise ValidationError("--tta cannot be combined with --augment")
        if args.strategy == "single-action":
            raise ValidationError("--tta requires strategy baseline or action-subset")
        plans = tta_plan_set(t, subset, args.frames, f=args.majority_fraction)
    elif args.augment == "action":
        if args.strategy == "single-action":
            raise ValidationError("--augment requires strategy baseline or action-subset")
        selected = rng.choice(subset)
        plans = [
            plan_variable_rate(
                t, subset, args.frames, selected,
                f=args.majority_fraction, offset=offset, equal_split=args.equal_split,
            )
        ]
    elif args.augment == "random":
        if args.strategy == "single-action":
            raise ValidationError("--augment requires strategy baseline or action-subset")
        segs = [t.segment(a) for a in subset]
        lo = min(s.start for s in segs)
        hi = max(s.end for s in segs)
        center = rng.randrange(lo, hi)
        plans = [
            plan_random_window(
                t, subset, args.frames, center,
                w=args.window_fraction, f=args.majority_fraction, offset=offset,
            )
        ]
    elif args.strategy == "baseline":
        plans = [plan_baseline(t, args.frames, offset)]
    elif args.strategy == "action-subset":
        plans = [plan_action_subset(t, subset, args.frames, offset)]
    elif args.strategy == "single-action":
        plans = [plan_single_action(t, a, args.frames, offset) for a in subset]
    else:
        raise ValidationError(f"unknown strategy {args.strategy!r}")

    region = _parse_region(args.fixed_region) if args.crop == "fixed" else None
    out = []
    for plan in plans:
        plan = stamp_seed(plan, args.seed)
        if plan.strategy == "single-action":
            plan.label = action_label(t, plan.action)
        else:
            plan.label = t.label
        if args.crop != "none":
            plan = attach_crops(plan, t, mode=args.crop, region=region, roi_frames=args.roi_frames)
        out.append(plan)
    return out


def cmd_plan(args) -> int:
    timelines = tkio.parse_manifest(args.manifest)
    rng = random.Random(args.seed)
    plans = []
    for t in timelines:
        plans.extend(_plans_for_timeline(t, args, rng))
    if args.out == "-":
        for plan in plans:
            print(json.dumps(tkio.plan_to_record(plan), sort_keys=True, separators=(",", ":")))
    else:
        tkio.write_plans(args.out, plans)
    log.info("wrote %d plans for %d samples", len(plans), len(timelines))
    return 0


def _materialize_one(idx: int, plan, args) -> Path:
    source = tkio.resolve_frame_source(args.source, plan.sample_id)
    clip = tkio.materialize(plan, source, args.size, args.size)
    path = Path(args.out_dir) / f"{idx:05d}_{plan.sample_id}.tksm"
    tkio.write_clip(path, clip)
    return path


def cmd_materialize(args) -> int:
    plans = tkio.read_plans(args.plans)
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_materialize_one, i, p, args) for i, p in enumerate(plans)]
            for fut in futures:
                fut.result()
    else:
        for i, plan in enumerate(plans):
            _materialize_one(i, plan, args)
    log.info("materialized %d clips into %s", len(plans), args.out_dir)
    return 0


def _predicted_label(rows: list[dict], classes: list[str], tta: bool) -> str:
    def row_label(row):
        if row.get("label") is not None:
            return row["label"]
        if row.get("logits") is None:
            raise ValidationError(f"prediction row needs label or logits: {row}")
        return classes[argmax_class([float(x) for x in row["logits"]])]

    if any(r.get("action") is not None for r in rows):
        return aggregate_outcomes([row_label(r) for r in rows], tuple(classes))
    if tta or len(rows) > 1:
        logit_rows = []
        for row in rows:
            if row.get("logits") is None:
                raise ValidationError(
                    f"logit aggregation needs logits on every row: {row}"
                )
            logit_rows.append([float(x) for x in row["logits"]])
        return classes[argmax_class(aggregate_logits(logit_rows))]
    return row_label(rows[0])


def cmd_eval(args) -> int:
    timelines = tkio.parse_manifest(args.manifest)
    classes = [c.strip() for c in args.classes.split(",") if c.strip()]
    truth = {t.sample_id: t.label for t in timelines}

    by_sample: dict[str, list[dict]] = {}
    with open(args.predictions, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"predictions line {lineno}: {exc.msg}") from exc
            if "sample_id" not in row:
                raise ValidationError(f"predictions line {lineno}: missing sample_id")
            by_sample.setdefault(str(row["sample_id"]), []).append(row)

    missing = sorted(set(truth) - set(by_sample))
    if missing:
        raise ValidationError("missing predictions for: " + ", ".join(missing))
    unknown = sorted(set(by_sample) - set(truth))
    if unknown:
        raise ValidationError("predictions for unknown samples: " + ", ".join(unknown))

    ids = sorted(truth)
    true_labels = [truth[i] for i in ids]
    pred_labels = [_predicted_label(by_sample[i], classes, args.tta) for i in ids]
    rep = evaluate(true_labels, pred_labels, classes, f1_scope=args.f1_scope)
    sys.stdout.write(tkio.report_to_text(rep))
    if args.json:
        Path(args.json).write_text(
            json.dumps(tkio.report_to_record(rep), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def _load_synth_spec(args):
    from .synth import SynthSpec

    overrides = {}
    if args.spec_file:
        raw = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
        fields = {
            "seed", "width", "height", "fps", "action_lengths", "failure_probs",
            "open_phase_prob", "event_duration", "event_span_divisor", "event_actions",
        }
        bad = set(raw) - fields
        if bad:
            raise ValidationError(f"unknown synth spec keys: {sorted(bad)}")
        overrides = dict(raw)
        if "action_lengths" in overrides:
            overrides["action_lengths"] = {
                k: tuple(v) for k, v in overrides["action_lengths"].items()
            }
        if "event_duration" in overrides:
            overrides["event_duration"] = tuple(overrides["event_duration"])
    if args.seed is not None:
        overrides["seed"] = args.seed
    return SynthSpec(**overrides)


def cmd_synth(args) -> int:
    from .synth import write_corpus

    spec = _load_synth_spec(args)
    samples = write_corpus(spec, args.count, args.out_dir)
    log.info("wrote %d samples to %s", len(samples), args.out_dir)
    print(f"samples {len(samples)}")
    print(f"manifest {Path(args.out_dir) / 'manifest.jsonl'}")
    return 0


def cmd_stats(args) -> int:
    timelines = tkio.parse_manifest(args.manifest)
    print(f"records {len(timelines)}")
    labels = sorted({t.label for t in timelines}, key=lambda c: (
        ARMBENCH_CLASSES.index(c) if c in ARMBENCH_CLASSES else len(ARMBENCH_CLASSES), c
    ))
    for label in labels:
        print(f"label.{label} {sum(1 for t in timelines if t.label == label)}")
    frames = [t.frame_count for t in timelines]
    seconds = [t.frame_count / t.fps for t in timelines]
    if timelines:
        print(f"duration.frames.min {min(frames)}")
        print(f"duration.frames.mean {sum(frames) / len(frames):.2f}")
        print(f"duration.frames.max {max(frames)}")
        print(f"duration.seconds.min {min(seconds):.2f}")
        print(f"duration.seconds.mean {sum(seconds) / len(seconds):.2f}")
        print(f"duration.seconds.max {max(seconds):.2f}")
        lengths: dict[str, list[int]] = {}
        for t in timelines:
            for seg in t.segments:
                lengths.setdefault(seg.name, []).append(seg.length)
        for name in sorted(lengths):
            vals = lengths[name]
            print(f"segment.{name}.count {len(vals)}")
            print(f"segment.{name}.mean_length {sum(vals) / len(vals):.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tksample",
        description="Task-knowledge frame sampling, cropping, and evaluation "
        "for video-based robot failure detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("plan", help="emit frame-selection plans as JSON-lines",
                       formatter_class=fmt)
    p.add_argument("--manifest", required=True, help="task manifest (JSON-lines)")
    p.add_argument("--strategy", default="action-subset",
                   choices=["baseline", "action-subset", "single-action"],
                   help="frame-selection strategy")
    p.add_argument("--subset", default="",
                   help="comma-separated action subset (default: MoveDestination,Wait,Place;"
                        " baseline strategy defaults to all actions)")
    p.add_argument("--frames", type=int, default=DEFAULT_FRAMES, help="frames per clip")
    p.add_argument("--offset", type=float, default=0.0,
                   help="fixed start offset for uniform sampling, in [0,1)")
    p.add_argument("--jitter", action="store_true",
                   help="draw the start offset per sample (train-time randomness)")
    p.add_argument("--augment", default="none", choices=["none", "action", "random"],
                   help="variable-frame-rate augmentation variant")
    p.add_argument("--majority-fraction", type=float, default=DEFAULT_MAJORITY_FRACTION,
                   help="fraction of frames given to the high-rate region")
    p.add_argument("--window-fraction", type=float, default=DEFAULT_WINDOW_FRACTION,
                   help="window size as a fraction of the span (random augmentation)")
    p.add_argument("--equal-split", action="store_true",
                   help="split low-rate frames equally instead of by action length")
    p.add_argument("--tta", action="store_true",
                   help="emit the deterministic test-time plan set per sample")
    p.add_argument("--crop", default="none", choices=["roi", "fixed", "none"],
                   help="per-entry crop mode")
    p.add_argument("--fixed-region", default="0,0,1280,560",
                   help="x1,y1,x2,y2 for --crop fixed")
    p.add_argument("--roi-frames", default="all", choices=["all", "sampled"],
                   help="frames the ROI union runs over")
    p.add_argument("--seed", type=int, default=0, help="seed for augmentation draws")
    p.add_argument("--out", default="-", help="output path, or - for stdout")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("materialize", help="write one packed clip per plan",
                       formatter_class=fmt)
    p.add_argument("--plans", required=True, help="plans file (JSON-lines)")
    p.add_argument("--source", required=True,
                   help="frame source root: <root>/<sample_id>.tksf, "
                        "<root>/<sample_id>/ image dirs, or a single source")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--size", type=int, default=224, help="square clip resolution")
    p.add_argument("--jobs", type=int, default=1, help="parallel clip workers")
    p.set_defaults(func=cmd_materialize)

    p = sub.add_parser("eval", help="join predictions with labels and print metrics",
                       formatter_class=fmt)
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True,
                   help="JSON-lines: {sample_id, action?, logits?|label?}")
    p.add_argument("--tta", action="store_true",
                   help="average logit rows per sample before prediction")
    p.add_argument("--classes", default=",".join(ARMBENCH_CLASSES),
                   help="ordered class names, nominal first")
    p.add_argument("--f1-scope", default="failure", choices=["failure", "all"],
                   help="classes included in the macro F1")
    p.add_argument("--json", default="", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic corpus", formatter_class=fmt)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--spec-file", default="", help="JSON overrides for the generator spec")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="print manifest distributions", formatter_class=fmt)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("TKS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        for line in str(exc).splitlines():
            print(f"error: {line}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
