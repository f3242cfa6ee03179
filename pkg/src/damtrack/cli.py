"""Command line harness: track, synth, bench, and eval subcommands.

Machine output goes to files; human diagnostics go to stderr. Every failure
exits nonzero with a message naming the offending input, and a partially
written output file is removed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .bench import (capacity_configs, discover_scenarios, ladder_configs,
                    run_disk_scenario, suite_report)
from .config import config_to_dict, load_config, scale_thresholds
from .detection import ScriptedDetector
from .geometry import Box, iou
from .media import load_sequence, write_annotated
from .metrics import SequenceResult, mean_iou, recovery_stats, robustness
from .pipeline import PipelineConfig, TrackOutput, run_sequence
from .synth import (generate, read_events_file, read_gt_file,
                    scenario_spec_from_dict, standard_suite, write_scenario)


def write_track_file(path: str, outputs: list[TrackOutput]) -> None:
    """One JSON record per frame, in frame order."""
    try:
        with open(path, "w", encoding="ascii") as f:
            for out in outputs:
                f.write(json.dumps(out.to_record()) + "\n")
    except BaseException:
        _remove_quiet(path)
        raise


def read_track_file(path: str) -> list[dict]:
    records: list[dict] = []
    with open(path, "r", encoding="ascii") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if int(rec["t"]) != len(records):
                raise ValueError(f"{path}:{line_no}: non-contiguous frame index")
            records.append(rec)
    if not records:
        raise ValueError(f"{path}: empty track file")
    return records


def _remove_quiet(path: str) -> None:
    try:
        os.remove(path)
    except OSError:
        pass


def _write_json(path: str, data: dict) -> None:
    try:
        with open(path, "w", encoding="ascii") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
    except BaseException:
        _remove_quiet(path)
        raise


def _parse_init(text: str) -> Box:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f'bad init box {text!r}: expected "x,y,w,h"')
    x, y, w, h = (float(p) for p in parts)
    return Box(x, y, w, h)


def _load_or_default_config(path: str | None) -> PipelineConfig:
    if path is None:
        cfg = PipelineConfig()
        print("no config given; defaults: "
              + json.dumps(config_to_dict(cfg), sort_keys=True),
              file=sys.stderr)
        return cfg
    return load_config(path)


# --- subcommands --------------------------------------------------------------


def _cmd_track(args: argparse.Namespace) -> int:
    cfg = _load_or_default_config(args.config)
    init_box = _parse_init(args.init)
    if args.detections is None:
        if cfg.use_detector:
            print("no detections file; running without the detector",
                  file=sys.stderr)
            cfg = replace(cfg, use_detector=False)
        detector = None
    else:
        detector = ScriptedDetector.from_file(args.detections)
    outputs, _times, _session = run_sequence(
        load_sequence(args.frames), init_box, detector, cfg)
    write_track_file(args.out, outputs)
    if args.annotate:
        os.makedirs(args.annotate, exist_ok=True)
        for frame, out in zip(load_sequence(args.frames), outputs):
            write_annotated(frame, [(out.mode, out.box)],
                            os.path.join(args.annotate,
                                         f"{frame.index:05d}.ppm"))
    print(f"tracked {len(outputs)} frames -> {args.out}", file=sys.stderr)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if (args.spec is None) == (not args.suite):
        raise ValueError("exactly one of --spec or --suite is required")
    if args.spec is not None:
        with open(args.spec, "r", encoding="ascii") as f:
            specs = [scenario_spec_from_dict(json.load(f))]
    else:
        specs = standard_suite()
    for spec in specs:
        target = os.path.join(args.out, spec.name)
        write_scenario(generate(spec), target)
        print(f"wrote {target} ({spec.length} frames)", file=sys.stderr)
    return 0


def _parse_ablate(text: str) -> list[tuple[str, int]]:
    field, _, values = text.partition("=")
    if field != "ram_drm" or not values:
        raise ValueError(
            f'bad --ablate {text!r}: expected "ram_drm=N,N,..."')
    return [("ram_drm", int(v)) for v in values.split(",")]


def _bench_variants(args: argparse.Namespace,
                    base: PipelineConfig) -> list[tuple[str, PipelineConfig]]:
    chosen = sum(1 for flag in (args.ablate, args.perturb, args.ladder) if flag)
    if chosen > 1:
        raise ValueError("--ablate, --perturb, and --ladder are exclusive")
    if args.ablate:
        return capacity_configs(base, [v for _f, v in _parse_ablate(args.ablate)])
    if args.ladder:
        return ladder_configs(base)
    if args.perturb:
        if not 0.0 < args.perturb < 1.0:
            raise ValueError("--perturb must be in (0, 1)")
        return [
            ("base", base),
            (f"down_{args.perturb:g}", scale_thresholds(base, 1.0 - args.perturb)),
            (f"up_{args.perturb:g}", scale_thresholds(base, 1.0 + args.perturb)),
        ]
    return [("default", base)]


def _format_table(rows: list[dict]) -> str:
    header = (f"{'config':<16} {'mean_iou':>9} {'robust':>7} "
              f"{'recovery':>9} {'med_lat':>8} {'fps':>8}")
    lines = [header, "-" * len(header)]
    for row in rows:
        s = row["summary"]
        lines.append(
            f"{row['config']:<16} {s['mean_iou']:>9.4f} {s['robustness']:>7.4f} "
            f"{s['recovery_rate']:>9.4f} {s['recovery_median_latency']:>8.1f} "
            f"{s['timing']['fps']:>8.1f}")
    return "\n".join(lines)


def _cmd_bench(args: argparse.Namespace) -> int:
    base = _load_or_default_config(args.config)
    paths = discover_scenarios(args.suite)
    rows = []
    for label, cfg in _bench_variants(args, base):
        runs = []
        for path in paths:
            try:
                runs.append(run_disk_scenario(path, cfg))
            except Exception as e:
                raise RuntimeError(
                    f"scenario {path} failed under config {label}: {e}"
                ) from e
        rows.append({"config": label, "summary": suite_report(runs)})
        print(f"finished config {label} ({len(runs)} scenarios)",
              file=sys.stderr)
    report: dict = {"rows": rows}
    if args.perturb:
        base_iou = rows[0]["summary"]["mean_iou"]
        report["iou_fluctuation"] = max(
            abs(r["summary"]["mean_iou"] - base_iou) for r in rows[1:])
    _write_json(args.out, report)
    print(_format_table(rows), file=sys.stderr)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    records = read_track_file(args.pred)
    gt, _occ = read_gt_file(args.gt)
    if len(records) != len(gt):
        raise ValueError(f"prediction/ground-truth length mismatch: "
                         f"{len(records)} vs {len(gt)}")
    boxes = [Box.from_dict(r["box"]) for r in records]
    modes = [str(r["mode"]) for r in records]
    ious = [None if g is None else iou(b, g) for b, g in zip(boxes, gt)]
    result = SequenceResult(ious, modes, [0.0] * len(ious))
    report: dict = {
        "frames": len(ious),
        "mean_iou": mean_iou(result),
        "robustness": robustness(result),
    }
    if args.events is not None:
        events = read_events_file(args.events)
        stats = recovery_stats(result, events)
        report["recovery_rate"] = stats.rate
        report["recovery_mean_latency"] = stats.mean_latency
        report["events"] = stats.total
    _write_json(args.out, report)
    print(f"mean_iou={report['mean_iou']:.4f} "
          f"robustness={report['robustness']:.4f}", file=sys.stderr)
    return 0


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="damtrack",
        description="detection-guided single-object tracking harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track through a frame directory")
    p.add_argument("--frames", required=True, help="directory of frame images")
    p.add_argument("--init", required=True, metavar="X,Y,W,H",
                   help="first-frame box")
    p.add_argument("--detections", help="scripted detections file (JSONL)")
    p.add_argument("--config", help="flat JSON config; defaults if omitted")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--annotate", metavar="DIR",
                   help="also write annotated frames here")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("synth", help="generate synthetic scenarios")
    p.add_argument("--spec", help="JSON scenario spec file")
    p.add_argument("--suite", action="store_true",
                   help="generate the standard benchmark suite")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="run a scenario suite and report metrics")
    p.add_argument("--suite", required=True, help="suite directory")
    p.add_argument("--config", help="flat JSON config; defaults if omitted")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--ablate", metavar="ram_drm=N,N,...",
                   help="sweep memory capacities")
    p.add_argument("--perturb", type=float, metavar="F",
                   help="also run with thresholds scaled by (1-F) and (1+F)")
    p.add_argument("--ladder", action="store_true",
                   help="run the component ladder instead of one config")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("eval", help="score a track file against ground truth")
    p.add_argument("--pred", required=True, help="track output JSONL")
    p.add_argument("--gt", required=True, help="ground-truth JSONL")
    p.add_argument("--events", help="occlusion events JSON for recovery stats")
    p.add_argument("--out", required=True, help="JSON metrics path")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
