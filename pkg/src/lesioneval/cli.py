"""Command-line interface: evaluate, tune-tau, inspect."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .components import find_connected_components
from .errors import LesionEvalError, ManifestParseError
from .nifti import read_volume
from .pipeline import (
    ManifestRow,
    RunConfig,
    SampleFailure,
    evaluate_sample,
    read_manifest,
)
from .report import emit_reports
from .stratify import BIN_NAMES, categorize
from .synth import DEFAULT_SWEEP_GRID, SynthParams, generate_case, tau_sweep
from .volume import binarize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=0.35, help="IoU match threshold")
    p.add_argument("--connectivity", type=int, choices=(6, 18, 26), default=6)
    p.add_argument("--distance-units", choices=("mm", "voxels"), default="mm")
    p.add_argument(
        "--hd95-variant", choices=("pooled", "max-of-directed"), default="pooled"
    )
    p.add_argument("--threshold", type=float, default=0.5, help="binarize threshold")
    p.add_argument("--out", default="lesioneval-out", help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lesioneval",
        description="Lesion-wise evaluation of 3D binary segmentation masks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="evaluate GT/prediction mask pairs")
    ev.add_argument("--manifest", help="CSV with sample_id,gt_path,pred_path")
    ev.add_argument("--gt", help="single-pair mode: ground-truth mask")
    ev.add_argument("--pred", help="single-pair mode: predicted mask")
    _add_eval_flags(ev)

    tune = sub.add_parser("tune-tau", help="sweep tau on synthetic cases")
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--cases", type=int, default=20)
    tune.add_argument("--grid-size", type=int, default=96)
    tune.add_argument("--out", default="lesioneval-tune")
    tune.add_argument(
        "--taus", type=float, nargs="*", default=None,
        help="sweep grid (default 0.05..0.95 step 0.05)",
    )

    ins = sub.add_parser("inspect", help="summarize one mask volume")
    ins.add_argument("volume")
    ins.add_argument("--threshold", type=float, default=0.5)
    return parser


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if bool(args.manifest) == bool(args.gt or args.pred):
        print("evaluate needs either --manifest or both --gt and --pred",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        config = RunConfig(
            tau=args.tau,
            connectivity=args.connectivity,
            distance_units=args.distance_units,
            hd95_variant=args.hd95_variant,
            binarize_threshold=args.threshold,
            output_dir=args.out,
            parallelism=args.jobs,
        )
    except ValueError as e:
        print(f"bad config: {e}", file=sys.stderr)
        return EXIT_USAGE

    if args.manifest:
        try:
            rows = read_manifest(args.manifest)
        except ManifestParseError as e:
            print(str(e), file=sys.stderr)
            return EXIT_USAGE
    else:
        if not (args.gt and args.pred):
            print("single-pair mode needs both --gt and --pred", file=sys.stderr)
            return EXIT_USAGE
        rows = [ManifestRow("sample", args.gt, args.pred)]

    def run_one(row: ManifestRow):
        try:
            return evaluate_sample(row, config), None
        except (LesionEvalError, OSError, ValueError) as e:
            return None, SampleFailure(row.sample_id, f"{type(e).__name__}: {e}")

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(run_one, rows))
    else:
        outcomes = [run_one(r) for r in rows]

    samples = [s for s, _ in outcomes if s is not None]
    failures = [f for _, f in outcomes if f is not None]
    failures.sort(key=lambda f: f.sample_id)
    emit_reports(samples, config, args.out, failures, formats=args.format)

    for f in failures:
        print(f"FAILED {f.sample_id}: {f.reason}", file=sys.stderr)
    print(f"evaluated {len(samples)}/{len(rows)} samples -> {args.out}")
    return EXIT_PARTIAL if failures else EXIT_OK


def _cmd_tune_tau(args: argparse.Namespace) -> int:
    params = SynthParams(
        dims=(args.grid_size, args.grid_size, 1),
        counts={"VerySmall": 2, "Small": 4, "Medium": 3, "Large": 1},
        kinds=("none", "shift", "dilate", "erode", "drop"),
        shift_max=2,
        dilate_max=1,
        erode_max=1,
        n_spurious=2,
    )
    cases = [generate_case(params, args.seed + i) for i in range(args.cases)]
    taus = args.taus if args.taus else DEFAULT_SWEEP_GRID
    result = tau_sweep(cases, sorted(taus))

    import csv as _csv
    import os

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "tau_sweep.csv")
    with open(csv_path, "w", newline="") as f:
        w = _csv.writer(f, lineterminator="\n")
        w.writerow(["tau", "f1"])
        for tau, f1 in zip(result.taus, result.f1_at_tau):
            w.writerow([tau, repr(f1)])
    json_path = os.path.join(args.out, "best_tau.json")
    with open(json_path, "w") as f:
        json.dump(
            {"best_tau": result.best_tau, "seed": args.seed, "n_cases": args.cases},
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    print(f"best tau {result.best_tau} -> {json_path}")
    return EXIT_OK


def _cmd_inspect(args: argparse.Namespace) -> int:
    vol = read_volume(args.volume)
    mask = binarize(vol, args.threshold)
    print(f"dims: {vol.dims[0]} x {vol.dims[1]} x {vol.dims[2]}")
    print(f"spacing (mm): {vol.spacing[0]:g} x {vol.spacing[1]:g} x {vol.spacing[2]:g}")
    print(f"foreground voxels: {mask.foreground_count()}")
    for conn in (6, 18, 26):
        ls = find_connected_components(mask, conn)
        print(f"lesions (connectivity {conn}): {len(ls)}")
    ls = find_connected_components(mask, 6)
    counts = {name: 0 for name in BIN_NAMES}
    for l in ls.lesions:
        counts[categorize(l.volume_vox).name] += 1
    for name in BIN_NAMES:
        print(f"  {name}: {counts[name]}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "tune-tau":
            return _cmd_tune_tau(args)
        if args.command == "inspect":
            return _cmd_inspect(args)
    except LesionEvalError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
