"""Command-line interface for the pipeline stages and the experiment engine."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analysis, codec, experiment, inpaint, media, metrics, resample, selection, sidecar


def _guess_kind(path: str) -> str:
    return "y4m-file" if path.endswith(".y4m") else "png-directory"


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="frame directory or .y4m file")
    p.add_argument("--kind", choices=["png-directory", "y4m-file"], default=None)
    p.add_argument("--block-size", type=int, default=16)


def _load_aligned(args) -> media.FrameSequence:
    kind = args.kind or _guess_kind(args.input)
    seq = media.load_sequence(args.input, kind)
    return media.align_to_blocks(seq, args.block_size)


def _add_selection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--removed-fraction", "-r", type=float, default=0.25)
    p.add_argument("--mask-source", default="none", help="'none', 'motion', or a mask PNG directory")


def _make_plan(seq, args) -> selection.RemovalPlan:
    tensors = analysis.compute_complexity(seq, args.block_size)
    if args.mask_source == "none":
        mask = analysis.SaliencyMask.empty(tensors.shape)
    elif args.mask_source == "motion":
        mask = analysis.motion_saliency(seq, args.block_size)
    else:
        mask = analysis.load_masks(args.mask_source, seq, args.block_size)
    return selection.select_blocks(tensors, mask, args.alpha, args.beta, args.removed_fraction)


def cmd_analyze(args) -> int:
    seq = _load_aligned(args)
    tensors = analysis.compute_complexity(seq, args.block_size)
    analysis.export_complexity_csv(tensors, args.out)
    print(f"wrote complexity CSV for {seq.frame_count} frames to {args.out}")
    return 0


def cmd_select(args) -> int:
    seq = _load_aligned(args)
    plan = _make_plan(seq, args)
    selection.export_plan_csv(plan, args.out)
    print(f"plan: {plan.k} of {plan.block_cols} blocks per row, {plan.frame_count} frames -> {args.out}")
    return 0


def cmd_shrink(args) -> int:
    kind = args.kind or _guess_kind(args.input)
    seq = media.load_sequence(args.input, kind)
    aligned = media.align_to_blocks(seq, args.block_size)
    plan = _make_plan(aligned, args)
    shrunk = resample.shrink_sequence(aligned, plan, args.block_size)
    media.write_sequence(shrunk, args.out, "png-directory")
    geometry = sidecar.SidecarGeometry(seq.width, seq.height, args.block_size)
    Path(args.sidecar).write_bytes(sidecar.encode_sidecar(plan, geometry))
    print(f"shrunk to {shrunk.width}x{shrunk.height}, sidecar -> {args.sidecar}")
    return 0


def _stretch_from_sidecar(args):
    plan, geometry = sidecar.decode_sidecar(Path(args.sidecar).read_bytes())
    kind = args.kind or _guess_kind(args.input)
    shrunk = media.load_sequence(args.input, kind)
    stretched = resample.stretch_sequence(shrunk, plan, geometry.block_size)
    return plan, geometry, stretched


def cmd_stretch(args) -> int:
    _, _, stretched = _stretch_from_sidecar(args)
    media.write_sequence(stretched, args.out, "png-directory")
    print(f"stretched to {stretched.width}x{stretched.height} -> {args.out}")
    return 0


def cmd_inpaint(args) -> int:
    plan, geometry, stretched = _stretch_from_sidecar(args)
    block_masks = np.stack([plan.frame_mask(n) for n in range(plan.frame_count)])
    request = inpaint.InpaintRequest(stretched, block_masks, geometry.block_size)
    result = inpaint.run_inpaint(
        request, args.backend, tool_command=args.tool_command, workdir=args.workdir
    )
    media.write_sequence(result, args.out, "png-directory")
    print(f"in-painted {result.frame_count} frames -> {args.out}")
    return 0


def cmd_encode(args) -> int:
    kind = args.kind or _guess_kind(args.input)
    seq = media.load_sequence(args.input, kind)
    if args.command:
        artifact = codec.encode_external(seq, args.command, args.quality, args.out)
    else:
        artifact = codec.encode_null(seq, args.out)
    print(f"{artifact.codec_id}: {artifact.size} bytes in {artifact.encode_seconds:.3f}s")
    return 0


def cmd_metrics(args) -> int:
    ref = media.load_sequence(args.reference, _guess_kind(args.reference))
    dist = media.load_sequence(args.distorted, _guess_kind(args.distorted))
    report = metrics.quality_report(ref, dist)
    print(json.dumps(asdict(report), indent=2))
    return 0


def cmd_run(args) -> int:
    config = experiment.parse_config_file(args.config)
    record = experiment.run_experiment(config, args.out)
    print(json.dumps(record.to_flat_dict(), indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    config = experiment.parse_config_file(args.config)
    grid = json.loads(Path(args.grid).read_text())
    if "resolution" in grid:
        grid["resolution"] = [tuple(p) for p in grid["resolution"]]
    records = experiment.sweep(config, grid, args.out, budget=args.budget, workers=args.workers)
    paths = experiment.report(records, args.out)
    failed = sum(1 for r in records if r.error)
    print(f"{len(records)} experiments ({failed} failed); reports in {paths['records'].parent}")
    return 0


def cmd_report(args) -> int:
    records = experiment.load_records(Path(args.records_dir))
    paths = experiment.report(records, args.out)
    print("\n".join(str(p) for p in paths.values()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elvis", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="export per-block complexity CSV")
    _add_input_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("select", help="export a block removal plan CSV")
    _add_input_args(p)
    _add_selection_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("shrink", help="remove planned blocks and write the sidecar")
    _add_input_args(p)
    _add_selection_args(p)
    p.add_argument("--out", required=True, help="output PNG directory")
    p.add_argument("--sidecar", required=True, help="output .elvs path")
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("stretch", help="reinsert placeholder blocks from a sidecar")
    p.add_argument("input")
    p.add_argument("--kind", choices=["png-directory", "y4m-file"], default=None)
    p.add_argument("--sidecar", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stretch)

    p = sub.add_parser("inpaint", help="stretch and restore placeholder blocks")
    p.add_argument("input")
    p.add_argument("--kind", choices=["png-directory", "y4m-file"], default=None)
    p.add_argument("--sidecar", required=True)
    p.add_argument("--backend", choices=list(inpaint.BACKENDS), default="temporal-copy")
    p.add_argument("--tool-command", default=None, help="external tool template with {frames} {masks} {out}")
    p.add_argument("--workdir", default="inpaint_work")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("encode", help="encode a sequence (null codec by default)")
    p.add_argument("input")
    p.add_argument("--kind", choices=["png-directory", "y4m-file"], default=None)
    p.add_argument("--command", default=None, help="external encoder template with {q} {in} {out}")
    p.add_argument("--quality", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("metrics", help="full-reference quality of distorted vs reference")
    p.add_argument("reference")
    p.add_argument("distorted")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("run", help="run one experiment from a config file")
    p.add_argument("config")
    p.add_argument("--out", default="experiments")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter grid of experiments")
    p.add_argument("config")
    p.add_argument("--grid", required=True, help="JSON file of {parameter: [values]}")
    p.add_argument("--out", default="experiments")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="regenerate reports from saved records")
    p.add_argument("records_dir")
    p.add_argument("--out", default="reports")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
