"""Experiment engine: run the full server/client pipeline on one configuration,
sweep parameter grids, and emit CSV reports."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import analysis, codec, inpaint, media, metrics, resample, selection, sidecar
from .media import FrameSequence

STAGES = ("analyze", "select", "shrink", "encode", "decode", "stretch", "inpaint", "metrics")

# Table-style sweep defaults; heights and widths are paired, not crossed.
PAIRED_RESOLUTIONS = ((360, 640), (540, 960), (720, 1280), (900, 1600))


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    video_path: str = ""
    video_kind: str = "png-directory"  # or y4m-file
    block_size: int = 16
    removed_fraction: float = 0.25
    alpha: float = 0.5
    beta: float = 0.5
    width: int = 0  # 0 = keep source geometry
    height: int = 0
    codec_id: str = "null"  # "null" or "external:<name>"
    encode_command: str = ""  # template with {q} {in} {out}
    decode_command: str = ""  # template with {in} {out}
    quality_param: int = 30
    quality_min: int = 0
    quality_max: int = 51
    inpainter_id: str = "temporal-copy"  # temporal-copy | diffusion | external
    inpaint_command: str = ""
    mask_source: str = "none"  # none | motion | <directory of mask PNGs>
    scene_threshold: float = 30.0
    primary_metric: str = "psnr"  # psnr | ssim | mse | vmaf
    vmaf_command: str = ""  # template with {ref} {dist}, optional
    lpips_command: str = ""
    size_match_tolerance: float = 0.05
    seed: int = 0

    def experiment_id(self) -> str:
        """Stable hash of the canonicalized config (reals at 6 decimals)."""
        canon = {}
        for key, val in asdict(self).items():
            canon[key] = round(val, 6) if isinstance(val, float) else val
        blob = json.dumps(canon, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# exact field names accepted by config files / env overrides
CONFIG_FIELDS = {f: t for f, t in ExperimentConfig.__annotations__.items()}


def parse_config_file(path) -> ExperimentConfig:
    """Parse a ``key = value`` config file; '#' starts a comment. Values are
    then overridden by ELVIS_<KEY> environment variables."""
    values: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    return build_config(values)


def build_config(values: dict) -> ExperimentConfig:
    merged = dict(values)
    for key in CONFIG_FIELDS:
        env = os.environ.get(f"ELVIS_{key.upper()}")
        if env is not None:
            merged[key] = env
    kwargs = {}
    for key, val in merged.items():
        if key not in CONFIG_FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        ann = CONFIG_FIELDS[key]
        if isinstance(val, str) and ann == "int":
            val = int(val)
        elif isinstance(val, str) and ann == "float":
            val = float(val)
        kwargs[key] = val
    return ExperimentConfig(**kwargs)


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    experiment_id: str = ""
    stage_seconds: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)  # shrunk_encoded, sidecar, benchmark
    quality_inpainted: metrics.QualityReport | None = None
    quality_benchmark: metrics.QualityReport | None = None
    delivered: str = ""  # "inpainted" | "benchmark"
    total_seconds: float = 0.0
    error: str = ""

    def to_flat_dict(self) -> dict:
        row: dict = {"experiment_id": self.experiment_id}
        for key, val in asdict(self.config).items():
            row[f"config.{key}"] = val
        for stage in STAGES:
            row[f"seconds.{stage}"] = self.stage_seconds.get(stage, "")
        for key in ("shrunk_encoded", "sidecar", "benchmark"):
            row[f"bytes.{key}"] = self.sizes.get(key, "")
        for label, rep in (("inpainted", self.quality_inpainted), ("benchmark", self.quality_benchmark)):
            for m in ("mse", "psnr", "ssim", "vmaf", "lpips"):
                v = getattr(rep, m) if rep is not None else None
                row[f"{label}.{m}"] = "" if v is None else v
        row["delivered"] = self.delivered
        row["total_seconds"] = self.total_seconds
        row["error"] = self.error
        return row


def _scale_sequence(seq: FrameSequence, width: int, height: int) -> FrameSequence:
    if (width in (0, seq.width)) and (height in (0, seq.height)):
        return seq
    w = width or seq.width
    h = height or seq.height
    frames = np.stack(
        [
            np.asarray(Image.fromarray(f).resize((w, h), Image.BILINEAR), dtype=np.uint8)
            for f in seq.frames
        ]
    )
    return FrameSequence(frames, seq.frame_rate)


def _crop_to_original(seq: FrameSequence) -> FrameSequence:
    if seq.height == seq.original_height and seq.width == seq.original_width:
        return seq
    return FrameSequence(
        seq.frames[:, : seq.original_height, : seq.original_width],
        seq.frame_rate,
    )


def _merge_plans(plans: list[selection.RemovalPlan]) -> selection.RemovalPlan:
    head = plans[0]
    removed = tuple(itertools.chain.from_iterable(p.removed for p in plans))
    return selection.RemovalPlan(
        removed=removed,
        block_rows=head.block_rows,
        block_cols=head.block_cols,
        frame_count=sum(p.frame_count for p in plans),
        removed_fraction=head.removed_fraction,
        k=head.k,
    )


def _metric_value(report: metrics.QualityReport, name: str) -> float:
    val = getattr(report, name)
    if val is None:
        raise ValueError(f"primary metric {name!r} unavailable")
    return -val if name in ("mse", "lpips") else val  # lower-is-better flipped


def run_experiment(config: ExperimentConfig, out_dir) -> ExperimentRecord:
    """Execute every pipeline stage for one configuration and record timings,
    sizes, quality, and the fallback decision."""
    record = ExperimentRecord(config=config, experiment_id=config.experiment_id())
    out = Path(out_dir) / "artifacts" / record.experiment_id
    out.mkdir(parents=True, exist_ok=True)
    timings = record.stage_seconds
    total_start = time.monotonic()

    def stage(name: str):
        class _Timer:
            def __enter__(self):
                self.start = time.monotonic()

            def __exit__(self, exc_type, exc, tb):
                timings[name] = timings.get(name, 0.0) + time.monotonic() - self.start
                if exc is not None and not isinstance(exc, ExperimentError):
                    raise ExperimentError(name, exc) from exc

        return _Timer()

    # ---- server side -------------------------------------------------
    with stage("analyze"):
        seq = media.load_sequence(config.video_path, config.video_kind)
        seq = _scale_sequence(seq, config.width, config.height)
        reference = seq
        aligned = media.align_to_blocks(seq, config.block_size)
        segments = media.split_scenes(aligned, config.scene_threshold)
        tensors = [analysis.compute_complexity(s, config.block_size) for s in segments]
        masks = []
        for s, t in zip(segments, tensors):
            if config.mask_source == "none":
                masks.append(analysis.SaliencyMask.empty(t.shape))
            elif config.mask_source == "motion":
                masks.append(analysis.motion_saliency(s, config.block_size))
            else:
                masks.append(analysis.load_masks(config.mask_source, s, config.block_size))

    with stage("select"):
        plans = [
            selection.select_blocks(t, m, config.alpha, config.beta, config.removed_fraction)
            for t, m in zip(tensors, masks)
        ]
        plan = _merge_plans(plans)

    with stage("shrink"):
        shrunk_parts = [
            resample.shrink_sequence(s, p, config.block_size) for s, p in zip(segments, plans)
        ]
        shrunk = aligned.with_frames(np.concatenate([s.frames for s in shrunk_parts]))

    external = config.codec_id.startswith("external")
    codec_name = config.codec_id.split(":", 1)[1] if ":" in config.codec_id else "external"
    with stage("encode"):
        if external:
            artifact = codec.encode_external(
                shrunk, config.encode_command, config.quality_param, out / "shrunk", codec_name
            )
        else:
            artifact = codec.encode_null(shrunk, out / "shrunk")
        geometry = sidecar.SidecarGeometry(
            reference.width, reference.height, config.block_size
        )
        sidecar_bytes = sidecar.encode_sidecar(plan, geometry)
        (out / "mask.elvs").write_bytes(sidecar_bytes)
        record.sizes["shrunk_encoded"] = artifact.size
        record.sizes["sidecar"] = len(sidecar_bytes)

    # ---- client side -------------------------------------------------
    with stage("decode"):
        decoded_plan, decoded_geometry = sidecar.decode_sidecar((out / "mask.elvs").read_bytes())
        if external:
            transported = codec.decode_external(artifact, config.decode_command, out / "shrunk")
        else:
            transported = codec.decode_null(artifact, aligned.frame_rate)

    with stage("stretch"):
        stretched = resample.stretch_sequence(
            transported, decoded_plan, decoded_geometry.block_size
        )
        stretched = FrameSequence(
            stretched.frames,
            aligned.frame_rate,
            decoded_geometry.original_width,
            decoded_geometry.original_height,
        )

    with stage("inpaint"):
        block_masks = np.stack(
            [decoded_plan.frame_mask(n) for n in range(decoded_plan.frame_count)]
        )
        # in-paint each scene segment on its own so temporal sources never
        # cross a cut
        parts = []
        offset = 0
        for seg in segments:
            n = seg.frame_count
            request = inpaint.InpaintRequest(
                stretched.with_frames(stretched.frames[offset : offset + n]),
                block_masks[offset : offset + n],
                decoded_geometry.block_size,
            )
            parts.append(
                inpaint.run_inpaint(
                    request,
                    config.inpainter_id,
                    tool_command=config.inpaint_command or None,
                    workdir=out / f"inpaint_{offset:05d}",
                )
            )
            offset += n
        inpainted = stretched.with_frames(np.concatenate([p.frames for p in parts]))

    # ---- benchmark + metrics ------------------------------------------
    target_bytes = record.sizes["shrunk_encoded"] + record.sizes["sidecar"]
    with stage("metrics"):
        if external:
            bench_artifact = codec.match_size_benchmark(
                aligned,
                target_bytes,
                config.encode_command,
                out / "benchmark",
                (config.quality_min, config.quality_max),
                config.size_match_tolerance,
                codec_name,
            )
            benchmark_seq = codec.decode_external(
                bench_artifact, config.decode_command, out / "benchmark"
            )
            record.sizes["benchmark"] = bench_artifact.size
        else:
            # hermetic benchmark: the transported video without enhancement,
            # charged the same byte budget as the shrunk encoding + sidecar
            benchmark_seq = stretched
            record.sizes["benchmark"] = target_bytes

        inpainted_c = _crop_to_original(
            FrameSequence(inpainted.frames, aligned.frame_rate, reference.width, reference.height)
        )
        benchmark_c = _crop_to_original(
            FrameSequence(
                benchmark_seq.frames, aligned.frame_rate, reference.width, reference.height
            )
        )
        q_in = metrics.quality_report(reference, inpainted_c)
        q_bm = metrics.quality_report(reference, benchmark_c)
        if config.vmaf_command:
            q_in, q_bm = [
                replace_quality_vmaf(q, config, reference, s, out)
                for q, s in ((q_in, inpainted_c), (q_bm, benchmark_c))
            ]
        record.quality_inpainted = q_in
        record.quality_benchmark = q_bm

    primary = config.primary_metric if (config.primary_metric != "vmaf" or config.vmaf_command) else "psnr"
    score_in = _metric_value(record.quality_inpainted, primary)
    score_bm = _metric_value(record.quality_benchmark, primary)
    record.delivered = "inpainted" if score_in >= score_bm else "benchmark"
    record.total_seconds = time.monotonic() - total_start
    return record


def replace_quality_vmaf(report, config, reference, distorted, out_dir):
    """Attach an external VMAF score to a report via the configured hook."""
    from dataclasses import replace as _replace

    ref_path = Path(out_dir) / "vmaf_ref.y4m"
    dist_path = Path(out_dir) / "vmaf_dist.y4m"
    media.write_sequence(reference, ref_path, "y4m-file")
    media.write_sequence(distorted, dist_path, "y4m-file")
    score = metrics.external_metric(config.vmaf_command, ref_path, dist_path)
    return _replace(report, vmaf=score)


# ---------------------------------------------------------------------------
# Sweeps and reports
# ---------------------------------------------------------------------------

# enumeration order for grid keys is the declared config field order
_GRID_KEY_ORDER = list(CONFIG_FIELDS) + ["resolution"]


def expand_grid(base: ExperimentConfig, grid: dict) -> list[ExperimentConfig]:
    """Cartesian product of grid values over the base config, deterministic
    lexicographic order. A ``resolution`` key takes (height, width) pairs."""
    if not grid:
        raise ValueError("empty grid")
    keys = sorted(grid, key=_GRID_KEY_ORDER.index)
    configs = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        if "resolution" in overrides:
            h, w = overrides.pop("resolution")
            overrides["height"] = h
            overrides["width"] = w
        configs.append(replace(base, **overrides))
    return configs


def sweep(
    base: ExperimentConfig,
    grid: dict,
    out_dir,
    budget: int | None = None,
    workers: int = 1,
) -> list[ExperimentRecord]:
    """Run the grid (truncated at ``budget``), skipping experiment IDs already
    recorded under ``out_dir/records``. Failures are recorded, not fatal."""
    configs = expand_grid(base, grid)
    if budget is not None:
        configs = configs[:budget]
    records_dir = Path(out_dir) / "records"
    records_dir.mkdir(parents=True, exist_ok=True)

    def run_one(config: ExperimentConfig) -> ExperimentRecord:
        rec_path = records_dir / f"{config.experiment_id()}.json"
        if rec_path.exists():
            return _load_record(rec_path, config)
        try:
            record = run_experiment(config, out_dir)
        except ExperimentError as exc:
            record = ExperimentRecord(
                config=config, experiment_id=config.experiment_id(), error=str(exc)
            )
        rec_path.write_text(json.dumps(record.to_flat_dict(), sort_keys=True))
        return record

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, configs))
    return [run_one(c) for c in configs]


def _load_record(path: Path, config: ExperimentConfig | None = None) -> ExperimentRecord:
    flat = json.loads(path.read_text())
    if config is None:
        fields = {
            key[len("config.") :]: val for key, val in flat.items() if key.startswith("config.")
        }
        config = ExperimentConfig(**fields)
    record = ExperimentRecord(config=config, experiment_id=flat["experiment_id"])
    record.stage_seconds = {
        s: flat[f"seconds.{s}"] for s in STAGES if flat.get(f"seconds.{s}") != ""
    }
    record.sizes = {
        k: flat[f"bytes.{k}"]
        for k in ("shrunk_encoded", "sidecar", "benchmark")
        if flat.get(f"bytes.{k}") != ""
    }
    for label in ("inpainted", "benchmark"):
        if flat.get(f"{label}.mse") != "":
            rep = metrics.QualityReport(
                mse=flat[f"{label}.mse"],
                psnr=flat[f"{label}.psnr"],
                ssim=flat[f"{label}.ssim"],
                vmaf=flat[f"{label}.vmaf"] or None,
                lpips=flat[f"{label}.lpips"] or None,
            )
            setattr(record, f"quality_{label}", rep)
    record.delivered = flat.get("delivered", "")
    record.total_seconds = flat.get("total_seconds", 0.0)
    record.error = flat.get("error", "")
    return record


_NUMERIC_PARAMS = ("block_size", "removed_fraction", "alpha", "beta", "width", "height", "quality_param")
_CORR_TARGETS = (
    "inpainted.mse",
    "inpainted.psnr",
    "inpainted.ssim",
    "seconds.encode",
    "seconds.inpaint",
)


def report(records: list[ExperimentRecord], out_dir) -> dict:
    """Emit records.csv, correlations.csv, improvement_by_video.csv, and
    timings_by_video.csv under ``out_dir``; returns the file paths."""
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r.to_flat_dict() for r in records]
    fieldnames = list(rows[0])

    records_path = out / "records.csv"
    with open(records_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)

    ok_rows = [r for r in rows if not r["error"]]
    corr_path = out / "correlations.csv"
    with open(corr_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "target", "pearson", "note"])
        for param in _NUMERIC_PARAMS:
            xs = [float(r[f"config.{param}"]) for r in ok_rows]
            for target in _CORR_TARGETS:
                ys = [float(r[target]) for r in ok_rows if r[target] != ""]
                if len(ys) != len(xs) or len(xs) < 2:
                    writer.writerow([param, target, "", "skipped (insufficient data)"])
                    continue
                if len(set(xs)) < 2 or len(set(ys)) < 2:
                    writer.writerow([param, target, "", "skipped (constant)"])
                    continue
                writer.writerow([param, target, f"{metrics.pearson(xs, ys):.6f}", ""])

    by_video: dict[str, list[dict]] = {}
    for r in ok_rows:
        by_video.setdefault(str(r["config.video_path"]), []).append(r)

    improvement_path = out / "improvement_by_video.csv"
    with open(improvement_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["video"]
        for m in ("mse", "psnr", "ssim"):
            header += [f"mean_{m}_improvement", f"max_{m}_improvement"]
        writer.writerow(header)
        for video, group in sorted(by_video.items()):
            row = [video]
            for m in ("mse", "psnr", "ssim"):
                deltas = [
                    float(g[f"inpainted.{m}"]) - float(g[f"benchmark.{m}"])
                    for g in group
                    if g[f"inpainted.{m}"] != "" and g[f"benchmark.{m}"] != ""
                ]
                if deltas:
                    row += [f"{np.mean(deltas):.6f}", f"{max(deltas):.6f}"]
                else:
                    row += ["", ""]
            writer.writerow(row)

    timings_path = out / "timings_by_video.csv"
    with open(timings_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video"] + [f"mean_seconds_{s}" for s in STAGES])
        for video, group in sorted(by_video.items()):
            row = [video]
            for s in STAGES:
                vals = [float(g[f"seconds.{s}"]) for g in group if g[f"seconds.{s}"] != ""]
                row.append(f"{np.mean(vals):.6f}" if vals else "")
            writer.writerow(row)

    return {
        "records": records_path,
        "correlations": corr_path,
        "improvement_by_video": improvement_path,
        "timings_by_video": timings_path,
    }


def load_records(records_dir) -> list[ExperimentRecord]:
    """Load every saved record JSON under a sweep's records directory."""
    paths = sorted(Path(records_dir).glob("*.json"))
    return [_load_record(p) for p in paths]
