"""
Command-line interface: `psd <command> [options]`.

Commands:
    gen-data        Render the synthetic train/val stereo datasets
    train-teacher   Train (and optionally over-train) the binocular teacher
    export-pseudo   Write teacher pseudo labels for the training split
    train-student   Train the monocular student on pseudo labels
    eval            Depth metrics of a checkpoint or a prediction directory
    infer           Disparity and depth maps for a single image
    gradcheck       Finite-difference gradient checks of losses and networks

Every command accepts `--config PATH` (JSON), `--set section.key=value`
(repeatable) and `--out DIR`; stage commands also take `--seed N`. Settings
may also be overridden through `PSD_<SECTION>__<KEY>` environment variables.
Exit status is 0 on success, 2 for configuration errors and 1 for any other
failure.
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from pseudodepth import __version__
from pseudodepth.checkpoint import load_checkpoint
from pseudodepth.config import SEED_SECTIONS, RunConfig, build_overrides, load_run_config
from pseudodepth.dataset import (
    read_dataset,
    read_disparities,
    read_pseudo_labels,
    write_dataset,
    write_pseudo_labels,
)
from pseudodepth.errors import CheckpointError, ConfigError, DatasetError, PseudoDepthError
from pseudodepth.formats import read_ppm, write_pfm, write_ppm
from pseudodepth.geometry import disparity_to_depth
from pseudodepth.gradcheck import run_gradcheck
from pseudodepth.logging_setup import get_logger, setup_logging
from pseudodepth.metrics import (
    aggregate_reports,
    evaluate_disparity,
    format_report_table,
    report_csv_header,
    report_csv_row,
)
from pseudodepth.models import EvalReport
from pseudodepth.network import StudentNet
from pseudodepth.synthdata import generate_dataset
from pseudodepth.trainer import (
    evaluate_student,
    evaluate_teacher,
    export_pseudo_labels,
    over_train_teacher,
    train_student,
    train_teacher,
)
from pseudodepth.utils import atomic_write_bytes, configure_torch_runtime

logger = get_logger(__name__)

OUT_KEYS = {
    "gen-data": "data_dir",
    "train-teacher": "teacher_dir",
    "export-pseudo": "pseudo_dir",
    "train-student": "student_dir",
    "eval": "eval_dir",
    "infer": "infer_dir",
    "gradcheck": "gradcheck_dir",
}

# Dark-to-bright colour ramp for disparity previews.
_PREVIEW_STOPS = (
    np.array(
        [[0, 0, 4], [80, 18, 123], [182, 54, 121], [251, 136, 97], [252, 253, 191]],
        dtype=np.float64,
    )
    / 255.0
)

Handler = Callable[[RunConfig, argparse.Namespace], int]


# ============================================================================
# Commands
# ============================================================================


def cmd_gen_data(config: RunConfig, args: argparse.Namespace) -> int:
    """Render and persist the train and validation splits."""
    scene = config.scene
    digest = config.digest()
    train = generate_dataset(scene, scene.train_samples)
    write_dataset(train, config.paths.split_dir("train"), config_digest=digest)
    if scene.val_samples:
        val = generate_dataset(scene, scene.val_samples, offset=scene.train_samples)
        write_dataset(val, config.paths.split_dir("val"), config_digest=digest)
    config.write_resolved(config.paths.data_dir)
    print(
        f"Wrote {scene.train_samples} training and {scene.val_samples} validation samples "
        f"to {config.paths.data_dir}"
    )
    return 0


def cmd_train_teacher(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the teacher, over-train it, and report training-set metrics."""
    samples = read_dataset(config.paths.split_dir("train"))
    out_dir = config.paths.teacher_dir
    config.write_resolved(out_dir)
    result = train_teacher(
        samples,
        samples,
        config.teacher,
        config.model,
        config.losses,
        out_dir,
        resume_from=args.resume,
        config_digest=config.digest(),
    )
    report = evaluate_teacher(result.final_checkpoint, samples, config.eval.cap)
    print(format_report_table(report, "Teacher"))

    if config.teacher.over_train_epochs:
        over = over_train_teacher(
            result.final_checkpoint,
            samples,
            config.teacher,
            out_dir,
            config_digest=config.digest(),
        )
        report = evaluate_teacher(over.final_checkpoint, samples, config.eval.cap)
        print(format_report_table(report, "Teacher (over-trained)"))
    return 0


def cmd_export_pseudo(config: RunConfig, args: argparse.Namespace) -> int:
    """Export pseudo labels for the training split."""
    checkpoint = config.paths.resolved_teacher_checkpoint()
    pairs = [s.pair() for s in read_dataset(config.paths.split_dir("train"))]
    pseudo = export_pseudo_labels(checkpoint, pairs, config.pseudo.occlusion_tau)
    write_pseudo_labels(pseudo, config.paths.pseudo_dir)
    config.write_resolved(config.paths.pseudo_dir)
    print(f"Wrote {len(pseudo)} pseudo labels from {checkpoint} to {config.paths.pseudo_dir}")
    return 0


def cmd_train_student(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the student and report validation metrics when a split exists."""
    pairs = [s.pair() for s in read_dataset(config.paths.split_dir("train"))]
    pseudo = None
    if config.student.variant.uses_pgt:
        pseudo = read_pseudo_labels(config.paths.pseudo_dir)
    out_dir = config.paths.student_dir
    config.write_resolved(out_dir)
    result = train_student(
        pairs,
        pseudo,
        config.student,
        config.model,
        config.losses,
        out_dir,
        resume_from=args.resume,
        config_digest=config.digest(),
    )
    val_dir = config.paths.split_dir("val")
    if val_dir.is_dir():
        report = evaluate_student(result.final_checkpoint, read_dataset(val_dir), config.eval.cap)
        print(format_report_table(report, f"Student ({config.student.variant.value})"))
    return 0


def _evaluate_predictions(config: RunConfig, split: Path) -> EvalReport:
    assert config.eval.predictions_dir is not None
    samples = read_dataset(split)
    predictions = read_disparities(config.eval.predictions_dir)
    reports = []
    for sample in samples:
        if sample.index not in predictions:
            raise DatasetError(
                f"no prediction for sample {sample.index}", config.eval.predictions_dir
            )
        reports.append(
            evaluate_disparity(
                predictions[sample.index],
                sample.gt_disparity_l,
                sample.camera,
                sample.width,
                cap=config.eval.cap,
                min_depth=config.eval.min_depth,
            )
        )
    return aggregate_reports(reports)


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> int:
    """Evaluate and write `report.csv` plus a printed table."""
    options = config.eval
    split = config.paths.split_dir(options.split)
    if options.target == "predictions":
        report = _evaluate_predictions(config, split)
    elif options.target == "teacher":
        checkpoint = options.checkpoint or config.paths.resolved_teacher_checkpoint()
        report = evaluate_teacher(checkpoint, read_dataset(split), options.cap, options.min_depth)
    else:
        checkpoint = options.checkpoint or config.paths.student_checkpoint()
        report = evaluate_student(checkpoint, read_dataset(split), options.cap, options.min_depth)

    out_dir = config.paths.eval_dir
    csv_text = report_csv_header() + "\n" + report_csv_row(report) + "\n"
    atomic_write_bytes(out_dir / "report.csv", csv_text.encode("utf-8"))
    config.write_resolved(out_dir)
    print(format_report_table(report, f"{options.target} ({options.split})"))
    logger.info("Evaluation complete", extra={"target": options.target, **report.model_dump()})
    return 0


def colorize_disparity(disparity: np.ndarray, d_max: float) -> np.ndarray:
    """Map a disparity plane to an (H, W, 3) colour preview in [0, 1]."""
    scaled = np.clip(disparity / d_max, 0.0, 1.0)
    stops = np.linspace(0.0, 1.0, len(_PREVIEW_STOPS))
    channels = [np.interp(scaled, stops, _PREVIEW_STOPS[:, c]) for c in range(3)]
    return np.stack(channels, axis=-1)


def cmd_infer(config: RunConfig, args: argparse.Namespace) -> int:
    """Write disparity and depth PFMs (and a preview) for one image."""
    image_path = config.infer.image
    if image_path is None:
        raise ConfigError("infer needs an image (positional argument or infer.image)")
    checkpoint = config.infer.checkpoint or config.paths.student_checkpoint()
    net = load_checkpoint(checkpoint).build_network()
    if not isinstance(net, StudentNet):
        raise CheckpointError(f"infer expects a student checkpoint: {checkpoint}")
    net.eval()

    image = read_ppm(image_path)
    tensor = torch.from_numpy(image.transpose(2, 0, 1).astype(np.float32))[None]
    size = tuple(tensor.shape[-2:])
    scene_size = (config.scene.height, config.scene.width)
    resized = size != scene_size
    if resized:
        logger.info(
            "Resizing input to the training resolution",
            extra={"input_size": list(size), "scene_size": list(scene_size)},
        )
        tensor = F.interpolate(tensor, size=scene_size, mode="bilinear", align_corners=False)
    with torch.no_grad():
        prediction = net(tensor)
        if resized:
            # Width-normalized disparity is resolution independent.
            prediction = F.interpolate(prediction, size=size, mode="bilinear", align_corners=False)
    disparity = prediction[0, 0].numpy()
    # The camera focal length refers to the scene width.
    depth = disparity_to_depth(disparity, config.scene.camera, config.scene.width)

    out_dir = config.paths.infer_dir
    stem = Path(image_path).stem
    write_pfm(out_dir / f"{stem}_disp.pfm", disparity)
    write_pfm(out_dir / f"{stem}_depth.pfm", np.asarray(depth, dtype=np.float32))
    if config.infer.preview:
        write_ppm(out_dir / f"{stem}_preview.ppm", colorize_disparity(disparity, net.arch.d_max))
    config.write_resolved(out_dir)
    print(f"Wrote disparity and depth for {image_path} to {out_dir}")
    return 0


def cmd_gradcheck(config: RunConfig, args: argparse.Namespace) -> int:
    """Run the gradient checks; exit 1 if any fails."""
    report = run_gradcheck(config.gradcheck, config.model, config.losses)
    text = report.format()
    out_dir = config.paths.gradcheck_dir
    atomic_write_bytes(out_dir / "gradcheck.txt", (text + "\n").encode("utf-8"))
    config.write_resolved(out_dir)
    print(text)
    for failure in report.failures:
        if failure.detail:
            print(f"  {failure.name}: {failure.detail}", file=sys.stderr)
    return 0 if report.passed else 1


COMMANDS: Dict[str, Handler] = {
    "gen-data": cmd_gen_data,
    "train-teacher": cmd_train_teacher,
    "export-pseudo": cmd_export_pseudo,
    "train-student": cmd_train_student,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "gradcheck": cmd_gradcheck,
}


# ============================================================================
# Parsing
# ============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psd", description="Pseudo-supervised monocular depth pipeline"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Override PSD_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, handler in COMMANDS.items():
        sub = subparsers.add_parser(name, help=(handler.__doc__ or "").strip().splitlines()[0])
        sub.add_argument("--config", type=Path, default=None, help="JSON config file")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Override a config value, e.g. teacher.epochs=5 (repeatable)",
        )
        sub.add_argument(
            "--out", type=Path, default=None, help=f"Output directory (paths.{OUT_KEYS[name]})"
        )
        if name in SEED_SECTIONS:
            sub.add_argument(
                "--seed", type=int, default=None, help=f"Seed of the {SEED_SECTIONS[name]} stage"
            )
        if name in ("train-teacher", "train-student"):
            sub.add_argument("--resume", type=Path, default=None, help="Checkpoint to resume from")
        if name == "infer":
            sub.add_argument("image", nargs="?", type=Path, default=None, help="Input PPM image")
    return parser


def _collect_overrides(args: argparse.Namespace) -> Dict[str, object]:
    overrides = build_overrides(args.overrides)
    if getattr(args, "seed", None) is not None:
        overrides.setdefault(SEED_SECTIONS[args.command], {})["seed"] = args.seed
    if args.out is not None:
        overrides.setdefault("paths", {})[OUT_KEYS[args.command]] = str(args.out)
    if getattr(args, "image", None) is not None:
        overrides.setdefault("infer", {})["image"] = str(args.image)
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the `psd` console script."""
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    setup_logging(level=args.log_level)
    configure_torch_runtime()

    try:
        config = load_run_config(args.config, _collect_overrides(args))
        logger.info("Running command", extra={"command": args.command, "digest": config.digest()})
        return COMMANDS[args.command](config, args)
    except ConfigError as e:
        logger.debug("Configuration error", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except PseudoDepthError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
