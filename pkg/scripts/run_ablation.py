#!/usr/bin/env python3
"""
Paired multi-seed ablation runs of the teacher and student stages.

For every seed this script:
1. Renders the train/val splits with that seed
2. Trains the teacher (and, with --teacher-ablation, a teacher without the
   semantic smoothness phase), then over-trains it
3. Exports pseudo labels from the over-trained teacher
4. Trains one student per requested variant
5. Evaluates the teachers on both splits and the students on the validation split

The summary prints the mean metrics per method across seeds, followed by the
direction checks: over-training keeps training-set Abs Rel in every seed, mean
validation Abs Rel is ordered full <= pgt <= photometric within 0.005, and the
full student stays within a factor of two of the teacher. The exit status is 1
when a check fails.

Usage:
    python scripts/run_ablation.py --config run.json --seeds 0 1 2 --out runs/ablation

    # Only two student variants, with the teacher ablation:
    python scripts/run_ablation.py --variants photometric full --teacher-ablation
"""

import argparse
import sys
from pathlib import Path
from typing import List

# Add parent directory to path to import pseudodepth modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from pseudodepth.ablation import (  # noqa: E402
    TEACHER,
    TEACHER_NO_SEM,
    TEACHER_OVER,
    SeedResult,
    format_summary,
    run_checks,
    student_method,
)
from pseudodepth.config import RunConfig, build_overrides, load_run_config  # noqa: E402
from pseudodepth.errors import PseudoDepthError  # noqa: E402
from pseudodepth.logging_setup import get_logger, setup_logging  # noqa: E402
from pseudodepth.models import StudentVariant  # noqa: E402
from pseudodepth.synthdata import generate_dataset  # noqa: E402
from pseudodepth.trainer import (  # noqa: E402
    evaluate_student,
    evaluate_teacher,
    export_pseudo_labels,
    over_train_teacher,
    train_student,
    train_teacher,
)
from pseudodepth.utils import configure_torch_runtime  # noqa: E402

logger = get_logger(__name__)


def _seeded(config: RunConfig, seed: int) -> RunConfig:
    return config.model_copy(
        update={
            "scene": config.scene.model_copy(update={"seed": seed}),
            "teacher": config.teacher.model_copy(update={"seed": seed}),
            "student": config.student.model_copy(update={"seed": seed}),
        }
    )


def run_seed(
    config: RunConfig,
    seed: int,
    out_dir: Path,
    variants: List[StudentVariant],
    teacher_ablation: bool,
) -> SeedResult:
    """Run every stage for one seed and collect training and validation reports."""
    config = _seeded(config, seed)
    scene = config.scene
    cap = config.eval.cap
    digest = config.digest()
    train = generate_dataset(scene, scene.train_samples)
    val = generate_dataset(scene, max(scene.val_samples, 1), offset=scene.train_samples)
    pairs = [s.pair() for s in train]
    result = SeedResult(seed=seed)

    teacher = train_teacher(
        train,
        train,
        config.teacher,
        config.model,
        config.losses,
        out_dir / "teacher",
        config_digest=digest,
    )
    result.train[TEACHER] = evaluate_teacher(teacher.final_checkpoint, train, cap)
    result.val[TEACHER] = evaluate_teacher(teacher.final_checkpoint, val, cap)

    if teacher_ablation:
        plain = config.teacher.model_copy(update={"semantic_booster": False})
        ablated = train_teacher(
            train,
            train,
            plain,
            config.model,
            config.losses,
            out_dir / "teacher_no_sem",
            config_digest=digest,
        )
        result.val[TEACHER_NO_SEM] = evaluate_teacher(ablated.final_checkpoint, val, cap)

    over = over_train_teacher(
        teacher.final_checkpoint, train, config.teacher, out_dir / "teacher", config_digest=digest
    )
    if over.final_checkpoint != teacher.final_checkpoint:
        result.train[TEACHER_OVER] = evaluate_teacher(over.final_checkpoint, train, cap)
        result.val[TEACHER_OVER] = evaluate_teacher(over.final_checkpoint, val, cap)

    pseudo = export_pseudo_labels(over.final_checkpoint, pairs, config.pseudo.occlusion_tau)
    for variant in variants:
        student_config = config.student.model_copy(update={"variant": variant})
        trained = train_student(
            pairs,
            pseudo if variant.uses_pgt else None,
            student_config,
            config.model,
            config.losses,
            out_dir / f"student_{variant.value}",
            config_digest=digest,
        )
        result.val[student_method(variant)] = evaluate_student(trained.final_checkpoint, val, cap)

    for method, report in result.val.items():
        logger.info(
            "Evaluated method",
            extra={"seed": seed, "method": method, "abs_rel": report.abs_rel},
        )
    return result


def main() -> int:
    parser = argparse.ArgumentParser(description="Multi-seed teacher and student ablations")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a config value (repeatable)",
    )
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument(
        "--variants",
        nargs="+",
        choices=[v.value for v in StudentVariant],
        default=[v.value for v in StudentVariant],
    )
    parser.add_argument(
        "--teacher-ablation",
        action="store_true",
        help="Also train a teacher without the semantic smoothness phase",
    )
    parser.add_argument("--out", type=Path, default=Path("runs/ablation"))
    args = parser.parse_args()

    setup_logging()
    configure_torch_runtime()
    try:
        config = load_run_config(args.config, build_overrides(args.overrides))
        variants = [StudentVariant(v) for v in args.variants]
        results = [
            run_seed(config, seed, args.out / f"seed_{seed}", variants, args.teacher_ablation)
            for seed in args.seeds
        ]
    except PseudoDepthError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    print(format_summary(results))
    return 0 if all(check.passed for check in run_checks(results)) else 1


if __name__ == "__main__":
    sys.exit(main())
