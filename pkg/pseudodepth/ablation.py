"""Direction checks over paired multi-seed teacher and student runs."""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from pseudodepth.errors import InvalidInputError
from pseudodepth.metrics import TABLE_COLUMNS
from pseudodepth.models import EvalReport, StudentVariant

TEACHER = "teacher"
TEACHER_NO_SEM = "teacher (no semantic phase)"
TEACHER_OVER = "teacher (over-trained)"

# Mean validation Abs Rel may exceed the next method by this much and still count as ordered.
ORDER_TOLERANCE = 0.005
DISTILL_FACTOR = 2.0


def student_method(variant: StudentVariant) -> str:
    return f"student ({variant.value})"


@dataclass
class SeedResult:
    """Reports of one seed: training-split teacher reports and validation reports."""

    seed: int
    train: Dict[str, EvalReport] = field(default_factory=dict)
    val: Dict[str, EvalReport] = field(default_factory=dict)


@dataclass
class DirectionCheck:
    name: str
    passed: bool
    detail: str

    def format(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _mean_abs_rel(results: Sequence[SeedResult], method: str) -> Optional[float]:
    values = [r.val[method].abs_rel for r in results if method in r.val]
    if len(values) != len(results):
        return None
    return sum(values) / len(values)


def check_over_training(results: Sequence[SeedResult]) -> Optional[DirectionCheck]:
    """Over-trained teacher training-set Abs Rel <= regular teacher's, in every seed."""
    paired = [r for r in results if TEACHER in r.train and TEACHER_OVER in r.train]
    if not paired:
        return None
    wins = sum(1 for r in paired if r.train[TEACHER_OVER].abs_rel <= r.train[TEACHER].abs_rel)
    return DirectionCheck(
        "over-training keeps training-set Abs Rel",
        wins == len(paired),
        f"{wins}/{len(paired)} seeds",
    )


def check_semantic_phase(results: Sequence[SeedResult]) -> Optional[DirectionCheck]:
    """Teacher with the semantic phase <= teacher without it, in every seed (validation)."""
    paired = [r for r in results if TEACHER in r.val and TEACHER_NO_SEM in r.val]
    if not paired:
        return None
    wins = sum(1 for r in paired if r.val[TEACHER].abs_rel <= r.val[TEACHER_NO_SEM].abs_rel)
    return DirectionCheck(
        "semantic phase keeps validation Abs Rel",
        wins == len(paired),
        f"{wins}/{len(paired)} seeds",
    )


def check_ablation_order(
    results: Sequence[SeedResult], tolerance: float = ORDER_TOLERANCE
) -> Optional[DirectionCheck]:
    """Mean validation Abs Rel ordered full <= pgt <= photometric, ties within `tolerance`."""
    order = [StudentVariant.FULL, StudentVariant.PGT, StudentVariant.PHOTOMETRIC]
    means = [_mean_abs_rel(results, student_method(v)) for v in order]
    if any(m is None for m in means):
        return None
    values = [float(m) for m in means if m is not None]
    passed = all(a <= b + tolerance for a, b in zip(values, values[1:]))
    detail = " <= ".join(f"{v.value} {m:.4f}" for v, m in zip(order, values))
    return DirectionCheck("student ablation order", passed, f"{detail} (tolerance {tolerance:g})")


def check_distillation(
    results: Sequence[SeedResult],
    variant: StudentVariant = StudentVariant.FULL,
    factor: float = DISTILL_FACTOR,
) -> Optional[DirectionCheck]:
    """Mean student validation Abs Rel within `factor` of the pseudo-label teacher's."""
    teacher = TEACHER_OVER if all(TEACHER_OVER in r.val for r in results) else TEACHER
    teacher_mean = _mean_abs_rel(results, teacher)
    student_mean = _mean_abs_rel(results, student_method(variant))
    if teacher_mean is None or student_mean is None:
        return None
    return DirectionCheck(
        "student within distillation factor",
        student_mean <= factor * teacher_mean,
        f"student {student_mean:.4f} vs {factor:g} x {teacher} {teacher_mean:.4f}",
    )


def run_checks(results: Sequence[SeedResult]) -> List[DirectionCheck]:
    if not results:
        raise InvalidInputError("no seed results to check")
    checks = [
        check_over_training(results),
        check_semantic_phase(results),
        check_ablation_order(results),
        check_distillation(results),
    ]
    return [c for c in checks if c is not None]


def _table(title: str, by_method: Mapping[str, List[EvalReport]]) -> List[str]:
    width = max(len(m) for m in by_method)
    header = title.ljust(width) + " | " + " | ".join(t.rjust(8) for _, t in TABLE_COLUMNS)
    lines = [header, "-" * len(header)]
    for method, reports in by_method.items():
        means = [sum(getattr(r, key) for r in reports) / len(reports) for key, _ in TABLE_COLUMNS]
        lines.append(method.ljust(width) + " | " + " | ".join(f"{m:8.3f}" for m in means))
    return lines


def format_summary(results: Sequence[SeedResult]) -> str:
    """Mean metrics per method across seeds for each split, then the direction checks."""
    lines: List[str] = []
    for split in ("train", "val"):
        by_method: Dict[str, List[EvalReport]] = {}
        for result in results:
            for method, report in getattr(result, split).items():
                by_method.setdefault(method, []).append(report)
        if by_method:
            lines.extend(_table(f"Method ({split})", by_method))
            lines.append("")
    lines.extend(check.format() for check in run_checks(results))
    return "\n".join(lines)
