"""Unit tests for the multi-seed direction checks."""

import pytest

from pseudodepth.ablation import (
    TEACHER,
    TEACHER_NO_SEM,
    TEACHER_OVER,
    SeedResult,
    check_ablation_order,
    check_distillation,
    check_over_training,
    check_semantic_phase,
    format_summary,
    run_checks,
    student_method,
)
from pseudodepth.errors import InvalidInputError
from pseudodepth.models import EvalReport, StudentVariant


def _report(abs_rel):
    return EvalReport(
        abs_rel=abs_rel,
        sq_rel=0.1,
        rmse=1.0,
        rmse_log=0.1,
        acc_1=0.8,
        acc_2=0.9,
        acc_3=0.95,
        valid_pixel_count=10,
        cap=80.0,
    )


def _students(full, pgt, photometric):
    return {
        student_method(StudentVariant.FULL): _report(full),
        student_method(StudentVariant.PGT): _report(pgt),
        student_method(StudentVariant.PHOTOMETRIC): _report(photometric),
    }


@pytest.mark.unit
class TestOverTraining:
    """Test the over-training direction on the training split."""

    def test_ties_count_as_kept(self):
        results = [
            SeedResult(0, train={TEACHER: _report(0.10), TEACHER_OVER: _report(0.10)}),
            SeedResult(1, train={TEACHER: _report(0.12), TEACHER_OVER: _report(0.08)}),
        ]
        check = check_over_training(results)
        assert check.passed
        assert check.detail == "2/2 seeds"

    def test_one_worse_seed_fails(self):
        results = [
            SeedResult(0, train={TEACHER: _report(0.10), TEACHER_OVER: _report(0.09)}),
            SeedResult(1, train={TEACHER: _report(0.10), TEACHER_OVER: _report(0.11)}),
        ]
        assert not check_over_training(results).passed

    def test_validation_reports_are_ignored(self):
        results = [SeedResult(0, val={TEACHER: _report(0.1), TEACHER_OVER: _report(0.2)})]
        assert check_over_training(results) is None

    def test_semantic_phase(self):
        results = [SeedResult(0, val={TEACHER: _report(0.1), TEACHER_NO_SEM: _report(0.2)})]
        assert check_semantic_phase(results).passed


@pytest.mark.unit
class TestAblationOrder:
    """Test the ordering of student variants."""

    def test_ordered_means_pass(self):
        results = [
            SeedResult(0, val=_students(0.10, 0.12, 0.20)),
            SeedResult(1, val=_students(0.12, 0.12, 0.18)),
        ]
        assert check_ablation_order(results).passed

    def test_tie_within_tolerance_passes(self):
        results = [SeedResult(0, val=_students(0.104, 0.100, 0.20))]
        assert check_ablation_order(results).passed

    def test_middle_inversion_fails(self):
        results = [SeedResult(0, val=_students(0.10, 0.25, 0.20))]
        assert not check_ablation_order(results).passed

    def test_missing_variant_skips(self):
        results = [SeedResult(0, val={student_method(StudentVariant.FULL): _report(0.1)})]
        assert check_ablation_order(results) is None


@pytest.mark.unit
class TestDistillation:
    """Test the student-versus-teacher factor."""

    def test_prefers_over_trained_teacher(self):
        val = {
            TEACHER: _report(0.30),
            TEACHER_OVER: _report(0.05),
            student_method(StudentVariant.FULL): _report(0.12),
        }
        check = check_distillation([SeedResult(0, val=val)])
        assert not check.passed
        assert TEACHER_OVER in check.detail

    def test_within_factor(self):
        val = {TEACHER: _report(0.10), student_method(StudentVariant.FULL): _report(0.19)}
        assert check_distillation([SeedResult(0, val=val)]).passed


@pytest.mark.unit
class TestSummary:
    """Test the printed summary."""

    def test_lists_splits_and_checks(self):
        result = SeedResult(
            0,
            train={TEACHER: _report(0.1), TEACHER_OVER: _report(0.09)},
            val={TEACHER: _report(0.12), **_students(0.11, 0.13, 0.2)},
        )
        summary = format_summary([result])
        assert "Method (train)" in summary
        assert "Method (val)" in summary
        assert "[PASS] over-training keeps training-set Abs Rel" in summary
        assert "[PASS] student ablation order" in summary

    def test_no_results_raises(self):
        with pytest.raises(InvalidInputError):
            run_checks([])
