"""Unit tests for depth evaluation metrics."""

import math

import numpy as np
import pytest
import torch

from pseudodepth.errors import InvalidInputError, ShapeMismatchError
from pseudodepth.geometry import depth_to_disparity
from pseudodepth.metrics import (
    aggregate_reports,
    evaluate,
    evaluate_disparity,
    format_report_table,
    report_csv_header,
    report_csv_row,
)
from pseudodepth.models import CameraModel


def _scalar_oracle(pred, gt, cap=80.0, min_depth=1e-3):
    """Pixel-by-pixel reference implementation."""
    n = 0
    abs_rel = sq_rel = sq = sq_log = 0.0
    acc = [0, 0, 0]
    for p, g in zip(pred.ravel(), gt.ravel()):
        p = min(max(float(p), min_depth), cap)
        g = min(max(float(g), min_depth), cap)
        n += 1
        abs_rel += abs(p - g) / g
        sq_rel += (p - g) ** 2 / g
        sq += (p - g) ** 2
        sq_log += (math.log(p) - math.log(g)) ** 2
        for k in range(3):
            threshold = 1.25 ** (k + 1)
            if p < threshold * g and g < threshold * p:
                acc[k] += 1
    return {
        "abs_rel": abs_rel / n,
        "sq_rel": sq_rel / n,
        "rmse": math.sqrt(sq / n),
        "rmse_log": math.sqrt(sq_log / n),
        "acc_1": acc[0] / n,
        "acc_2": acc[1] / n,
        "acc_3": acc[2] / n,
    }


@pytest.mark.unit
class TestEvaluate:
    """Test the seven depth metrics."""

    def test_perfect_prediction(self):
        gt = np.array([[2.0, 5.0], [10.0, 40.0]])
        report = evaluate(gt.copy(), gt)
        assert report.abs_rel == 0.0
        assert report.sq_rel == 0.0
        assert report.rmse == 0.0
        assert report.rmse_log == 0.0
        assert (report.acc_1, report.acc_2, report.acc_3) == (1.0, 1.0, 1.0)
        assert report.valid_pixel_count == 4

    def test_scaled_prediction_hits_threshold_exactly(self):
        gt = np.array([4.0, 8.0, 16.0, 32.0])
        report = evaluate(gt * 1.25, gt)
        # Ratio 1.25 is not strictly below 1.25.
        assert report.acc_1 == 0.0
        assert report.acc_2 == 1.0
        assert report.abs_rel == pytest.approx(0.25)

    def test_scaled_prediction_on_arbitrary_depths(self):
        gt = np.random.default_rng(0).uniform(1.0, 60.0, size=(64, 128))
        report = evaluate(gt * 1.25, gt)
        assert report.acc_1 == 0.0
        assert report.acc_2 == 1.0
        assert report.acc_3 == 1.0

    def test_pixel_order_does_not_matter(self):
        rng = np.random.default_rng(7)
        gt = rng.uniform(1.0, 60.0, size=200)
        pred = gt * rng.uniform(0.6, 1.5, size=gt.shape)
        order = rng.permutation(gt.size)
        shuffled = evaluate(pred[order], gt[order])
        original = evaluate(pred, gt)
        for key in ("abs_rel", "sq_rel", "rmse", "rmse_log", "acc_1", "acc_2", "acc_3"):
            assert getattr(shuffled, key) == pytest.approx(getattr(original, key), rel=1e-12)

    def test_relative_metrics_ignore_common_scale(self):
        rng = np.random.default_rng(8)
        gt = rng.uniform(1.0, 20.0, size=(8, 8))
        pred = gt * rng.uniform(0.7, 1.4, size=gt.shape)
        base = evaluate(pred, gt)
        scaled = evaluate(pred * 2.5, gt * 2.5)
        assert scaled.abs_rel == pytest.approx(base.abs_rel, rel=1e-12)
        assert scaled.rmse_log == pytest.approx(base.rmse_log, rel=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            gt = rng.uniform(0.5, 100.0, size=(6, 9))
            pred = gt * rng.uniform(0.5, 1.8, size=gt.shape)
            report = evaluate(pred, gt)
            for key, expected in _scalar_oracle(pred, gt).items():
                assert getattr(report, key) == pytest.approx(expected, abs=1e-10), key

    def test_depths_are_capped(self):
        gt = np.array([80.0, 10.0])
        pred = np.array([500.0, 10.0])
        assert evaluate(pred, gt).abs_rel == 0.0

    def test_mask_selects_pixels(self):
        gt = np.array([1.0, 2.0, 3.0])
        pred = np.array([1.0, 100.0, 3.0])
        report = evaluate(pred, gt, valid=np.array([1, 0, 1]))
        assert report.abs_rel == 0.0
        assert report.valid_pixel_count == 2

    def test_accepts_tensors(self):
        gt = torch.tensor([[3.0, 6.0]])
        assert evaluate(gt.clone(), gt).rmse == 0.0

    def test_empty_mask_raises(self):
        with pytest.raises(InvalidInputError):
            evaluate(np.ones(3), np.ones(3), valid=np.zeros(3))

    def test_shape_mismatch_raises(self):
        with pytest.raises(ShapeMismatchError):
            evaluate(np.ones(3), np.ones(4))

    def test_mask_shape_mismatch_raises(self):
        with pytest.raises(ShapeMismatchError):
            evaluate(np.ones(3), np.ones(3), valid=np.ones(2))

    def test_non_positive_gt_raises(self):
        with pytest.raises(InvalidInputError):
            evaluate(np.ones(2), np.array([1.0, 0.0]))

    def test_non_finite_prediction_raises(self):
        with pytest.raises(InvalidInputError):
            evaluate(np.array([1.0, np.nan]), np.ones(2))


@pytest.mark.unit
class TestEvaluateDisparity:
    """Test evaluation through the camera model."""

    def test_perfect_disparity(self):
        cam = CameraModel()
        depth = np.array([[5.0, 12.0], [25.0, 50.0]])
        disparity = depth_to_disparity(depth, cam, 64)
        report = evaluate_disparity(disparity, disparity, cam, 64)
        assert report.rmse == pytest.approx(0.0, abs=1e-12)

    def test_half_disparity_doubles_depth(self):
        cam = CameraModel()
        disparity = depth_to_disparity(np.array([5.0, 10.0]), cam, 64)
        report = evaluate_disparity(disparity / 2, disparity, cam, 64)
        assert report.abs_rel == pytest.approx(1.0)


@pytest.mark.unit
class TestAggregation:
    """Test combining per-image reports."""

    def test_equals_evaluating_all_pixels_at_once(self):
        rng = np.random.default_rng(3)
        gts = [rng.uniform(1.0, 60.0, size=n) for n in (10, 25, 7)]
        preds = [g * rng.uniform(0.7, 1.4, size=g.shape) for g in gts]
        combined = aggregate_reports(evaluate(p, g) for p, g in zip(preds, gts))
        expected = evaluate(np.concatenate(preds), np.concatenate(gts))
        for key in ("abs_rel", "sq_rel", "rmse", "rmse_log", "acc_1", "acc_2", "acc_3"):
            assert getattr(combined, key) == pytest.approx(getattr(expected, key), rel=1e-9)
        assert combined.valid_pixel_count == 42

    def test_empty_raises(self):
        with pytest.raises(InvalidInputError):
            aggregate_reports([])


@pytest.mark.unit
class TestReportFormatting:
    """Test the CSV and table renderings."""

    def test_csv_row_matches_header(self):
        report = evaluate(np.array([2.0, 4.0]), np.array([2.0, 5.0]))
        header = report_csv_header().split(",")
        row = report_csv_row(report).split(",")
        assert len(header) == len(row)
        assert header[0] == "abs_rel"
        assert row[header.index("valid_pixel_count")] == "2"

    def test_table_column_order(self):
        report = evaluate(np.array([2.0]), np.array([2.0]))
        table = format_report_table(report, label="student")
        header = table.splitlines()[0]
        assert header.index("Abs Rel") < header.index("RMSE log") < header.index("δ<1.25³")
        assert "student" in table.splitlines()[2]
