"""Depth evaluation metrics with cap and validity masking."""

from typing import Iterable, List, Optional

import numpy as np
import torch

from pseudodepth.errors import InvalidInputError, ShapeMismatchError
from pseudodepth.geometry import disparity_to_depth
from pseudodepth.models import CameraModel, EvalReport

DEFAULT_CAP = 80.0
DEFAULT_MIN_DEPTH = 1e-3

TABLE_COLUMNS = [
    ("abs_rel", "Abs Rel"),
    ("sq_rel", "Sq Rel"),
    ("rmse", "RMSE"),
    ("rmse_log", "RMSE log"),
    ("acc_1", "δ<1.25"),
    ("acc_2", "δ<1.25²"),
    ("acc_3", "δ<1.25³"),
]


def _as_numpy(values: object) -> np.ndarray:
    if isinstance(values, torch.Tensor):
        return values.detach().cpu().numpy().astype(np.float64)
    return np.asarray(values, dtype=np.float64)


def _within(pred: np.ndarray, gt: np.ndarray, threshold: float) -> float:
    # Multiplicative form; a ratio rounds below the threshold for exact 1.25x scalings.
    return float(np.mean((pred < threshold * gt) & (gt < threshold * pred)))


def evaluate(
    pred_depth: object,
    gt_depth: object,
    valid: Optional[object] = None,
    cap: float = DEFAULT_CAP,
    min_depth: float = DEFAULT_MIN_DEPTH,
) -> EvalReport:
    """
    Compute the seven depth metrics over valid pixels.

    Both prediction and ground truth are clamped to [min_depth, cap]. Accuracy
    thresholds are strict and compared multiplicatively: d̂ < t d and d < t d̂
    with t = 1.25^k.

    Args:
        pred_depth: Predicted depth in meters (array or tensor)
        gt_depth: Ground-truth depth in meters
        valid: Optional validity mask (non-zero = valid)
        cap: Maximum depth in meters
        min_depth: Minimum depth in meters

    Raises:
        ShapeMismatchError: If shapes differ
        InvalidInputError: If no pixel is valid or gt is not positive on valid pixels
    """
    pred = _as_numpy(pred_depth)
    gt = _as_numpy(gt_depth)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    mask = np.ones(gt.shape, dtype=bool) if valid is None else _as_numpy(valid) > 0
    if mask.shape != gt.shape:
        raise ShapeMismatchError(f"validity mask {mask.shape} and ground truth {gt.shape} differ")
    if not mask.any():
        raise InvalidInputError("no valid pixels to evaluate")

    gt = gt[mask]
    pred = pred[mask]
    if not np.all(gt > 0) or not np.all(np.isfinite(gt)):
        raise InvalidInputError("ground-truth depth must be positive and finite on valid pixels")
    if not np.all(np.isfinite(pred)):
        raise InvalidInputError("predicted depth must be finite on valid pixels")

    gt = np.clip(gt, min_depth, cap)
    pred = np.clip(pred, min_depth, cap)

    diff = pred - gt
    return EvalReport(
        abs_rel=float(np.mean(np.abs(diff) / gt)),
        sq_rel=float(np.mean(diff**2 / gt)),
        rmse=float(np.sqrt(np.mean(diff**2))),
        rmse_log=float(np.sqrt(np.mean((np.log(pred) - np.log(gt)) ** 2))),
        acc_1=_within(pred, gt, 1.25),
        acc_2=_within(pred, gt, 1.25**2),
        acc_3=_within(pred, gt, 1.25**3),
        valid_pixel_count=int(gt.size),
        cap=cap,
        min_depth=min_depth,
    )


def evaluate_disparity(
    pred_disp: object,
    gt_disp: object,
    cam: CameraModel,
    image_width: int,
    valid: Optional[object] = None,
    cap: float = DEFAULT_CAP,
    min_depth: float = DEFAULT_MIN_DEPTH,
) -> EvalReport:
    """Convert normalized disparities to depth through the camera, then `evaluate`."""
    pred_depth = disparity_to_depth(_as_numpy(pred_disp), cam, image_width)
    gt_depth = disparity_to_depth(_as_numpy(gt_disp), cam, image_width)
    return evaluate(pred_depth, gt_depth, valid, cap, min_depth)


def aggregate_reports(reports: Iterable[EvalReport]) -> EvalReport:
    """
    Pixel-count-weighted combination of per-image reports.

    Mean-type metrics are averaged; RMSE-type metrics are combined through
    their mean squares, so the result equals evaluating all pixels at once.
    """
    reports = list(reports)
    if not reports:
        raise InvalidInputError("no reports to aggregate")
    weights = np.array([r.valid_pixel_count for r in reports], dtype=np.float64)
    weights /= weights.sum()

    def mean(field: str) -> float:
        return float(np.dot(weights, [getattr(r, field) for r in reports]))

    def root_mean_square(field: str) -> float:
        return float(np.sqrt(np.dot(weights, [getattr(r, field) ** 2 for r in reports])))

    return EvalReport(
        abs_rel=mean("abs_rel"),
        sq_rel=mean("sq_rel"),
        rmse=root_mean_square("rmse"),
        rmse_log=root_mean_square("rmse_log"),
        acc_1=mean("acc_1"),
        acc_2=mean("acc_2"),
        acc_3=mean("acc_3"),
        valid_pixel_count=sum(r.valid_pixel_count for r in reports),
        cap=reports[0].cap,
        min_depth=reports[0].min_depth,
    )


def report_csv_header() -> str:
    return ",".join([key for key, _ in TABLE_COLUMNS] + ["valid_pixel_count", "cap"])


def report_csv_row(report: EvalReport) -> str:
    values = [f"{getattr(report, key):.6f}" for key, _ in TABLE_COLUMNS]
    return ",".join(values + [str(report.valid_pixel_count), f"{report.cap:g}"])


def format_report_table(report: EvalReport, label: str = "") -> str:
    """Human-readable table in Abs Rel .. δ<1.25³ column order."""
    headers: List[str] = (["Method"] if label else []) + [title for _, title in TABLE_COLUMNS]
    values: List[str] = ([label] if label else []) + [
        f"{getattr(report, key):.3f}" for key, _ in TABLE_COLUMNS
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    line = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "-+-".join("-" * w for w in widths)
    row = " | ".join(v.ljust(w) for v, w in zip(values, widths))
    footer = f"({report.valid_pixel_count} valid pixels, depth capped at {report.cap:g} m)"
    return "\n".join([line, rule, row, footer])
