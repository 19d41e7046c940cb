"""Detection and distance-regression evaluation.

Detections are matched to ground truth greedily by descending confidence,
per image and category, each ground truth at most once, with the
highest-IoU candidate breaking ties. AP is the area under the all-points
interpolated precision-recall curve (precision envelope); AR is the recall at
the full detection set. Categories with no ground truth report 0 by
convention and are excluded from mAP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

Rect = tuple[float, float, float, float]  # x_min, y_min, x_max, y_max


@dataclass(frozen=True)
class Detection:
    image_id: int
    bbox: Rect
    category: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"detection score {self.score} outside [0, 1]")
        x0, y0, x1, y1 = self.bbox
        if x1 < x0 or y1 < y0:
            raise ValidationError(f"invalid rectangle {self.bbox}")


@dataclass(frozen=True)
class GroundTruth:
    image_id: int
    bbox: Rect
    category: str


@dataclass(frozen=True)
class EvalReport:
    """AP/AR per (category, IoU threshold), mAP per threshold, gt support."""

    thresholds: tuple[float, ...]
    categories: tuple[str, ...]
    ap: dict
    ar: dict
    mean_ap: dict
    support: dict


@dataclass(frozen=True)
class DistanceReport:
    mae: float
    accuracy: dict  # threshold (m) -> fraction within threshold
    count: int


def iou(a: Rect, b: Rect) -> float:
    """Intersection over union of two rectangles; degenerate operands give 0."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    inter_w = min(ax1, bx1) - max(ax0, bx0)
    inter_h = min(ay1, by1) - max(ay0, by0)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def match_detections(dets: list[Detection], gts: list[GroundTruth],
                     iou_threshold: float) -> list[tuple[Detection, GroundTruth | None]]:
    """Greedy confidence-ordered matching within one category.

    Returns (detection, matched_gt_or_None) pairs in descending-score order
    (ties keep input order). A detection matches the unclaimed ground truth
    of the same image with the highest IoU, provided IoU >= iou_threshold.
    """
    by_image: dict[int, list[GroundTruth]] = {}
    for gt in gts:
        by_image.setdefault(gt.image_id, []).append(gt)
    claimed: set[int] = set()
    results = []
    for det in sorted(dets, key=lambda d: -d.score):
        best_gt = None
        best_iou = 0.0
        for gt in by_image.get(det.image_id, ()):
            if id(gt) in claimed:
                continue
            overlap = iou(det.bbox, gt.bbox)
            if overlap >= iou_threshold and overlap > best_iou:
                best_gt = gt
                best_iou = overlap
        if best_gt is not None:
            claimed.add(id(best_gt))
        results.append((det, best_gt))
    return results


def _average_precision(tp_flags: np.ndarray, n_gts: int) -> tuple[float, float]:
    """(AP, final recall) from confidence-ordered true-positive flags."""
    if n_gts == 0 or len(tp_flags) == 0:
        return 0.0, 0.0
    tp_cum = np.cumsum(tp_flags)
    fp_cum = np.cumsum(~tp_flags)
    recall = tp_cum / n_gts
    precision = tp_cum / (tp_cum + fp_cum)
    envelope = precision.copy()
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    prev_recall = 0.0
    ap = 0.0
    for r, p in zip(recall, envelope):
        ap += (r - prev_recall) * p
        prev_recall = r
    return float(ap), float(recall[-1])


def evaluate_detections(dets: list[Detection], gts: list[GroundTruth],
                        iou_thresholds: list[float]) -> EvalReport:
    """Per-category AP/AR at each IoU threshold plus mAP."""
    thresholds = tuple(float(t) for t in iou_thresholds)
    if not thresholds or any(not 0.0 < t <= 1.0 for t in thresholds):
        raise ValidationError("IoU thresholds must lie in (0, 1]")
    categories = tuple(sorted({gt.category for gt in gts}))
    support = {c: sum(1 for gt in gts if gt.category == c) for c in categories}
    ap: dict = {}
    ar: dict = {}
    mean_ap: dict = {}
    for thr in thresholds:
        per_cat_ap = []
        for cat in categories:
            cat_dets = [d for d in dets if d.category == cat]
            cat_gts = [g for g in gts if g.category == cat]
            matches = match_detections(cat_dets, cat_gts, thr)
            tp_flags = np.array([m is not None for _, m in matches], dtype=bool)
            cat_ap, cat_ar = _average_precision(tp_flags, len(cat_gts))
            ap[(cat, thr)] = cat_ap
            ar[(cat, thr)] = cat_ar
            per_cat_ap.append(cat_ap)
        mean_ap[thr] = float(np.mean(per_cat_ap)) if per_cat_ap else 0.0
    return EvalReport(
        thresholds=thresholds,
        categories=categories,
        ap=ap,
        ar=ar,
        mean_ap=mean_ap,
        support=support,
    )


def distance_report(pred: list[float], truth: list[float],
                    thresholds: list[float]) -> DistanceReport:
    """MAE plus accuracy-at-threshold for distance predictions in meters."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 1 or len(pred) < 1:
        raise ValidationError("pred and truth must be equal-length non-empty sequences")
    errors = np.abs(pred - truth)
    return DistanceReport(
        mae=float(errors.mean()),
        accuracy={float(t): float((errors <= t).mean()) for t in thresholds},
        count=len(pred),
    )


def format_detection_table(report: EvalReport, category: str | None = None) -> str:
    """AP/AR rows per IoU threshold for one category (default: first)."""
    if category is None:
        category = report.categories[0] if report.categories else ""
    lines = [f"class: {category}", f"{'IoU threshold':>14} | {'AP':>6} | {'AR':>6}"]
    for thr in report.thresholds:
        lines.append(
            f"{thr:>14.2f} | {report.ap.get((category, thr), 0.0):>6.3f}"
            f" | {report.ar.get((category, thr), 0.0):>6.3f}"
        )
    return "\n".join(lines)


def format_class_table(report: EvalReport) -> str:
    """Per-class AP at each threshold with an mAP summary row."""
    header = f"{'Class':>14} | " + " | ".join(f"AP@{t:.2f}" for t in report.thresholds)
    lines = [header]
    for cat in report.categories:
        cells = " | ".join(f"{report.ap[(cat, t)]:>7.3f}" for t in report.thresholds)
        lines.append(f"{cat:>14} | {cells}")
    cells = " | ".join(f"{report.mean_ap[t]:>7.3f}" for t in report.thresholds)
    lines.append(f"{'mAP':>14} | {cells}")
    return "\n".join(lines)


def format_distance_table(report: DistanceReport) -> str:
    """MAE (constant) and accuracy per error threshold."""
    lines = [f"{'Error threshold (m)':>20} | {'MAE':>6} | {'Accuracy':>8}"]
    for thr in sorted(report.accuracy, reverse=True):
        lines.append(f"{thr:>20.2f} | {report.mae:>6.3f} | {report.accuracy[thr]:>8.3f}")
    return "\n".join(lines)
