"""Detection evaluation: center matching and precision/recall/F1.

Predicted centers match ground-truth centers through a maximum-cardinality
one-to-one matching over pairs within a distance radius; among maximum
matchings, one with minimal total distance is chosen. Counts are pooled
over all images before computing the metrics (micro-averaging); per-image
reports and their macro average ride along as secondary outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .imagecore import Point2D
from .postproc import DetectionSet


@dataclass(frozen=True)
class MatchConfig:
    """radius: maximum center-to-center Euclidean distance of a valid match."""

    radius: float = 30.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class MatchResult:
    """Index-level matching: (pred_index, truth_index, distance) triples."""

    pairs: tuple[tuple[int, int, float], ...]
    unmatched_pred: tuple[int, ...]
    unmatched_truth: tuple[int, ...]


@dataclass(frozen=True)
class MatchedPair:
    pred: Point2D
    truth: Point2D
    distance: float


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    pairs: tuple[MatchedPair, ...] = ()
    per_image: dict = field(default_factory=dict)
    macro: dict = field(default_factory=dict)


def _points_of(pred: DetectionSet | Sequence[Point2D]) -> list[Point2D]:
    return pred.points if isinstance(pred, DetectionSet) else list(pred)


def match_detections(
    pred: DetectionSet | Sequence[Point2D],
    truth: Sequence[Point2D],
    cfg: MatchConfig = MatchConfig(),
) -> MatchResult:
    """Maximum-cardinality, then minimum-total-distance one-to-one matching.

    Edges exist between prediction/truth pairs at Euclidean distance
    <= cfg.radius. Solved as a rectangular assignment problem where any
    out-of-radius pair costs more than every in-radius matching combined,
    so cardinality dominates and distance breaks ties.
    """
    pred_pts = _points_of(pred)
    n, m = len(pred_pts), len(truth)
    if n == 0 or m == 0:
        return MatchResult((), tuple(range(n)), tuple(range(m)))
    px = np.array([[pt.x, pt.y] for pt in pred_pts], dtype=np.float64)
    tx = np.array([[pt.x, pt.y] for pt in truth], dtype=np.float64)
    dist = np.sqrt(((px[:, np.newaxis, :] - tx[np.newaxis, :, :]) ** 2).sum(axis=2))
    valid = dist <= cfg.radius
    penalty = cfg.radius * (min(n, m) + 1) + 1.0
    cost = np.where(valid, dist, penalty)
    rows, cols = linear_sum_assignment(cost)
    pairs = tuple(
        (int(i), int(j), float(dist[i, j])) for i, j in zip(rows, cols) if valid[i, j]
    )
    matched_p = {i for i, _, _ in pairs}
    matched_t = {j for _, j, _ in pairs}
    return MatchResult(
        pairs=pairs,
        unmatched_pred=tuple(i for i in range(n) if i not in matched_p),
        unmatched_truth=tuple(j for j in range(m) if j not in matched_t),
    )


def compute_metrics(
    tp: int, fp: int, fn: int, pairs: tuple[MatchedPair, ...] = ()
) -> MetricsReport:
    """Precision, recall and F1 from counts; every 0/0 evaluates to 0."""
    if min(tp, fp, fn) < 0:
        raise ValueError(f"counts must be non-negative, got tp={tp} fp={fp} fn={fn}")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsReport(tp, fp, fn, precision, recall, f1, pairs)


def evaluate_image(
    pred: DetectionSet | Sequence[Point2D],
    truth: Sequence[Point2D],
    cfg: MatchConfig = MatchConfig(),
) -> MetricsReport:
    """Match one image and compute its metrics."""
    pred_pts = _points_of(pred)
    result = match_detections(pred_pts, truth, cfg)
    tp = len(result.pairs)
    pairs = tuple(MatchedPair(pred_pts[i], truth[j], d) for i, j, d in result.pairs)
    return compute_metrics(tp, len(pred_pts) - tp, len(truth) - tp, pairs)


def evaluate_dataset(
    preds: Sequence[DetectionSet],
    truths: Mapping[int | str, Sequence[Point2D]],
    cfg: MatchConfig = MatchConfig(),
) -> MetricsReport:
    """Micro-averaged metrics over a dataset.

    Every prediction image_id must have a truth entry (possibly empty);
    truth images without predictions count as all-missed. Per-image
    matching runs independently, counts are pooled before computing
    precision/recall/F1, and the per-image reports plus their macro
    average are attached to the result.
    """
    by_image: dict = {}
    for det in preds:
        if det.image_id not in truths:
            raise ValueError(f"prediction references unknown image_id {det.image_id!r}")
        if det.image_id in by_image:
            raise ValueError(f"duplicate predictions for image_id {det.image_id!r}")
        by_image[det.image_id] = det

    per_image: dict = {}
    tp = fp = fn = 0
    all_pairs: list[MatchedPair] = []
    for image_id in sorted(truths, key=str):
        pred = by_image.get(image_id, DetectionSet(image_id, ()))
        report = evaluate_image(pred, list(truths[image_id]), cfg)
        per_image[image_id] = report
        tp += report.tp
        fp += report.fp
        fn += report.fn
        all_pairs.extend(report.pairs)

    pooled = compute_metrics(tp, fp, fn, tuple(all_pairs))
    n_img = len(per_image)
    macro = {
        "precision": sum(r.precision for r in per_image.values()) / n_img if n_img else 0.0,
        "recall": sum(r.recall for r in per_image.values()) / n_img if n_img else 0.0,
        "f1": sum(r.f1 for r in per_image.values()) / n_img if n_img else 0.0,
    }
    return MetricsReport(
        pooled.tp,
        pooled.fp,
        pooled.fn,
        pooled.precision,
        pooled.recall,
        pooled.f1,
        pooled.pairs,
        per_image=per_image,
        macro=macro,
    )


def report_to_json(report: MetricsReport) -> dict:
    """Wire format of a metrics report, nested per-image reports included."""
    out = {
        "tp": report.tp,
        "fp": report.fp,
        "fn": report.fn,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "pairs": [
            {
                "pred": [p.pred.x, p.pred.y],
                "truth": [p.truth.x, p.truth.y],
                "distance": p.distance,
            }
            for p in report.pairs
        ],
    }
    if report.macro:
        out["macro"] = dict(report.macro)
    if report.per_image:
        out["per_image"] = {
            str(image_id): report_to_json(sub) for image_id, sub in report.per_image.items()
        }
    return out
