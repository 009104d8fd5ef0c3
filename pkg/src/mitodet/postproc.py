"""Segmentation post-processing: probability map -> detected cell centers.

The chain is binarize -> fill_holes -> connected_components ->
component_centers. Each connected foreground component is one detected
cell; its reported location is the center of the component's tight
axis-aligned bounding rectangle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .imagecore import BinaryMask, InstanceLabelMap, Point2D


@dataclass(frozen=True)
class PostprocConfig:
    connectivity: int = 8
    min_component_area: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_component_area < 0:
            raise ValueError("min_component_area must be >= 0")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class Detection:
    """One detected cell: bounding-rectangle center, score, component area."""

    center: Point2D
    score: float = 1.0
    area: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class DetectionSet:
    image_id: int | str
    detections: tuple[Detection, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))

    @property
    def points(self) -> list[Point2D]:
        return [d.center for d in self.detections]

    def __len__(self) -> int:
        return len(self.detections)


def binarize(prob: np.ndarray, threshold: float = 0.5) -> BinaryMask:
    """Threshold a real-valued grid: a pixel is foreground iff value >= threshold."""
    arr = np.asarray(prob, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("probability grid contains non-finite values")
    return BinaryMask(arr >= threshold)


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Fill enclosed background: pixels that cannot reach the border through
    4-connected background become foreground; foreground is never removed."""
    grid = np.ascontiguousarray(mask.bits, dtype=np.uint8)
    return BinaryMask(_kernels.fill_holes(grid).astype(bool))


def connected_components(mask: BinaryMask, connectivity: int = 8) -> InstanceLabelMap:
    """Label maximal connected foreground sets 1..K, in raster order of each
    component's first pixel."""
    grid = np.ascontiguousarray(mask.bits, dtype=np.uint8)
    labels, _count = _kernels.label_components(grid, connectivity)
    return InstanceLabelMap(labels)


def component_centers(
    labels: InstanceLabelMap, cfg: PostprocConfig = PostprocConfig(), image_id: int | str = 0
) -> DetectionSet:
    """Centers of the tight axis-aligned bounding rectangle of every component
    with area >= cfg.min_component_area, sorted by (y, x)."""
    grid = labels.labels
    n = int(grid.max(initial=0))
    if n == 0:
        return DetectionSet(image_id, ())
    areas = np.bincount(grid.ravel(), minlength=n + 1)
    rows, cols = np.nonzero(grid)
    ids = grid[rows, cols]
    order = np.argsort(ids, kind="stable")
    rows, cols, ids = rows[order], cols[order], ids[order]
    boundaries = np.searchsorted(ids, np.arange(1, n + 2))
    detections = []
    for label in range(1, n + 1):
        lo, hi = boundaries[label - 1], boundaries[label]
        if lo == hi or areas[label] < cfg.min_component_area:
            continue
        r = rows[lo:hi]
        c = cols[lo:hi]
        cx = (float(c.min()) + float(c.max())) / 2.0
        cy = (float(r.min()) + float(r.max())) / 2.0
        detections.append(Detection(Point2D(cx, cy), 1.0, int(areas[label])))
    detections.sort(key=lambda d: (d.center.y, d.center.x))
    return DetectionSet(image_id, tuple(detections))


def detect_cells(
    prob: np.ndarray, cfg: PostprocConfig = PostprocConfig(), image_id: int | str = 0
) -> DetectionSet:
    """Full post-processing chain on a probability grid."""
    mask = binarize(prob, cfg.threshold)
    filled = fill_holes(mask)
    labels = connected_components(filled, cfg.connectivity)
    return component_centers(labels, cfg, image_id)


def detections_to_json(det: DetectionSet) -> dict:
    """Wire format: {"image_id": ..., "points": [{"x", "y", "score", "area"}]}."""
    return {
        "image_id": det.image_id,
        "points": [
            {"x": d.center.x, "y": d.center.y, "score": d.score, "area": d.area}
            for d in det.detections
        ],
    }


def detections_from_json(data: dict) -> DetectionSet:
    detections = tuple(
        Detection(
            Point2D(float(p["x"]), float(p["y"])),
            float(p.get("score", 1.0)),
            int(p.get("area", 0)),
        )
        for p in data["points"]
    )
    return DetectionSet(data["image_id"], detections)
