"""Annotation ingestion and training-mask generation.

Detection boxes are converted into segmentation labels by keeping every
externally-segmented cell whose pixel mask overlaps an annotation box
strongly enough: a cell is reserved when its IoU with any box of a kept
category is strictly greater than the threshold (default 0.8).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imagecore import BBox, BinaryMask, InstanceLabelMap


@dataclass(frozen=True)
class AnnotationSet:
    """All boxes of one image. Category 1 is the mitotic figure by convention."""

    image_id: int
    file_name: str
    width: int
    height: int
    boxes: tuple[BBox, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image dims must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "boxes", tuple(self.boxes))
        for box in self.boxes:
            box.clipped(self.width, self.height)  # raises if nothing remains


@dataclass(frozen=True)
class MaskGenConfig:
    iou_threshold: float = 0.8
    categories: frozenset[int] = frozenset({1})

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must lie in (0, 1], got {self.iou_threshold}")
        object.__setattr__(self, "categories", frozenset(self.categories))


def parse_annotations(path: str | Path) -> list[AnnotationSet]:
    """Parse the COCO-subset annotation JSON into one AnnotationSet per image.

    Schema: {"images": [{"id", "file_name", "width", "height"}],
    "annotations": [{"image_id", "bbox": [x_min, y_min, width, height],
    "category_id"}]}. Unknown keys are ignored.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"annotation file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict) or "images" not in data:
        raise ValueError(f"annotation file {path} lacks an 'images' list")

    images: dict[int, dict] = {}
    order: list[int] = []
    for entry in data["images"]:
        image_id = entry["id"]
        images[image_id] = entry
        order.append(image_id)

    boxes_by_image: dict[int, list[BBox]] = {image_id: [] for image_id in images}
    for ann in data.get("annotations", []):
        image_id = ann["image_id"]
        if image_id not in images:
            raise ValueError(f"annotation references unknown image_id {image_id}")
        x, y, w, h = ann["bbox"]
        if w <= 0 or h <= 0:
            raise ValueError(
                f"non-positive box dims {w}x{h} for image_id {image_id}"
            )
        boxes_by_image[image_id].append(BBox(x, y, w, h, ann.get("category_id", 1)))

    return [
        AnnotationSet(
            image_id=image_id,
            file_name=images[image_id].get("file_name", ""),
            width=images[image_id]["width"],
            height=images[image_id]["height"],
            boxes=tuple(boxes_by_image[image_id]),
        )
        for image_id in order
    ]


def mask_box_iou(cell: BinaryMask, box: BBox) -> float:
    """IoU between a cell's pixel set and the filled rectangle's pixel set.

    The box is clipped to the mask bounds first; clipping a box so nothing
    remains is an error, never silent.
    """
    cell_area = int(cell.bits.sum())
    if cell_area == 0:
        raise ValueError("cell pixel set is empty")
    rows, cols = box.clipped(cell.width, cell.height).pixel_slices()
    box_area = (rows.stop - rows.start) * (cols.stop - cols.start)
    inter = int(cell.bits[rows, cols].sum())
    union = cell_area + box_area - inter
    return inter / union


def reserve_cells(
    cells: InstanceLabelMap, ann: AnnotationSet, cfg: MaskGenConfig = MaskGenConfig()
) -> tuple[list[int], int]:
    """Decide which cell instances to keep.

    Returns (kept label ids, count of filtered boxes that reserved no cell).
    A cell is kept when its IoU with at least one box of a kept category is
    strictly greater than cfg.iou_threshold. Boxes that reserve no cell
    contribute nothing to the mask; their count is reported so callers can
    warn that those annotations vanish from the training labels.
    """
    if (cells.height, cells.width) != (ann.height, ann.width):
        raise ValueError(
            f"label map is {cells.width}x{cells.height} but annotations describe "
            f"a {ann.width}x{ann.height} image"
        )
    grid = cells.labels
    n = int(grid.max(initial=0))
    areas = np.bincount(grid.ravel(), minlength=n + 1)
    kept: set[int] = set()
    unmatched_boxes = 0
    for box in ann.boxes:
        if box.category not in cfg.categories:
            continue
        rows, cols = box.clipped(ann.width, ann.height).pixel_slices()
        box_area = (rows.stop - rows.start) * (cols.stop - cols.start)
        inter = np.bincount(grid[rows, cols].ravel(), minlength=n + 1)
        matched_any = False
        for label in np.nonzero(inter)[0]:
            if label == 0:
                continue
            iou = inter[label] / (areas[label] + box_area - inter[label])
            if iou > cfg.iou_threshold:
                kept.add(int(label))
                matched_any = True
        if not matched_any:
            unmatched_boxes += 1
    return sorted(kept), unmatched_boxes


def generate_training_mask(
    cells: InstanceLabelMap, ann: AnnotationSet, cfg: MaskGenConfig = MaskGenConfig()
) -> BinaryMask:
    """Union of the pixel sets of every reserved cell instance."""
    kept, _ = reserve_cells(cells, ann, cfg)
    return BinaryMask(np.isin(cells.labels, kept))
