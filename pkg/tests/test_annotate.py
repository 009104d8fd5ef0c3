import json

import numpy as np
import pytest

from mitodet.annotate import (
    AnnotationSet,
    MaskGenConfig,
    generate_training_mask,
    mask_box_iou,
    parse_annotations,
    reserve_cells,
)
from mitodet.imagecore import BBox, BinaryMask, InstanceLabelMap


def write_ann(tmp_path, images, annotations, name="ann.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"images": images, "annotations": annotations}))
    return path


class TestParse:
    def test_single_box(self, tmp_path):
        path = write_ann(
            tmp_path,
            [{"id": 1, "file_name": "a.png", "width": 100, "height": 100}],
            [{"image_id": 1, "bbox": [10, 20, 50, 50], "category_id": 1}],
        )
        sets = parse_annotations(path)
        assert len(sets) == 1
        ann = sets[0]
        assert ann.image_id == 1 and ann.file_name == "a.png"
        assert ann.boxes == (BBox(10, 20, 50, 50, 1),)

    def test_empty_annotations_is_valid(self, tmp_path):
        path = write_ann(tmp_path, [{"id": 3, "file_name": "b.png", "width": 10, "height": 10}], [])
        assert parse_annotations(path)[0].boxes == ()

    def test_unknown_image_id(self, tmp_path):
        path = write_ann(
            tmp_path,
            [{"id": 1, "file_name": "a.png", "width": 10, "height": 10}],
            [{"image_id": 99, "bbox": [1, 1, 2, 2], "category_id": 1}],
        )
        with pytest.raises(ValueError, match="99"):
            parse_annotations(path)

    def test_non_positive_box(self, tmp_path):
        path = write_ann(
            tmp_path,
            [{"id": 1, "file_name": "a.png", "width": 10, "height": 10}],
            [{"image_id": 1, "bbox": [1, 1, 0, 2], "category_id": 1}],
        )
        with pytest.raises(ValueError, match="non-positive"):
            parse_annotations(path)

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"images": [')
        with pytest.raises(ValueError, match="line|column|char"):
            parse_annotations(path)

    def test_unknown_keys_ignored(self, tmp_path):
        path = write_ann(
            tmp_path,
            [{"id": 1, "file_name": "a.png", "width": 10, "height": 10, "license": 4}],
            [{"image_id": 1, "bbox": [1, 1, 2, 2], "category_id": 1, "iscrowd": 0}],
        )
        assert len(parse_annotations(path)[0].boxes) == 1

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            parse_annotations("/no/such/ann.json")


def square_cell(h, w, r0, c0, size, label=1):
    grid = np.zeros((h, w), dtype=np.int32)
    grid[r0 : r0 + size, c0 : c0 + size] = label
    return grid


class TestIou:
    def test_exact_fit_is_one(self):
        cell = BinaryMask(square_cell(20, 20, 5, 5, 10) > 0)
        assert mask_box_iou(cell, BBox(5, 5, 10, 10)) == 1.0

    def test_disjoint_is_zero(self):
        cell = BinaryMask(square_cell(20, 20, 0, 0, 5) > 0)
        assert mask_box_iou(cell, BBox(10, 10, 5, 5)) == 0.0

    def test_half_shift_is_one_third(self):
        # cell rows 0-9 x cols 0-9 (100 px), box rows 0-9 x cols 5-14 (100 px):
        # intersection 50, union 150
        cell = BinaryMask(square_cell(20, 20, 0, 0, 10) > 0)
        assert mask_box_iou(cell, BBox(5, 0, 10, 10)) == pytest.approx(1 / 3)

    def test_empty_cell_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            mask_box_iou(BinaryMask(np.zeros((5, 5), dtype=bool)), BBox(0, 0, 2, 2))

    def test_symmetric_in_pixel_sets(self):
        # both operands are rectangles, so the roles can be exchanged
        a = (0, 0, 6)  # r0, c0, size
        b = (3, 2, 6)
        cell_a = BinaryMask(square_cell(16, 16, *a) > 0)
        cell_b = BinaryMask(square_cell(16, 16, *b) > 0)
        box_a = BBox(a[1], a[0], a[2], a[2])
        box_b = BBox(b[1], b[0], b[2], b[2])
        assert mask_box_iou(cell_a, box_b) == pytest.approx(mask_box_iou(cell_b, box_a))

    def test_translation_invariant(self):
        for dx, dy in [(0, 0), (3, 1), (5, 7)]:
            cell = BinaryMask(square_cell(32, 32, 2 + dy, 4 + dx, 8) > 0)
            box = BBox(6 + dx, 5 + dy, 8, 8)
            assert mask_box_iou(cell, box) == pytest.approx(
                mask_box_iou(
                    BinaryMask(square_cell(32, 32, 2, 4, 8) > 0), BBox(6, 5, 8, 8)
                )
            )


def ann_with_boxes(boxes, w=40, h=40):
    return AnnotationSet(image_id=1, file_name="x.png", width=w, height=h, boxes=tuple(boxes))


class TestMaskGeneration:
    def test_exact_fit_cell_reserved(self):
        cells = InstanceLabelMap(square_cell(40, 40, 10, 10, 10))
        ann = ann_with_boxes([BBox(10, 10, 10, 10, 1)])
        mask = generate_training_mask(cells, ann)
        assert np.array_equal(mask.bits, cells.labels > 0)

    def test_one_third_overlap_dropped(self):
        cells = InstanceLabelMap(square_cell(40, 40, 0, 0, 10))
        ann = ann_with_boxes([BBox(5, 0, 10, 10, 1)])  # IoU 1/3 < 0.8
        mask = generate_training_mask(cells, ann)
        assert not mask.bits.any()

    def test_empty_label_map(self):
        cells = InstanceLabelMap(np.zeros((40, 40), dtype=np.int32))
        ann = ann_with_boxes([BBox(10, 10, 10, 10, 1)])
        assert not generate_training_mask(cells, ann).bits.any()

    def test_threshold_is_strict(self):
        # 5x4 cell inside a 5x5 box: IoU = 20/25 = 0.8 exactly -> dropped at 0.8
        grid = np.zeros((20, 20), dtype=np.int32)
        grid[0:5, 0:4] = 1
        ann = ann_with_boxes([BBox(0, 0, 5, 5, 1)], w=20, h=20)
        cells = InstanceLabelMap(grid)
        assert not generate_training_mask(cells, ann, MaskGenConfig(iou_threshold=0.8)).bits.any()
        kept = generate_training_mask(cells, ann, MaskGenConfig(iou_threshold=0.79))
        assert kept.bits.sum() == 20

    def test_category_filter(self):
        cells = InstanceLabelMap(square_cell(40, 40, 10, 10, 10))
        ann = ann_with_boxes([BBox(10, 10, 10, 10, 2)])  # non-mitotic category
        assert not generate_training_mask(cells, ann).bits.any()
        cfg = MaskGenConfig(categories=frozenset({2}))
        assert generate_training_mask(cells, ann, cfg).bits.sum() == 100

    def test_unmatched_box_count(self):
        cells = InstanceLabelMap(square_cell(40, 40, 10, 10, 10))
        ann = ann_with_boxes([BBox(10, 10, 10, 10, 1), BBox(30, 30, 8, 8, 1)])
        kept, unmatched = reserve_cells(cells, ann)
        assert kept == [1]
        assert unmatched == 1

    def test_dimension_mismatch(self):
        cells = InstanceLabelMap(np.zeros((20, 20), dtype=np.int32))
        ann = ann_with_boxes([BBox(1, 1, 2, 2, 1)], w=40, h=40)
        with pytest.raises(ValueError, match="40"):
            generate_training_mask(cells, ann)

    def test_output_never_exceeds_input_cells(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            grid = rng.integers(0, 4, (30, 30)).astype(np.int32)
            boxes = [
                BBox(int(rng.integers(0, 20)), int(rng.integers(0, 20)), 8, 8, 1)
                for _ in range(3)
            ]
            mask = generate_training_mask(InstanceLabelMap(grid), ann_with_boxes(boxes, 30, 30))
            assert not np.any(mask.bits & (grid == 0))

    def test_anti_monotone_in_threshold(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            grid = np.zeros((50, 50), dtype=np.int32)
            for label in range(1, 5):
                r, c = rng.integers(0, 40, 2)
                grid[r : r + 8, c : c + 8] = label
            boxes = [
                BBox(int(rng.integers(0, 42)), int(rng.integers(0, 42)), 8, 8, 1)
                for _ in range(4)
            ]
            ann = ann_with_boxes(boxes, 50, 50)
            cells = InstanceLabelMap(grid)
            previous = None
            for thr in (0.2, 0.5, 0.8):
                current = generate_training_mask(cells, ann, MaskGenConfig(iou_threshold=thr))
                if previous is not None:
                    assert not np.any(current.bits & ~previous)  # never adds pixels
                previous = current.bits

    def test_per_cell_independence(self):
        rng = np.random.default_rng(2)
        grid = np.zeros((50, 50), dtype=np.int32)
        positions = [(2, 2), (2, 30), (30, 2), (30, 30)]
        for label, (r, c) in enumerate(positions, start=1):
            grid[r : r + 9, c : c + 9] = label
        boxes = [
            BBox(c + int(rng.integers(0, 3)), r + int(rng.integers(0, 3)), 9, 9, 1)
            for r, c in positions
        ]
        ann = ann_with_boxes(boxes, 50, 50)
        kept_full, _ = reserve_cells(InstanceLabelMap(grid), ann)
        for removed in range(1, 5):
            reduced = np.where(grid == removed, 0, grid)
            kept_reduced, _ = reserve_cells(InstanceLabelMap(reduced), ann)
            assert set(kept_reduced) == set(kept_full) - {removed}


def test_annotation_set_rejects_fully_outside_box():
    with pytest.raises(ValueError, match="outside"):
        ann_with_boxes([BBox(100, 100, 5, 5, 1)], w=40, h=40)


def test_maskgen_config_validation():
    with pytest.raises(ValueError):
        MaskGenConfig(iou_threshold=0.0)
    with pytest.raises(ValueError):
        MaskGenConfig(iou_threshold=1.2)
