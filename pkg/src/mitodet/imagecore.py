"""Shared image, mask and geometry types plus PNG I/O.

Conventions used by every module in this package:

* x is the column index, y is the row index, origin at the top-left.
* Arrays are indexed ``[y, x]`` (row-major).
* 8-bit images hold ``uint8`` values in [0, 255]; real-valued working
  copies hold ``float64``.

All types are immutable after construction (their backing arrays are
frozen), so they can be shared freely across worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


def _frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy of ``arr`` (never freezes the caller's array)."""
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RasterImage:
    """An H x W x C intensity grid, 8-bit (uint8) or real-valued (float64).

    ``pixels`` always has shape (height, width, channels) with channels
    in {1, 3}.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ValueError(f"image array must be 2-D or 3-D, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h <= 0 or w <= 0:
            raise ValueError(f"image dimensions must be positive, got {w}x{h}")
        if c not in (1, 3):
            raise ValueError(f"unsupported channel count {c}, expected 1 or 3")
        if arr.dtype == np.uint8:
            pass
        elif np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64, copy=False)
        elif np.issubdtype(arr.dtype, np.integer):
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("8-bit image values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        else:
            raise ValueError(f"unsupported image dtype {arr.dtype}")
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def is_real(self) -> bool:
        """True for real-valued working copies, False for 8-bit images."""
        return self.pixels.dtype == np.float64


@dataclass(frozen=True)
class BinaryMask:
    """A row-major boolean H x W grid."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ValueError(f"mask array must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] <= 0 or arr.shape[1] <= 0:
            raise ValueError(f"mask dimensions must be positive, got {arr.shape}")
        object.__setattr__(self, "bits", _frozen(arr.astype(bool)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class InstanceLabelMap:
    """H x W grid of non-negative integer cell identifiers, 0 = background.

    Label ids need not be contiguous; every positive id denotes one cell.
    """

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"label array must be 2-D, got ndim={arr.ndim}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"labels must be integers, got dtype {arr.dtype}")
        if arr.size and arr.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "labels", _frozen(arr.astype(np.int32)))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def instance_ids(self) -> np.ndarray:
        """Sorted positive label ids present in the map."""
        ids = np.unique(self.labels)
        return ids[ids > 0]


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: inclusive top-left corner plus extent, in pixels.

    A pixel (x, y) belongs to the box iff
    x_min <= x < x_min + width and y_min <= y < y_min + height.
    """

    x_min: float
    y_min: float
    width: float
    height: float
    category: int = 1

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"box extent must be positive, got width={self.width} height={self.height}"
            )

    def clipped(self, image_width: int, image_height: int) -> "BBox":
        """Clip to image bounds. Raises if nothing of the box remains."""
        x0 = max(self.x_min, 0.0)
        y0 = max(self.y_min, 0.0)
        x1 = min(self.x_min + self.width, float(image_width))
        y1 = min(self.y_min + self.height, float(image_height))
        if x1 <= x0 or y1 <= y0:
            raise ValueError(
                f"box {self} lies entirely outside a {image_width}x{image_height} image"
            )
        return BBox(x0, y0, x1 - x0, y1 - y0, self.category)

    def pixel_slices(self) -> tuple[slice, slice]:
        """(row_slice, col_slice) of the integer pixel set covered by the box.

        Clip to the image first; an unclipped box can yield out-of-grid slices.
        """
        c0 = math.ceil(self.x_min)
        c1 = math.ceil(self.x_min + self.width)
        r0 = math.ceil(self.y_min)
        r1 = math.ceil(self.y_min + self.height)
        return slice(r0, r1), slice(c0, c1)

    @property
    def center(self) -> "Point2D":
        return Point2D(self.x_min + self.width / 2.0, self.y_min + self.height / 2.0)


@dataclass(frozen=True)
class Point2D:
    """Real-valued pixel coordinates (x = column, y = row)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


# ---------------------------------------------------------------------------
# Raster I/O (PNG only; 8-bit, grayscale or RGB)
# ---------------------------------------------------------------------------

_BIT16_MODES = {"I", "I;16", "I;16B", "I;16L", "I;16N"}


def load_image(path: str | Path) -> RasterImage:
    """Load an 8-bit grayscale or RGB PNG with exact pixel values.

    No color-profile transform is applied. Anything that is not an 8-bit
    1- or 3-channel raster is rejected with an error naming what was found.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image file not found: {path}")
    with Image.open(path) as im:
        if im.mode in _BIT16_MODES:
            raise ValueError(f"unsupported bit depth 16 in {path}, expected 8-bit")
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.uint8)[:, :, np.newaxis]
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.uint8)
        else:
            raise ValueError(
                f"unsupported image mode {im.mode!r} in {path}, "
                "expected 8-bit grayscale (L) or RGB"
            )
    return RasterImage(arr)


def save_image(img: RasterImage, path: str | Path) -> None:
    """Write ``img`` as a lossless PNG. Real-valued images must be quantized first."""
    path = Path(path)
    if img.is_real:
        raise ValueError("cannot save a real-valued image; quantize with from_real first")
    if not path.parent.exists():
        raise FileNotFoundError(f"directory does not exist: {path.parent}")
    arr = img.pixels
    pil = Image.fromarray(arr[:, :, 0] if img.channels == 1 else arr)
    pil.save(path, format="PNG")


def load_label_map(path: str | Path) -> InstanceLabelMap:
    """Load an instance label map from an 8-bit or 16-bit grayscale PNG.

    16-bit input is the one exception to the package's 8-bit I/O rule: the
    external cell segmenter emits label maps with more than 255 instances.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"label map file not found: {path}")
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.int32)
        elif im.mode in _BIT16_MODES:
            arr = np.asarray(im.convert("I"), dtype=np.int32)
        else:
            raise ValueError(
                f"unsupported label map mode {im.mode!r} in {path}, "
                "expected 8-bit or 16-bit grayscale"
            )
    return InstanceLabelMap(arr)


def save_label_map(labels: InstanceLabelMap, path: str | Path) -> None:
    """Write a label map as a 16-bit grayscale PNG."""
    path = Path(path)
    if not path.parent.exists():
        raise FileNotFoundError(f"directory does not exist: {path.parent}")
    arr = labels.labels
    if arr.max(initial=0) > 0xFFFF:
        raise ValueError(f"label id {arr.max()} exceeds 16-bit PNG range")
    Image.fromarray(arr.astype(np.uint16)).save(path, format="PNG")


def mask_to_image(mask: BinaryMask) -> RasterImage:
    """Render a mask as an 8-bit grayscale image (foreground 255)."""
    return RasterImage(np.where(mask.bits, 255, 0).astype(np.uint8))


def image_to_mask(img: RasterImage) -> BinaryMask:
    """Read a grayscale image back as a mask (any nonzero pixel is foreground)."""
    if img.channels != 1:
        raise ValueError(f"mask images must be single-channel, got {img.channels}")
    return BinaryMask(img.pixels[:, :, 0] != 0)


# ---------------------------------------------------------------------------
# 8-bit <-> real conversion
# ---------------------------------------------------------------------------


def to_real(img: RasterImage) -> RasterImage:
    """Exact conversion to a float64 working copy."""
    return RasterImage(img.pixels.astype(np.float64))


def from_real(img: RasterImage) -> RasterImage:
    """Quantize to 8-bit: clamp to [0, 255], then round half away from zero."""
    values = img.pixels.astype(np.float64)
    if not np.isfinite(values).all():
        raise ValueError("cannot quantize non-finite pixel values")
    clipped = np.clip(values, 0.0, 255.0)
    # After clamping all values are >= 0, so half-away-from-zero == floor(x + 0.5).
    return RasterImage(np.floor(clipped + 0.5).astype(np.uint8))
