"""Sliding-window tiling of large images and stitching of per-tile outputs.

Tile origins advance by ``stride``; the final origin on each axis is snapped
to the image edge so every pixel is covered. Stitching recombines
single-channel per-tile grids by per-pixel max (default, keeps small
positive regions that straddle tile borders) or mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imagecore import BinaryMask, RasterImage


@dataclass(frozen=True)
class TileConfig:
    patch_size: int = 512
    stride: int = 256

    def __post_init__(self):
        if self.patch_size <= 0:
            raise ValueError(f"patch_size must be positive, got {self.patch_size}")
        if not 0 < self.stride <= self.patch_size:
            raise ValueError(
                f"stride must lie in (0, patch_size], got stride={self.stride} "
                f"patch_size={self.patch_size}"
            )


@dataclass(frozen=True)
class TileIndex:
    """Planned tile origins (x, y), row-major, unique and sorted."""

    width: int
    height: int
    patch_size: int
    origins: tuple[tuple[int, int], ...]

    def __post_init__(self):
        origins = tuple((int(x), int(y)) for x, y in self.origins)
        if len(set(origins)) != len(origins):
            raise ValueError("tile origins must be unique")
        if list(origins) != sorted(origins, key=lambda o: (o[1], o[0])):
            raise ValueError("tile origins must be sorted row-major")
        for x, y in origins:
            if x < 0 or y < 0 or x + self.patch_size > self.width or y + self.patch_size > self.height:
                raise ValueError(f"tile at ({x}, {y}) exceeds the {self.width}x{self.height} image")
        object.__setattr__(self, "origins", origins)

    def __len__(self) -> int:
        return len(self.origins)


def _axis_origins(dim: int, patch: int, stride: int) -> list[int]:
    origins = list(range(0, dim - patch + 1, stride))
    if origins[-1] != dim - patch:
        origins.append(dim - patch)
    return origins


def plan_tiles(width: int, height: int, cfg: TileConfig = TileConfig()) -> TileIndex:
    """Plan a sliding-window decomposition covering every pixel.

    Images smaller than the patch size are rejected; pad upstream if a
    smaller input must be processed.
    """
    if width < cfg.patch_size or height < cfg.patch_size:
        raise ValueError(
            f"image {width}x{height} is smaller than patch_size {cfg.patch_size}; "
            "pad the image upstream before tiling"
        )
    xs = _axis_origins(width, cfg.patch_size, cfg.stride)
    ys = _axis_origins(height, cfg.patch_size, cfg.stride)
    origins = tuple((x, y) for y in ys for x in xs)
    return TileIndex(width, height, cfg.patch_size, origins)


def _check_origin(width: int, height: int, origin: tuple[int, int], patch: int) -> None:
    x, y = origin
    if x < 0 or y < 0 or x + patch > width or y + patch > height:
        raise ValueError(
            f"tile origin ({x}, {y}) with patch {patch} exceeds the {width}x{height} image"
        )


def extract_tile(img: RasterImage, origin: tuple[int, int], cfg: TileConfig) -> RasterImage:
    """Exact pixel copy of the patch at ``origin`` (x, y)."""
    _check_origin(img.width, img.height, origin, cfg.patch_size)
    x, y = origin
    return RasterImage(img.pixels[y : y + cfg.patch_size, x : x + cfg.patch_size])


def extract_mask_tile(mask: BinaryMask, origin: tuple[int, int], cfg: TileConfig) -> BinaryMask:
    """Mask analogue of extract_tile."""
    _check_origin(mask.width, mask.height, origin, cfg.patch_size)
    x, y = origin
    return BinaryMask(mask.bits[y : y + cfg.patch_size, x : x + cfg.patch_size])


def stitch(
    tiles: list[tuple[tuple[int, int], np.ndarray]],
    width: int,
    height: int,
    mode: str = "max",
) -> np.ndarray:
    """Recombine single-channel per-tile grids into a full-image float grid.

    ``tiles`` is a list of ((x, y) origin, 2-D array). Overlaps resolve by
    per-pixel max or mean. Tiles are sorted internally, so the result is
    identical no matter the input order. Every pixel must be covered.
    """
    if mode not in ("max", "mean"):
        raise ValueError(f"mode must be 'max' or 'mean', got {mode!r}")
    ordered = sorted(
        ((tuple(origin), np.asarray(grid, dtype=np.float64)) for origin, grid in tiles),
        key=lambda t: (t[0][1], t[0][0]),
    )
    acc = np.zeros((height, width), dtype=np.float64)
    low = np.full((height, width), np.inf)
    high = np.full((height, width), -np.inf)
    count = np.zeros((height, width), dtype=np.int64)
    for (x, y), grid in ordered:
        if grid.ndim != 2:
            raise ValueError(f"tile grids must be 2-D, got ndim={grid.ndim}")
        th, tw = grid.shape
        if x < 0 or y < 0 or x + tw > width or y + th > height:
            raise ValueError(f"tile at ({x}, {y}) of size {tw}x{th} exceeds {width}x{height}")
        window = (slice(y, y + th), slice(x, x + tw))
        np.minimum(low[window], grid, out=low[window])
        np.maximum(high[window], grid, out=high[window])
        if mode == "mean":
            acc[window] += grid
        count[window] += 1
    if not count.all():
        raise ValueError("stitch plan leaves uncovered pixels")
    if mode == "max":
        return high
    # the mean of identical overlaps must reproduce them exactly (round-trip
    # contract); only genuinely mixed pixels go through the division
    return np.where(low == high, high, acc / count)


# ---------------------------------------------------------------------------
# Tile manifest (CLI file format)
# ---------------------------------------------------------------------------


def manifest_to_json(cfg: TileConfig, entries: list[tuple[int, int, str]]) -> dict:
    """Manifest dict: {"patch_size", "stride", "tiles": [{"x", "y", "file"}]}."""
    return {
        "patch_size": cfg.patch_size,
        "stride": cfg.stride,
        "tiles": [{"x": x, "y": y, "file": name} for x, y, name in entries],
    }


def manifest_from_json(data: dict) -> tuple[TileConfig, list[tuple[int, int, str]]]:
    try:
        cfg = TileConfig(patch_size=data["patch_size"], stride=data["stride"])
        entries = [(int(t["x"]), int(t["y"]), t["file"]) for t in data["tiles"]]
    except KeyError as exc:
        raise ValueError(f"manifest is missing key {exc.args[0]!r}") from exc
    return cfg, entries


def write_manifest(path: str | Path, cfg: TileConfig, entries: list[tuple[int, int, str]]) -> None:
    Path(path).write_text(json.dumps(manifest_to_json(cfg, entries), indent=2) + "\n")


def read_manifest(path: str | Path) -> tuple[TileConfig, list[tuple[int, int, str]]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    try:
        return manifest_from_json(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON in {path}: {exc}") from exc
