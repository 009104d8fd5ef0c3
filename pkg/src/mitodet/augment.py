"""Seeded, replayable training-time augmentations for image/mask pairs.

The geometric chain applies, in fixed order: rescale (bilinear for the
image, nearest for the mask) -> rotation by a quarter-turn multiple ->
horizontal flip -> vertical flip -> random crop. The same spatial transform
hits image and mask. Color jitter perturbs hue/saturation/value.

Randomness is explicit: every operation either consumes a DrawRecord
(replay) or draws one from a seeded generator and returns it. Draw order
with a generator: scale, quarter-turns, hflip, vflip, crop x, crop y,
hue delta, saturation delta, value delta; disabled transforms draw nothing
and are recorded with identity values.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, replace

import numpy as np

from .imagecore import BinaryMask, RasterImage, from_real


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    rescale: bool = True
    rotate: bool = True
    hflip: bool = True
    vflip: bool = True
    crop: bool = True
    hsv: bool = True
    rescale_range: tuple[float, float] = (0.8, 1.2)
    hsv_deltas: tuple[float, float, float] = (0.02, 0.1, 0.1)
    crop_size: int = 512

    def __post_init__(self):
        lo, hi = self.rescale_range
        if not (0 < lo <= hi):
            raise ValueError(f"rescale_range must satisfy 0 < lo <= hi, got {self.rescale_range}")
        if any(d < 0 for d in self.hsv_deltas):
            raise ValueError(f"hsv delta magnitudes must be >= 0, got {self.hsv_deltas}")
        if self.crop_size <= 0:
            raise ValueError(f"crop_size must be positive, got {self.crop_size}")


@dataclass(frozen=True)
class DrawRecord:
    """The drawn parameters of one augmentation, sufficient for exact replay."""

    scale: float = 1.0
    rot_quarters: int = 0
    hflip: bool = False
    vflip: bool = False
    crop_x: int = 0
    crop_y: int = 0
    cropped: bool = False
    hue_delta: float = 0.0
    sat_delta: float = 0.0
    val_delta: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "DrawRecord":
        return cls(**data)


def derive_seed(global_seed: int, image_id: int | str, step: int = 0) -> int:
    """Stable per-sample seed from (global seed, image id, step)."""
    digest = hashlib.sha256(f"{global_seed}|{image_id}|{step}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def _sample_coords(new_dim: int, old_dim: int) -> np.ndarray:
    # pixel-center alignment: output center k+0.5 maps to input (k+0.5)/s
    scale = old_dim / new_dim
    return (np.arange(new_dim, dtype=np.float64) + 0.5) * scale - 0.5


def resize_bilinear(arr: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Bilinear resample of an (H, W) or (H, W, C) float array."""
    h, w = arr.shape[:2]
    ys = np.clip(_sample_coords(new_h, h), 0, h - 1)
    xs = np.clip(_sample_coords(new_w, w), 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, np.newaxis]
    fx = (xs - x0)[np.newaxis, :]
    if arr.ndim == 3:
        fy = fy[:, :, np.newaxis]
        fx = fx[:, :, np.newaxis]
    a = arr[np.ix_(y0, x0)]
    b = arr[np.ix_(y0, x1)]
    c = arr[np.ix_(y1, x0)]
    d = arr[np.ix_(y1, x1)]
    top = a * (1 - fx) + b * fx
    bot = c * (1 - fx) + d * fx
    return top * (1 - fy) + bot * fy


def resize_nearest(arr: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Nearest-neighbour resample using the same coordinate mapping as bilinear."""
    h, w = arr.shape[:2]
    ys = np.clip(np.rint(_sample_coords(new_h, h)), 0, h - 1).astype(np.intp)
    xs = np.clip(np.rint(_sample_coords(new_w, w)), 0, w - 1).astype(np.intp)
    return arr[np.ix_(ys, xs)]


def resize_image(img: RasterImage, new_w: int, new_h: int) -> RasterImage:
    """Bilinear resize of an 8-bit or real image; 8-bit output is re-quantized."""
    if new_w <= 0 or new_h <= 0:
        raise ValueError(f"target size must be positive, got {new_w}x{new_h}")
    resized = resize_bilinear(img.pixels.astype(np.float64), new_h, new_w)
    return RasterImage(resized) if img.is_real else from_real(RasterImage(resized))


def _scaled_dims(w: int, h: int, scale: float) -> tuple[int, int]:
    return max(1, int(np.floor(w * scale + 0.5))), max(1, int(np.floor(h * scale + 0.5)))


# ---------------------------------------------------------------------------
# Geometric chain
# ---------------------------------------------------------------------------


def geometric_augment(
    img: RasterImage,
    mask: BinaryMask,
    cfg: AugmentConfig = AugmentConfig(),
    draw: DrawRecord | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[RasterImage, BinaryMask, DrawRecord]:
    """Apply the geometric chain to an aligned image/mask pair.

    With ``draw`` given the recorded transform is replayed exactly (the
    enable flags are ignored; replay under the same cfg.crop_size that
    produced the record). Otherwise parameters are drawn from ``rng``, or a
    fresh generator seeded with cfg.seed, per the enabled flags.
    """
    if (img.height, img.width) != (mask.height, mask.width):
        raise ValueError(
            f"image {img.width}x{img.height} and mask {mask.width}x{mask.height} dims differ"
        )
    if draw is None:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        scale = float(rng.uniform(*cfg.rescale_range)) if cfg.rescale else 1.0
        quarters = int(rng.integers(0, 4)) if cfg.rotate else 0
        flip_h = bool(rng.random() < 0.5) if cfg.hflip else False
        flip_v = bool(rng.random() < 0.5) if cfg.vflip else False
    else:
        scale, quarters = draw.scale, draw.rot_quarters
        flip_h, flip_v = draw.hflip, draw.vflip

    pixels = img.pixels
    bits = mask.bits
    new_w, new_h = _scaled_dims(img.width, img.height, scale)
    if (new_h, new_w) != (img.height, img.width):
        resized = resize_bilinear(pixels.astype(np.float64), new_h, new_w)
        pixels = resized if img.is_real else np.floor(np.clip(resized, 0, 255) + 0.5).astype(np.uint8)
        bits = resize_nearest(bits, new_h, new_w)

    quarters %= 4
    if quarters:
        pixels = np.rot90(pixels, quarters, axes=(0, 1))
        bits = np.rot90(bits, quarters, axes=(0, 1))
    if flip_h:
        pixels = pixels[:, ::-1]
        bits = bits[:, ::-1]
    if flip_v:
        pixels = pixels[::-1, :]
        bits = bits[::-1, :]

    do_crop = cfg.crop if draw is None else draw.cropped
    crop_x = crop_y = 0
    if do_crop:
        cur_h, cur_w = bits.shape
        if cur_w < cfg.crop_size or cur_h < cfg.crop_size:
            raise ValueError(
                f"post-rescale size {cur_w}x{cur_h} is smaller than crop size {cfg.crop_size}"
            )
        if draw is None:
            crop_x = int(rng.integers(0, cur_w - cfg.crop_size + 1))
            crop_y = int(rng.integers(0, cur_h - cfg.crop_size + 1))
        else:
            crop_x, crop_y = draw.crop_x, draw.crop_y
            if crop_x + cfg.crop_size > cur_w or crop_y + cfg.crop_size > cur_h:
                raise ValueError(
                    f"replayed crop at ({crop_x}, {crop_y}) exceeds post-transform "
                    f"size {cur_w}x{cur_h}"
                )
        pixels = pixels[crop_y : crop_y + cfg.crop_size, crop_x : crop_x + cfg.crop_size]
        bits = bits[crop_y : crop_y + cfg.crop_size, crop_x : crop_x + cfg.crop_size]

    record = DrawRecord(
        scale=scale,
        rot_quarters=quarters,
        hflip=flip_h,
        vflip=flip_v,
        crop_x=crop_x,
        crop_y=crop_y,
        cropped=do_crop,
        hue_delta=0.0 if draw is None else draw.hue_delta,
        sat_delta=0.0 if draw is None else draw.sat_delta,
        val_delta=0.0 if draw is None else draw.val_delta,
    )
    return RasterImage(pixels), BinaryMask(bits), record


# ---------------------------------------------------------------------------
# HSV jitter
# ---------------------------------------------------------------------------


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorized RGB -> HSV on float arrays in [0, 1]; h in [0, 1) wrapping."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    safe = np.where(delta > 0, delta, 1.0)
    h = np.select(
        [delta == 0, maxc == r, maxc == g],
        [0.0, ((g - b) / safe) % 6.0, (b - r) / safe + 2.0],
        default=(r - g) / safe + 4.0,
    ) / 6.0
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    return np.stack([h % 1.0, s, maxc], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Vectorized HSV -> RGB inverse of rgb_to_hsv."""
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = (h % 1.0) * 6.0
    sector = np.floor(h6).astype(np.intp) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    idx = sector[..., np.newaxis]
    r = np.take_along_axis(np.stack([v, q, p, p, t, v], axis=-1), idx, axis=-1)
    g = np.take_along_axis(np.stack([t, v, v, q, p, p], axis=-1), idx, axis=-1)
    b = np.take_along_axis(np.stack([p, p, t, v, v, q], axis=-1), idx, axis=-1)
    return np.concatenate([r, g, b], axis=-1)


def hsv_jitter(
    img: RasterImage,
    cfg: AugmentConfig = AugmentConfig(),
    draw: DrawRecord | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[RasterImage, DrawRecord]:
    """Shift hue (wrapping), saturation and value (clamped) by drawn deltas.

    Deltas are uniform in [-d, d] per channel from cfg.hsv_deltas, or taken
    from ``draw`` for replay. Output is re-quantized to 8 bits.
    """
    if img.channels != 3:
        raise ValueError(f"hsv jitter needs a 3-channel image, got {img.channels} channel(s)")
    if draw is None:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        dh, ds, dv = (
            float(rng.uniform(-d, d)) if cfg.hsv and d > 0 else 0.0 for d in cfg.hsv_deltas
        )
        record = DrawRecord(hue_delta=dh, sat_delta=ds, val_delta=dv)
    else:
        dh, ds, dv = draw.hue_delta, draw.sat_delta, draw.val_delta
        record = draw

    hsv = rgb_to_hsv(img.pixels.astype(np.float64) / 255.0)
    hsv[..., 0] = (hsv[..., 0] + dh) % 1.0
    hsv[..., 1] = np.clip(hsv[..., 1] + ds, 0.0, 1.0)
    hsv[..., 2] = np.clip(hsv[..., 2] + dv, 0.0, 1.0)
    rgb = hsv_to_rgb(hsv) * 255.0
    return from_real(RasterImage(rgb)), record


def augment_pair(
    img: RasterImage,
    mask: BinaryMask,
    cfg: AugmentConfig = AugmentConfig(),
    draw: DrawRecord | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[RasterImage, BinaryMask, DrawRecord]:
    """Geometric chain plus color jitter, one combined draw record."""
    if draw is None and rng is None:
        rng = np.random.default_rng(cfg.seed)
    out_img, out_mask, record = geometric_augment(img, mask, cfg, draw=draw, rng=rng)
    if draw is not None:
        if draw.hue_delta or draw.sat_delta or draw.val_delta:
            out_img, _ = hsv_jitter(out_img, cfg, draw=draw)
        return out_img, out_mask, record
    if cfg.hsv and out_img.channels == 3:
        out_img, hsv_record = hsv_jitter(out_img, cfg, rng=rng)
        record = replace(
            record,
            hue_delta=hsv_record.hue_delta,
            sat_delta=hsv_record.sat_delta,
            val_delta=hsv_record.val_delta,
        )
    return out_img, out_mask, record
