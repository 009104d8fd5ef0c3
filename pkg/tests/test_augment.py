import numpy as np
import pytest

from mitodet.augment import (
    AugmentConfig,
    DrawRecord,
    augment_pair,
    derive_seed,
    geometric_augment,
    hsv_jitter,
    hsv_to_rgb,
    resize_bilinear,
    resize_image,
    rgb_to_hsv,
)
from mitodet.imagecore import BinaryMask, RasterImage

ALL_OFF = AugmentConfig(
    rescale=False, rotate=False, hflip=False, vflip=False, crop=False, hsv=False
)


def random_pair(rng, h=32, w=32):
    img = RasterImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))
    mask = BinaryMask(rng.random((h, w)) > 0.5)
    return img, mask


def test_all_flags_off_is_identity():
    rng = np.random.default_rng(0)
    img, mask = random_pair(rng)
    out_img, out_mask, record = geometric_augment(img, mask, ALL_OFF)
    assert np.array_equal(out_img.pixels, img.pixels)
    assert np.array_equal(out_mask.bits, mask.bits)
    assert record == DrawRecord()


def test_hflip_is_an_involution():
    rng = np.random.default_rng(1)
    img, mask = random_pair(rng)
    draw = DrawRecord(hflip=True)
    once_img, once_mask, _ = geometric_augment(img, mask, ALL_OFF, draw=draw)
    twice_img, twice_mask, _ = geometric_augment(once_img, once_mask, ALL_OFF, draw=draw)
    assert np.array_equal(twice_img.pixels, img.pixels)
    assert np.array_equal(twice_mask.bits, mask.bits)


def test_rot180_maps_origin_to_far_corner():
    h, w = 10, 14
    arr = np.zeros((h, w, 1), dtype=np.uint8)
    arr[0, 0, 0] = 99
    img = RasterImage(arr)
    mask = BinaryMask(np.zeros((h, w), dtype=bool))
    out, _, _ = geometric_augment(img, mask, ALL_OFF, draw=DrawRecord(rot_quarters=2))
    assert out.pixels[h - 1, w - 1, 0] == 99
    assert out.pixels.sum() == 99


def test_same_seed_bit_identical():
    rng = np.random.default_rng(2)
    img, mask = random_pair(rng, 64, 64)
    cfg = AugmentConfig(seed=1234, crop_size=32)
    a_img, a_mask, a_rec = augment_pair(img, mask, cfg)
    b_img, b_mask, b_rec = augment_pair(img, mask, cfg)
    assert a_rec == b_rec
    assert np.array_equal(a_img.pixels, b_img.pixels)
    assert np.array_equal(a_mask.bits, b_mask.bits)


def test_replay_reproduces_output():
    rng = np.random.default_rng(3)
    img, mask = random_pair(rng, 64, 64)
    cfg = AugmentConfig(seed=77, crop_size=32)
    out_img, out_mask, record = augment_pair(img, mask, cfg)
    replay_img, replay_mask, _ = augment_pair(
        img, mask, cfg, draw=DrawRecord.from_json(record.to_json())
    )
    assert np.array_equal(replay_img.pixels, out_img.pixels)
    assert np.array_equal(replay_mask.bits, out_mask.bits)


def test_isometries_preserve_mask_cardinality():
    rng = np.random.default_rng(4)
    _, mask = random_pair(rng)
    img = RasterImage(np.zeros((32, 32, 3), dtype=np.uint8))
    for draw in (
        DrawRecord(hflip=True),
        DrawRecord(vflip=True),
        DrawRecord(rot_quarters=1),
        DrawRecord(rot_quarters=3, hflip=True, vflip=True),
    ):
        _, out_mask, _ = geometric_augment(img, mask, ALL_OFF, draw=draw)
        assert out_mask.bits.sum() == mask.bits.sum()


def test_image_and_mask_stay_aligned_under_isometries():
    rng = np.random.default_rng(5)
    img, mask = random_pair(rng)
    marker = img.pixels[:, :, 0] > 128  # derived pattern moves with the image
    img = RasterImage(
        np.where(marker[:, :, np.newaxis], img.pixels, 0).astype(np.uint8)
    )
    mask = BinaryMask(marker)
    draw = DrawRecord(rot_quarters=3, hflip=True)
    out_img, out_mask, _ = geometric_augment(img, mask, ALL_OFF, draw=draw)
    assert np.array_equal(out_mask.bits, out_img.pixels[:, :, 0] > 128)


def test_crop_draws_inside_bounds_and_sizes_output():
    rng = np.random.default_rng(6)
    img, mask = random_pair(rng, 100, 80)
    cfg = AugmentConfig(
        seed=5, rescale=False, rotate=False, hflip=False, vflip=False, hsv=False, crop_size=48
    )
    out_img, out_mask, record = geometric_augment(img, mask, cfg)
    assert (out_img.height, out_img.width) == (48, 48)
    assert (out_mask.height, out_mask.width) == (48, 48)
    assert 0 <= record.crop_x <= 80 - 48
    assert 0 <= record.crop_y <= 100 - 48


def test_crop_larger_than_post_rescale_dims_rejected():
    rng = np.random.default_rng(7)
    img, mask = random_pair(rng, 40, 40)
    cfg = AugmentConfig(
        seed=5,
        rescale=True,
        rescale_range=(0.5, 0.5),
        rotate=False,
        hflip=False,
        vflip=False,
        hsv=False,
        crop_size=32,
    )
    with pytest.raises(ValueError, match="crop"):
        geometric_augment(img, mask, cfg)


def test_rescale_half_up_dims():
    img = RasterImage(np.zeros((10, 10, 3), dtype=np.uint8))
    mask = BinaryMask(np.zeros((10, 10), dtype=bool))
    out_img, out_mask, _ = geometric_augment(img, mask, ALL_OFF, draw=DrawRecord(scale=1.25))
    # round(12.5) half-up -> 13
    assert (out_img.height, out_img.width) == (13, 13)
    assert (out_mask.height, out_mask.width) == (13, 13)


def test_resize_bilinear_identity_and_constant():
    rng = np.random.default_rng(8)
    arr = rng.random((17, 23))
    assert np.array_equal(resize_bilinear(arr, 17, 23), arr)
    up = resize_bilinear(np.full((5, 5), 3.5), 12, 9)
    assert np.allclose(up, 3.5)


def test_resize_image_quantizes_8bit():
    img = RasterImage(np.full((4, 4, 3), 100, dtype=np.uint8))
    out = resize_image(img, 7, 9)
    assert not out.is_real
    assert np.all(out.pixels == 100)


class TestHsv:
    def test_zero_deltas_within_one_level(self):
        rng = np.random.default_rng(9)
        img = RasterImage(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
        out, _ = hsv_jitter(img, AugmentConfig(hsv=False))
        assert np.abs(out.pixels.astype(int) - img.pixels.astype(int)).max() <= 1

    def test_gray_unchanged_by_hue_shift(self):
        img = RasterImage(np.full((8, 8, 3), 77, dtype=np.uint8))
        out, _ = hsv_jitter(img, AugmentConfig(), draw=DrawRecord(hue_delta=0.37))
        assert np.array_equal(out.pixels, img.pixels)

    def test_red_value_halved(self):
        img = RasterImage(np.tile(np.array([255, 0, 0], dtype=np.uint8), (4, 4, 1)))
        out, _ = hsv_jitter(img, AugmentConfig(), draw=DrawRecord(val_delta=-0.5))
        expected = np.tile(np.array([128, 0, 0]), (4, 4, 1))
        assert np.abs(out.pixels.astype(int) - expected).max() <= 1

    def test_single_channel_rejected(self):
        img = RasterImage(np.zeros((4, 4, 1), dtype=np.uint8))
        with pytest.raises(ValueError, match="3-channel"):
            hsv_jitter(img, AugmentConfig())

    def test_roundtrip_conversion_exact_on_floats(self):
        rng = np.random.default_rng(10)
        rgb = rng.random((32, 32, 3))
        back = hsv_to_rgb(rgb_to_hsv(rgb))
        assert np.abs(back - rgb).max() < 1e-12

    def test_hue_wraps(self):
        hsv = rgb_to_hsv(np.array([[[1.0, 0.0, 0.0]]]))
        assert hsv[0, 0, 0] == 0.0
        shifted = hsv.copy()
        shifted[..., 0] = (shifted[..., 0] + 1.0) % 1.0  # full turn
        assert np.allclose(hsv_to_rgb(shifted), [[[1.0, 0.0, 0.0]]])


def test_derive_seed_stable_and_distinct():
    a = derive_seed(42, "img_001", 0)
    assert a == derive_seed(42, "img_001", 0)
    assert a != derive_seed(42, "img_001", 1)
    assert a != derive_seed(42, "img_002", 0)
    assert a != derive_seed(43, "img_001", 0)


def test_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(rescale_range=(1.2, 0.8))
    with pytest.raises(ValueError):
        AugmentConfig(hsv_deltas=(-0.1, 0.0, 0.0))
    with pytest.raises(ValueError):
        AugmentConfig(crop_size=0)


def test_dims_mismatch_rejected():
    img = RasterImage(np.zeros((8, 8, 3), dtype=np.uint8))
    mask = BinaryMask(np.zeros((8, 9), dtype=bool))
    with pytest.raises(ValueError, match="differ"):
        geometric_augment(img, mask, ALL_OFF)
