import math

import numpy as np
import pytest
from util import constant_image, png_bytes_1x1, ppm_bytes, random_image

from contrastiq.errors import CorruptData, UnsupportedFormat, ZeroStd
from contrastiq.imagecore import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    AugmentPolicy,
    RasterImage,
    Tensor3,
    augment,
    color_jitter,
    decode_image,
    encode_png,
    eval_transform,
    horizontal_flip,
    normalize_channels,
    resize_bilinear,
    rotate,
    to_unit_tensor,
)
from contrastiq.rng import SeededRng


class TestDecode:
    def test_ppm_constant_red(self):
        img = decode_image(ppm_bytes(np.tile([255, 0, 0], (2, 2, 1)).astype(np.uint8)))
        assert (img.width, img.height, img.channels) == (2, 2, 3)
        assert img.data.size == 12
        assert np.all(img.data[..., 0] == 255)
        assert np.all(img.data[..., 1:] == 0)

    def test_png_single_pixel(self):
        img = decode_image(png_bytes_1x1(10, 20, 30))
        assert img.data.tolist() == [[[10, 20, 30]]]

    def test_truncated_png_is_corrupt(self):
        whole = png_bytes_1x1(1, 2, 3)
        with pytest.raises(CorruptData):
            decode_image(whole[:20])

    def test_unknown_format_rejected(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"certainly not an image")

    def test_grayscale_png_replicates_channels(self):
        from PIL import Image
        import io

        buf = io.BytesIO()
        Image.fromarray(np.arange(16, dtype=np.uint8).reshape(4, 4) * 16, mode="L").save(buf, "PNG")
        img = decode_image(buf.getvalue())
        assert np.array_equal(img.data[..., 0], img.data[..., 1])
        assert np.array_equal(img.data[..., 0], img.data[..., 2])

    def test_png_roundtrip(self):
        img = random_image(3, 9, 7)
        again = decode_image(encode_png(img))
        assert np.array_equal(img.data, again.data)


class TestResize:
    def test_same_size_is_byte_identical(self):
        img = random_image(0, 6, 5)
        out = resize_bilinear(img, 5, 6)
        assert np.array_equal(out.data, img.data)

    def test_constant_stays_constant(self):
        out = resize_bilinear(constant_image(128, 4, 4), 224, 224)
        assert np.all(out.data == 128)
        assert (out.width, out.height) == (224, 224)

    def test_two_pixel_upscale_matches_bilinear_oracle(self):
        img = RasterImage(np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8))
        out = resize_bilinear(img, 4, 1)
        # half-pixel mapping: sx = (i + 0.5)/2 - 0.5 clamped -> 0, .25, .75, 1
        oracle = [round(min(max((i + 0.5) / 2 - 0.5, 0.0), 1.0) * 255) for i in range(4)]
        got = out.data[0, :, 0].astype(int)
        assert np.all(np.abs(got - np.array(oracle)) <= 1)

    def test_rejects_zero_dims(self):
        with pytest.raises(ValueError):
            resize_bilinear(constant_image(1), 0, 4)


class TestTensorOps:
    def test_unit_tensor_endpoints(self):
        img = RasterImage(np.array([[[255, 0, 128]]], dtype=np.uint8))
        t = to_unit_tensor(img)
        assert t.data.shape == (3, 1, 1)
        assert t.data[0, 0, 0] == 1.0
        assert t.data[1, 0, 0] == 0.0
        assert t.data[2, 0, 0] == pytest.approx(128 / 255, abs=1e-7)

    def test_unit_range_property(self):
        t = to_unit_tensor(random_image(1))
        assert np.all(t.data >= 0.0) and np.all(t.data <= 1.0)

    def test_normalize_centers_channel(self):
        t = Tensor3(np.full((3, 2, 2), np.float32(0.485)))
        out = normalize_channels(t, IMAGENET_MEAN, IMAGENET_STD)
        assert np.all(out.data[0] == 0.0)

    def test_normalize_identity_params(self):
        t = to_unit_tensor(random_image(2))
        out = normalize_channels(t, (0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        assert np.array_equal(out.data, t.data)

    def test_normalize_arithmetic(self):
        t = Tensor3(np.ones((3, 1, 1), dtype=np.float32))
        out = normalize_channels(t, IMAGENET_MEAN, IMAGENET_STD)
        assert out.data[2, 0, 0] == pytest.approx((1.0 - 0.406) / 0.225, abs=1e-5)

    def test_normalize_zero_std_rejected(self):
        t = to_unit_tensor(random_image(4))
        with pytest.raises(ZeroStd):
            normalize_channels(t, IMAGENET_MEAN, (0.2, 0.0, 0.2))

    def test_normalized_unit_tensor_bounds(self):
        t = to_unit_tensor(random_image(5, 64, 64))
        out = normalize_channels(t, IMAGENET_MEAN, IMAGENET_STD)
        assert np.all(out.data >= -2.2) and np.all(out.data <= 2.7)


class TestFlipRotate:
    def test_flip_is_involution(self):
        t = to_unit_tensor(random_image(6))
        assert np.array_equal(horizontal_flip(horizontal_flip(t)).data, t.data)

    def test_flip_1x1x2(self):
        t = Tensor3(np.array([[[1.0, 2.0]]], dtype=np.float32))
        assert horizontal_flip(t).data.tolist() == [[[2.0, 1.0]]]

    def test_flip_symmetric_fixed_point(self):
        data = np.array([[[1.0, 2.0, 1.0]]], dtype=np.float32)
        t = Tensor3(data)
        assert np.array_equal(horizontal_flip(t).data, data)

    def test_rotate_zero_identity(self):
        t = to_unit_tensor(random_image(7))
        assert np.array_equal(rotate(t, 0.0).data, t.data)

    def test_rotate_constant_interior_unchanged(self):
        t = Tensor3(np.full((1, 21, 21), 5.0, dtype=np.float32))
        out = rotate(t, 17.0)
        assert out.data[0, 10, 10] == pytest.approx(5.0, abs=1e-5)
        assert out.data[0, 9:12, 9:12] == pytest.approx(5.0, abs=1e-5)

    def test_rotate_bright_pixel_lands_at_rotated_coordinate(self):
        h = w = 31
        data = np.zeros((1, h, w), dtype=np.float32)
        r, c = 6, 22
        data[0, r, c] = 100.0
        out = rotate(Tensor3(data), 10.0).data[0]
        cy = cx = (h - 1) / 2
        th = math.radians(10.0)
        # forward map of the rotation kernel (x right, y down)
        xr = math.cos(th) * (c - cx) - math.sin(th) * (r - cy) + cx
        yr = math.sin(th) * (c - cx) + math.cos(th) * (r - cy) + cy
        br, bc = np.unravel_index(np.argmax(out), out.shape)
        assert abs(br - yr) <= 1.0 and abs(bc - xr) <= 1.0

    def test_rotate_limit_enforced(self):
        t = to_unit_tensor(random_image(8))
        with pytest.raises(ValueError):
            rotate(t, 46.0)


class TestColorJitter:
    def test_identity_factors(self):
        img = random_image(9)
        out = color_jitter(img, 1.0, 1.0, 1.0, 0.0)
        assert np.array_equal(out.data, img.data)

    def test_gray_fixed_under_saturation_and_hue(self):
        gray = RasterImage(np.tile(np.arange(64, dtype=np.uint8).reshape(8, 8, 1), (1, 1, 3)) * 3)
        for s, h in [(0.5, 0.0), (1.7, 0.0), (1.0, 0.3), (1.0, -0.45), (1.3, 0.2)]:
            out = color_jitter(gray, 1.0, 1.0, s, h)
            assert np.array_equal(out.data, gray.data)

    def test_brightness_multiplies(self):
        img = constant_image(100)
        out = color_jitter(img, 1.2, 1.0, 1.0, 0.0)
        assert np.all(out.data == 120)

    def test_brightness_clamps(self):
        img = constant_image(240)
        out = color_jitter(img, 1.2, 1.0, 1.0, 0.0)
        assert np.all(out.data == 255)

    def test_contrast_blends_to_gray_mean(self):
        data = np.zeros((1, 2, 3), dtype=np.uint8)
        data[0, 0] = 50
        data[0, 1] = 150
        out = color_jitter(RasterImage(data), 1.0, 0.5, 1.0, 0.0)
        # gray mean is 100, so 50 -> 75 and 150 -> 125
        assert out.data[0, 0].tolist() == [75, 75, 75]
        assert out.data[0, 1].tolist() == [125, 125, 125]

    def test_hue_full_turn_is_identity_like(self):
        img = random_image(10)
        out = color_jitter(img, 1.0, 1.0, 1.0, 0.5)
        back = color_jitter(out, 1.0, 1.0, 1.0, -0.5)
        # two opposite half-turns round-trip within quantization error
        assert np.max(np.abs(back.data.astype(int) - img.data.astype(int))) <= 2

    def test_hue_rotation_matches_colorsys_oracle(self):
        import colorsys

        from contrastiq.imagecore import _rotate_hue

        rng = np.random.default_rng(3)
        px = rng.uniform(0, 255, (200, 1, 3))
        for turns in (0.1, -0.3, 0.5):
            got = _rotate_hue(px, turns)
            for i in range(px.shape[0]):
                r, g, b = px[i, 0] / 255.0
                h, s, v = colorsys.rgb_to_hsv(r, g, b)
                ref = np.array(colorsys.hsv_to_rgb((h + turns) % 1.0, s, v)) * 255.0
                assert np.max(np.abs(got[i, 0] - ref)) < 1e-9

    def test_rejects_bad_factors(self):
        img = constant_image(10)
        with pytest.raises(ValueError):
            color_jitter(img, 0.0, 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            color_jitter(img, 1.0, 1.0, 1.0, 0.6)


class TestAugment:
    def test_degenerate_policy_equals_eval_transform(self):
        img = random_image(11, 40, 30)
        policy = AugmentPolicy.identity(target_size=32)
        out = augment(img, SeededRng(5), policy)
        want = eval_transform(img, size=32)
        assert np.array_equal(out.data, want.data)

    def test_same_seed_bit_identical(self):
        img = random_image(12, 50, 50)
        policy = AugmentPolicy(target_size=64)
        a = augment(img, SeededRng(77), policy)
        b = augment(img, SeededRng(77), policy)
        assert np.array_equal(a.data, b.data)

    def test_different_seeds_differ(self):
        img = random_image(13, 50, 50)
        policy = AugmentPolicy(target_size=64)
        a = augment(img, SeededRng(1), policy)
        b = augment(img, SeededRng(2), policy)
        assert not np.array_equal(a.data, b.data)

    def test_output_shape_and_finiteness(self):
        img = random_image(14, 37, 61)
        out = augment(img, SeededRng(3), AugmentPolicy(target_size=224))
        assert out.data.shape == (3, 224, 224)
        assert np.all(np.isfinite(out.data))


class TestValidation:
    def test_raster_must_be_hwc_rgb(self):
        with pytest.raises(ValueError):
            RasterImage(np.zeros((4, 4), dtype=np.uint8))

    def test_tensor_must_be_finite(self):
        bad = np.zeros((1, 2, 2), dtype=np.float32)
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            Tensor3(bad)

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            AugmentPolicy(flip_probability=1.5)
        with pytest.raises(ValueError):
            AugmentPolicy(brightness_jitter=1.0)
        with pytest.raises(ValueError):
            AugmentPolicy(rotation_limit=60)
