import io

import numpy as np
import pytest
from PIL import Image

from carrot_cure.imaging import (
    DecodeError,
    FuzzyFilterConfig,
    RgbImage,
    decode_image,
    encode_png,
    fuzzy_filter,
    resize_bilinear,
    to_input_tensor,
)
from carrot_cure.tensor import ShapeError
from oracles import fuzzy_filter_scalar, resize_bilinear_scalar


def png_bytes(pixels: np.ndarray, mode: str = "RGB") -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def random_image(rng, h, w) -> RgbImage:
    return RgbImage(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


class TestDecode:
    def test_solid_red_round_trip(self):
        pixels = np.zeros((2, 2, 3), dtype=np.uint8)
        pixels[..., 0] = 255
        img = decode_image(png_bytes(pixels))
        assert (img.width, img.height) == (2, 2)
        np.testing.assert_array_equal(img.pixels, pixels)

    def test_truncated_jpeg_rejected(self):
        buf = io.BytesIO()
        Image.fromarray(np.full((8, 8, 3), 90, dtype=np.uint8)).save(buf, format="JPEG")
        truncated = buf.getvalue()[:20]
        with pytest.raises(DecodeError):
            decode_image(truncated)

    def test_garbage_rejected(self):
        with pytest.raises(DecodeError):
            decode_image(b"\x00not an image")

    def test_grayscale_expands_to_three_channels(self):
        img = decode_image(png_bytes(np.full((1, 1), 128, dtype=np.uint8), mode="L"))
        np.testing.assert_array_equal(img.pixels, [[[128, 128, 128]]])

    def test_alpha_dropped(self):
        rgba = np.zeros((2, 2, 4), dtype=np.uint8)
        rgba[..., 1] = 200
        rgba[..., 3] = 255
        img = decode_image(png_bytes(rgba, mode="RGBA"))
        assert img.pixels.shape == (2, 2, 3)
        assert (img.pixels[..., 1] == 200).all()

    def test_encode_decode_round_trip(self):
        rng = np.random.default_rng(0)
        img = random_image(rng, 5, 7)
        again = decode_image(encode_png(img))
        np.testing.assert_array_equal(again.pixels, img.pixels)


class TestFuzzyFilter:
    def test_constant_image_unchanged(self):
        img = RgbImage(np.full((4, 4, 3), 77, dtype=np.uint8))
        out = fuzzy_filter(img, FuzzyFilterConfig(window=3, threshold=255))
        np.testing.assert_array_equal(out.pixels, img.pixels)

    def test_single_bump_matches_formula(self):
        pixels = np.full((3, 3, 3), 100, dtype=np.uint8)
        pixels[1, 1, :] = 101
        img = RgbImage(pixels)
        out = fuzzy_filter(img, FuzzyFilterConfig(window=3, threshold=255))
        ref = fuzzy_filter_scalar(pixels, window=3, threshold=255)
        np.testing.assert_array_equal(out.pixels, ref)

    def test_impulse_outlier_gets_no_say(self):
        pixels = np.zeros((5, 5, 3), dtype=np.uint8)
        pixels[2, 2, :] = 255
        img = RgbImage(pixels)
        out = fuzzy_filter(img, FuzzyFilterConfig(window=3, threshold=10))
        # neighbours exclude the outlier (membership 0); the outlier keeps
        # only its own weight
        np.testing.assert_array_equal(out.pixels, pixels)

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(11)
        for _ in range(4):
            img = random_image(rng, 6, 5)
            cfg = FuzzyFilterConfig(window=3, threshold=float(rng.integers(10, 255)))
            out = fuzzy_filter(img, cfg)
            ref = fuzzy_filter_scalar(img.pixels, cfg.window, cfg.threshold)
            np.testing.assert_array_equal(out.pixels, ref)

    def test_window5_matches_scalar_reference(self):
        rng = np.random.default_rng(12)
        img = random_image(rng, 7, 7)
        cfg = FuzzyFilterConfig(window=5, threshold=80.0)
        np.testing.assert_array_equal(
            fuzzy_filter(img, cfg).pixels,
            fuzzy_filter_scalar(img.pixels, 5, 80.0),
        )

    def test_output_within_window_extremes(self):
        rng = np.random.default_rng(13)
        img = random_image(rng, 8, 8)
        out = fuzzy_filter(img, FuzzyFilterConfig()).pixels.astype(np.int64)
        padded = np.pad(img.pixels, ((1, 1), (1, 1), (0, 0)), mode="edge").astype(np.int64)
        for y in range(8):
            for x in range(8):
                win = padded[y : y + 3, x : x + 3, :]
                lo = win.min(axis=(0, 1))
                hi = win.max(axis=(0, 1))
                assert (out[y, x] >= lo).all() and (out[y, x] <= hi).all()

    def test_idempotent_on_constant(self):
        img = RgbImage(np.full((3, 3, 3), 5, dtype=np.uint8))
        once = fuzzy_filter(img)
        twice = fuzzy_filter(once)
        np.testing.assert_array_equal(once.pixels, twice.pixels)

    @pytest.mark.parametrize("window,threshold", [(2, 64), (1, 64), (3, 0), (3, 300)])
    def test_invalid_config(self, window, threshold):
        with pytest.raises(ValueError):
            FuzzyFilterConfig(window=window, threshold=threshold)


class TestResize:
    def test_same_size_is_identity(self):
        rng = np.random.default_rng(21)
        img = random_image(rng, 9, 4)
        out = resize_bilinear(img, 4, 9)
        np.testing.assert_array_equal(out.pixels, img.pixels)

    def test_2x2_to_1x1_averages(self):
        pixels = np.array(
            [[[10] * 3, [20] * 3], [[30] * 3, [40] * 3]], dtype=np.uint8
        )
        out = resize_bilinear(RgbImage(pixels), 1, 1)
        np.testing.assert_array_equal(out.pixels, [[[25, 25, 25]]])

    def test_1x1_to_any_is_constant(self):
        img = RgbImage(np.array([[[3, 140, 250]]], dtype=np.uint8))
        out = resize_bilinear(img, 5, 7)
        assert out.pixels.shape == (7, 5, 3)
        assert (out.pixels == [3, 140, 250]).all()

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(22)
        for _ in range(4):
            img = random_image(rng, int(rng.integers(2, 9)), int(rng.integers(2, 9)))
            ow, oh = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            out = resize_bilinear(img, ow, oh)
            ref = resize_bilinear_scalar(img.pixels, ow, oh)
            np.testing.assert_array_equal(out.pixels, ref)

    def test_zero_target_rejected(self):
        img = RgbImage(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            resize_bilinear(img, 0, 2)


class TestToInputTensor:
    def test_endpoints_and_midpoint(self):
        pixels = np.zeros((2, 2, 3), dtype=np.uint8)
        pixels[0, 0] = 255
        pixels[0, 1] = 128
        t = to_input_tensor(RgbImage(pixels), size=2)
        assert t.data[0, 0, 0] == 1.0
        assert t.data[1, 1, 0] == 0.0
        np.testing.assert_allclose(t.data[0, 1, 0], 128 / 255, rtol=1e-7)

    def test_wrong_dimensions_rejected(self):
        img = RgbImage(np.zeros((4, 4, 3), dtype=np.uint8))
        with pytest.raises(ShapeError):
            to_input_tensor(img, size=8)

    def test_lossless_for_exact_fractions(self):
        rng = np.random.default_rng(30)
        pixels = rng.integers(0, 256, size=(3, 3, 3), dtype=np.uint8)
        t = to_input_tensor(RgbImage(pixels), size=3)
        back = np.rint(t.data * 255).astype(np.uint8)
        np.testing.assert_array_equal(back, pixels)
