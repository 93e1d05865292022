"""Image ingest and preprocessing: decode, denoise, resize, normalize.

The denoiser is a fuzzy-membership weighted mean: each neighbour in the
window is weighted by how similar its intensity is to the window centre
(triangular membership, zero beyond the threshold), so impulse outliers
get almost no say while flat regions average cleanly. Borders replicate
edge pixels.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .tensor import ShapeError, Tensor

# Network input resolution; divisible by 2**4 so four 2x2 pools land on 8x8.
INPUT_SIZE = 128

DEFAULT_FUZZY_WINDOW = 3
DEFAULT_FUZZY_THRESHOLD = 64.0


class DecodeError(ValueError):
    """Raised when a byte stream is not a decodable PNG/JPEG image."""


@dataclass
class RgbImage:
    """8-bit RGB raster, pixels stored row-major as a [H, W, 3] uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {px.dtype}")
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must have shape [H, W, 3], got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        self.pixels = np.ascontiguousarray(px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class FuzzyFilterConfig:
    """Window size (odd, >= 3) and similarity threshold in (0, 255]."""

    window: int = DEFAULT_FUZZY_WINDOW
    threshold: float = DEFAULT_FUZZY_THRESHOLD

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be an odd integer >= 3, got {self.window}")
        if not 0 < self.threshold <= 255:
            raise ValueError(f"threshold must be in (0, 255], got {self.threshold}")


def decode_image(data: bytes) -> RgbImage:
    """Decode a PNG or JPEG byte stream to 8-bit RGB.

    Alpha channels are dropped and grayscale is expanded to three channels.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
            return RgbImage(np.asarray(rgb, dtype=np.uint8))
    except UnidentifiedImageError as exc:
        raise DecodeError(f"unrecognized image format: {exc}") from exc
    except (OSError, ValueError) as exc:
        raise DecodeError(f"corrupt or truncated image stream: {exc}") from exc


def encode_png(img: RgbImage) -> bytes:
    """Encode an image as PNG bytes (deterministic for identical pixels)."""
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def fuzzy_filter(img: RgbImage, cfg: FuzzyFilterConfig = FuzzyFilterConfig()) -> RgbImage:
    """Denoise with a fuzzy-membership weighted mean over each window.

    Per channel, each output pixel is sum(mu_n * I_n) / sum(mu_n) over the
    window, with mu_n = max(0, 1 - |I_n - I_c| / T) and I_c the centre
    intensity. The centre always carries weight 1, so the denominator never
    vanishes. Output is rounded and clamped to [0, 255].
    """
    half = cfg.window // 2
    src = img.pixels.astype(np.float64)
    padded = np.pad(src, ((half, half), (half, half), (0, 0)), mode="edge")
    h, w = img.height, img.width

    centre = src
    num = np.zeros_like(src)
    den = np.zeros_like(src)
    for dy in range(cfg.window):
        for dx in range(cfg.window):
            neigh = padded[dy : dy + h, dx : dx + w, :]
            mu = 1.0 - np.abs(neigh - centre) / cfg.threshold
            np.maximum(mu, 0.0, out=mu)
            num += mu * neigh
            den += mu
    out = np.rint(num / den)
    np.clip(out, 0, 255, out=out)
    return RgbImage(out.astype(np.uint8))


def resize_bilinear(img: RgbImage, out_w: int, out_h: int) -> RgbImage:
    """Bilinear resize with half-pixel-centre sampling.

    Source coordinate = (dst + 0.5) * scale - 0.5, clamped to the image,
    so resizing to the same dimensions is pixel-exact.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    if out_w == img.width and out_h == img.height:
        return RgbImage(img.pixels.copy())

    src = img.pixels.astype(np.float64)
    h, w = img.height, img.width

    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    np.clip(sx, 0, w - 1, out=sx)
    np.clip(sy, 0, h - 1, out=sy)

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0

    top = src[y0][:, x0] * (1 - fx)[None, :, None] + src[y0][:, x1] * fx[None, :, None]
    bot = src[y1][:, x0] * (1 - fx)[None, :, None] + src[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    out = np.rint(out)
    np.clip(out, 0, 255, out=out)
    return RgbImage(out.astype(np.uint8))


def to_input_tensor(img: RgbImage, size: int = INPUT_SIZE) -> Tensor:
    """Scale an image of the network's input resolution into [0, 1] reals."""
    if img.width != size or img.height != size:
        raise ShapeError(
            f"expected a {size}x{size} input image, got {img.width}x{img.height}"
        )
    return Tensor(img.pixels.astype(np.float32) / np.float32(255.0))


def preprocess(img: RgbImage, fuzzy: FuzzyFilterConfig = FuzzyFilterConfig(),
               size: int = INPUT_SIZE) -> Tensor:
    """Full inference-time chain: denoise, resize, normalize."""
    return to_input_tensor(resize_bilinear(fuzzy_filter(img, fuzzy), size, size), size)
