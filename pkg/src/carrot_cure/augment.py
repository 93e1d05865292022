"""Stochastic geometric augmentation: rotation, shifts, shear, zoom, flip.

All sub-transforms are composed into a single affine matrix and applied in
one inverse-mapped bilinear resampling pass, so a neutral parameter set is
a pixel-exact identity. The horizontal flip is a pure index reversal
applied after the warp and is therefore an exact involution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import LabeledImage
from .imaging import RgbImage

FillMode = Literal["nearest", "reflect", "constant"]


@dataclass(frozen=True)
class AugmentConfig:
    """Maximum magnitudes for each random transform plus the draw seed."""

    rotate_deg: float = 20.0
    width_shift: float = 0.10
    height_shift: float = 0.10
    shear_deg: float = 15.0
    zoom: float = 0.15
    horizontal_flip: bool = True
    fill_mode: FillMode = "nearest"
    fill_value: int = 0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.rotate_deg <= 180:
            raise ValueError(f"rotate_deg must be in [0, 180], got {self.rotate_deg}")
        for name in ("width_shift", "height_shift", "zoom"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
        if not 0 <= self.shear_deg < 90:
            raise ValueError(f"shear_deg must be in [0, 90), got {self.shear_deg}")
        if self.fill_mode not in ("nearest", "reflect", "constant"):
            raise ValueError(f"unknown fill_mode {self.fill_mode!r}")


@dataclass(frozen=True)
class TransformParams:
    """One concrete draw of the augmentation parameters."""

    rotation: float = 0.0
    shift_x: float = 0.0
    shift_y: float = 0.0
    shear: float = 0.0
    zoom_x: float = 1.0
    zoom_y: float = 1.0
    flip: bool = False


def _inverse_affine(rotation: float, shear: float, zoom_x: float,
                    zoom_y: float) -> np.ndarray:
    """Inverse of the combined rotation . shear . zoom matrix (2x2)."""
    th = math.radians(rotation)
    sh = math.radians(shear)
    c, s = math.cos(th), math.sin(th)
    rot = np.array([[c, -s], [s, c]], dtype=np.float64)
    shear_m = np.array([[1.0, -math.tan(sh)], [0.0, 1.0]], dtype=np.float64)
    zoom_m = np.array([[zoom_x, 0.0], [0.0, zoom_y]], dtype=np.float64)
    fwd = rot @ shear_m @ zoom_m
    det = fwd[0, 0] * fwd[1, 1] - fwd[0, 1] * fwd[1, 0]
    return np.array(
        [[fwd[1, 1], -fwd[0, 1]], [-fwd[1, 0], fwd[0, 0]]], dtype=np.float64
    ) / det


def _fold_reflect(idx: np.ndarray, n: int) -> np.ndarray:
    """Mirror integer coordinates into [0, n-1] (symmetric about edges)."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    m = np.mod(idx, period)
    return np.where(m > n - 1, period - m, m)


def _sample_taps(channelled: np.ndarray, yi: np.ndarray, xi: np.ndarray,
                 fill_mode: FillMode, fill_value: int) -> np.ndarray:
    """Gather one bilinear tap per output pixel, resolving out-of-bounds."""
    h, w = channelled.shape[:2]
    if fill_mode == "nearest":
        return channelled[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
    if fill_mode == "reflect":
        return channelled[_fold_reflect(yi, h), _fold_reflect(xi, w)]
    inside = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
    vals = channelled[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
    return np.where(inside[..., None], vals, np.float32(fill_value))


def affine_transform(img: RgbImage, rotation: float = 0.0, shift_x: float = 0.0,
                     shift_y: float = 0.0, shear: float = 0.0,
                     zoom_x: float = 1.0, zoom_y: float = 1.0, flip: bool = False,
                     fill_mode: FillMode = "nearest",
                     fill_value: int = 0) -> RgbImage:
    """Warp an image by the combined affine map about its centre.

    The transform is inverse-mapped: for each destination pixel the source
    coordinate is computed, sampled bilinearly, and out-of-bounds taps are
    resolved per fill_mode. The horizontal flip is applied last.
    """
    h, w = img.height, img.width
    inv = _inverse_affine(rotation, shear, zoom_x, zoom_y)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    tx, ty = shift_x * w, shift_y * h

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    u = xs[None, :] - cx - tx
    v = ys[:, None] - cy - ty
    src_x = inv[0, 0] * u + inv[0, 1] * v + cx
    src_y = inv[1, 0] * u + inv[1, 1] * v + cy

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = (src_x - x0).astype(np.float32)[..., None]
    fy = (src_y - y0).astype(np.float32)[..., None]

    src = img.pixels.astype(np.float32)
    p00 = _sample_taps(src, y0, x0, fill_mode, fill_value)
    p01 = _sample_taps(src, y0, x0 + 1, fill_mode, fill_value)
    p10 = _sample_taps(src, y0 + 1, x0, fill_mode, fill_value)
    p11 = _sample_taps(src, y0 + 1, x0 + 1, fill_mode, fill_value)

    out = (p00 * (1 - fx) + p01 * fx) * (1 - fy) + (p10 * (1 - fx) + p11 * fx) * fy
    out = np.rint(out)
    np.clip(out, 0, 255, out=out)
    pixels = out.astype(np.uint8)
    if flip:
        pixels = pixels[:, ::-1, :]
    return RgbImage(pixels)


def apply_params(img: RgbImage, params: TransformParams,
                 cfg: AugmentConfig) -> RgbImage:
    return affine_transform(
        img,
        rotation=params.rotation,
        shift_x=params.shift_x,
        shift_y=params.shift_y,
        shear=params.shear,
        zoom_x=params.zoom_x,
        zoom_y=params.zoom_y,
        flip=params.flip,
        fill_mode=cfg.fill_mode,
        fill_value=cfg.fill_value,
    )


def sample_augmentation(cfg: AugmentConfig,
                        rng: np.random.Generator) -> TransformParams:
    """Draw one parameter set; uniform in each configured range.

    Draw order is fixed (rotation, shifts, shear, zooms, flip) so a given
    generator state always yields the same sequence.
    """
    rotation = rng.uniform(-cfg.rotate_deg, cfg.rotate_deg)
    shift_x = rng.uniform(-cfg.width_shift, cfg.width_shift)
    shift_y = rng.uniform(-cfg.height_shift, cfg.height_shift)
    shear = rng.uniform(-cfg.shear_deg, cfg.shear_deg)
    zoom_x = rng.uniform(1 - cfg.zoom, 1 + cfg.zoom)
    zoom_y = rng.uniform(1 - cfg.zoom, 1 + cfg.zoom)
    flip = bool(rng.random() < 0.5) if cfg.horizontal_flip else False
    return TransformParams(rotation, shift_x, shift_y, shear, zoom_x, zoom_y, flip)


def expand_dataset(images: list[LabeledImage], cfg: AugmentConfig,
                   copies_per_image: int) -> list[LabeledImage]:
    """Every original plus copies_per_image augmented variants of each.

    Deterministic under cfg.seed; each source image gets its own stream
    (seed xor index) so expansion can be parallelised without reordering.
    """
    if copies_per_image < 0:
        raise ValueError(f"copies_per_image must be >= 0, got {copies_per_image}")
    out: list[LabeledImage] = []
    for idx, item in enumerate(images):
        out.append(item)
        if copies_per_image == 0:
            continue
        rng = np.random.default_rng(cfg.seed ^ idx)
        for k in range(copies_per_image):
            params = sample_augmentation(cfg, rng)
            aug = apply_params(item.image, params, cfg)
            out.append(
                LabeledImage(aug, item.label, f"{item.source_path}#aug{k}")
            )
    return out
