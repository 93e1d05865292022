"""Corpus handling: class schema, directory scanning, splits, batches.

The on-disk layout is one subdirectory per class key holding PNG/JPEG
files. Because no field-collected corpus ships with the project, a
procedural generator produces four visually separable classes for
desk-scale training and tests.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .imaging import (
    INPUT_SIZE,
    DecodeError,
    RgbImage,
    decode_image,
    encode_png,
    resize_bilinear,
)
from .tensor import Tensor

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CarrotClass:
    id: int
    key: str


CLASSES = (
    CarrotClass(0, "cavity_spot"),
    CarrotClass(1, "healthy"),
    CarrotClass(2, "leaf_blight"),
    CarrotClass(3, "fresh_carrot"),
)
CLASS_KEYS = tuple(c.key for c in CLASSES)
NUM_CLASSES = len(CLASSES)

_BY_KEY = {c.key: c for c in CLASSES}

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


class DatasetSchemaError(ValueError):
    """A directory under the corpus root is not a known class key."""


class DataError(ValueError):
    """The corpus content violates a precondition (e.g. an empty class)."""


def class_by_key(key: str) -> CarrotClass:
    if key not in _BY_KEY:
        raise DatasetSchemaError(f"unknown class key {key!r}; expected one of {CLASS_KEYS}")
    return _BY_KEY[key]


@dataclass
class LabeledImage:
    image: RgbImage
    label: CarrotClass
    source_path: str


@dataclass
class DatasetSplit:
    train: list[LabeledImage]
    validation: list[LabeledImage]
    seed: int


def scan_dataset(root: Path | str) -> list[LabeledImage]:
    """Load every decodable PNG/JPEG under the class subdirectories of root.

    Order is deterministic (lexicographic by class key, then filename).
    Unknown subdirectories abort with a schema error; undecodable files are
    skipped with a warning and a final skip count.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")

    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    unknown = [p.name for p in subdirs if p.name not in _BY_KEY]
    if unknown:
        raise DatasetSchemaError(
            f"unknown class directories under {root}: {', '.join(sorted(unknown))}; "
            f"expected only {CLASS_KEYS}"
        )
    if not subdirs:
        log.warning("dataset root %s contains no class directories", root)
        return []

    items: list[LabeledImage] = []
    skipped = 0
    for sub in subdirs:
        label = _BY_KEY[sub.name]
        for path in sorted(sub.iterdir()):
            if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            try:
                img = decode_image(path.read_bytes())
            except DecodeError as exc:
                log.warning("skipping undecodable file %s: %s", path, exc)
                skipped += 1
                continue
            items.append(LabeledImage(img, label, str(path)))
    if skipped:
        log.warning("skipped %d undecodable file(s) under %s", skipped, root)
    if not items:
        log.warning("dataset root %s contains no images", root)
    return items


def write_dataset(items: Sequence[LabeledImage], root: Path | str) -> int:
    """Write images to the canonical class-directory layout as PNG files."""
    root = Path(root)
    counters = {key: 0 for key in CLASS_KEYS}
    for item in items:
        sub = root / item.label.key
        sub.mkdir(parents=True, exist_ok=True)
        n = counters[item.label.key]
        counters[item.label.key] += 1
        (sub / f"{item.label.key}_{n:05d}.png").write_bytes(encode_png(item.image))
    return len(items)


def split_stratified(items: Sequence[LabeledImage], val_fraction: float,
                     seed: int) -> DatasetSplit:
    """Per-class seeded shuffle sending floor(n_c * val_fraction) samples to
    validation (at least 1 whenever a class has 2+ samples)."""
    if not 0 < val_fraction < 1:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")

    by_class: dict[int, list[LabeledImage]] = {c.id: [] for c in CLASSES}
    for item in items:
        by_class[item.label.id].append(item)
    for c in CLASSES:
        if not by_class[c.id]:
            raise DataError(f"class {c.key!r} has no samples")

    train: list[LabeledImage] = []
    validation: list[LabeledImage] = []
    for c in CLASSES:
        group = by_class[c.id]
        rng = np.random.default_rng(np.random.SeedSequence((seed, c.id)))
        order = rng.permutation(len(group))
        n_val = int(len(group) * val_fraction)
        if n_val == 0 and len(group) >= 2:
            n_val = 1
        validation.extend(group[i] for i in order[:n_val])
        train.extend(group[i] for i in order[n_val:])
    return DatasetSplit(train=train, validation=validation, seed=seed)


def one_hot(class_id: int, num_classes: int = NUM_CLASSES) -> np.ndarray:
    out = np.zeros(num_classes, dtype=np.float32)
    out[class_id] = 1.0
    return out


def batches(items: Sequence[LabeledImage], batch_size: int,
            shuffle_seed: Optional[int] = None,
            size: int = INPUT_SIZE) -> Iterator[tuple[Tensor, Tensor]]:
    """Yield (images [B,H,W,3] in [0,1], one-hot labels [B,4]) batches.

    Every item is yielded exactly once; the final batch may be short. With
    no shuffle seed the input order is preserved.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = np.arange(len(items))
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(items))
    for start in range(0, len(items), batch_size):
        chunk = order[start : start + batch_size]
        xs = np.stack(
            [
                resize_bilinear(items[i].image, size, size).pixels.astype(np.float32)
                / np.float32(255.0)
                for i in chunk
            ]
        )
        ys = np.stack([one_hot(items[i].label.id) for i in chunk])
        yield Tensor(xs), Tensor(ys)


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

_ORANGE = (225.0, 135.0, 42.0)
_BLEMISH = (38.0, 26.0, 18.0)
_GREEN = (62.0, 160.0, 52.0)
_BROWN = (125.0, 70.0, 32.0)
_SOIL = (118.0, 100.0, 76.0)


def _coords(size: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[0:size, 0:size]
    return yy.astype(np.float64), xx.astype(np.float64)


def _ellipse_mask(size: int, cx: float, cy: float, rx: float, ry: float,
                  angle: float = 0.0) -> np.ndarray:
    yy, xx = _coords(size)
    ca, sa = np.cos(angle), np.sin(angle)
    u = (xx - cx) * ca + (yy - cy) * sa
    v = -(xx - cx) * sa + (yy - cy) * ca
    return (u / rx) ** 2 + (v / ry) ** 2 <= 1.0


def _paint(img: np.ndarray, mask: np.ndarray, color: tuple[float, float, float],
           rng: np.random.Generator, noise: float = 6.0) -> None:
    n = int(mask.sum())
    if n == 0:
        return
    block = np.array(color) + rng.normal(0.0, noise, size=(n, 3))
    img[mask] = block


def _background(size: int, rng: np.random.Generator) -> np.ndarray:
    base = np.array(_SOIL) + rng.uniform(-8, 8, size=3)
    img = np.tile(base, (size, size, 1))
    img += rng.normal(0.0, 8.0, size=img.shape)
    return img


def _carrot_body(img: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    cx = size * rng.uniform(0.44, 0.56)
    cy = size * rng.uniform(0.44, 0.56)
    rx = size * rng.uniform(0.30, 0.40)
    ry = size * rng.uniform(0.18, 0.26)
    angle = rng.uniform(-0.45, 0.45)
    mask = _ellipse_mask(size, cx, cy, rx, ry, angle)
    _paint(img, mask, _ORANGE, rng)
    return mask


def _add_blemishes(img: np.ndarray, body: np.ndarray, size: int,
                   rng: np.random.Generator) -> None:
    ys, xs = np.nonzero(body)
    count = int(rng.integers(4, 9))
    for _ in range(count):
        i = int(rng.integers(0, len(ys)))
        r = size * rng.uniform(0.055, 0.10)
        spot = _ellipse_mask(size, float(xs[i]), float(ys[i]), r, r)
        _paint(img, spot & body, _BLEMISH, rng, noise=4.0)


def _synth_cavity_spot(size: int, rng: np.random.Generator) -> np.ndarray:
    img = _background(size, rng)
    body = _carrot_body(img, size, rng)
    _add_blemishes(img, body, size, rng)
    return img


def _synth_healthy(size: int, rng: np.random.Generator) -> np.ndarray:
    img = _background(size, rng)
    _carrot_body(img, size, rng)
    return img


def _synth_leaf_blight(size: int, rng: np.random.Generator) -> np.ndarray:
    img = _background(size, rng)
    fronds = np.zeros((size, size), dtype=bool)
    for _ in range(int(rng.integers(3, 6))):
        cx = size * rng.uniform(0.2, 0.8)
        cy = size * rng.uniform(0.2, 0.8)
        rx = size * rng.uniform(0.25, 0.38)
        ry = size * rng.uniform(0.05, 0.09)
        angle = rng.uniform(0, np.pi)
        frond = _ellipse_mask(size, cx, cy, rx, ry, angle)
        _paint(img, frond, _GREEN, rng)
        fronds |= frond
    ys, xs = np.nonzero(fronds)
    if len(ys):
        for _ in range(int(rng.integers(2, 5))):
            i = int(rng.integers(0, len(ys)))
            r = size * rng.uniform(0.03, 0.07)
            patch = _ellipse_mask(size, float(xs[i]), float(ys[i]), r, r)
            _paint(img, patch & fronds, _BROWN, rng, noise=5.0)
    return img


def _synth_fresh_carrot(size: int, rng: np.random.Generator) -> np.ndarray:
    img = _background(size, rng)
    yy, xx = _coords(size)
    y_top = size * rng.uniform(0.22, 0.30)
    y_tip = size * rng.uniform(0.82, 0.92)
    cx0 = size * rng.uniform(0.42, 0.58)
    tilt = rng.uniform(-0.12, 0.12)
    hw_top = size * rng.uniform(0.10, 0.15)

    t = np.clip((yy - y_top) / (y_tip - y_top), 0.0, 1.0)
    centre = cx0 + tilt * (yy - y_top)
    halfwidth = hw_top * (1.0 - t) ** 0.9 + 1.0
    root = (yy >= y_top) & (yy <= y_tip) & (np.abs(xx - centre) <= halfwidth)
    _paint(img, root, _ORANGE, rng)

    for _ in range(int(rng.integers(3, 5))):
        fx = cx0 + size * rng.uniform(-0.09, 0.09)
        fy = y_top - size * rng.uniform(0.04, 0.10)
        frond = _ellipse_mask(size, fx, fy, size * rng.uniform(0.05, 0.10),
                              size * rng.uniform(0.025, 0.05), rng.uniform(0, np.pi))
        _paint(img, frond, _GREEN, rng)
    return img


_GENERATORS = {
    "cavity_spot": _synth_cavity_spot,
    "healthy": _synth_healthy,
    "leaf_blight": _synth_leaf_blight,
    "fresh_carrot": _synth_fresh_carrot,
}


def generate_synthetic(per_class: int, image_size: int = INPUT_SIZE,
                       seed: int = 0) -> list[LabeledImage]:
    """Procedural four-class corpus, byte-deterministic under the seed."""
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    items: list[LabeledImage] = []
    for cls in CLASSES:
        gen = _GENERATORS[cls.key]
        for i in range(per_class):
            rng = np.random.default_rng(np.random.SeedSequence((seed, cls.id, i)))
            raw = gen(image_size, rng)
            np.clip(raw, 0, 255, out=raw)
            img = RgbImage(np.rint(raw).astype(np.uint8))
            items.append(LabeledImage(img, cls, f"synthetic://{cls.key}/{i}"))
    return items
