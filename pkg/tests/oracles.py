"""Independent reference implementations used as test oracles.

Everything here is written as plainly as possible (scalar loops, direct
formula evaluation) and deliberately shares no code with the production
paths it checks.
"""

import math

import numpy as np


def matmul_triple_loop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += float(a[i, t]) * float(b[t, j])
            out[i, j] = acc
    return out


def conv2d_naive(x: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Direct nested-loop same-padded 3x3 cross-correlation."""
    bsz, h, w, c = x.shape
    k = filters.shape[0]
    xp = np.pad(x.astype(np.float64), ((0, 0), (1, 1), (1, 1), (0, 0)))
    out = np.zeros((bsz, h, w, k), dtype=np.float64)
    for n in range(bsz):
        for i in range(h):
            for j in range(w):
                for f in range(k):
                    acc = 0.0
                    for dy in range(3):
                        for dx in range(3):
                            for ch in range(c):
                                acc += xp[n, i + dy, j + dx, ch] * float(
                                    filters[f, dy, dx, ch]
                                )
                    out[n, i, j, f] = acc + float(bias[f])
    return out


def maxpool2x2_naive(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bsz, h, w, c = x.shape
    y = np.zeros((bsz, h // 2, w // 2, c), dtype=x.dtype)
    arg = np.zeros((bsz, h // 2, w // 2, c), dtype=np.int8)
    for n in range(bsz):
        for i in range(h // 2):
            for j in range(w // 2):
                for ch in range(c):
                    vals = [
                        x[n, 2 * i, 2 * j, ch],
                        x[n, 2 * i, 2 * j + 1, ch],
                        x[n, 2 * i + 1, 2 * j, ch],
                        x[n, 2 * i + 1, 2 * j + 1, ch],
                    ]
                    best = 0
                    for t in range(1, 4):
                        if vals[t] > vals[best]:
                            best = t
                    y[n, i, j, ch] = vals[best]
                    arg[n, i, j, ch] = best
    return y, arg


def finite_difference(f, x: np.ndarray, eps: float = 1e-3) -> np.ndarray:
    """Central finite differences of a scalar function at float64."""
    assert x.dtype == np.float64
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + eps
        fp = f(x)
        x[idx] = orig - eps
        fm = f(x)
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * eps)
    return grad


def relative_errors(analytic: np.ndarray, numeric: np.ndarray,
                    floor: float = 1e-7) -> np.ndarray:
    """Per-element relative error; tiny pairs count as exact."""
    a = analytic.ravel()
    n = numeric.ravel()
    scale = np.maximum(np.abs(a), np.abs(n))
    err = np.abs(a - n)
    out = np.where(scale > floor, err / np.maximum(scale, floor), 0.0)
    return out


def fuzzy_filter_scalar(pixels: np.ndarray, window: int, threshold: float) -> np.ndarray:
    """Direct evaluation of the membership-weighted mean at every pixel."""
    h, w, _ = pixels.shape
    half = window // 2
    src = pixels.astype(np.float64)
    out = np.zeros_like(src)
    for y in range(h):
        for x in range(w):
            for ch in range(3):
                centre = src[y, x, ch]
                num = 0.0
                den = 0.0
                for dy in range(-half, half + 1):
                    for dx in range(-half, half + 1):
                        yy = min(max(y + dy, 0), h - 1)
                        xx = min(max(x + dx, 0), w - 1)
                        val = src[yy, xx, ch]
                        mu = max(0.0, 1.0 - abs(val - centre) / threshold)
                        num += mu * val
                        den += mu
                out[y, x, ch] = num / den
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def resize_bilinear_scalar(pixels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w, _ = pixels.shape
    src = pixels.astype(np.float64)
    out = np.zeros((out_h, out_w, 3), dtype=np.float64)
    for y in range(out_h):
        sy = min(max((y + 0.5) * (h / out_h) - 0.5, 0.0), h - 1.0)
        y0 = math.floor(sy)
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for x in range(out_w):
            sx = min(max((x + 0.5) * (w / out_w) - 0.5, 0.0), w - 1.0)
            x0 = math.floor(sx)
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            for ch in range(3):
                top = src[y0, x0, ch] * (1 - fx) + src[y0, x1, ch] * fx
                bot = src[y1, x0, ch] * (1 - fx) + src[y1, x1, ch] * fx
                out[y, x, ch] = top * (1 - fy) + bot * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _tap_scalar(src: np.ndarray, yy: int, xx: int, ch: int, fill_mode: str,
                fill_value: int) -> float:
    h, w, _ = src.shape
    if 0 <= yy < h and 0 <= xx < w:
        return float(src[yy, xx, ch])
    if fill_mode == "constant":
        return float(fill_value)
    if fill_mode == "nearest":
        return float(src[min(max(yy, 0), h - 1), min(max(xx, 0), w - 1), ch])
    # reflect: mirror about edge pixel centres
    def fold(i, n):
        if n == 1:
            return 0
        period = 2 * n - 2
        m = i % period
        return period - m if m > n - 1 else m

    return float(src[fold(yy, h), fold(xx, w), ch])


def affine_scalar(pixels: np.ndarray, rotation=0.0, shift_x=0.0, shift_y=0.0,
                  shear=0.0, zoom_x=1.0, zoom_y=1.0, flip=False,
                  fill_mode="nearest", fill_value=0) -> np.ndarray:
    """Per-pixel evaluation of the inverse-mapped affine warp."""
    h, w, _ = pixels.shape
    th = math.radians(rotation)
    sh = math.radians(shear)
    rot = [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
    shm = [[1.0, -math.tan(sh)], [0.0, 1.0]]
    zm = [[zoom_x, 0.0], [0.0, zoom_y]]

    def mul(a, b):
        return [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ]

    m = mul(mul(rot, shm), zm)
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    tx, ty = shift_x * w, shift_y * h
    src = pixels.astype(np.float64)
    out = np.zeros_like(src)
    for y in range(h):
        for x in range(w):
            u = x - cx - tx
            v = y - cy - ty
            sx = inv[0][0] * u + inv[0][1] * v + cx
            sy = inv[1][0] * u + inv[1][1] * v + cy
            x0 = math.floor(sx)
            y0 = math.floor(sy)
            fx = sx - x0
            fy = sy - y0
            for ch in range(3):
                p00 = _tap_scalar(src, y0, x0, ch, fill_mode, fill_value)
                p01 = _tap_scalar(src, y0, x0 + 1, ch, fill_mode, fill_value)
                p10 = _tap_scalar(src, y0 + 1, x0, ch, fill_mode, fill_value)
                p11 = _tap_scalar(src, y0 + 1, x0 + 1, ch, fill_mode, fill_value)
                out[y, x, ch] = (p00 * (1 - fx) + p01 * fx) * (1 - fy) + (
                    p10 * (1 - fx) + p11 * fx
                ) * fy
    result = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if flip:
        result = result[:, ::-1, :]
    return result


def metrics_brute_force(trues, preds, class_id):
    """Recount tp/fp/fn/tn and the four metrics straight from label pairs."""
    tp = sum(1 for t, p in zip(trues, preds) if t == class_id and p == class_id)
    fp = sum(1 for t, p in zip(trues, preds) if t != class_id and p == class_id)
    fn = sum(1 for t, p in zip(trues, preds) if t == class_id and p != class_id)
    tn = sum(1 for t, p in zip(trues, preds) if t != class_id and p != class_id)

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (tn + fp) if tn + fp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return tp, fp, fn, tn, precision, recall, specificity, f1
