"""RGB <-> HSV conversion on 8-bit pixels and HSV range masking.

Byte conventions used throughout the package:

* ``h`` is hue in degrees [0, 360) mapped onto [0, 255] with
  ``round(h_deg * 255 / 360)``, so all 256 histogram bins are reachable
  (OpenCV's 8-bit 0..179 hue is *not* used).
* ``s = round(255 * chroma / max)``, 0 when ``max == 0``.
* ``v = max(r, g, b)``.
* Achromatic pixels (chroma 0) get ``h = 0``.

Rounding is half away from zero everywhere. All functions accept either a
single ``(a, b, c)`` triple or any ``uint8``-compatible array whose last
axis has length 3; images are ``(height, width, 3)`` arrays in row-major
order and stacks of frames are ``(n, height, width, 3)``.
"""

from dataclasses import dataclass

import numpy as np


def _round_half_up(x):
    # inputs are non-negative, so this is round-half-away-from-zero
    return np.floor(x + 0.5)


def _as_pixels(p):
    arr = np.asarray(p)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"expected trailing axis of length 3, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("channel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def _wrap(arr, original):
    if np.ndim(original) == 1 and not isinstance(original, np.ndarray):
        return tuple(int(c) for c in arr)
    return arr


def rgb_to_hsv(p):
    """Convert RGB bytes to HSV bytes.

    >>> rgb_to_hsv((0, 255, 0))
    (85, 255, 255)
    """
    rgb = _as_pixels(p).astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    chroma = mx - mn
    safe = np.where(chroma > 0, chroma, 1.0)

    hue = np.zeros_like(mx)
    red = (chroma > 0) & (mx == r)
    green = (chroma > 0) & (mx == g) & ~red
    blue = (chroma > 0) & ~red & ~green
    hue = np.where(red, np.mod(60.0 * (g - b) / safe, 360.0), hue)
    hue = np.where(green, 60.0 * (b - r) / safe + 120.0, hue)
    hue = np.where(blue, 60.0 * (r - g) / safe + 240.0, hue)

    h = _round_half_up(hue * 255.0 / 360.0)
    s = np.where(mx > 0, _round_half_up(255.0 * chroma / np.where(mx > 0, mx, 1.0)), 0.0)
    out = np.stack([h, s, mx], axis=-1).astype(np.uint8)
    return _wrap(out, p)


def hsv_to_rgb(p):
    """Inverse of :func:`rgb_to_hsv` under the same byte conventions.

    Hue is stored in 256 steps of ~1.41 degrees, so the inverse is exact
    only up to that quantization.
    """
    hsv = _as_pixels(p).astype(np.float64)
    h_deg = np.mod(hsv[..., 0] * 360.0 / 255.0, 360.0)
    v = hsv[..., 2]
    chroma = v * hsv[..., 1] / 255.0
    hp = h_deg / 60.0
    x = chroma * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    m = v - chroma
    sector = np.floor(hp).astype(np.int64) % 6

    zero = np.zeros_like(v)
    table = [
        (chroma, x, zero),
        (x, chroma, zero),
        (zero, chroma, x),
        (zero, x, chroma),
        (x, zero, chroma),
        (chroma, zero, x),
    ]
    r = np.choose(sector, [t[0] for t in table])
    g = np.choose(sector, [t[1] for t in table])
    b = np.choose(sector, [t[2] for t in table])
    rgb = np.stack([r + m, g + m, b + m], axis=-1)
    out = np.clip(_round_half_up(rgb), 0, 255).astype(np.uint8)
    return _wrap(out, p)


def convert_frame(frame):
    """Pixel-wise RGB -> HSV of a frame (or a stack of frames)."""
    frame = np.asarray(frame)
    if frame.ndim < 3 or frame.shape[-3] < 1 or frame.shape[-2] < 1:
        raise ValueError(f"not a frame: shape {frame.shape}")
    return rgb_to_hsv(frame)


@dataclass(frozen=True)
class HsvRange:
    """Inclusive per-channel HSV bounds."""

    h_lo: int = 0
    h_hi: int = 255
    s_lo: int = 0
    s_hi: int = 255
    v_lo: int = 0
    v_hi: int = 255

    def __post_init__(self):
        for name in ("h", "s", "v"):
            lo, hi = getattr(self, f"{name}_lo"), getattr(self, f"{name}_hi")
            if not (0 <= lo <= hi <= 255):
                raise ValueError(f"invalid {name} range [{lo}, {hi}]")

    @classmethod
    def parse(cls, text):
        """Parse ``"h_lo,h_hi,s_lo,s_hi,v_lo,v_hi"``."""
        parts = [int(t) for t in text.split(",")]
        if len(parts) != 6:
            raise ValueError(f"expected 6 comma-separated bounds, got {text!r}")
        return cls(*parts)

    def contains(self, hsv):
        hsv = np.asarray(hsv)
        h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
        return (
            (h >= self.h_lo) & (h <= self.h_hi)
            & (s >= self.s_lo) & (s <= self.s_hi)
            & (v >= self.v_lo) & (v <= self.v_hi)
        )


def mask_frame(hsv_frame, rng):
    """Blacken every pixel inside ``rng``.

    Returns the masked copy and the fraction of pixels that were replaced.
    Pixels already (0, 0, 0) but outside the range are left alone and not
    counted.
    """
    hsv_frame = _as_pixels(hsv_frame)
    if hsv_frame.ndim != 3:
        raise ValueError(f"expected a (height, width, 3) frame, got {hsv_frame.shape}")
    inside = rng.contains(hsv_frame)
    out = hsv_frame.copy()
    out[inside] = 0
    return out, float(np.count_nonzero(inside)) / inside.size
