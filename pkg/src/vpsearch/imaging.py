"""In-process image operations with pixel-exact, documented semantics.

Images are numpy uint8 arrays of shape (height, width, 3).  Every
operation is integer-arithmetic only so results are identical across
platforms:

* grayscale: g = (299*r + 587*g + 114*b + 500) // 1000, replicated to RGB
* overlay:   out = (base*(1000-a) + overlay*a + 500) // 1000 with
             a = round(opacity*1000)
* boxes are [left, top, right, bottom] with exclusive right/bottom edges
* draw_line with width 1 paints exactly the Bresenham cells of the
  segment; width w > 1 additionally paints every pixel whose center lies
  within Euclidean distance w/2 of the ideal segment
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

NAMED_COLORS = {
    "black": (0, 0, 0),
    "white": (255, 255, 255),
    "red": (255, 0, 0),
    "green": (0, 255, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
    "gray": (128, 128, 128),
    "orange": (255, 165, 0),
    "purple": (128, 0, 128),
}


def parse_color(text: str) -> tuple[int, int, int]:
    """Parse 'red', '#rrggbb', or 'rgb(r,g,b)'; components must be 0..255."""
    value = text.strip().lower()
    if value in NAMED_COLORS:
        return NAMED_COLORS[value]
    if value.startswith("#") and len(value) == 7:
        try:
            return tuple(int(value[i : i + 2], 16) for i in (1, 3, 5))  # type: ignore[return-value]
        except ValueError:
            raise ValueError(f"invalid hex color {text!r}")
    if value.startswith("rgb(") and value.endswith(")"):
        parts = value[4:-1].split(",")
        if len(parts) != 3:
            raise ValueError(f"invalid rgb() color {text!r}")
        try:
            channels = tuple(int(p.strip()) for p in parts)
        except ValueError:
            raise ValueError(f"invalid rgb() color {text!r}")
        if any(c < 0 or c > 255 for c in channels):
            raise ValueError(f"color component outside 0..255 in {text!r}")
        return channels  # type: ignore[return-value]
    raise ValueError(f"unrecognized color {text!r}")


def new_image(width: int, height: int, color: tuple[int, int, int] = (255, 255, 255)) -> np.ndarray:
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:, :] = color
    return arr


def image_size(image: np.ndarray) -> tuple[int, int]:
    """(width, height) of an image array."""
    return image.shape[1], image.shape[0]


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()


def save_png(image: np.ndarray, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


def encode_png(image: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(image, mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()


def to_grayscale(image: np.ndarray) -> np.ndarray:
    channels = image.astype(np.uint32)
    gray = (299 * channels[:, :, 0] + 587 * channels[:, :, 1] + 114 * channels[:, :, 2] + 500) // 1000
    return np.repeat(gray.astype(np.uint8)[:, :, None], 3, axis=2)


def _clip_box(box: tuple[int, int, int, int], width: int, height: int) -> tuple[int, int, int, int]:
    left, top, right, bottom = box
    return max(0, left), max(0, top), min(width, right), min(height, bottom)


def crop(image: np.ndarray, box: tuple[int, int, int, int]) -> np.ndarray:
    """Crop [left, top, right, bottom) after clipping to the image bounds."""
    width, height = image_size(image)
    left, top, right, bottom = _clip_box(box, width, height)
    if left >= right or top >= bottom:
        raise ValueError(f"crop box {tuple(box)} does not intersect a {width}x{height} image")
    return image[top:bottom, left:right].copy()


def overlay(
    base: np.ndarray,
    top_image: np.ndarray,
    position: tuple[int, int] = (0, 0),
    opacity: float = 0.5,
) -> np.ndarray:
    """Alpha-blend top_image onto base at (x, y); off-canvas parts are clipped."""
    if not 0.0 <= opacity <= 1.0:
        raise ValueError("opacity must be in [0, 1]")
    out = base.copy()
    base_w, base_h = image_size(base)
    top_w, top_h = image_size(top_image)
    x, y = position
    left, top = max(0, x), max(0, y)
    right, bottom = min(base_w, x + top_w), min(base_h, y + top_h)
    if left >= right or top >= bottom:
        return out
    sub_base = out[top:bottom, left:right].astype(np.uint32)
    sub_top = top_image[top - y : bottom - y, left - x : right - x].astype(np.uint32)
    alpha = int(round(opacity * 1000))
    blended = (sub_base * (1000 - alpha) + sub_top * alpha + 500) // 1000
    out[top:bottom, left:right] = blended.astype(np.uint8)
    return out


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer line cells from (x0, y0) to (x1, y1), inclusive."""
    cells = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        cells.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return cells


def draw_line(
    image: np.ndarray,
    start: tuple[int, int],
    end: tuple[int, int],
    color: tuple[int, int, int],
    width: int = 1,
) -> np.ndarray:
    if width < 1:
        raise ValueError("line width must be >= 1")
    out = image.copy()
    img_w, img_h = image_size(image)
    for x, y in bresenham(start[0], start[1], end[0], end[1]):
        if 0 <= x < img_w and 0 <= y < img_h:
            out[y, x] = color
    if width == 1:
        return out
    # Thick stroke: pixels within width/2 of the ideal segment.
    radius = width / 2
    pad = int(np.ceil(radius)) + 1
    left = max(0, min(start[0], end[0]) - pad)
    right = min(img_w, max(start[0], end[0]) + pad + 1)
    top = max(0, min(start[1], end[1]) - pad)
    bottom = min(img_h, max(start[1], end[1]) + pad + 1)
    if left >= right or top >= bottom:
        return out
    ys, xs = np.mgrid[top:bottom, left:right]
    vx, vy = float(end[0] - start[0]), float(end[1] - start[1])
    length_sq = vx * vx + vy * vy
    if length_sq == 0:
        dist_sq = (xs - start[0]) ** 2.0 + (ys - start[1]) ** 2.0
    else:
        t = ((xs - start[0]) * vx + (ys - start[1]) * vy) / length_sq
        t = np.clip(t, 0.0, 1.0)
        dist_sq = (xs - (start[0] + t * vx)) ** 2 + (ys - (start[1] + t * vy)) ** 2
    mask = dist_sq <= radius * radius
    region = out[top:bottom, left:right]
    region[mask] = color
    return out


def draw_box(
    image: np.ndarray,
    box: tuple[int, int, int, int],
    color: tuple[int, int, int],
    width: int = 1,
) -> np.ndarray:
    """Rectangle outline: the box region minus its interior shrunk by width."""
    if width < 1:
        raise ValueError("box width must be >= 1")
    left, top, right, bottom = box
    if left >= right or top >= bottom:
        raise ValueError("box must satisfy left < right and top < bottom")
    out = image.copy()
    img_w, img_h = image_size(image)

    def fill(l: int, t: int, r: int, b: int) -> None:
        l, t, r, b = max(0, l), max(0, t), min(img_w, r), min(img_h, b)
        if l < r and t < b:
            out[t:b, l:r] = color

    fill(left, top, right, min(top + width, bottom))  # top edge
    fill(left, max(bottom - width, top), right, bottom)  # bottom edge
    fill(left, top, min(left + width, right), bottom)  # left edge
    fill(max(right - width, left), top, right, bottom)  # right edge
    return out


def draw_filled_box(
    image: np.ndarray,
    box: tuple[int, int, int, int],
    color: tuple[int, int, int],
) -> np.ndarray:
    left, top, right, bottom = box
    if left >= right or top >= bottom:
        raise ValueError("box must satisfy left < right and top < bottom")
    out = image.copy()
    img_w, img_h = image_size(image)
    left, top, right, bottom = _clip_box(box, img_w, img_h)
    if left < right and top < bottom:
        out[top:bottom, left:right] = color
    return out
