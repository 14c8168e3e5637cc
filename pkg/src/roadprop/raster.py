"""Pixel-grid types, color conversion, tiling and file I/O.

Arrays are indexed ``[row, col]`` (i.e. ``[y, x]``).  The conventions used
throughout the package are:

* RGB image   -- ``uint8`` array of shape ``(h, w, 3)``
* HSV image   -- ``float64`` array of shape ``(h, w, 3)``; H in degrees
  ``[0, 360)``, S and V in ``[0, 1]``
* binary mask -- ``bool`` array of shape ``(h, w)``
* tri-state   -- ``uint8`` array of shape ``(h, w)`` holding
  :data:`NON_ROAD`, :data:`UNKNOWN` or :data:`ROAD`
* prob map    -- float array of shape ``(h, w)`` with values in ``[0, 1]``
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

NON_ROAD = 0
UNKNOWN = 1
ROAD = 2

# tri-state label -> PNG byte
TRISTATE_TO_BYTE = np.array([0, 128, 255], dtype=np.uint8)

F32M_MAGIC = b"F32M"


class RasterFormatError(ValueError):
    """Malformed or inconsistent raster data."""


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise RasterFormatError(f"expected (h, w, 3) RGB array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise RasterFormatError("image must be at least 1x1")
    if img.dtype != np.uint8:
        raise RasterFormatError(f"expected uint8 image, got {img.dtype}")
    return img


def check_tristate(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise RasterFormatError(f"expected 2-D mask, got shape {mask.shape}")
    if mask.size and mask.max() > ROAD:
        raise RasterFormatError("tri-state mask holds labels outside {0, 1, 2}")
    return mask.astype(np.uint8, copy=False)


def check_prob(prob: np.ndarray, name: str = "probability map") -> np.ndarray:
    prob = np.asarray(prob, dtype=np.float64)
    if prob.ndim != 2:
        raise RasterFormatError(f"{name}: expected 2-D array, got shape {prob.shape}")
    if not np.all(np.isfinite(prob)):
        raise RasterFormatError(f"{name}: non-finite values")
    if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
        raise RasterFormatError(f"{name}: values outside [0, 1]")
    return prob


def check_same_shape(*arrays: np.ndarray, names: tuple[str, ...] | None = None) -> None:
    shapes = {np.shape(a)[:2] for a in arrays}
    if len(shapes) > 1:
        label = ", ".join(names) if names else "inputs"
        raise RasterFormatError(f"dimension mismatch between {label}: {sorted(shapes)}")


# ---------------------------------------------------------------------------
# color space

def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSV.  Achromatic pixels get ``H = 0, S = 0``."""
    rgb = check_image(img).astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    vmax = rgb.max(axis=2)
    vmin = rgb.min(axis=2)
    delta = vmax - vmin
    chromatic = delta > 0
    safe = np.where(chromatic, delta, 1.0)

    h = np.zeros_like(vmax)
    rmax = chromatic & (vmax == r)
    gmax = chromatic & (vmax == g) & ~rmax
    bmax = chromatic & ~rmax & ~gmax
    h[rmax] = np.mod((g[rmax] - b[rmax]) / safe[rmax], 6.0)
    h[gmax] = (b[gmax] - r[gmax]) / safe[gmax] + 2.0
    h[bmax] = (r[bmax] - g[bmax]) / safe[bmax] + 4.0
    h *= 60.0
    h[h >= 360.0] -= 360.0

    s = np.where(vmax > 0, delta / np.where(vmax > 0, vmax, 1.0), 0.0)
    return np.stack([h, s, vmax], axis=2)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv`, rounded back to 8 bits."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h = np.mod(hsv[..., 0], 360.0) / 60.0
    s, v = hsv[..., 1], hsv[..., 2]
    c = v * s
    x = c * (1.0 - np.abs(np.mod(h, 2.0) - 1.0))
    m = v - c
    sector = np.floor(h).astype(int) % 6
    zero = np.zeros_like(c)
    table = [
        (c, x, zero), (x, c, zero), (zero, c, x),
        (zero, x, c), (x, zero, c), (c, zero, x),
    ]
    out = np.zeros(hsv.shape, dtype=np.float64)
    for k, (r, g, b) in enumerate(table):
        sel = sector == k
        out[..., 0][sel] = r[sel]
        out[..., 1][sel] = g[sel]
        out[..., 2][sel] = b[sel]
    out += m[..., None]
    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# tiling

@dataclass(frozen=True)
class TileGrid:
    tile_size: int
    height: int
    width: int
    offsets: tuple[tuple[int, int], ...]  # (x, y) of each tile, row-major

    @property
    def rows(self) -> int:
        return -(-self.height // self.tile_size)

    @property
    def cols(self) -> int:
        return -(-self.width // self.tile_size)


def tile(arr: np.ndarray, size: int = 512) -> tuple[list[np.ndarray], TileGrid]:
    """Cut ``arr`` into ``size x size`` tiles, edge-replicating the last row/column of tiles."""
    arr = np.asarray(arr)
    if size < 1:
        raise ValueError("tile size must be >= 1")
    if arr.ndim < 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise RasterFormatError("cannot tile a zero-sized raster")
    h, w = arr.shape[:2]
    rows, cols = -(-h // size), -(-w // size)
    pad = [(0, rows * size - h), (0, cols * size - w)] + [(0, 0)] * (arr.ndim - 2)
    padded = np.pad(arr, pad, mode="edge")
    tiles, offsets = [], []
    for r in range(rows):
        for c in range(cols):
            y, x = r * size, c * size
            tiles.append(padded[y:y + size, x:x + size].copy())
            offsets.append((x, y))
    return tiles, TileGrid(size, h, w, tuple(offsets))


def untile(tiles: list[np.ndarray], grid: TileGrid) -> np.ndarray:
    """Reassemble tiles and crop the padding back off."""
    if len(tiles) != len(grid.offsets):
        raise ValueError(f"expected {len(grid.offsets)} tiles, got {len(tiles)}")
    s = grid.tile_size
    first = np.asarray(tiles[0])
    out = np.empty((grid.rows * s, grid.cols * s) + first.shape[2:], dtype=first.dtype)
    for t, (x, y) in zip(tiles, grid.offsets):
        out[y:y + s, x:x + s] = t
    return out[:grid.height, :grid.width]


# ---------------------------------------------------------------------------
# file I/O

def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im.convert("RGB"), dtype=np.uint8)


def write_image(path, img: np.ndarray) -> None:
    Image.fromarray(check_image(img)).save(path, format="PNG")


def _read_gray8(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode == "1":
            im = im.convert("L")
        if im.mode != "L":
            raise RasterFormatError(f"{path}: expected 8-bit grayscale PNG, got mode {im.mode}")
        return np.array(im, dtype=np.uint8)


def read_binary_mask(path) -> np.ndarray:
    data = _read_gray8(path)
    bad = (data != 0) & (data != 255)
    if bad.any():
        raise RasterFormatError(f"{path}: binary mask holds values other than 0/255")
    return data == 255


def write_binary_mask(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise RasterFormatError(f"expected 2-D mask, got shape {mask.shape}")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path, format="PNG")


def read_tristate(path) -> np.ndarray:
    data = _read_gray8(path)
    out = np.full(data.shape, 255, dtype=np.uint8)
    for label, byte in enumerate(TRISTATE_TO_BYTE):
        out[data == byte] = label
    if (out == 255).any():
        raise RasterFormatError(f"{path}: tri-state mask holds values other than 0/128/255")
    return out


def write_tristate(path, mask: np.ndarray) -> None:
    mask = check_tristate(mask)
    Image.fromarray(TRISTATE_TO_BYTE[mask]).save(path, format="PNG")


def read_labels(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16B", "I;16L", "I", "L"):
            raise RasterFormatError(f"{path}: expected 16-bit grayscale PNG, got mode {im.mode}")
        return np.array(im).astype(np.int32)


def write_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise RasterFormatError(f"expected 2-D label map, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 0xFFFF):
        raise RasterFormatError("label ids must fit in 16 bits")
    Image.fromarray(labels.astype(np.uint16)).save(path, format="PNG")


def read_f32(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != F32M_MAGIC:
        raise RasterFormatError(f"{path}: missing F32M header")
    h, w = struct.unpack("<II", raw[4:12])
    expected = 12 + 4 * h * w
    if len(raw) != expected:
        raise RasterFormatError(f"{path}: header says {h}x{w} but payload is {len(raw) - 12} bytes")
    return np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w).astype(np.float32)


def write_f32(path, field: np.ndarray) -> None:
    field = np.asarray(field)
    if field.ndim != 2:
        raise RasterFormatError(f"expected 2-D float field, got shape {field.shape}")
    data = field.astype("<f4")
    if not np.all(np.isfinite(data)):
        raise RasterFormatError("refusing to write non-finite values")
    h, w = data.shape
    Path(path).write_bytes(F32M_MAGIC + struct.pack("<II", h, w) + data.tobytes(order="C"))


def read_prob_map(path) -> np.ndarray:
    """Load a [0, 1] map from F32M, or from an 8-bit grayscale PNG scaled by 1/255."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == F32M_MAGIC:
        return read_f32(path)
    return (_read_gray8(path) / 255.0).astype(np.float32)
