"""Grayscale image I/O (binary PGM and PNG) and run artifact rendering."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .fields import SampleGrid, ScalarField


class ImageFormatError(ValueError):
    """Unparseable or unsupported image file."""


# --- PGM (binary P5) --------------------------------------------------------


def _pgm_tokens(data: bytes, count: int):
    """Yield `count` header tokens, skipping whitespace and # comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError(f"truncated PGM header at byte {pos}")
        ch = data[pos : pos + 1]
        if ch in b" \t\r\n":
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            start = pos
            while pos < len(data) and data[pos : pos + 1] not in b" \t\r\n":
                pos += 1
            tokens.append((data[start:pos].decode("ascii", "replace"), start))
    # pixel data begins after exactly one whitespace byte
    return tokens, pos + 1


def read_pgm(path) -> ScalarField:
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ImageFormatError(
            f"{path}: bad PGM magic {data[:2]!r} at byte 0 (expected P5)"
        )
    tokens, offset = _pgm_tokens(data, 4)
    try:
        width = int(tokens[1][0])
        height = int(tokens[2][0])
        maxval = int(tokens[3][0])
    except ValueError:
        bad = next(t for t in tokens[1:] if not t[0].isdigit())
        raise ImageFormatError(
            f"{path}: non-numeric PGM header token {bad[0]!r} at byte {bad[1]}"
        ) from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: invalid PGM dimensions/maxval")
    depth = 1 if maxval < 256 else 2
    expected = width * height * depth
    raw = data[offset : offset + expected]
    if len(raw) != expected:
        raise ImageFormatError(
            f"{path}: expected {expected} pixel bytes at byte {offset}, got {len(raw)}"
        )
    dtype = np.uint8 if depth == 1 else np.dtype(">u2")
    pixels = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return ScalarField.from_array(pixels.astype(np.float64) / maxval)


def write_pgm(field: ScalarField, path) -> None:
    quantized = np.round(np.clip(field.values, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{field.geometry.width} {field.geometry.height}\n255\n"
    Path(path).write_bytes(header.encode("ascii") + quantized.tobytes())


# --- dispatching front end --------------------------------------------------


def read_image(path) -> ScalarField:
    """Read a grayscale PGM or PNG, intensities mapped linearly to [0, 1]."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    try:
        img = Image.open(path)
    except Exception as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc
    if img.mode == "I;16":
        return ScalarField.from_array(np.asarray(img, dtype=np.float64) / 65535.0)
    return ScalarField.from_array(
        np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    )


def write_image(field: ScalarField, path) -> None:
    """Write as 8-bit grayscale; format chosen from the extension."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(field, path)
        return
    quantized = np.round(np.clip(field.values, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="L").save(path)


# --- run artifacts ----------------------------------------------------------


def write_momentum_heatmap(z: np.ndarray, path, vmax: float) -> None:
    """Diverging blue-white-red rendering with a symmetric range [-vmax, vmax]."""
    if vmax <= 0:
        vmax = 1.0
    x = np.clip(z / vmax, -1.0, 1.0)
    r = 1.0 - np.clip(-x, 0.0, 1.0)
    g = 1.0 - np.abs(x)
    b = 1.0 - np.clip(x, 0.0, 1.0)
    rgb = np.stack([r, g, b], axis=-1)
    Image.fromarray(np.round(rgb * 255.0).astype(np.uint8), mode="RGB").save(path)


def render_deformation_grid(
    grid: SampleGrid, path, stride: int = 8, scale: int = 2
) -> None:
    """Draw every `stride`-th grid line of the deformation as polylines."""
    h, w = grid.geometry.shape
    img = Image.new("L", (w * scale, h * scale), color=255)
    draw = ImageDraw.Draw(img)
    coords = grid.coords

    def _points(line):
        return [(c[1] * scale, c[0] * scale) for c in line]

    rows = sorted(set(range(0, h, stride)) | {h - 1})
    cols = sorted(set(range(0, w, stride)) | {w - 1})
    for i in rows:
        draw.line(_points(coords[i, :]), fill=0)
    for j in cols:
        draw.line(_points(coords[:, j]), fill=0)
    img.save(path)


def save_momentum(z: ScalarField, path) -> None:
    np.save(path, z.values)


def load_momentum(path) -> ScalarField:
    arr = np.load(path)
    if arr.ndim != 2:
        raise ImageFormatError(f"{path}: momentum array must be 2d, got {arr.ndim}d")
    return ScalarField.from_array(arr)
