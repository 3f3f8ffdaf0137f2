"""Image and stack IO: binary PPM/PGM for encoded frames, PFM for linear maps,
and a small JSON manifest tying a directory of frames to their shutters.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Sequence

import numpy as np


class ImageFormatError(OSError):
    """Malformed image file."""


# ---------------------------------------------------------------------------
# PPM / PGM (maxval 255, binary)
# ---------------------------------------------------------------------------

def write_ppm(path, pixels: np.ndarray) -> None:
    """Write uint8 pixels as binary PGM (2-d) or PPM (3-d, 3 channels)."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {arr.dtype}")
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"expected (H, W) or (H, W, 3) pixels, got shape {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(arr.tobytes())


def _read_pnm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    # Tokens separated by whitespace; '#' starts a comment to end of line.
    tokens: list[int] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError("truncated header")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        else:
            m = re.match(rb"[0-9]+", data[pos:])
            if m is None:
                raise ImageFormatError(f"bad header token at byte {pos}")
            tokens.append(int(m.group(0)))
            pos += m.end()
    return tokens, pos


def read_ppm(path) -> np.ndarray:
    """Read a binary PGM/PPM with maxval 255 into a uint8 array."""
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        channels = 1
    elif data[:2] == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"{path}: not a binary PGM/PPM")
    (w, h, maxval), pos = _read_pnm_tokens(data[2:], 3)
    pos += 2
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval}")
    # Exactly one whitespace byte separates the header from the raster.
    pos += 1
    need = w * h * channels
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise ImageFormatError(f"{path}: expected {need} raster bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    return arr.reshape((h, w) if channels == 1 else (h, w, 3)).copy()


# ---------------------------------------------------------------------------
# PFM (little-endian, scale -1.0, bottom-up rows)
# ---------------------------------------------------------------------------

def write_pfm(path, values: np.ndarray) -> None:
    """Write float32/float64 values as PFM ('Pf' mono or 'PF' color)."""
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"expected (H, W) or (H, W, 3) values, got shape {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n-1.0\n" % (w, h))
        fh.write(arr[::-1].astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a float64 array (rows top-down)."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic == b"Pf":
            channels = 1
        elif magic == b"PF":
            channels = 3
        else:
            raise ImageFormatError(f"{path}: not a PFM file")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ImageFormatError(f"{path}: bad dimensions line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline())
        endian = "<" if scale < 0 else ">"
        need = w * h * channels
        raw = fh.read(need * 4)
        if len(raw) != need * 4:
            raise ImageFormatError(f"{path}: truncated raster")
    arr = np.frombuffer(raw, dtype=endian + "f4").astype(np.float64)
    arr = arr.reshape((h, w) if channels == 1 else (h, w, 3))
    if abs(scale) != 1.0:
        arr = arr * abs(scale)
    return arr[::-1].copy()


# ---------------------------------------------------------------------------
# Stack manifests
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


def write_stack(directory, images: Sequence) -> None:
    """Write LdrImages to a directory as PGM/PPM files plus a manifest.

    The manifest lists one entry per image with its file name, shutter, and
    gain; readers sort by shutter so on-disk order does not matter.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for idx, img in enumerate(images):
        name = f"img_{idx:03d}.{'ppm' if img.pixels.ndim == 3 else 'pgm'}"
        write_ppm(directory / name, img.pixels)
        entries.append({"file": name, "shutter": img.shutter, "gain": img.gain})
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump({"images": entries}, fh, indent=2)
        fh.write("\n")


def read_stack(directory) -> list:
    """Load a stack directory written by write_stack, sorted by shutter."""
    from .simulate import LdrImage

    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ImageFormatError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "images" not in doc:
        raise ImageFormatError(f"{manifest_path}: missing 'images' list")
    images = []
    for entry in doc["images"]:
        pixels = read_ppm(directory / entry["file"])
        images.append(LdrImage(pixels=pixels, shutter=float(entry["shutter"]),
                               gain=float(entry.get("gain", 1.0))))
    images.sort(key=lambda im: im.shutter)
    return images
