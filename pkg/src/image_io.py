"""
Bit-exact grayscale image storage.

Binary PGM (P5) is the interchange format: it is the only format written, so a
ciphertext survives a save/load cycle byte for byte. Other rasters (PNG, BMP,
TIFF, JPEG) can be read through Pillow and are converted to gray with fixed
BT.601 luma weights.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from atomic_io import atomic_write_bytes
from errors import DatasetWarning, ImageFormatError, PathError, QkdImageError
from image_cipher import GrayImage

PGM_MAGIC = b"P5"
MAX_SIDE = 2**16
PGM_SUFFIXES = (".pgm",)
RASTER_SUFFIXES = (".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg")
SUPPORTED_SUFFIXES = PGM_SUFFIXES + RASTER_SUFFIXES
WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True)
class ImageFileRecord:
    path: Path
    width: int
    height: int
    source_format: str  # "pgm" or "converted"


def _header_field(data, pos, name):
    """Parse one unsigned decimal header field starting at ``pos``.

    Whitespace and ``#`` comments before the field are skipped.
    """
    while pos < len(data):
        byte = data[pos : pos + 1]
        if byte in WHITESPACE:
            pos += 1
        elif byte == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise ImageFormatError(f"expected {name} in PGM header", offset=start)
    return int(data[start:pos]), pos


def read_pgm(data):
    """Decode binary PGM content into a GrayImage."""
    data = bytes(data)
    if data[:2] != PGM_MAGIC:
        raise ImageFormatError(
            f"not a binary PGM (magic {data[:2]!r}, expected b'P5')",
            offset=0,
            hint="convert the image to 8-bit binary PGM or use a supported raster",
        )
    if len(data) < 3 or data[2:3] not in WHITESPACE:
        raise ImageFormatError("missing whitespace after PGM magic", offset=2)
    width, pos = _header_field(data, 2, "width")
    height, pos = _header_field(data, pos, "height")
    maxval, pos = _header_field(data, pos, "maxval")
    if not (1 <= width <= MAX_SIDE and 1 <= height <= MAX_SIDE):
        raise ImageFormatError(f"unsupported dimensions {width}x{height}", offset=pos)
    if not 1 <= maxval <= 255:
        raise ImageFormatError(
            f"maxval {maxval} is not an 8-bit image", offset=pos, hint="16-bit PGM is not supported"
        )
    if pos >= len(data) or data[pos : pos + 1] not in WHITESPACE:
        raise ImageFormatError("missing whitespace after maxval", offset=pos)
    pos += 1
    expected = width * height
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise ImageFormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            offset=pos + len(payload),
        )
    pixels = np.frombuffer(payload, dtype=np.uint8)
    if maxval < 255 and pixels.max() > maxval:
        bad = int(np.argmax(pixels > maxval))
        raise ImageFormatError(f"pixel exceeds maxval {maxval}", offset=pos + bad)
    return GrayImage(width, height, pixels)


def write_pgm(image):
    """Canonical binary PGM: ``P5\\n<w> <h>\\n255\\n`` followed by the pixels."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def ingest_to_gray(raster):
    """Convert a decoded 8-bit gray, RGB or RGBA raster to a GrayImage.

    Y = round(0.299 R + 0.587 G + 0.114 B), halves rounded up, in exact
    integer arithmetic.
    """
    raster = np.asarray(raster)
    if raster.dtype != np.uint8:
        raise ImageFormatError(
            f"unsupported bit depth ({raster.dtype}); 8-bit channels are required"
        )
    if raster.ndim == 2:
        return GrayImage.from_array(raster)
    if raster.ndim == 3 and raster.shape[2] in (3, 4):
        rgb = raster[:, :, :3].astype(np.int64)
        luma = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
        return GrayImage.from_array(luma.astype(np.uint8))
    raise ImageFormatError(f"unsupported raster shape {raster.shape}")


def _decode_raster(path):
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
            raise ImageFormatError(f"unsupported bit depth (mode {img.mode})")
        if img.mode == "1":
            img = img.convert("L")
        elif img.mode not in ("L", "RGB", "RGBA"):
            img = img.convert("RGB")
        return ingest_to_gray(np.asarray(img))


def _decode(path):
    path = Path(path)
    with open(path, "rb") as handle:
        head = handle.read(2)
    if head == PGM_MAGIC:
        return read_pgm(path.read_bytes()), "pgm"
    if path.suffix.lower() in PGM_SUFFIXES:
        # .pgm that is not P5: let read_pgm produce the format error
        return read_pgm(path.read_bytes()), "pgm"
    return _decode_raster(path), "converted"


def load_image(path):
    path = Path(path)
    if not path.is_file():
        raise PathError(f"image not found: {path}")
    image, _ = _decode(path)
    return image


def save_image(path, image):
    """Write ``image`` as canonical PGM, atomically."""
    return atomic_write_bytes(path, write_pgm(image))


def scan_dataset(root):
    """Records for every readable image under ``root``, in lexicographic path order.

    Unreadable files are skipped with a DatasetWarning.
    """
    root = Path(root)
    if not root.is_dir():
        raise PathError(f"dataset directory not found: {root}")
    candidates = sorted(
        (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    records = []
    for path in candidates:
        try:
            image, source_format = _decode(path)
        except (QkdImageError, OSError, ValueError) as exc:
            warnings.warn(f"skipping {path}: {exc}", DatasetWarning, stacklevel=2)
            continue
        records.append(ImageFileRecord(path, image.width, image.height, source_format))
    return records
