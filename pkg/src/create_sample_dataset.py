"""
Create the synthetic grayscale dataset used by the batch evaluation.

The brain-scan images the evaluation was designed around are not
redistributed, so the pipeline runs on deterministic stand-ins:

- constant.pgm: a single gray level (entropy 0)
- gradient.pgm: horizontal ramp over all 256 levels
- checkerboard.pgm: two levels in 16-pixel squares
- noise.pgm: uniform random pixels
- phantom.pgm: nested ellipses on a dark background, a scan-like image
"""

from pathlib import Path

import numpy as np

from image_cipher import GrayImage
from image_io import save_image
from settings import config

DATASET_DIR = config("DATASET_DIR")


def constant_image(size, level=128):
    return np.full((size, size), level, dtype=np.uint8)


def gradient_image(size):
    row = np.floor(np.arange(size) * 256 / size).astype(np.uint8)
    return np.tile(row, (size, 1))


def checkerboard_image(size, square=16, low=32, high=224):
    yy, xx = np.indices((size, size))
    return np.where(((yy // square) + (xx // square)) % 2 == 0, low, high).astype(np.uint8)


def noise_image(size, rng):
    return rng.integers(0, 256, size=(size, size), dtype=np.uint8)


def phantom_image(size, rng):
    """Head-phantom-like picture: skull ring, tissue, a few lesions and mild noise."""
    yy, xx = np.mgrid[-1.0 : 1.0 : size * 1j, -1.0 : 1.0 : size * 1j]
    ellipses = [
        # (center x, center y, semi-axis x, semi-axis y, intensity added)
        (0.0, 0.0, 0.69, 0.92, 200.0),
        (0.0, -0.02, 0.66, 0.87, -120.0),
        (0.22, 0.0, 0.11, 0.31, -30.0),
        (-0.22, 0.0, 0.16, 0.41, -30.0),
        (0.0, 0.35, 0.21, 0.25, 25.0),
        (0.1, -0.4, 0.05, 0.05, 60.0),
    ]
    image = np.zeros((size, size))
    for cx, cy, ax, ay, value in ellipses:
        inside = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0
        image[inside] += value
    image += rng.normal(0.0, 4.0, size=image.shape)
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


def build_sample_images(size=256, seed=42):
    rng = np.random.default_rng(seed)
    return {
        "constant": constant_image(size),
        "gradient": gradient_image(size),
        "checkerboard": checkerboard_image(size),
        "noise": noise_image(size, rng),
        "phantom": phantom_image(size, rng),
    }


def write_sample_dataset(out_dir=DATASET_DIR, size=256, seed=42):
    """Write the sample images as PGM files; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, pixels in build_sample_images(size, seed).items():
        path = out_dir / f"{name}.pgm"
        save_image(path, GrayImage.from_array(pixels))
        paths.append(path)
    return paths


def main():
    print(">> Creating sample dataset...")
    paths = write_sample_dataset(DATASET_DIR, seed=config("RNG_SEED"))
    for path in paths:
        print(f"   Saved: {path.name}")
    print(f"   Images: {len(paths)}")


if __name__ == "__main__":
    main()
