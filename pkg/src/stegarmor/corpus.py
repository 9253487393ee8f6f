"""Seeded synthetic grayscale covers for desk-scale experiments.

These stand in for a natural-image corpus (which cannot be shipped); they
mix smooth gradients, band-limited textures, hard edges and saturated
regions so that covers differ in how well they survive recompression.
They do not reproduce absolute numbers from natural-image studies.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .jpeg import CoeffImage, SpatialImage, compress, serialize_jpeg

KINDS = ("gradient", "texture", "shapes", "bright", "mixed")


def _texture(rng, size, scale):
    noise = rng.normal(size=(size, size))
    return gaussian_filter(noise, scale, mode="wrap") * scale


def synthetic_image(seed: int, size: int = 256, kind: str | None = None) -> SpatialImage:
    rng = np.random.default_rng(seed)
    if kind is None:
        kind = KINDS[seed % len(KINDS)]
    yy, xx = np.mgrid[0:size, 0:size] / size
    angle = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(angle) * xx + np.sin(angle) * yy
    tex = _texture(rng, size, rng.uniform(1.0, 3.0))
    tex = tex / (tex.std() + 1e-12)
    fine = rng.normal(size=(size, size))

    if kind == "gradient":
        img = 128 + 60 * ramp + 6 * tex + 2 * fine
    elif kind == "texture":
        img = 128 + 35 * tex + 10 * _texture(rng, size, 6.0) / 6.0 + 4 * fine
    elif kind == "shapes":
        img = np.full((size, size), rng.uniform(60, 180))
        for _ in range(int(rng.integers(4, 9))):
            cy, cx = rng.uniform(0, 1, 2)
            r = rng.uniform(0.05, 0.25)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
            img[mask] = rng.uniform(10, 245)
        img = gaussian_filter(img, 0.8) + 5 * tex + 2 * fine
    elif kind == "bright":
        # large regions clipped at white, like an overexposed sky
        img = 200 + 90 * ramp + 25 * tex + 3 * fine
    elif kind == "mixed":
        img = 128 + 110 * np.sin(2 * np.pi * (ramp * rng.uniform(1, 3))) + 20 * tex + 3 * fine
    else:
        raise ValueError(f"unknown synthetic image kind {kind!r}")
    return SpatialImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def synthetic_corpus(n: int = 20, size: int = 256, q_cover: int = 75, seed: int = 0) -> list[CoeffImage]:
    return [compress(synthetic_image(seed + i, size), q_cover) for i in range(n)]


def write_corpus(directory, n: int = 20, size: int = 256, q_cover: int = 75, seed: int = 0) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(synthetic_corpus(n, size, q_cover, seed)):
        path = directory / f"synth_{seed + i:04d}.jpg"
        path.write_bytes(serialize_jpeg(img))
        paths.append(path)
    return paths
