"""
Synthetic user-generated-content corpus.

Clean "natural-like" crops (smoothed random fields, flat shapes and a little
texture) are degraded the way consumer captures are: additive sensor-like
noise on every image, and posterization banding on every other one.
"""
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from lnrm_codec.lib.data.imageio import PathLike, load_frame, save_frame
from lnrm_codec.lib.errors import ContractError
from lnrm_codec.lib.models import MB_SIZE, Frame

logger = logging.getLogger("lnrm_codec")

FRAME_SUFFIXES = (".pgm", ".ppm")


@dataclass(frozen=True)
class CorpusSpec:
    """
    Attributes:
        count: Number of images.
        width, height: Image size (multiples of 16).
        planes: 1 (grey) or 3 (4:4:4 colour).
        noise_sigma: Standard deviation of the additive Gaussian noise.
        banding_levels: Posterization levels for banded images (0 disables banding).
        seed: Base seed; image i uses seed + i.
    """
    count: int = 20
    width: int = 64
    height: int = 64
    planes: int = 1
    noise_sigma: float = 6.0
    banding_levels: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ContractError(f"Corpus needs at least one image, got {self.count}")
        if self.width % MB_SIZE or self.height % MB_SIZE or self.width <= 0 or self.height <= 0:
            raise ContractError(f"Corpus size {self.width}x{self.height} is not a multiple of {MB_SIZE}")
        if self.planes not in (1, 3):
            raise ContractError(f"Corpus planes must be 1 or 3, got {self.planes}")
        if self.noise_sigma < 0:
            raise ContractError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def _stretch(field: np.ndarray, lo: float, hi: float) -> np.ndarray:
    span = field.max() - field.min()
    if span <= 0:
        return np.full_like(field, (lo + hi) / 2.0)
    return lo + (field - field.min()) / span * (hi - lo)


def _clean_plane(rng: np.random.Generator, height: int, width: int, contrast: float) -> np.ndarray:
    sigma = rng.uniform(3.0, 8.0)
    base = _stretch(ndimage.gaussian_filter(rng.normal(size=(height, width)), sigma, mode="reflect"),
                    128.0 - contrast, 128.0 + contrast)
    rows, cols = np.mgrid[0:height, 0:width]
    for _ in range(rng.integers(1, 4)):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        radius = rng.uniform(min(height, width) / 8, min(height, width) / 3)
        mask = (rows - cy) ** 2 + (cols - cx) ** 2 < radius ** 2
        base[mask] = 0.6 * base[mask] + 0.4 * rng.uniform(128.0 - contrast, 128.0 + contrast)
    texture = ndimage.gaussian_filter(rng.normal(size=(height, width)), 0.8) * rng.uniform(0.0, 4.0)
    # soften shape edges slightly, as optics would
    return ndimage.gaussian_filter(base, 0.7) + texture


def _degrade(plane: np.ndarray, rng: np.random.Generator, noise_sigma: float, banding_levels: int) -> np.ndarray:
    if banding_levels > 0:
        step = 256.0 / banding_levels
        plane = np.floor(plane / step) * step + step / 2.0
    if noise_sigma > 0:
        plane = plane + rng.normal(0.0, noise_sigma, size=plane.shape)
    return plane


def generate_image(spec: CorpusSpec, index: int) -> Frame:
    rng = np.random.default_rng(spec.seed + index)
    banding = spec.banding_levels if index % 2 == 1 else 0
    planes = []
    for p in range(spec.planes):
        contrast = 90.0 if p == 0 else 30.0
        clean = _clean_plane(rng, spec.height, spec.width, contrast)
        planes.append(_degrade(clean, rng, spec.noise_sigma if p == 0 else spec.noise_sigma / 2.0, banding))
    samples = np.clip(np.floor(np.stack(planes) + 0.5), 0, 255).astype(np.uint8)
    return Frame(samples)


def generate_corpus(spec: CorpusSpec = CorpusSpec()) -> List[Tuple[str, Frame]]:
    """Deterministic list of (name, frame); the same spec always yields the same pixels."""
    return [(f"ugc_{i:03d}", generate_image(spec, i)) for i in range(spec.count)]


def write_corpus(directory: PathLike, spec: CorpusSpec = CorpusSpec()) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    suffix = ".pgm" if spec.planes == 1 else ".ppm"
    paths = []
    for name, frame in generate_corpus(spec):
        path = os.path.join(directory, name + suffix)
        save_frame(frame, path)
        paths.append(path)
    logger.info(f"Wrote {len(paths)} corpus images to {directory}")
    return paths


def load_corpus(directory: PathLike) -> List[Tuple[str, Frame]]:
    """Every PGM/PPM in `directory`, sorted by file name; the name is the file stem."""
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"Corpus directory not found: {directory}")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    return [(p.stem, load_frame(p)) for p in files]
