import logging
import os
from pathlib import Path
from typing import Iterator, Tuple

import numpy as np
from dotenv import load_dotenv

from lnrm_codec.lib.models import MB_SIZE


def get_project_root() -> Path:
    """Returns the project root directory (where run_codec.py lives)."""
    # src/lnrm_codec/lib/utils.py -> project root
    return Path(__file__).resolve().parents[3]


def get_output_dir(subdir: str = "results") -> str:
    """Returns the path to an output directory within the project root."""
    return str(get_project_root() / subdir)


def setup_logging():
    """Configures the logging format and level based on environment variables."""
    load_dotenv()
    log_level = os.getenv('LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(
        level=getattr(logging, log_level, logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s'
    )
    return logging.getLogger("lnrm_codec")


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, ties away from zero (np.rint rounds ties to even)."""
    values = np.asarray(values, dtype=np.float64)
    return np.copysign(np.floor(np.abs(values) + 0.5), values)


def iter_macroblocks(height: int, width: int) -> Iterator[Tuple[int, int, int]]:
    """Yields (index, row, col) of each 16x16 macroblock in raster order."""
    index = 0
    for row in range(0, height, MB_SIZE):
        for col in range(0, width, MB_SIZE):
            yield index, row, col
            index += 1


def macroblock_grid(height: int, width: int) -> Tuple[int, int]:
    """Number of macroblock rows and columns."""
    return height // MB_SIZE, width // MB_SIZE
