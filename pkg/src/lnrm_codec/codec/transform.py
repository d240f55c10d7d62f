"""
Orthonormal block DCT-II (sizes 4 and 16).

The basis U is materialized as an explicit matrix per size; a block X maps to
Z = D X D^T where D = U^T holds the DCT basis vectors as rows. Because U is
orthogonal, norms and inner products are identical in both domains, which is
what lets RDO costs be evaluated on coefficients.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy.fft import dct

from lnrm_codec.lib.errors import ContractError
from lnrm_codec.lib.models import MB_SIZE, GradientField, Partition

BLOCK_SIZES = (4, 16)


@lru_cache(maxsize=None)
def dct_matrix(size: int) -> np.ndarray:
    """Rows are the orthonormal DCT-II basis vectors of length `size` (read-only)."""
    if size not in BLOCK_SIZES:
        raise ContractError(f"Unsupported transform size {size}; expected one of {BLOCK_SIZES}")
    basis = dct(np.eye(size), type=2, norm="ortho", axis=0)
    basis.setflags(write=False)
    return basis


@dataclass(frozen=True)
class CoeffBlock:
    """Transform coefficients of one size x size block, row-major."""
    size: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.size not in BLOCK_SIZES:
            raise ContractError(f"Unsupported transform size {self.size}")
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.size != self.size * self.size:
            raise ContractError(f"CoeffBlock of size {self.size} needs {self.size ** 2} coefficients, got {coeffs.size}")
        object.__setattr__(self, "coeffs", coeffs.reshape(self.size, self.size))


def _as_square(block, size: int) -> np.ndarray:
    if size not in BLOCK_SIZES:
        raise ContractError(f"Unsupported transform size {size}; expected one of {BLOCK_SIZES}")
    values = np.asarray(block, dtype=np.float64)
    if values.size != size * size:
        raise ContractError(f"Block of size {size} needs {size * size} samples, got {values.size}")
    return values.reshape(size, size)


def forward(block, size: int) -> CoeffBlock:
    """Separable 2-D DCT-II of one block (rows then columns)."""
    values = _as_square(block, size)
    basis = dct_matrix(size)
    return CoeffBlock(size, basis @ values @ basis.T)


def inverse(coeffs: CoeffBlock) -> np.ndarray:
    """Inverse of `forward`; returns a size x size float64 block."""
    if not isinstance(coeffs, CoeffBlock):
        raise ContractError("inverse() expects a CoeffBlock")
    basis = dct_matrix(coeffs.size)
    return basis.T @ coeffs.coeffs @ basis


def forward_batch(blocks: np.ndarray) -> np.ndarray:
    """Forward transform of a stack of square blocks, shape (n, size, size)."""
    size = blocks.shape[-1]
    basis = dct_matrix(size)
    return np.matmul(np.matmul(basis, blocks), basis.T)


def inverse_batch(coeffs: np.ndarray) -> np.ndarray:
    size = coeffs.shape[-1]
    basis = dct_matrix(size)
    return np.matmul(np.matmul(basis.T, coeffs), basis)


def split_macroblock(mb: np.ndarray, partition: Partition) -> np.ndarray:
    """Splits a 16x16 macroblock into its transform blocks, raster order, shape (n, s, s)."""
    size = partition.block_size
    n = MB_SIZE // size
    return (np.asarray(mb, dtype=np.float64)
            .reshape(n, size, n, size)
            .transpose(0, 2, 1, 3)
            .reshape(n * n, size, size))


def merge_macroblock(blocks: np.ndarray, partition: Partition) -> np.ndarray:
    """Inverse of split_macroblock."""
    size = partition.block_size
    n = MB_SIZE // size
    return blocks.reshape(n, n, size, size).transpose(0, 2, 1, 3).reshape(MB_SIZE, MB_SIZE)


def transform_macroblock(mb: np.ndarray, partition: Partition) -> np.ndarray:
    """Coefficients of every transform block of a macroblock, shape (n, s, s)."""
    return forward_batch(split_macroblock(mb, partition))


@dataclass(frozen=True)
class BlockLayout:
    """
    Partition of one plane into transform blocks.

    Attributes:
        width, height: Plane dimensions in pixels.
        partitions: One Partition per macroblock, raster order.
    """
    width: int
    height: int
    partitions: Sequence[Partition]

    @classmethod
    def uniform(cls, width: int, height: int, partition: Partition) -> "BlockLayout":
        count = (width // MB_SIZE) * (height // MB_SIZE)
        return cls(width, height, tuple([partition] * count))

    def tiles(self, width: int, height: int) -> bool:
        return (self.width == width and self.height == height
                and width % MB_SIZE == 0 and height % MB_SIZE == 0
                and len(self.partitions) == (width // MB_SIZE) * (height // MB_SIZE))


def transform_gradient(field: GradientField, layout: BlockLayout, plane: int = 0) -> List[CoeffBlock]:
    """
    Transform-domain gradient blocks t_i = U^T grad b_i for one plane.

    Blocks are listed macroblock by macroblock in raster order; the sixteen 4x4
    blocks of a SUB4 macroblock follow raster order inside it.
    """
    if not layout.tiles(field.width, field.height):
        raise ContractError(
            f"Layout {layout.width}x{layout.height} with {len(layout.partitions)} macroblocks "
            f"does not tile a {field.width}x{field.height} gradient plane"
        )
    if not 0 <= plane < field.plane_count:
        raise ContractError(f"Plane {plane} out of range for a {field.plane_count}-plane field")
    values = field.values[plane].astype(np.float64)
    mb_cols = field.width // MB_SIZE
    blocks = []
    for index, partition in enumerate(layout.partitions):
        row, col = divmod(index, mb_cols)
        mb = values[row * MB_SIZE:(row + 1) * MB_SIZE, col * MB_SIZE:(col + 1) * MB_SIZE]
        for coeffs in transform_macroblock(mb, partition):
            blocks.append(CoeffBlock(partition.block_size, coeffs))
    return blocks
