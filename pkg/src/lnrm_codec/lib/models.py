from dataclasses import dataclass, field
from enum import IntEnum
from typing import Tuple

import numpy as np

from lnrm_codec.lib.errors import AlignmentError, ContractError, GradientValueError

MB_SIZE = 16


@dataclass(frozen=True)
class Frame:
    """
    Planar 8-bit image in 4:4:4 layout.

    Attributes:
        planes: uint8 array of shape (n_planes, height, width); n_planes is 1 or 3.
            Plane 0 is luma; planes 1 and 2 are full-resolution chroma.
    """
    planes: np.ndarray

    def __post_init__(self):
        planes = np.asarray(self.planes)
        if planes.ndim == 2:
            planes = planes[np.newaxis]
        if planes.ndim != 3 or planes.shape[0] not in (1, 3):
            raise ContractError(f"Frame needs 1 or 3 planes, got array of shape {planes.shape}")
        if planes.dtype != np.uint8:
            if planes.dtype.kind not in "iuf":
                raise ContractError(f"Frame samples must be numeric, got dtype {planes.dtype}")
            if not np.all(np.isfinite(planes)):
                raise ContractError("Frame samples must be finite")
            if np.any(planes != np.floor(planes)):
                raise ContractError("Frame samples must be integers; round before building a Frame")
            if np.any(planes < 0) or np.any(planes > 255):
                raise ContractError("Frame samples must lie in [0, 255]")
            planes = planes.astype(np.uint8)
        height, width = planes.shape[1:]
        if width == 0 or height == 0 or width % MB_SIZE or height % MB_SIZE:
            raise AlignmentError(f"Frame {width}x{height} is not a multiple of {MB_SIZE}x{MB_SIZE}")
        planes = np.ascontiguousarray(planes)
        planes.setflags(write=False)
        object.__setattr__(self, "planes", planes)

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def plane_count(self) -> int:
        return self.planes.shape[0]

    @property
    def n_pixels(self) -> int:
        """Pixels per plane."""
        return self.width * self.height

    def as_float(self) -> np.ndarray:
        return self.planes.astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.planes.shape == other.planes.shape and bool(np.array_equal(self.planes, other.planes))

    def __hash__(self):
        return hash((self.planes.shape, self.planes.tobytes()))


@dataclass(frozen=True)
class GradientField:
    """
    Per-sample gradient of a no-reference metric at an input frame.

    Attributes:
        values: float32 array (n_planes, height, width) of partial derivatives.
        base_score: metric value b(x) at the frame the gradient was taken at.
    """
    values: np.ndarray
    base_score: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim == 2:
            values = values[np.newaxis]
        if values.ndim != 3:
            raise ContractError(f"GradientField needs (planes, height, width), got shape {values.shape}")
        values = np.ascontiguousarray(values, dtype=np.float32)
        if not np.all(np.isfinite(values)):
            raise GradientValueError("GradientField contains NaN or Inf values")
        if not np.isfinite(self.base_score):
            raise GradientValueError(f"GradientField base score is not finite: {self.base_score}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "base_score", float(self.base_score))

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def plane_count(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        """Euclidean norm over every entry of every plane."""
        return float(np.linalg.norm(self.values.astype(np.float64).ravel()))

    def matches(self, frame: Frame) -> bool:
        return (self.width, self.height, self.plane_count) == (frame.width, frame.height, frame.plane_count)

    @classmethod
    def zeros_like(cls, frame: Frame, base_score: float = 0.0) -> "GradientField":
        return cls(np.zeros(frame.planes.shape, dtype=np.float32), base_score)

    def __eq__(self, other):
        if not isinstance(other, GradientField):
            return NotImplemented
        return (self.base_score == other.base_score
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))

    def __hash__(self):
        return hash((self.base_score, self.values.shape, self.values.tobytes()))


class Partition(IntEnum):
    """Macroblock partition; the value is the bitstream flag."""
    MB16 = 0
    SUB4 = 1

    @property
    def block_size(self) -> int:
        return 16 if self is Partition.MB16 else 4


@dataclass(frozen=True, order=True)
class CodingChoice:
    """One RDO option theta_i: partition mode and macroblock delta QP."""
    partition: Partition
    delta_qp: int

    def tie_key(self) -> Tuple[int, int, int]:
        """Preference among equal-cost options: small |dQP|, MB16 first, then smaller dQP."""
        return (abs(self.delta_qp), int(self.partition), self.delta_qp)


@dataclass(frozen=True)
class BlockCost:
    """
    Lagrangian cost of one coding option.

    Attributes:
        distortion: SSE or regularized LNRM value (may be negative in LNRM mode).
        rate_bits: Coefficient bits plus partition flag and delta QP side information.
        lam: Lagrange multiplier the total was computed with.
        sse: Transform-domain squared error (always reported).
        lnrm: Transform-domain linear term t^T (z_hat - z) (zero in SSE mode).
    """
    distortion: float
    rate_bits: int
    lam: float
    sse: float = 0.0
    lnrm: float = 0.0
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.distortion + self.lam * self.rate_bits)
