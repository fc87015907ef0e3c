"""In-memory 3D mask volume and basic volume-level operations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimsMismatch, SpacingMismatch

SPACING_RTOL = 1e-4


@dataclass(eq=False)
class Volume:
    """A dense 3D voxel grid with physical spacing.

    ``data`` is indexed ``[x, y, z]`` (x fastest in the on-disk flat order).
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    source_path: str | None = None
    binary: bool = False
    spacing_was_fixed: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {self.data.shape}")
        if any(d < 1 for d in self.data.shape):
            raise ValueError(f"all dims must be >= 1, got {self.data.shape}")
        self.spacing = tuple(float(s) for s in self.spacing)
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.data, other.data)
        )


def binarize(v: Volume, threshold: float = 0.5) -> Volume:
    """Threshold a volume: voxel > threshold becomes 1, else 0."""
    out = (v.data > threshold).astype(np.uint8)
    return Volume(out, v.spacing, source_path=v.source_path, binary=True)


def check_compatibility(gt: Volume, pred: Volume) -> None:
    """Require identical dims and spacing equal within relative tolerance."""
    if gt.dims != pred.dims:
        raise DimsMismatch(f"dims {gt.dims} vs {pred.dims}")
    for axis, (a, b) in enumerate(zip(gt.spacing, pred.spacing)):
        if abs(a - b) > SPACING_RTOL * max(abs(a), abs(b)):
            raise SpacingMismatch(f"spacing differs on axis {axis}: {a} vs {b}")
