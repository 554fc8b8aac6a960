"""Uniform cell-centred grids on a square domain."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """``nx`` x ``ny`` cells covering ``[a, b]^2``.

    Fields are arrays of shape ``(nx, ny)``; the first axis is x.
    """

    a: float = -2.2
    b: float = 2.2
    nx: int = 44
    ny: int = 44

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need at least 2 cells per direction")

    @classmethod
    def uniform(cls, spacing: float, a: float = -2.2, b: float = 2.2) -> "GridSpec":
        n = int(round((b - a) / spacing))
        if n < 2 or abs(n * spacing - (b - a)) > 1e-9 * (b - a):
            raise ValueError(f"spacing {spacing} does not divide [{a}, {b}]")
        return cls(a, b, n, n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def dy(self) -> float:
        return (self.b - self.a) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @cached_property
    def x(self) -> np.ndarray:
        return self.a + (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return self.a + (np.arange(self.ny) + 0.5) * self.dy

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def radius(self) -> np.ndarray:
        X, Y = self.mesh
        return np.sqrt(X * X + Y * Y)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def column_index(self, x0: float) -> int:
        """Index of the cell column nearest to ``x = x0``.

        Exact ties (``x0`` on a cell face) resolve to the column on the left.
        """
        dist = np.round(np.abs(self.x - x0), 12)
        return int(np.argmin(dist))
