"""Flat-top hexagonal grid in axial coordinates.

Cells are laid out on a local tangent plane around a configurable origin, so the
grid alignment is an input rather than something inferred from the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geo import GeoPoint, from_local_km, to_local_km

AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


@dataclass(frozen=True)
class HexGrid:
    origin: GeoPoint
    cell_area_km2: float = 0.66

    def __post_init__(self):
        if not self.cell_area_km2 > 0:
            raise ValueError("cell area must be positive")

    @property
    def size_km(self) -> float:
        """Circumradius, from A = (3*sqrt(3)/2) * s**2."""
        return math.sqrt(2.0 * self.cell_area_km2 / (3.0 * math.sqrt(3.0)))

    @property
    def inradius_km(self) -> float:
        return self.size_km * math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class HexCell:
    q: int
    r: int
    grid: HexGrid

    @property
    def key(self):
        return (self.q, self.r)


def _axial_round(qf, rf):
    xf, zf = qf, rf
    yf = -xf - zf
    rx, ry, rz = np.round(xf), np.round(yf), np.round(zf)
    dx, dy, dz = np.abs(rx - xf), np.abs(ry - yf), np.abs(rz - zf)
    fix_x = (dx > dy) & (dx > dz)
    fix_z = ~fix_x & (dz >= dy)
    rx = np.where(fix_x, -ry - rz, rx)
    rz = np.where(fix_z, -rx - ry, rz)
    return rx.astype(int), rz.astype(int)


def hex_index_array(lat, lon, grid: HexGrid):
    """Axial (q, r) integer arrays for many points at once."""
    x, y = to_local_km(lat, lon, grid.origin)
    s = grid.size_km
    qf = (2.0 / 3.0) * x / s
    rf = (-x / 3.0 + math.sqrt(3.0) / 3.0 * y) / s
    return _axial_round(qf, rf)


def hex_index(p: GeoPoint, grid: HexGrid) -> HexCell:
    q, r = hex_index_array([p.lat], [p.lon], grid)
    return HexCell(int(q[0]), int(r[0]), grid)


def hex_center(cell: HexCell) -> GeoPoint:
    s = cell.grid.size_km
    x = s * 1.5 * cell.q
    y = s * math.sqrt(3.0) * (cell.r + cell.q / 2.0)
    lat, lon = from_local_km(x, y, cell.grid.origin)
    return GeoPoint(float(lat), float(lon))


def hex_neighbors(cell: HexCell) -> list[HexCell]:
    return [HexCell(cell.q + dq, cell.r + dr, cell.grid) for dq, dr in AXIAL_DIRECTIONS]
