"""Surface mesh sampled between columns.

Mesh point ``[j, i]`` sits at the shared corner of columns (i, j), (i+1, j),
(i, j+1) and (i+1, j+1), so an ``nx`` by ``ny`` column grid has an
``(nx-1)`` by ``(ny-1)`` mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend as _backend
from .params import FluidParams, PipeGeometry
from .volume import PipeField, column_inflow_rate


@dataclass
class SurfaceMesh:
    z: np.ndarray
    z_dot: np.ndarray
    x_dot: np.ndarray
    y_dot: np.ndarray

    @classmethod
    def zeros(cls, nx: int, ny: int) -> "SurfaceMesh":
        shape = (max(ny - 1, 0), max(nx - 1, 0))
        return cls(*(np.zeros(shape) for _ in range(4)))

    def point_xy(self, params: FluidParams):
        """World coordinates of every mesh point, as two ``(ny-1, nx-1)`` arrays."""
        ny, nx = self.z.shape
        x = (np.arange(nx) + 1.0) * params.dx
        y = (np.arange(ny) + 1.0) * params.dy
        return np.meshgrid(x, y)

    def copy(self) -> "SurfaceMesh":
        return SurfaceMesh(self.z.copy(), self.z_dot.copy(), self.x_dot.copy(), self.y_dot.copy())


def surface_heights(h: np.ndarray) -> np.ndarray:
    """Average of the four column heights around each mesh point.

    Diagonal corners are paired first so mirrored points agree bitwise.
    """
    return ((h[:-1, :-1] + h[1:, 1:]) + (h[1:, :-1] + h[:-1, 1:])) / 4.0


def distribute_force(E: np.ndarray, point: tuple[int, int], f_e: float, params: FluidParams) -> float:
    """Add the pressure equivalent of vertical force ``f_e`` at mesh ``point``.

    ``point`` is ``(i, j)``. A downward (negative) force raises the pressure on
    the four columns under the point. Returns the per-column increment.
    """
    i, j = point
    ny, nx = E.shape
    if not (0 <= i < nx - 1 and 0 <= j < ny - 1):
        raise IndexError(f"mesh point {point} outside {(nx - 1, ny - 1)} mesh")
    de = -f_e / (4.0 * params.dx * params.dy)
    E[j:j + 2, i:i + 2] += de
    return de


def column_vertical_velocity(pipes: PipeField, params: FluidParams, backend=None) -> np.ndarray:
    """Rate of change of column height from the net inflow."""
    return column_inflow_rate(pipes, backend=backend) / params.area


def surface_velocity(h: np.ndarray, h_dot: np.ndarray, pipes: PipeField, params: FluidParams,
                     backend=None, workers: int = 1, out: SurfaceMesh | None = None) -> SurfaceMesh:
    """Fill a :class:`SurfaceMesh` with heights and surface velocities.

    Horizontal components average the two parallel pipe flows bordering the
    point and divide by their mean cross-section to get m/s; dry pipes give 0.
    """
    be = _backend.get(backend) if isinstance(backend, (str, type(None))) else backend
    ny, nx = h.shape
    mesh = out or SurfaceMesh.zeros(nx, ny)
    geo = PipeGeometry.from_params(params)
    be.surface_fields(np.ascontiguousarray(h), np.ascontiguousarray(h_dot), pipes.qx, pipes.qy,
                      geo.wx, geo.wy, mesh.z, mesh.z_dot, mesh.x_dot, mesh.y_dot, workers=workers)
    return mesh


def sample_bilinear(field: np.ndarray, x, y, params: FluidParams):
    """Bilinear interpolation of a mesh field at world positions, clamped to the mesh."""
    ny, nx = field.shape
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    fx = np.clip(x / params.dx - 1.0, 0.0, nx - 1)
    fy = np.clip(y / params.dy - 1.0, 0.0, ny - 1)
    i0 = np.minimum(np.floor(fx).astype(np.intp), max(nx - 2, 0))
    j0 = np.minimum(np.floor(fy).astype(np.intp), max(ny - 2, 0))
    i1 = np.minimum(i0 + 1, nx - 1)
    j1 = np.minimum(j0 + 1, ny - 1)
    tx = fx - i0
    ty = fy - j0
    top = field[j0, i0] * (1.0 - tx) + field[j0, i1] * tx
    bot = field[j1, i0] * (1.0 - tx) + field[j1, i1] * tx
    return top * (1.0 - ty) + bot * ty
