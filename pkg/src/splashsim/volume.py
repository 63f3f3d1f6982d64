"""Column/pipe volume solver.

The fluid body is a grid of vertical columns exchanging volume through
virtual pipes to their eight neighbours. One signed flow is stored per
undirected pipe, so a flow read from the other end is the exact negation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend as _backend
from .params import Boundary, Constant, FluidParams, KernelConstants, Wall


def column_height(volume, params: FluidParams):
    """Height of a column holding ``volume`` (scalar or array)."""
    assert np.all(np.asarray(volume) >= 0), "negative column volume"
    return volume / params.area


def total_pressure(h, E, params: FluidParams):
    """Hydrostatic plus atmospheric plus external pressure at a column base."""
    return h * params.rho * params.gmag + params.p0 + E


def pipe_acceleration(h_a, h_b, E_a, E_b, length, params: FluidParams):
    """Acceleration of fluid in a pipe of ``length`` from column a toward b."""
    return (params.rho * params.gmag * (h_a - h_b) + (E_a - E_b)) / (params.rho * length)


@dataclass
class ColumnGrid:
    """Per-column volume and external pressure, ``(ny, nx)`` indexed ``[j, i]``."""

    V: np.ndarray
    E: np.ndarray = None
    boundary: Boundary = field(default_factory=Boundary)

    def __post_init__(self):
        self.V = np.ascontiguousarray(self.V, dtype=np.float64)
        if self.V.ndim != 2:
            raise ValueError("volume field must be 2-D")
        if self.E is None:
            self.E = np.zeros_like(self.V)
        else:
            self.E = np.ascontiguousarray(self.E, dtype=np.float64)
        if self.E.shape != self.V.shape:
            raise ValueError("pressure and volume fields differ in shape")

    @property
    def ny(self) -> int:
        return self.V.shape[0]

    @property
    def nx(self) -> int:
        return self.V.shape[1]

    @classmethod
    def from_depth(cls, depth, params: FluidParams, nx: int | None = None, ny: int | None = None,
                   boundary: Boundary | None = None) -> "ColumnGrid":
        depth = np.asarray(depth, dtype=np.float64)
        if depth.ndim == 0:
            depth = np.full((ny, nx), float(depth))
        return cls(V=depth * params.area, boundary=boundary or Boundary())

    def heights(self, params: FluidParams) -> np.ndarray:
        return self.V / params.area


@dataclass
class PipeField:
    """Signed flows (m^3/s) for the four canonical pipe directions.

    See ``splashsim._fallback`` for the padded storage layout; the padding
    holds the pipes that cross the grid edge.
    """

    qx: np.ndarray
    qy: np.ndarray
    qd: np.ndarray
    qa: np.ndarray

    @classmethod
    def zeros(cls, nx: int, ny: int) -> "PipeField":
        return cls(
            qx=np.zeros((ny, nx + 1)),
            qy=np.zeros((ny + 1, nx)),
            qd=np.zeros((ny + 1, nx + 1)),
            qa=np.zeros((ny + 1, nx + 1)),
        )

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.qx, self.qy, self.qd, self.qa

    def copy(self) -> "PipeField":
        return PipeField(*(a.copy() for a in self.arrays))

    def copy_into(self, other: "PipeField") -> None:
        for src, dst in zip(self.arrays, other.arrays):
            np.copyto(dst, src)

    def flow(self, i: int, j: int, k: int, l: int) -> float:
        """Flow from column (i, j) toward adjacent column (k, l)."""
        from .reference import pipe_slot

        kind, r, c, sign = pipe_slot(i, j, k - i, l - j)
        q = float(self.arrays[kind][r, c])
        return q if sign > 0 else -q

    def max_abs(self) -> float:
        return max(float(np.abs(a).max(initial=0.0)) for a in self.arrays)


# ----------------------------------------------------------------------------
# Edge-crossing pipes. Each entry: (kind, row slice, col slice, sign) where a
# positive stored value times sign is flow INTO the grid.


def _edge_slots(nx: int, ny: int):
    s = slice
    return {
        "xmin": [(0, s(0, ny), s(0, 1), 1.0), (2, s(1, ny), s(0, 1), 1.0), (3, s(1, ny), s(0, 1), -1.0)],
        "xmax": [(0, s(0, ny), s(nx, nx + 1), -1.0), (2, s(1, ny), s(nx, nx + 1), -1.0),
                 (3, s(1, ny), s(nx, nx + 1), 1.0)],
        "ymin": [(1, s(0, 1), s(0, nx), 1.0), (2, s(0, 1), s(1, nx), 1.0), (3, s(0, 1), s(1, nx), 1.0)],
        "ymax": [(1, s(ny, ny + 1), s(0, nx), -1.0), (2, s(ny, ny + 1), s(1, nx), -1.0),
                 (3, s(ny, ny + 1), s(1, nx), -1.0)],
    }


def _dead_slots(nx: int, ny: int):
    """Diagonal slots at the four corners; these never carry flow."""
    return [(2, 0, 0), (2, ny, nx), (2, 0, nx), (2, ny, 0),
            (3, ny, 0), (3, 0, nx), (3, 0, 0), (3, ny, nx)]


def apply_boundary(pipes: PipeField, boundary: Boundary) -> PipeField:
    """Impose the edge flow rules in place.

    Wall edges get zero flow; ``Constant(q)`` edges get ``q`` into the grid on
    every pipe crossing only that edge. Corner diagonals are always closed.
    """
    ny, nx = pipes.qx.shape[0], pipes.qy.shape[1]
    arrays = pipes.arrays
    for name, slots in _edge_slots(nx, ny).items():
        rule = getattr(boundary, name)
        q = rule.q if isinstance(rule, Constant) else 0.0
        for kind, rows, cols, sign in slots:
            arrays[kind][rows, cols] = sign * q
    for kind, r, c in _dead_slots(nx, ny):
        arrays[kind][r, c] = 0.0
    return pipes


def boundary_inflow(values: PipeField) -> float:
    """Total inflow-oriented value over all edge-crossing pipes."""
    ny, nx = values.qx.shape[0], values.qy.shape[1]
    arrays = values.arrays
    terms = []
    for slots in _edge_slots(nx, ny).values():
        for kind, rows, cols, sign in slots:
            terms.extend((sign * arrays[kind][rows, cols]).ravel().tolist())
    return math.fsum(terms)


# ----------------------------------------------------------------------------


def update_flows(pipes: PipeField, heights: np.ndarray, E: np.ndarray, params: FluidParams,
                 kc: KernelConstants | None = None, backend=None, workers: int = 1) -> PipeField:
    """Accelerate every interior pipe from the given heights, in place.

    The cross-section is depth-dependent (mean depth of the two columns times
    the transverse width) and the flow decays by ``1 - damping*dt`` per step.
    """
    kc = kc or KernelConstants.from_params(params)
    be = _backend.get(backend) if isinstance(backend, (str, type(None))) else backend
    be.update_flows(np.ascontiguousarray(heights), E, *pipes.arrays, kc.rg, kc.rlx, kc.rly, kc.rld,
                    kc.wx, kc.wy, kc.wd, kc.dt, kc.keep, workers=workers)
    return pipes


def integrate_volumes(old: PipeField, new: PipeField, params: FluidParams, backend=None,
                      workers: int = 1, out: np.ndarray | None = None):
    """Trapezoidal volume change per column.

    Returns ``(dV, transfers)`` where ``transfers`` holds each pipe's volume
    moved over the step, ``dt * (Q_old + Q_new) / 2``, oriented like the
    stored flow.
    """
    be = _backend.get(backend) if isinstance(backend, (str, type(None))) else backend
    ny, nx = new.qx.shape[0], new.qy.shape[1]
    half_dt = 0.5 * params.dt
    t = PipeField.zeros(nx, ny)
    for a, b, o in zip(old.arrays, new.arrays, t.arrays):
        be.transfers(a, b, half_dt, o, workers=workers)
    dv = np.empty((ny, nx)) if out is None else out
    be.net_inflow(*t.arrays, out=dv, workers=workers)
    return dv, t


@dataclass
class ScaleReport:
    iterations: int = 0
    clamped_volume: float = 0.0  # signed volume removed by the final clamp (<= 0)
    clamped_columns: int = 0

    def __bool__(self):
        return self.iterations > 0 or self.clamped_columns > 0


def enforce_nonnegative(V: np.ndarray, dV: np.ndarray, transfers: PipeField, old: PipeField,
                        new: PipeField, params: FluidParams, backend=None, workers: int = 1):
    """Scale back outflows of columns that would go negative, then update V.

    Mutates ``dV``, ``transfers``, ``old`` and ``new``; returns the updated
    volume array and a :class:`ScaleReport`.
    """
    be = _backend.get(backend) if isinstance(backend, (str, type(None))) else backend
    report = ScaleReport()
    if ((V + dV) < 0.0).any():
        report.iterations = be.scale_back(V, dV, transfers.arrays, old.arrays, new.arrays,
                                          params.max_clamp_iterations, workers=workers)
    V_new = V + dV
    neg = V_new < 0.0
    if neg.any():
        clamped = V_new[neg]
        report.clamped_volume = math.fsum(clamped.tolist())
        report.clamped_columns = int(clamped.size)
        V_new[neg] = 0.0
    return V_new, report


def column_inflow_rate(pipes: PipeField, backend=None, workers: int = 1,
                       out: np.ndarray | None = None) -> np.ndarray:
    """Net volume inflow rate per column (m^3/s)."""
    be = _backend.get(backend) if isinstance(backend, (str, type(None))) else backend
    ny, nx = pipes.qx.shape[0], pipes.qy.shape[1]
    dst = np.empty((ny, nx)) if out is None else out
    return be.net_inflow(*pipes.arrays, out=dst, workers=workers)


__all__ = [
    "ColumnGrid", "PipeField", "ScaleReport", "Wall", "Constant",
    "column_height", "total_pressure", "pipe_acceleration", "update_flows",
    "apply_boundary", "boundary_inflow", "integrate_volumes", "enforce_nonnegative",
    "column_inflow_rate",
]
