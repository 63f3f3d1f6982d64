"""Simulation state, the canonical step, and the volume ledger."""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import backend as _backend
from .objects import RigidObject, interact
from .params import Boundary, FluidParams, KernelConstants
from .spray import SprayPool, integrate_particles, reabsorb, spawn_particles
from .surface import SurfaceMesh, surface_heights, surface_velocity
from .volume import (
    ColumnGrid,
    PipeField,
    apply_boundary,
    boundary_inflow,
    enforce_nonnegative,
    integrate_volumes,
    update_flows,
)

PHASES = ("objects", "flows", "volumes", "surface", "spray", "ledger")


class LedgerError(RuntimeError):
    """Volume accounting drifted beyond tolerance in validation mode."""


@dataclass
class Ledger:
    initial: float
    column: float = 0.0
    airborne: float = 0.0
    destroyed: float = 0.0
    clamp_discarded: float = 0.0
    boundary_flux: float = 0.0

    @property
    def accounted(self) -> float:
        return math.fsum([self.column, self.airborne, self.destroyed, self.clamp_discarded,
                          -self.boundary_flux])

    @property
    def relative_error(self) -> float:
        scale = abs(self.initial) if self.initial else 1.0
        return abs(self.accounted - self.initial) / scale


def ledger_tolerance(steps: int) -> float:
    """Allowed relative ledger error after ``steps`` steps."""
    return 1e-9 * max(1.0, steps / 1000.0)


@dataclass
class StepInfo:
    scale_iterations: int = 0
    clamped_columns: int = 0
    spawned: int = 0
    absorbed: int = 0
    destroyed: int = 0
    object_forces: list = field(default_factory=list)


@dataclass
class SimState:
    params: FluidParams
    grid: ColumnGrid
    pipes: PipeField
    prev: PipeField
    mesh: SurfaceMesh
    pool: SprayPool
    objects: list[RigidObject]
    ledger: Ledger
    hdot: np.ndarray
    step: int = 0
    backend: object = None
    workers: int = 1
    validate: bool = False
    spawned_total: int = 0
    last: StepInfo = field(default_factory=StepInfo)
    _kc: KernelConstants = None
    _hh: np.ndarray = None
    _dv: np.ndarray = None

    @property
    def time(self) -> float:
        return self.step * self.params.dt

    @property
    def nx(self) -> int:
        return self.grid.nx

    @property
    def ny(self) -> int:
        return self.grid.ny

    def heights(self) -> np.ndarray:
        return self.grid.V / self.params.area

    def max_speed(self) -> float:
        m = self.mesh
        if m.z.size == 0:
            return 0.0
        return float(np.sqrt(m.x_dot ** 2 + m.y_dot ** 2 + m.z_dot ** 2).max())


def create_state(params: FluidParams, grid: ColumnGrid, objects: list[RigidObject] | None = None,
                 backend: str | None = None, workers: int = 1, validate: bool = False) -> SimState:
    be = _backend.get(backend)
    ny, nx = grid.V.shape
    if (grid.V < 0).any():
        raise ValueError("initial volumes must be non-negative")
    pipes = apply_boundary(PipeField.zeros(nx, ny), grid.boundary)
    hdot = be.net_inflow(*pipes.arrays, out=np.empty((ny, nx)), workers=workers) / params.area
    mesh = surface_velocity(grid.V / params.area, hdot, pipes, params, backend=be, workers=workers)
    ledger = Ledger(initial=math.fsum(grid.V.ravel().tolist()))
    ledger.column = ledger.initial
    return SimState(
        params=params, grid=grid, pipes=pipes, prev=pipes.copy(), mesh=mesh,
        pool=SprayPool.seeded(params.seed), objects=list(objects or []), ledger=ledger,
        hdot=hdot, backend=be, workers=workers, validate=validate,
        _kc=KernelConstants.from_params(params), _hh=np.empty((ny, nx)), _dv=np.empty((ny, nx)),
    )


@contextmanager
def _phase(timers, name):
    if timers is None:
        yield
        return
    t0 = time.perf_counter()
    yield
    timers[name] = timers.get(name, 0.0) + time.perf_counter() - t0


def step(state: SimState, timers: dict | None = None) -> SimState:
    """Advance ``state`` by one time step, in place.

    Phase order: objects push pressure, flows update from half-step heights,
    volumes integrate and are kept non-negative, the surface is resampled,
    spray spawns/flies/lands, and the ledger is refreshed.
    """
    p, be, w, kc = state.params, state.backend, state.workers, state._kc
    grid, t = state.grid, state.time
    info = StepInfo()

    with _phase(timers, "objects"):
        grid.E.fill(0.0)
        for obj in state.objects:
            info.object_forces.append(interact(obj, state.mesh, grid.E, t, p))

    with _phase(timers, "flows"):
        # heights half a step ahead, from the current inflow rate
        be.predict_heights(grid.V, state.hdot, kc.area, kc.half_dt, state._hh, workers=w)
        state.pipes.copy_into(state.prev)
        update_flows(state.pipes, state._hh, grid.E, p, kc=kc, backend=be, workers=w)
        apply_boundary(state.pipes, grid.boundary)

    with _phase(timers, "volumes"):
        dv, transfers = integrate_volumes(state.prev, state.pipes, p, backend=be, workers=w, out=state._dv)
        grid.V, report = enforce_nonnegative(grid.V, dv, transfers, state.prev, state.pipes, p,
                                             backend=be, workers=w)
        info.scale_iterations, info.clamped_columns = report.iterations, report.clamped_columns
        flux = boundary_inflow(transfers) if not grid.boundary.closed else 0.0

    with _phase(timers, "surface"):
        be.net_inflow(*state.pipes.arrays, out=state.hdot, workers=w)
        state.hdot /= p.area
        h = grid.V / p.area
        surface_velocity(h, state.hdot, state.pipes, p, backend=be, workers=w, out=state.mesh)

    with _phase(timers, "spray"):
        spawn = spawn_particles(state.mesh, grid.V, p, state.pool.rng)
        changed = False
        if spawn.count:
            grid.V -= spawn.debit
            state.pool.extend(spawn.pos, spawn.vel, spawn.vol)
            info.spawned = spawn.count
            state.spawned_total += spawn.count
            changed = True
        integrate_particles(state.pool, p)
        absorbed = reabsorb(state.pool, grid.V, p)
        if absorbed.absorbed:
            grid.V += absorbed.credit
            changed = True
        info.absorbed, info.destroyed = absorbed.absorbed, absorbed.destroyed
        if changed:
            state.mesh.z[...] = surface_heights(grid.V / p.area)

    with _phase(timers, "ledger"):
        lg = state.ledger
        lg.column = math.fsum(grid.V.ravel().tolist())
        lg.airborne = state.pool.airborne
        lg.destroyed = state.pool.destroyed
        if report.clamped_columns:
            lg.clamp_discarded = math.fsum([lg.clamp_discarded, report.clamped_volume])
        if flux:
            lg.boundary_flux = math.fsum([lg.boundary_flux, flux])

    state.step += 1
    state.last = info
    if state.validate:
        tol = ledger_tolerance(state.step)
        if state.ledger.relative_error > tol:
            raise LedgerError(
                f"ledger off by {state.ledger.relative_error:.3e} (> {tol:.1e}) at step {state.step}"
            )
    return state


DIAG_FIELDS = ("step", "time", "column_volume", "airborne_volume", "destroyed_volume",
               "clamp_discarded", "boundary_flux", "max_height", "max_speed")


def diagnostics_header(n_objects: int) -> list[str]:
    cols = list(DIAG_FIELDS)
    for k in range(n_objects):
        cols += [f"obj{k}_s", f"obj{k}_s_dot", f"obj{k}_f_o"]
    return cols


def diagnostics_row(state: SimState) -> list:
    lg = state.ledger
    row = [state.step, state.time, lg.column, lg.airborne, lg.destroyed, lg.clamp_discarded,
           lg.boundary_flux, float(state.grid.V.max()) / state.params.area, state.max_speed()]
    for obj in state.objects:
        row += [obj.s, obj.s_dot, obj.f_o]
    return row


def steps_for(duration: float, dt: float) -> int:
    return int(round(duration / dt))


def frame_stride(frame_interval: float, dt: float) -> int:
    return max(1, int(round(frame_interval / dt)))


def run(state: SimState, n_steps: int, stride: int, on_frame=None, on_diag=None,
        timers: dict | None = None) -> SimState:
    """Step ``n_steps`` times, emitting a frame every ``stride`` steps (and at 0)."""
    from .frames import Frame

    if on_frame is not None:
        on_frame(Frame.from_state(state))
    for _ in range(n_steps):
        step(state, timers=timers)
        if on_diag is not None:
            on_diag(diagnostics_row(state))
        if on_frame is not None and state.step % stride == 0:
            on_frame(Frame.from_state(state))
    return state


__all__ = ["SimState", "Ledger", "LedgerError", "Boundary", "create_state", "step", "run",
           "diagnostics_header", "diagnostics_row", "ledger_tolerance", "PHASES"]
