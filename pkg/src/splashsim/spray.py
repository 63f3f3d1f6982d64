"""Ballistic spray particles.

Particles are spawned where the surface rises faster than a threshold, fly
under gravity alone, and hand their volume back to the column they land in.
Particles that leave the grid are destroyed at the ground plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import FluidParams
from .surface import SurfaceMesh, sample_bilinear


def ballistic(z, v, a, dt):
    """Exact constant-acceleration update of a position and velocity."""
    return z + v * dt + 0.5 * a * dt * dt, v + a * dt


@dataclass
class SprayPool:
    pos: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    vel: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    vol: np.ndarray = field(default_factory=lambda: np.empty(0))
    destroyed: float = 0.0
    rng: np.random.Generator = None

    @classmethod
    def seeded(cls, seed: int) -> "SprayPool":
        return cls(rng=np.random.default_rng(seed))

    def __len__(self):
        return self.vol.shape[0]

    @property
    def airborne(self) -> float:
        return math.fsum(self.vol.tolist())

    def extend(self, pos, vel, vol):
        if len(vol):
            self.pos = np.concatenate([self.pos, pos])
            self.vel = np.concatenate([self.vel, vel])
            self.vol = np.concatenate([self.vol, vol])

    def keep(self, mask: np.ndarray):
        self.pos = self.pos[mask]
        self.vel = self.vel[mask]
        self.vol = self.vol[mask]


@dataclass
class SpawnResult:
    pos: np.ndarray
    vel: np.ndarray
    vol: np.ndarray
    debit: np.ndarray  # per-column volume removed, (ny, nx)

    @property
    def count(self) -> int:
        return self.vol.shape[0]


def spawn_volume(particle_volume: float) -> float:
    """Particle volume rounded to 30 significant bits.

    Quarter shares of such a volume, and sums of a few million of them, are
    exact in binary64, so column debits add up to the spawned volume exactly.
    """
    m, e = math.frexp(particle_volume)
    return math.ldexp(round(math.ldexp(m, 30)), e - 30)


def particles_requested(z_dot: float, params: FluidParams) -> int:
    thr = params.spray_threshold
    return math.ceil(params.spawn_fraction * (z_dot - thr) / thr)


def spawn_particles(mesh: SurfaceMesh, V: np.ndarray, params: FluidParams,
                    rng: np.random.Generator) -> SpawnResult:
    """Emit particles above mesh points whose upward speed exceeds the threshold.

    Each spawning point debits its four columns equally. The count is cut
    back so that no column goes negative.
    """
    ny, nx = V.shape
    debit = np.zeros_like(V)
    hot_j, hot_i = np.nonzero(mesh.z_dot > params.spray_threshold)
    if hot_j.size == 0:
        return SpawnResult(np.empty((0, 3)), np.empty((0, 3)), np.empty(0), debit)

    pv = spawn_volume(params.particle_volume)
    quarter = pv / 4.0
    # counts are settled point by point, in index order, against the volume
    # still available in each column; draws happen afterwards in one batch
    counts = []
    for j, i in zip(hot_j.tolist(), hot_i.tolist()):
        n = particles_requested(float(mesh.z_dot[j, i]), params)
        cells = ((j, i), (j, i + 1), (j + 1, i), (j + 1, i + 1))
        avail = [float(V[c] - debit[c]) for c in cells]
        n = min(n, int(math.floor(min(avail) / quarter)))
        while n > 0 and any(a - (n * pv) / 4.0 < 0.0 for a in avail):
            n -= 1
        if n <= 0:
            continue
        share = (n * pv) / 4.0
        for c in cells:
            debit[c] += share
        counts.append((i, j, n))

    if not counts:
        return SpawnResult(np.empty((0, 3)), np.empty((0, 3)), np.empty(0), debit)
    ci, cj, cn = (np.array(col) for col in zip(*counts))
    total = int(cn.sum())
    pi, pj = np.repeat(ci, cn), np.repeat(cj, cn)
    u = rng.random((total, 2))
    pos = np.empty((total, 3))
    pos[:, 0] = (pi + 1.0) * params.dx + (u[:, 0] - 0.5) * params.dx
    pos[:, 1] = (pj + 1.0) * params.dy + (u[:, 1] - 0.5) * params.dy
    pos[:, 2] = mesh.z[pj, pi]
    vel = np.empty((total, 3))
    vel[:, 0] = sample_bilinear(mesh.x_dot, pos[:, 0], pos[:, 1], params)
    vel[:, 1] = sample_bilinear(mesh.y_dot, pos[:, 0], pos[:, 1], params)
    vel[:, 2] = sample_bilinear(mesh.z_dot, pos[:, 0], pos[:, 1], params)
    return SpawnResult(pos, vel, np.full(total, pv), debit)


def integrate_particles(pool: SprayPool, params: FluidParams) -> SprayPool:
    """Advance every particle one step under gravity; no interactions."""
    if len(pool):
        dt = params.dt
        pool.pos[:, 0] = pool.pos[:, 0] + pool.vel[:, 0] * dt
        pool.pos[:, 1] = pool.pos[:, 1] + pool.vel[:, 1] * dt
        pool.pos[:, 2], pool.vel[:, 2] = ballistic(pool.pos[:, 2], pool.vel[:, 2], params.g, dt)
    return pool


@dataclass
class ReabsorbResult:
    credit: np.ndarray
    absorbed: int
    destroyed: int
    destroyed_volume: float


def reabsorb(pool: SprayPool, V: np.ndarray, params: FluidParams) -> ReabsorbResult:
    """Remove particles that reached the fluid or the ground plane.

    A particle over the grid at or below its column's height returns its
    volume to that column. A particle off the grid at or below ``ground_z``
    is destroyed and its volume logged. The pool is updated in place.
    """
    ny, nx = V.shape
    credit = np.zeros_like(V)
    if not len(pool):
        return ReabsorbResult(credit, 0, 0, 0.0)
    x, y, z = pool.pos[:, 0], pool.pos[:, 1], pool.pos[:, 2]
    over = (x >= 0.0) & (x < nx * params.dx) & (y >= 0.0) & (y < ny * params.dy)
    ci = np.clip(np.floor(x / params.dx), 0, nx - 1).astype(np.intp)
    cj = np.clip(np.floor(y / params.dy), 0, ny - 1).astype(np.intp)
    h = V[cj, ci] / params.area
    absorbed = over & (z <= h)
    lost = ~over & (z <= params.ground_z)

    if absorbed.any():
        flat = (cj * nx + ci)[absorbed]
        vols = pool.vol[absorbed]
        order = np.argsort(flat, kind="stable")
        np.add.at(credit.reshape(-1), flat[order], vols[order])
    lost_vol = pool.vol[lost]
    destroyed_volume = math.fsum(lost_vol.tolist())
    if lost_vol.size:
        pool.destroyed = math.fsum([pool.destroyed, *lost_vol.tolist()])
    pool.keep(~(absorbed | lost))
    return ReabsorbResult(credit, int(absorbed.sum()), int(lost.sum()), destroyed_volume)
