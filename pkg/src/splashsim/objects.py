"""Rigid objects that strike or float on the surface.

Objects move vertically only. Each step the force they receive from the
fluid is bounded by the force that would put them back exactly on the
surface within one step, and a per-object fraction ``alpha`` of that bound
is applied. The equal and opposite force is pushed into the fluid as
external pressure under the object's footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import FluidParams
from .spray import ballistic
from .surface import SurfaceMesh


@dataclass(frozen=True)
class Ellipsoid:
    offset: tuple[float, float, float]
    axes: tuple[float, float, float]

    def __post_init__(self):
        if min(self.axes) <= 0:
            raise ValueError(f"ellipsoid semi-axes must be positive: {self.axes}")

    @property
    def volume(self) -> float:
        a, b, c = self.axes
        return 4.0 / 3.0 * math.pi * a * b * c


@dataclass
class RigidObject:
    ellipsoids: list[Ellipsoid]
    mass: float
    s: float
    s_dot: float = 0.0
    xy: tuple[float, float] = (0.0, 0.0)
    alpha: float = 0.85
    active_from: float = 0.0
    contact_ramp: float = 0.0
    contact_duration: float = math.inf
    contact_time: float = 0.1
    name: str = ""
    # runtime state
    first_contact: float | None = field(default=None, compare=False)
    f_o: float = field(default=0.0, compare=False)
    contact_area: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("object mass must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.ellipsoids:
            raise ValueError("object needs at least one ellipsoid")
        if self.contact_time < 0:
            raise ValueError("contact_time must be non-negative")

    @classmethod
    def sphere(cls, radius: float, mass: float, s: float, **kw) -> "RigidObject":
        return cls([Ellipsoid((0.0, 0.0, 0.0), (radius, radius, radius))], mass, s, **kw)

    @property
    def volume(self) -> float:
        """Sum of ellipsoid volumes (overlaps counted twice)."""
        return sum(e.volume for e in self.ellipsoids)

    @property
    def height(self) -> float:
        lo = min(e.offset[2] - e.axes[2] for e in self.ellipsoids)
        hi = max(e.offset[2] + e.axes[2] for e in self.ellipsoids)
        return hi - lo

    def force_interval(self, dt: float) -> float:
        """Interval over which the force bound returns the object to the surface.

        ``contact_time`` of 0 (or anything shorter than a step) means one step.
        """
        return self.contact_time if self.contact_time > dt else dt

    def is_active(self, t: float) -> bool:
        return t >= self.active_from

    def effective_alpha(self, t: float, dt: float) -> float:
        """Alpha after the contact ramp-in and contact-duration cutoff."""
        if self.first_contact is None:
            return self.alpha if self.contact_ramp <= 0 else 0.0
        elapsed = t - self.first_contact
        if elapsed >= self.contact_duration:
            return 0.0
        if self.contact_ramp > 0:
            return self.alpha * min(1.0, (elapsed + dt) / self.contact_ramp)
        return self.alpha


@dataclass
class ContactFootprint:
    i: np.ndarray
    j: np.ndarray
    weights: np.ndarray
    area: float
    z_surface: float

    @classmethod
    def empty(cls) -> "ContactFootprint":
        e = np.empty(0, dtype=np.intp)
        return cls(e, e, np.empty(0), 0.0, math.nan)

    def __len__(self):
        return self.i.shape[0]


def contact_footprint(obj: RigidObject, z: np.ndarray, params: FluidParams) -> ContactFootprint:
    """Mesh points whose surface height is above the object's underside.

    ``z`` is the mesh height field. All contacted points share the contact
    equally (each stands for one ``dx*dy`` cell), and ``z_surface`` is their
    mean surface height.
    """
    ny, nx = z.shape
    ox, oy = obj.xy
    hit = np.zeros((ny, nx), dtype=bool)
    for e in obj.ellipsoids:
        cx, cy, cz = ox + e.offset[0], oy + e.offset[1], obj.s + e.offset[2]
        a, b, c = e.axes
        i0 = max(int(math.floor((cx - a) / params.dx)) - 1, 0)
        i1 = min(int(math.ceil((cx + a) / params.dx)), nx)
        j0 = max(int(math.floor((cy - b) / params.dy)) - 1, 0)
        j1 = min(int(math.ceil((cy + b) / params.dy)), ny)
        if i0 >= i1 or j0 >= j1:
            continue
        xs = (np.arange(i0, i1) + 1.0) * params.dx
        ys = (np.arange(j0, j1) + 1.0) * params.dy
        X, Y = np.meshgrid(xs, ys)
        q = ((X - cx) / a) ** 2 + ((Y - cy) / b) ** 2
        inside = q < 1.0
        bottom = cz - c * np.sqrt(np.where(inside, 1.0 - q, 0.0))
        hit[j0:j1, i0:i1] |= inside & (bottom < z[j0:j1, i0:i1])
    jj, ii = np.nonzero(hit)
    n = ii.size
    if n == 0:
        return ContactFootprint.empty()
    zs = z[jj, ii]
    return ContactFootprint(ii, jj, np.full(n, 1.0 / n), n * params.dx * params.dy,
                            math.fsum(zs.tolist()) / n)


def max_impact_force(mass: float, s: float, s_dot: float, z_surface: float, t: float, g: float) -> float:
    """Largest upward force the fluid may exert over an interval ``t``.

    This force would bring the object exactly to ``z_surface`` after ``t``;
    negative values (object already leaving) are floored at zero.
    """
    if t <= 0:
        raise ValueError("interval must be positive")
    f = mass * (2.0 * (z_surface - s - s_dot * t) / (t * t) - g)
    return f if f > 0.0 else 0.0


def impact_force(alpha: float, f_max: float) -> float:
    return alpha * f_max


def step_object(obj: RigidObject, f_o: float, params: FluidParams) -> RigidObject:
    """Advance the object's vertical state under gravity plus ``f_o``, in place."""
    a_total = params.g + f_o / obj.mass
    obj.s, obj.s_dot = ballistic(obj.s, obj.s_dot, a_total, params.dt)
    return obj


def apply_reaction(footprint: ContactFootprint, f_o: float, E: np.ndarray, params: FluidParams) -> float:
    """Push ``-f_o`` into the fluid under the footprint as external pressure.

    Returns the total force delivered to the fluid (``-f_o`` up to rounding).
    """
    if f_o == 0.0:
        return 0.0
    if len(footprint) == 0:
        raise ValueError("non-zero object force with an empty footprint")
    shares = footprint.weights * (-f_o)
    de = -shares / (4.0 * params.dx * params.dy)
    flat = E.reshape(-1)
    nx = E.shape[1]
    base = footprint.j * nx + footprint.i
    for off in (0, nx, 1, nx + 1):
        np.add.at(flat, base + off, de)
    return math.fsum(shares.tolist())


@dataclass
class ObjectStepReport:
    f_max: float
    f_o: float
    fluid_force: float
    contact_points: int
    z_surface: float = math.nan


def interact(obj: RigidObject, mesh: SurfaceMesh, E: np.ndarray, t: float, params: FluidParams) -> ObjectStepReport:
    """Footprint, force bound, heuristic force, reaction and integration for one step."""
    if not obj.is_active(t):
        obj.f_o, obj.contact_area = 0.0, 0.0
        return ObjectStepReport(0.0, 0.0, 0.0, 0)
    fp = contact_footprint(obj, mesh.z, params)
    f_max = f_o = fluid = 0.0
    if len(fp):
        if obj.first_contact is None:
            obj.first_contact = t
        f_max = max_impact_force(obj.mass, obj.s, obj.s_dot, fp.z_surface, obj.force_interval(params.dt),
                                 params.g)
        f_o = impact_force(obj.effective_alpha(t, params.dt), f_max)
        fluid = apply_reaction(fp, f_o, E, params)
    obj.f_o, obj.contact_area = f_o, fp.area
    step_object(obj, f_o, params)
    return ObjectStepReport(f_max, f_o, fluid, len(fp), fp.z_surface)
