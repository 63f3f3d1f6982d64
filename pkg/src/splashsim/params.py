"""Physical and numerical constants shared by every subsystem."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Valid range for the spray threshold used in practice; values outside are
# allowed but unusual.
SPRAY_THRESHOLD_RANGE = (2.0, 2.5)


@dataclass(frozen=True)
class FluidParams:
    """Constants for one simulation.

    ``g`` is a signed acceleration (negative is down). Hydrostatic terms use
    its magnitude; ballistic and object integrators use it as-is.
    """

    rho: float = 1000.0
    g: float = -9.8
    p0: float = 101325.0
    dx: float = 1.0
    dy: float = 1.0
    dt: float = 1.0 / 300.0
    damping: float = 0.1
    diag_coupling: float = 0.25
    spray_threshold: float = 2.25
    particle_volume: float = 1e-6
    spawn_fraction: float = 4.0
    seed: int = 0
    ground_z: float = 0.0
    max_clamp_iterations: int = 20

    def __post_init__(self):
        checks = {
            "rho": self.rho > 0,
            "dx": self.dx > 0,
            "dy": self.dy > 0,
            "dt": self.dt > 0,
            "p0": self.p0 >= 0,
            "damping": self.damping >= 0,
            "diag_coupling": 0 < self.diag_coupling <= 1,
            "spray_threshold": self.spray_threshold > 0,
            "particle_volume": self.particle_volume > 0,
            "spawn_fraction": self.spawn_fraction > 0,
            "max_clamp_iterations": self.max_clamp_iterations >= 0,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"{name} out of range: {getattr(self, name)!r}")
        for name in ("g", "ground_z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def gmag(self) -> float:
        return abs(self.g)

    @property
    def area(self) -> float:
        return self.dx * self.dy

    @property
    def flow_keep(self) -> float:
        """Per-step multiplicative flow decay."""
        k = 1.0 - self.damping * self.dt
        return k if k > 0.0 else 0.0


@dataclass(frozen=True)
class PipeGeometry:
    """Lengths and transverse widths of the four canonical pipe directions.

    A pipe's cross-section is ``mean depth * width``; the diagonal width is
    scaled by ``diag_coupling``.
    """

    lx: float
    ly: float
    ld: float
    wx: float
    wy: float
    wd: float

    @classmethod
    def from_params(cls, p: FluidParams) -> "PipeGeometry":
        ld = math.sqrt(p.dx * p.dx + p.dy * p.dy)
        return cls(
            lx=p.dx,
            ly=p.dy,
            ld=ld,
            wx=p.dy,
            wy=p.dx,
            wd=p.diag_coupling * (p.dx * p.dy) / ld,
        )


@dataclass(frozen=True)
class KernelConstants:
    """Scalars handed to the stencil kernels.

    Every backend receives the same precomputed values so that products such
    as ``rho * l`` are rounded once, in one place.
    """

    rg: float
    rlx: float
    rly: float
    rld: float
    wx: float
    wy: float
    wd: float
    dt: float
    half_dt: float
    keep: float
    area: float

    @classmethod
    def from_params(cls, p: FluidParams) -> "KernelConstants":
        geo = PipeGeometry.from_params(p)
        return cls(
            rg=p.rho * p.gmag,
            rlx=p.rho * geo.lx,
            rly=p.rho * geo.ly,
            rld=p.rho * geo.ld,
            wx=geo.wx,
            wy=geo.wy,
            wd=geo.wd,
            dt=p.dt,
            half_dt=0.5 * p.dt,
            keep=p.flow_keep,
            area=p.area,
        )


def cfl_limit(p: FluidParams, h_max: float) -> float:
    """Largest time step for which explicit stepping is considered safe."""
    if h_max <= 0:
        return math.inf
    return 0.25 * min(p.dx, p.dy) / math.sqrt(p.gmag * h_max)


@dataclass(frozen=True)
class Wall:
    """Closed edge: no flow through any pipe crossing it."""

    def __str__(self):
        return "wall"


@dataclass(frozen=True)
class Constant:
    """Fixed flow ``q`` (m^3/s) per crossing pipe; positive flows into the grid."""

    q: float

    def __str__(self):
        return f"constant {self.q!r}"


@dataclass(frozen=True)
class Boundary:
    xmin: Wall | Constant = field(default_factory=Wall)
    xmax: Wall | Constant = field(default_factory=Wall)
    ymin: Wall | Constant = field(default_factory=Wall)
    ymax: Wall | Constant = field(default_factory=Wall)

    @property
    def closed(self) -> bool:
        return all(isinstance(e, Wall) for e in (self.xmin, self.xmax, self.ymin, self.ymax))
