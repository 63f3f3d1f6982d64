"""Scene files.

A scene is line-oriented text: ``[section]`` headers, one ``key = value`` per
line, ``#`` starts a comment. Sections and keys::

    [grid]    nx, ny (column counts); dx, dy or extent_x, extent_y (m);
              boundary_xmin|xmax|ymin|ymax = wall | constant <q m^3/s>
    [fluid]   rho, g, p0, diag_coupling; depth = <m> for a flat pool, or
              depth_row = <nx values> repeated ny times (row j ascending)
    [sim]     dt, duration, damping, seed, ground_z, max_clamp_iterations
    [spray]   threshold, particle_volume, spawn_fraction
    [object]  (repeatable) name, x, y, z, vz, alpha, drop_time, contact_ramp,
              contact_duration, contact_time; mass or density; radius = <r> for a sphere
              or ellipsoid = ox oy oz a b c (repeatable)
    [output]  frame_interval, format = bin | text

Unknown sections or keys are errors. ``nx``/``ny`` count columns; the surface
mesh is ``(nx-1) x (ny-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .objects import Ellipsoid, RigidObject
from .params import Boundary, Constant, FluidParams, Wall, cfl_limit
from .volume import ColumnGrid


class SceneError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ObjectSpec:
    ellipsoids: list[Ellipsoid]
    mass: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vz: float = 0.0
    alpha: float = 0.85
    drop_time: float = 0.0
    contact_ramp: float = 0.0
    contact_duration: float = math.inf
    contact_time: float = 0.1
    name: str = ""

    def build(self) -> RigidObject:
        return RigidObject(
            ellipsoids=list(self.ellipsoids), mass=self.mass, s=self.z, s_dot=self.vz,
            xy=(self.x, self.y), alpha=self.alpha, active_from=self.drop_time,
            contact_ramp=self.contact_ramp, contact_duration=self.contact_duration,
            contact_time=self.contact_time, name=self.name,
        )


@dataclass(eq=False)
class Scene:
    nx: int
    ny: int
    dx: float
    dy: float
    depth: float | np.ndarray
    boundary: Boundary = field(default_factory=Boundary)
    rho: float = 1000.0
    g: float = -9.8
    p0: float = 101325.0
    diag_coupling: float = 0.25
    dt: float = 1.0 / 300.0
    duration: float = 1.0
    damping: float = 0.1
    seed: int = 0
    ground_z: float = 0.0
    max_clamp_iterations: int = 20
    threshold: float = 2.25
    particle_volume: float = 1e-6
    spawn_fraction: float = 4.0
    objects: list[ObjectSpec] = field(default_factory=list)
    frame_interval: float = 1.0 / 30.0
    format: str = "bin"

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not (isinstance(a, np.ndarray) and isinstance(b, np.ndarray) and np.array_equal(a, b)):
                    return False
            elif a != b:
                return False
        return True

    @property
    def params(self) -> FluidParams:
        return FluidParams(
            rho=self.rho, g=self.g, p0=self.p0, dx=self.dx, dy=self.dy, dt=self.dt,
            damping=self.damping, diag_coupling=self.diag_coupling, spray_threshold=self.threshold,
            particle_volume=self.particle_volume, spawn_fraction=self.spawn_fraction, seed=self.seed,
            ground_z=self.ground_z, max_clamp_iterations=self.max_clamp_iterations,
        )

    def depth_field(self) -> np.ndarray:
        if isinstance(self.depth, np.ndarray):
            return self.depth.astype(np.float64, copy=True)
        return np.full((self.ny, self.nx), float(self.depth))

    def grid(self) -> ColumnGrid:
        return ColumnGrid(V=self.depth_field() * (self.dx * self.dy), boundary=self.boundary)

    def build_objects(self) -> list[RigidObject]:
        return [o.build() for o in self.objects]

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def frame_stride(self) -> int:
        return max(1, int(round(self.frame_interval / self.dt)))

    @property
    def n_frames(self) -> int:
        return self.n_steps // self.frame_stride + 1

    def cfl(self) -> tuple[float, float]:
        """(dt, stable-step limit) using the deepest initial column."""
        return self.dt, cfl_limit(self.params, float(self.depth_field().max()))

    def validate(self):
        if self.nx < 2 or self.ny < 2:
            raise SceneError("grid needs at least 2x2 columns")
        if self.duration <= 0:
            raise SceneError("duration must be positive")
        if self.frame_interval <= 0:
            raise SceneError("frame_interval must be positive")
        if self.format not in ("bin", "text"):
            raise SceneError(f"format must be bin or text, not {self.format!r}")
        d = self.depth_field()
        if d.shape != (self.ny, self.nx):
            raise SceneError(f"depth table is {d.shape[1]}x{d.shape[0]}, grid is {self.nx}x{self.ny}")
        if not np.all(np.isfinite(d)) or (d < 0).any():
            raise SceneError("depths must be finite and non-negative")
        try:
            self.params
        except ValueError as exc:
            raise SceneError(str(exc)) from None
        for k, o in enumerate(self.objects):
            if o.mass <= 0:
                raise SceneError(f"object {k}: mass must be positive")
            if not 0 <= o.alpha <= 1:
                raise SceneError(f"object {k}: alpha must lie in [0, 1]")
            if not o.ellipsoids:
                raise SceneError(f"object {k}: needs radius or ellipsoid")
            if o.contact_time < 0 or o.contact_ramp < 0 or o.contact_duration <= 0:
                raise SceneError(f"object {k}: contact times must be non-negative")
        return self


# ----------------------------------------------------------------------------
# parsing

_SECTIONS = {
    "grid": {"nx", "ny", "dx", "dy", "extent_x", "extent_y",
             "boundary_xmin", "boundary_xmax", "boundary_ymin", "boundary_ymax"},
    "fluid": {"rho", "g", "p0", "depth", "depth_row", "diag_coupling"},
    "sim": {"dt", "duration", "damping", "seed", "ground_z", "max_clamp_iterations"},
    "spray": {"threshold", "particle_volume", "spawn_fraction"},
    "object": {"name", "x", "y", "z", "vz", "mass", "density", "radius", "ellipsoid", "alpha",
               "drop_time", "contact_ramp", "contact_duration", "contact_time"},
    "output": {"frame_interval", "format"},
}
_REPEATABLE = {"depth_row", "ellipsoid"}


def _num(value: str, key: str, line: int) -> float:
    try:
        v = float(value)
    except ValueError:
        raise SceneError(f"{key}: expected a number, got {value!r}", line) from None
    if math.isnan(v):
        raise SceneError(f"{key}: NaN not allowed", line)
    return v


def _int(value: str, key: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise SceneError(f"{key}: expected an integer, got {value!r}", line) from None


def _boundary_rule(value: str, key: str, line: int):
    parts = value.split()
    if parts == ["wall"]:
        return Wall()
    if len(parts) == 2 and parts[0] == "constant":
        return Constant(_num(parts[1], key, line))
    raise SceneError(f"{key}: expected 'wall' or 'constant <q>', got {value!r}", line)


def _tokenize(text: str):
    """Yield (line number, section, key, value); section headers yield key None."""
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SceneError(f"malformed section header {line!r}", n)
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise SceneError(f"unknown section [{section}]", n)
            yield n, section, None, None
            continue
        if "=" not in line:
            raise SceneError(f"expected 'key = value', got {line!r}", n)
        if section is None:
            raise SceneError("key outside of any section", n)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SECTIONS[section]:
            raise SceneError(f"unknown key {key!r} in [{section}]", n)
        if not value:
            raise SceneError(f"{key}: missing value", n)
        yield n, section, key, value


def _object_spec(entries: dict, line: int) -> ObjectSpec:
    def get(key, default):
        if key in entries:
            v, n = entries[key]
            return _num(v, key, n)
        return default

    ellipsoids = []
    for v, n in entries.get("ellipsoid", []):
        vals = v.split()
        if len(vals) != 6:
            raise SceneError("ellipsoid: expected 'ox oy oz a b c'", n)
        nums = [_num(x, "ellipsoid", n) for x in vals]
        if min(nums[3:]) <= 0:
            raise SceneError("ellipsoid: semi-axes must be positive", n)
        ellipsoids.append(Ellipsoid(tuple(nums[:3]), tuple(nums[3:])))
    if "radius" in entries:
        r = get("radius", None)
        if r <= 0:
            raise SceneError("radius must be positive", entries["radius"][1])
        ellipsoids.append(Ellipsoid((0.0, 0.0, 0.0), (r, r, r)))
    if not ellipsoids:
        raise SceneError("object needs 'radius' or 'ellipsoid'", line)
    if ("mass" in entries) == ("density" in entries):
        raise SceneError("object needs exactly one of 'mass' or 'density'", line)
    if "mass" in entries:
        mass = get("mass", None)
    else:
        mass = get("density", None) * sum(e.volume for e in ellipsoids)
    return ObjectSpec(
        ellipsoids=ellipsoids, mass=mass, x=get("x", 0.0), y=get("y", 0.0), z=get("z", 0.0),
        vz=get("vz", 0.0), alpha=get("alpha", 0.85), drop_time=get("drop_time", 0.0),
        contact_ramp=get("contact_ramp", 0.0), contact_duration=get("contact_duration", math.inf),
        contact_time=get("contact_time", 0.1),
        name=entries["name"][0] if "name" in entries else "",
    )


def parse_scene(text: str) -> Scene:
    """Parse and validate scene text, applying defaults."""
    single: dict[str, tuple[str, int]] = {}
    rows: list[tuple[str, int]] = []
    objects: list[tuple[dict, int]] = []
    seen_sections = set()
    current_obj = None
    for n, section, key, value in _tokenize(text):
        if key is None:
            if section == "object":
                current_obj = {}
                objects.append((current_obj, n))
            elif section in seen_sections:
                raise SceneError(f"duplicate section [{section}]", n)
            seen_sections.add(section)
            continue
        if section == "object":
            if key in _REPEATABLE:
                current_obj.setdefault(key, []).append((value, n))
            elif key in current_obj:
                raise SceneError(f"duplicate key {key!r}", n)
            else:
                current_obj[key] = (value, n)
            continue
        if key == "depth_row":
            rows.append((value, n))
            continue
        if key in single:
            raise SceneError(f"duplicate key {key!r}", n)
        single[key] = (value, n)

    def num(key, default=None):
        if key in single:
            v, n = single[key]
            return _num(v, key, n)
        if default is None:
            raise SceneError(f"missing required key {key!r}")
        return default

    def integer(key, default=None):
        if key in single:
            v, n = single[key]
            return _int(v, key, n)
        if default is None:
            raise SceneError(f"missing required key {key!r}")
        return default

    nx, ny = integer("nx"), integer("ny")
    spacing = {}
    for axis, count in (("x", nx), ("y", ny)):
        d, ext = f"d{axis}", f"extent_{axis}"
        if (d in single) == (ext in single):
            raise SceneError(f"give exactly one of {d!r} or {ext!r}")
        spacing[axis] = num(d) if d in single else num(ext) / count

    if ("depth" in single) == bool(rows):
        raise SceneError("give either 'depth' or ny 'depth_row' lines")
    if rows:
        table = []
        for v, n in rows:
            table.append([_num(x, "depth_row", n) for x in v.split()])
        if len(table) != ny or any(len(r) != nx for r in table):
            raise SceneError(
                f"depth table must have {ny} rows of {nx} values", rows[-1][1])
        depth = np.array(table, dtype=np.float64)
    else:
        depth = num("depth")

    edges = {}
    for edge in ("xmin", "xmax", "ymin", "ymax"):
        key = f"boundary_{edge}"
        edges[edge] = _boundary_rule(single[key][0], key, single[key][1]) if key in single else Wall()

    fmt = single["format"][0] if "format" in single else "bin"
    scene = Scene(
        nx=nx, ny=ny, dx=spacing["x"], dy=spacing["y"], depth=depth, boundary=Boundary(**edges),
        rho=num("rho", 1000.0), g=num("g", -9.8), p0=num("p0", 101325.0),
        diag_coupling=num("diag_coupling", 0.25), dt=num("dt", 1.0 / 300.0),
        duration=num("duration", 1.0), damping=num("damping", 0.1), seed=integer("seed", 0),
        ground_z=num("ground_z", 0.0), max_clamp_iterations=integer("max_clamp_iterations", 20),
        threshold=num("threshold", 2.25), particle_volume=num("particle_volume", 1e-6),
        spawn_fraction=num("spawn_fraction", 4.0),
        objects=[_object_spec(entries, n) for entries, n in objects],
        frame_interval=num("frame_interval", 1.0 / 30.0), format=fmt,
    )
    return scene.validate()


def load_scene(path) -> Scene:
    return parse_scene(Path(path).read_text(encoding="utf-8"))


def render_scene(scene: Scene) -> str:
    """Scene text that parses back to an equal :class:`Scene`."""
    r = repr
    out = ["[grid]", f"nx = {scene.nx}", f"ny = {scene.ny}", f"dx = {r(scene.dx)}", f"dy = {r(scene.dy)}"]
    for edge in ("xmin", "xmax", "ymin", "ymax"):
        out.append(f"boundary_{edge} = {getattr(scene.boundary, edge)}")
    out += ["", "[fluid]", f"rho = {r(scene.rho)}", f"g = {r(scene.g)}", f"p0 = {r(scene.p0)}",
            f"diag_coupling = {r(scene.diag_coupling)}"]
    if isinstance(scene.depth, np.ndarray):
        out += ["depth_row = " + " ".join(r(float(v)) for v in row) for row in scene.depth]
    else:
        out.append(f"depth = {r(float(scene.depth))}")
    out += ["", "[sim]", f"dt = {r(scene.dt)}", f"duration = {r(scene.duration)}",
            f"damping = {r(scene.damping)}", f"seed = {scene.seed}", f"ground_z = {r(scene.ground_z)}",
            f"max_clamp_iterations = {scene.max_clamp_iterations}"]
    out += ["", "[spray]", f"threshold = {r(scene.threshold)}",
            f"particle_volume = {r(scene.particle_volume)}", f"spawn_fraction = {r(scene.spawn_fraction)}"]
    for o in scene.objects:
        out += ["", "[object]"]
        if o.name:
            out.append(f"name = {o.name}")
        out += [f"x = {r(o.x)}", f"y = {r(o.y)}", f"z = {r(o.z)}", f"vz = {r(o.vz)}",
                f"mass = {r(o.mass)}", f"alpha = {r(o.alpha)}", f"drop_time = {r(o.drop_time)}",
                f"contact_ramp = {r(o.contact_ramp)}", f"contact_duration = {r(o.contact_duration)}",
                f"contact_time = {r(o.contact_time)}"]
        for e in o.ellipsoids:
            out.append("ellipsoid = " + " ".join(r(float(v)) for v in (*e.offset, *e.axes)))
    out += ["", "[output]", f"frame_interval = {r(scene.frame_interval)}", f"format = {scene.format}", ""]
    return "\n".join(out)


def build_state(scene: Scene, backend: str | None = None, workers: int = 1, validate: bool = False):
    """Fresh :class:`~splashsim.engine.SimState` for ``scene``."""
    from .engine import create_state

    return create_state(scene.params, scene.grid(), scene.build_objects(), backend=backend,
                        workers=workers, validate=validate)
