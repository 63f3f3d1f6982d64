"""Height-field water built from columns joined by virtual pipes, with
ballistic spray and vertically moving rigid objects."""

from .engine import Ledger, LedgerError, SimState, create_state, run, step
from .objects import Ellipsoid, RigidObject
from .params import Boundary, Constant, FluidParams, Wall
from .scene import Scene, SceneError, build_state, load_scene, parse_scene, render_scene
from .volume import ColumnGrid, PipeField

__version__ = "0.1.0"

__all__ = [
    "Boundary", "ColumnGrid", "Constant", "Ellipsoid", "FluidParams", "Ledger", "LedgerError",
    "PipeField", "RigidObject", "Scene", "SceneError", "SimState", "Wall", "build_state",
    "create_state", "load_scene", "parse_scene", "render_scene", "run", "step",
]
