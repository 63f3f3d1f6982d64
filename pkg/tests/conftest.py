from pathlib import Path

import numpy as np
import pytest

from splashsim import backend
from splashsim.engine import create_state
from splashsim.params import FluidParams
from splashsim.volume import ColumnGrid

ROOT = Path(__file__).resolve().parent.parent
SCENES = ROOT / "scenes"

FAST_BACKENDS = [b for b in ("compiled", "numpy") if b in backend.available()]


@pytest.fixture(params=backend.available())
def any_backend(request):
    return request.param


@pytest.fixture(params=FAST_BACKENDS)
def fast_backend(request):
    return request.param


def pool_state(n=11, depth=1.0, dx=0.1, backend=None, objects=None, workers=1, boundary=None, **kw):
    """Flat ``n`` by ``n`` pool with spray off unless a threshold is given."""
    kw.setdefault("spray_threshold", 1e9)
    p = FluidParams(dx=dx, dy=dx, **kw)
    depth = np.full((n, n), depth) if np.isscalar(depth) else np.asarray(depth, dtype=float)
    grid = ColumnGrid.from_depth(depth, p, boundary=boundary)
    return create_state(p, grid, objects, backend=backend, workers=workers)


def bump(n, base=1.0, amp=0.02, width=1.5):
    """Gaussian hump centred on an ``n`` by ``n`` grid (4-fold symmetric for odd ``n``)."""
    c = (n - 1) / 2.0
    x = np.arange(n) - c
    X, Y = np.meshgrid(x, x)
    return base + amp * np.exp(-(X ** 2 + Y ** 2) / (2.0 * width ** 2))
