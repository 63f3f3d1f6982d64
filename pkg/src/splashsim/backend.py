"""Kernel backend selection.

The compiled extension is preferred when it imports; otherwise the numpy
implementation is used. The scalar reference can be selected explicitly for
verification.
"""

from __future__ import annotations

import importlib
import logging

from . import _fallback, reference

log = logging.getLogger(__name__)

try:
    _compiled = importlib.import_module("splashsim._kernels")
except ImportError:  # extension not built
    _compiled = None
    log.debug("compiled kernels unavailable; using numpy fallback")

_BACKENDS = {"numpy": _fallback, "reference": reference}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active = _compiled if _compiled is not None else _fallback


def available() -> list[str]:
    return list(_BACKENDS)


def get(name: str | None = None):
    """Return the named backend module, or the active one."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available()}") from None


def set_active(name: str) -> None:
    global _active
    _active = get(name)


def active_name() -> str:
    return _active.NAME
