"""Kernel backend selection: compiled extension when built, numpy otherwise.

The compiled backend is chosen at import time; the RECESS_BACKEND environment
variable ("compiled" or "python") or `set_backend` overrides the choice, which
is what the benchmark uses to compare both implementations.
"""

from __future__ import annotations

import os

from . import _kernels_py
from .errors import ParameterError

try:
    from . import _kernels  # compiled extension, optional
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None

HAVE_COMPILED = _kernels is not None

_BACKENDS = {"python": _kernels_py}
if HAVE_COMPILED:
    _BACKENDS["compiled"] = _kernels


def _default_name() -> str:
    requested = os.environ.get("RECESS_BACKEND")
    if requested:
        if requested not in ("compiled", "python"):
            raise ParameterError(
                f"RECESS_BACKEND must be 'compiled' or 'python', got {requested!r}"
            )
        if requested == "compiled" and not HAVE_COMPILED:
            raise ParameterError("RECESS_BACKEND=compiled but the extension is not built")
        return requested
    return "compiled" if HAVE_COMPILED else "python"


_active = _BACKENDS[_default_name()]


def active_backend() -> str:
    """Name of the backend currently serving kernel calls."""
    return _active.BACKEND_NAME


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str) -> None:
    """Switch kernel implementations ("compiled" or "python")."""
    global _active
    if name not in _BACKENDS:
        raise ParameterError(
            f"unknown backend {name!r}; available: {', '.join(available_backends())}"
        )
    _active = _BACKENDS[name]


def sandwich(a, x, b):
    """Triple matrix product a @ x @ b on the active backend."""
    return _active.sandwich(a, x, b)
