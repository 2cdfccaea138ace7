"""Backend selection for the simulation kernels.

The compiled extension ``clbench._core`` is used when it imports; otherwise
the pure-Python ``clbench._loop`` takes over.  Set ``CLBENCH_BACKEND=python``
to force the fallback (``compiled`` makes a missing extension an error).
"""
from __future__ import annotations

import os

from . import _loop

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _loop}
if _core is not None:
    _BACKENDS["compiled"] = _core


def available() -> list[str]:
    return sorted(_BACKENDS)


def _default() -> str:
    want = os.environ.get("CLBENCH_BACKEND", "").strip().lower()
    if want:
        if want not in ("python", "compiled"):
            raise ValueError(f"CLBENCH_BACKEND must be 'python' or 'compiled', got {want!r}")
        if want not in _BACKENDS:
            raise ImportError("CLBENCH_BACKEND=compiled but clbench._core is not built")
        return want
    return "compiled" if _core is not None else "python"


BACKEND = _default()


def get(name: str | None = None):
    """Kernel module by backend name; ``None`` means the process default."""
    name = name or BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available()}") from None
