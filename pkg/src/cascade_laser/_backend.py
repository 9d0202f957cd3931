"""Pick the compiled kernels when available, else the numpy fallback.

Set ``CASCADE_LASER_PURE_PYTHON=1`` to force the fallback.
"""
import importlib
import os

from . import _fallback

__all__ = ["kernels", "BACKEND", "get_backend", "available_backends"]


def _load_compiled():
    try:
        return importlib.import_module("cascade_laser._kernels")
    except ImportError:
        return None


_compiled = None if os.environ.get("CASCADE_LASER_PURE_PYTHON") == "1" else _load_compiled()

kernels = _compiled if _compiled is not None else _fallback
BACKEND = "compiled" if _compiled is not None else "python"


def available_backends():
    names = ["python"]
    if _load_compiled() is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name=None):
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "compiled":
        mod = _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return mod
    raise ValueError(f"unknown backend {name!r}")
