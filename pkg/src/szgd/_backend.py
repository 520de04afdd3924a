"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback is used. Setting ``SZGD_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import importlib
import os

from . import _fallback

STATUS_OK = _fallback.STATUS_OK
STATUS_NONFINITE = _fallback.STATUS_NONFINITE
STATUS_DIVERGED = _fallback.STATUS_DIVERGED
STATUS_DOMAIN = _fallback.STATUS_DOMAIN


def _load_compiled():
    try:
        return importlib.import_module("szgd._kernels")
    except ImportError:
        return None


_compiled = _load_compiled()

if _compiled is not None and not os.environ.get("SZGD_PURE_PYTHON"):
    kernels = _compiled
    BACKEND = "cython"
else:
    kernels = _fallback
    BACKEND = "python"


def available() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get(name: str):
    """Return the kernel module called ``name`` ('python' or 'cython')."""
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
