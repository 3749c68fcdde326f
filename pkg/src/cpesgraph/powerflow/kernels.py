"""Kernel selection: the compiled extension when importable, else the numpy fallback.

Set ``CPESGRAPH_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _kernels_py

AVAILABLE = {"python": _kernels_py}

try:
    AVAILABLE["cython"] = importlib.import_module("._kernels", __package__)
except ImportError:
    pass

if os.environ.get("CPESGRAPH_PURE_PYTHON") == "1" or "cython" not in AVAILABLE:
    NAME = "python"
else:
    NAME = "cython"

active = AVAILABLE[NAME]


def get(name: str | None = None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    if name is None:
        return active
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} is not available (have: {', '.join(sorted(AVAILABLE))})") from None
