"""Kernel backend selection.

The compiled extension is used when importable; set ``GBSLAB_BACKEND=python``
to force the pure-Python fallback.
"""

import importlib
import logging
import os

logger = logging.getLogger(__name__)

_FORCED = os.environ.get("GBSLAB_BACKEND", "").strip().lower()


def load(name=None):
    """Return ``(backend_name, module)`` for ``name`` in {"cython", "python"}."""
    name = name or _FORCED or "cython"
    if name == "cython":
        try:
            return "cython", importlib.import_module("gbslab._core")
        except ImportError:
            if _FORCED == "cython":
                raise
            logger.warning("compiled kernels unavailable, using pure-Python fallback")
            name = "python"
    if name == "python":
        return "python", importlib.import_module("gbslab._fallback")
    raise ValueError(f"unknown backend {name!r}")


BACKEND, impl = load()
