"""Kernel selection at import time.

The compiled ``_ckernels`` extension is used when importable; otherwise the
numpy fallback. Set ``PROFILERISK_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("PROFILERISK_PURE_PYTHON") == "1":
        return _pykernels, "python"
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        return _pykernels, "python"
    return _ckernels, "compiled"


kernels, BACKEND = _load()


def get_kernels(name: str | None = None) -> ModuleType:
    """``None`` -> active backend; ``"python"`` or ``"compiled"`` to pick one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels  # type: ignore[attr-defined]

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
