"""Selection between the jit (numba) and numpy compute backends.

The default is the jit backend when numba imports cleanly, otherwise the
numpy reference implementation.  Set ``ROUTHIAN_BACKEND=numpy`` (or ``jit``)
to force one; tests and the benchmark switch programmatically with
:func:`use`.
"""

from __future__ import annotations

import os

_active = None


def _load(name: str):
    if name in ("jit", "numba"):
        from . import kernels

        return kernels
    if name in ("numpy", "reference"):
        from . import reference

        return reference
    raise ValueError(f"unknown backend {name!r}; expected 'jit' or 'numpy'")


def available() -> list[str]:
    """Backend names usable on this machine, preferred first."""
    names = []
    try:
        from . import kernels  # noqa: F401

        names.append("jit")
    except ImportError:
        pass
    names.append("numpy")
    return names


def active():
    """The module implementing the kernel contract that is currently live."""
    global _active
    if _active is None:
        name = os.environ.get("ROUTHIAN_BACKEND", "").strip().lower()
        if name:
            _active = _load(name)
        else:
            try:
                _active = _load("jit")
            except ImportError:
                _active = _load("numpy")
    return _active


def use(name: str):
    """Force a backend by name and return it (tests and benchmarks)."""
    global _active
    _active = _load(name)
    return _active
