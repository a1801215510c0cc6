"""Backend selection for the hot kernels.

The compiled extension is preferred; if it cannot be imported (or
``MORSEFLOW_PURE=1`` is set) the pure-Python implementations are used.
Callers go through the module-level names so that :func:`use_backend` can
swap them at runtime.
"""

from __future__ import annotations

import contextlib
import os

from . import _pykernels

try:
    if os.environ.get("MORSEFLOW_PURE", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"python": _pykernels}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _BACKENDS[BACKEND]


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def dp54_poly(coef, expo, out, x0, t_end, rtol, atol, max_steps, bound):
    return _impl.dp54_poly(coef, expo, out, x0, t_end, rtol, atol, max_steps, bound)


def dp54(fun, x0, t_end, rtol, atol, max_steps, bound):
    # generic callables always run in Python
    return _pykernels.dp54(fun, x0, t_end, rtol, atol, max_steps, bound)


def snf_diagonal(rows: list[list[int]]) -> list[int]:
    """Nonzero diagonal of an integer elimination, exact for any entry size."""
    if _impl is not _pykernels:
        try:
            return _impl.snf_diagonal(rows)
        except OverflowError:
            pass
    return _pykernels.snf_diagonal([list(map(int, r)) for r in rows])


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch the kernel backend (``"python"`` or ``"compiled"``)."""
    global _impl, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    saved = (_impl, BACKEND)
    _impl, BACKEND = _BACKENDS[name], name
    try:
        yield
    finally:
        _impl, BACKEND = saved
