"""Kernel backend selection.

The compiled kernel is preferred when its extension module imported cleanly;
otherwise the pure-Python fallback takes over with identical semantics.
Set MONOEMBED_PURE=1 to force the fallback (used by the benchmark and by
differential tests).
"""

from __future__ import annotations

import os

if os.environ.get("MONOEMBED_PURE"):
    from . import _fallback as impl
else:
    try:
        from . import _native as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as impl

BACKEND = impl.BACKEND_NAME

SQ_CONVERGED = 0
SQ_TRAPPED = 1
SQ_BUDGET = 2
SQ_EVAL_ERROR = 3
SQ_MONOTONE_VIOLATION = 4
SQ_SANDWICH_VIOLATION = 5

eval_one = impl.eval_one
eval_many = impl.eval_many
orbit = impl.orbit
squeeze = impl.squeeze


def backend() -> str:
    """Name of the active kernel backend: 'native' or 'python'."""
    return BACKEND
