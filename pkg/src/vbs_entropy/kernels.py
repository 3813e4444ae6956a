"""Hot-kernel dispatch: compiled extension when importable, NumPy otherwise.

Set ``VBS_ENTROPY_PURE=1`` to force the pure-Python path.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("VBS_ENTROPY_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

jacobi_eigh = _impl.jacobi_eigh
weighted_uniform_chunk = _impl.weighted_uniform_chunk
metropolis_chunk = _impl.metropolis_chunk
