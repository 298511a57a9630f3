"""Hot-kernel backend selection.

Prefers the compiled Cython module; falls back to the NumPy
implementation when the extension is unavailable or when the
``D2DPLACE_PURE`` environment variable is set to a non-empty value.
Both backends expose the same functions with matching semantics.
"""

import os

if os.environ.get("D2DPLACE_PURE", "") not in ("", "0"):
    from . import pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = "compiled" if _impl.__name__.endswith("_core") else "pure"

wa_segments = _impl.wa_segments
minmax_segments = _impl.minmax_segments
adaptive_planar = _impl.adaptive_planar
fda_depth = _impl.fda_depth
splat3d = _impl.splat3d
gather3d = _impl.gather3d

__all__ = [
    "BACKEND",
    "wa_segments",
    "minmax_segments",
    "adaptive_planar",
    "fda_depth",
    "splat3d",
    "gather3d",
]
