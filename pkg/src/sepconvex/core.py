"""Select the compiled kernels when available, else the numpy fallback.

Set ``SEPCONVEX_PURE=1`` to force the fallback.
"""

import os

from . import _core_py

if os.environ.get("SEPCONVEX_PURE") == "1":
    backend = _core_py
    COMPILED = False
else:
    try:
        from . import _core as backend  # type: ignore[attr-defined]
        COMPILED = True
    except ImportError:
        backend = _core_py
        COMPILED = False

lower_hull = backend.lower_hull
family_sup = backend.family_sup
