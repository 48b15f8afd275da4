"""Select the simulator tick kernel at import time.

The compiled extension is used when it was built; set
``CYCLEPLANNER_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _simcore_py

if os.environ.get("CYCLEPLANNER_PURE_PYTHON", "") not in ("", "0"):
    tick = _simcore_py.tick
    BACKEND = "python"
else:
    try:
        from ._simcore import tick
        BACKEND = "cython"
    except ImportError:
        tick = _simcore_py.tick
        BACKEND = "python"

KERNELS = {"python": _simcore_py.tick}
try:
    from ._simcore import tick as _compiled_tick

    KERNELS["cython"] = _compiled_tick
except ImportError:
    pass
