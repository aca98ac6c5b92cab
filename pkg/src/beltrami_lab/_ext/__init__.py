"""Hot kernels: compiled extension when built, numpy otherwise.

Set ``BELTRAMI_LAB_PURE=1`` to force the numpy implementation.
"""

import os

from . import _core_py

BACKEND = "python"
difference_disk_mean = _core_py.difference_disk_mean

if os.environ.get("BELTRAMI_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        difference_disk_mean = _core.difference_disk_mean
        BACKEND = "compiled"

shifted = _core_py.shifted

__all__ = ["BACKEND", "difference_disk_mean", "shifted"]
