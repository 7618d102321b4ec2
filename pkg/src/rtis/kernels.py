"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``RTIS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("RTIS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

fk_batch = _impl.fk_batch
rollout_constant_velocity = _impl.rollout_constant_velocity
gae = _impl.gae
