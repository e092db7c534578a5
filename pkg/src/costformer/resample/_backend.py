"""Pick the compiled kernels when built, else the pure-Python versions.

Set ``COSTFORMER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
dual_cd = _kernels_py.dual_cd

if os.environ.get("COSTFORMER_PURE_PYTHON") != "1":
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        dual_cd = _kernels.dual_cd
