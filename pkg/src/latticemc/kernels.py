"""Select the compiled kernels when built, else the pure-Python fallback.

Set ``LATTICEMC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("LATTICEMC_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _impl
except ImportError:
    _impl = _kernels_py

COMPILED = _impl is not _kernels_py
BACKEND = "cython" if COMPILED else "python"

imh_select = _impl.imh_select
klein_batch = _impl.klein_batch
dgauss_inverse_cdf = _impl.dgauss_inverse_cdf


def implementations():
    """Every available kernel implementation, keyed by name."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels

        impls["cython"] = _kernels
    except ImportError:
        pass
    return impls
