"""Backend selection for the hot kernels.

The compiled extension ``mixpce._kernels`` is used when it was built; set
``MIXPCE_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["cython"] = _compiled

if _compiled is not None and not os.environ.get("MIXPCE_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
monomial_matrix = _impl.monomial_matrix
pair_expectation = _impl.pair_expectation


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    return BACKENDS[name or BACKEND]
