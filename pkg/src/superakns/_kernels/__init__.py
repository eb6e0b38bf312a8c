"""Hot inner loops: term multiplication and odd/even word merging.

The compiled extension is used when it was built; otherwise the pure-Python
module is loaded. Set ``SUPERAKNS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as py

BACKEND = "python"

if os.environ.get("SUPERAKNS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = py
else:
    _impl = py

odd_merge = _impl.odd_merge
even_merge = _impl.even_merge
mul_terms = _impl.mul_terms

__all__ = ["BACKEND", "odd_merge", "even_merge", "mul_terms", "py"]
