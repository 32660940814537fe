"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the Python/numpy
reference kernels.  Set ``SSMM_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("SSMM_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

BACKEND = _impl.BACKEND
scatter = _impl.scatter
poly_accumulate = _impl.poly_accumulate
majority_decode = _impl.majority_decode
bucket_scatter = _impl.bucket_scatter
sparse_rows_scatter = _impl.sparse_rows_scatter
ladder_counts = _impl.ladder_counts
poly_accumulate_groups = _impl.poly_accumulate_groups
poly_product_add = _impl.poly_product_add
zeros = _pykernels.zeros
is_zero = _pykernels.is_zero
mul = _pykernels.mul
add = _pykernels.add


def backends():
    """Every importable backend module, for equivalence tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels  # type: ignore[attr-defined]

        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out
