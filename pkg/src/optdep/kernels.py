"""Backend selection for the hot kernels.

The compiled extension ``optdep._ckernels`` is used when it imports; otherwise
the numpy implementation in ``optdep._pykernels`` is used.  Setting the
environment variable ``OPTDEP_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("OPTDEP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

h_inverse = _impl.h_inverse
# numpy's vectorised log/exp beat the scalar compiled loop for this reduction
# (see benchmarks/bench_kernels.py), so it is used under both backends
log_density_sum = _pykernels.log_density_sum
empirical_copula_grid = _impl.empirical_copula_grid

__all__ = ["BACKEND", "h_inverse", "log_density_sum", "empirical_copula_grid"]
