"""Hot-kernel dispatch: compiled extension when built, numpy otherwise.

Routing when the extension is present: the resampling kernels and grouped
convolutions run compiled (per-element gathers and per-group loops dominate
there), while dense convolutions stay on the numpy GEMM path, which beats a
direct loop by an order of magnitude on matrix-multiply-shaped work.  The
selection happens once at import; ``benchmarks/bench_kernels.py`` imports
both implementations explicitly to compare them.
"""

from . import _pykernels

try:
    from . import _cykernels

    HAVE_COMPILED = True
except ImportError:
    _cykernels = None
    HAVE_COMPILED = False

if HAVE_COMPILED:
    BACKEND = "cython"

    def conv2d(x, w, bias, stride=1, padding=0, groups=1):
        if groups == 1:
            return _pykernels.conv2d(x, w, bias, stride, padding, groups)
        return _cykernels.conv2d(x, w, bias, stride, padding, groups)

    resize_bilinear = _cykernels.resize_bilinear
    rotate_bilinear = _cykernels.rotate_bilinear
else:
    BACKEND = "numpy"
    conv2d = _pykernels.conv2d
    resize_bilinear = _pykernels.resize_bilinear
    rotate_bilinear = _pykernels.rotate_bilinear


def get_backend() -> str:
    """Name of the active kernel backend ("cython" or "numpy")."""
    return BACKEND
