"""Hot inner-loop kernels with a numba fast path and a pure-numpy fallback.

Every solver step applies matrix-valued coefficient fields to state
derivatives pointwise and reduces weighted quadratic forms over the grid.
Those loops dominate runtime once the FFTs are amortized, so they are
compiled with numba when available.  Set the environment variable
``QLKDV_DISABLE_NUMBA=1`` to force the numpy path (useful for debugging
and as the reference in ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("QLKDV_DISABLE_NUMBA", "0") not in ("", "0", "false", "False")

try:
    if _DISABLED:
        raise ImportError("numba disabled by QLKDV_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return deco


# ---------------------------------------------------------------------------
# reference (numpy) implementations
# ---------------------------------------------------------------------------

def _matfield_apply_numpy(mat, vec):
    # mat: (n, n, N) coefficient samples, vec: (n, N) state samples
    return np.einsum("ijx,jx->ix", mat, vec)


def _weighted_sq_numpy(vec, weight):
    # sum_i sum_x weight[x] * vec[i, x]^2
    return float(np.sum(weight[None, :] * vec * vec))


def _quadratic_form_numpy(mat, vec):
    # pointwise v . (M v) summed over components, per grid point
    return np.einsum("ix,ijx,jx->x", vec, mat, vec)


# ---------------------------------------------------------------------------
# numba implementations (same contracts)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _matfield_apply_numba(mat, vec):  # pragma: no cover - exercised via dispatch
    n, _, npts = mat.shape
    out = np.zeros((n, npts))
    for i in range(n):
        for j in range(n):
            for p in range(npts):
                out[i, p] += mat[i, j, p] * vec[j, p]
    return out


@njit(cache=True)
def _weighted_sq_numba(vec, weight):  # pragma: no cover
    n, npts = vec.shape
    acc = 0.0
    for i in range(n):
        for p in range(npts):
            acc += weight[p] * vec[i, p] * vec[i, p]
    return acc


@njit(cache=True)
def _quadratic_form_numba(mat, vec):  # pragma: no cover
    n, _, npts = mat.shape
    out = np.zeros(npts)
    for p in range(npts):
        for i in range(n):
            row = 0.0
            for j in range(n):
                row += mat[i, j, p] * vec[j, p]
            out[p] += vec[i, p] * row
    return out


if HAVE_NUMBA:
    ACTIVE_BACKEND = "numba"
    matfield_apply = _matfield_apply_numba
    weighted_sq = _weighted_sq_numba
    quadratic_form = _quadratic_form_numba
else:
    ACTIVE_BACKEND = "numpy"
    matfield_apply = _matfield_apply_numpy
    weighted_sq = _weighted_sq_numpy
    quadratic_form = _quadratic_form_numpy

# reference implementations are exported for the benchmark and equivalence tests
REFERENCE = {
    "matfield_apply": _matfield_apply_numpy,
    "weighted_sq": _weighted_sq_numpy,
    "quadratic_form": _quadratic_form_numpy,
}
