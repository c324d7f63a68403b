"""Hot assembly kernels, with numba and pure-numpy lanes.

The matrices assembled here (coupling kernel, its rank-two/smooth
split, and the pair-sector congruence) are rebuilt for every probe
energy inside eigenvalue-count scans, so they dominate non-LAPACK
runtime. Both lanes implement identical arithmetic; the active lane is
chosen at import from the environment variable

    SPINBOSON2P_BACKEND = auto | numba | numpy   (default: auto)

"auto" takes numba when it imports cleanly and falls back to numpy.
The benchmark in benchmarks/bench_kernels.py compares the two lanes.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = [
    "coupling_kernel", "rank_two_kernel", "psi2_matrix", "pair_congruence",
    "active_backend", "numpy_impl", "numba_impl",
]


# -- pure numpy lane ----------------------------------------------------------

def _np_coupling_kernel(above, lamw, gap):
    """K[i,j] = lamw_i lamw_j / (above_i + above_j + gap)."""
    denom = above[:, None] + above[None, :] + gap
    return (lamw[:, None] * lamw[None, :]) / denom


def _np_rank_two_kernel(above, lamw, gap):
    """Separable part: lamw_i lamw_j (u_i + u_j - 1/gap), u = 1/(above+gap)."""
    u = 1.0 / (above + gap)
    psi1 = u[:, None] + u[None, :] - 1.0 / gap
    return (lamw[:, None] * lamw[None, :]) * psi1


def _np_psi2_matrix(above, gap):
    """Smooth remainder in product form, stable near the level set:

    psi2(a,b) = a b (a + b + 2c) / (c (a+c)(b+c)(a+b+c)),  c = gap.
    """
    a = above[:, None]
    b = above[None, :]
    c = gap
    return a * b * (a + b + 2.0 * c) / (c * (a + c) * (b + c) * (a + b + c))


def _np_pair_congruence(rows_i, rows_j, val_i, val_j, scale, n):
    """M = C diag(scale) C^T for the two-entry-per-column coupling block.

    Column p of C has value val_i[p] at row rows_i[p] and val_j[p] at
    row rows_j[p] (val_j is zero for diagonal pairs).
    """
    M = np.zeros((n, n))
    np.add.at(M, (rows_i, rows_i), val_i * val_i * scale)
    np.add.at(M, (rows_j, rows_j), val_j * val_j * scale)
    cross = val_i * val_j * scale
    np.add.at(M, (rows_i, rows_j), cross)
    np.add.at(M, (rows_j, rows_i), cross)
    return M


class _Lane:
    def __init__(self, name, coupling_kernel, rank_two_kernel, psi2_matrix, pair_congruence):
        self.name = name
        self.coupling_kernel = coupling_kernel
        self.rank_two_kernel = rank_two_kernel
        self.psi2_matrix = psi2_matrix
        self.pair_congruence = pair_congruence


numpy_impl = _Lane("numpy", _np_coupling_kernel, _np_rank_two_kernel,
                   _np_psi2_matrix, _np_pair_congruence)


# -- numba lane ---------------------------------------------------------------

def _build_numba_lane():
    from numba import njit

    @njit(cache=True)
    def coupling_kernel(above, lamw, gap):
        n = above.shape[0]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = lamw[i] * lamw[j] / (above[i] + above[j] + gap)
        return out

    @njit(cache=True)
    def rank_two_kernel(above, lamw, gap):
        n = above.shape[0]
        u = np.empty(n)
        for i in range(n):
            u[i] = 1.0 / (above[i] + gap)
        cinv = 1.0 / gap
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = lamw[i] * lamw[j] * (u[i] + u[j] - cinv)
        return out

    @njit(cache=True)
    def psi2_matrix(above, gap):
        n = above.shape[0]
        c = gap
        out = np.empty((n, n))
        for i in range(n):
            a = above[i]
            for j in range(n):
                b = above[j]
                out[i, j] = a * b * (a + b + 2.0 * c) / (c * (a + c) * (b + c) * (a + b + c))
        return out

    @njit(cache=True)
    def pair_congruence(rows_i, rows_j, val_i, val_j, scale, n):
        M = np.zeros((n, n))
        for p in range(rows_i.shape[0]):
            i = rows_i[p]
            j = rows_j[p]
            s = scale[p]
            M[i, i] += val_i[p] * val_i[p] * s
            M[j, j] += val_j[p] * val_j[p] * s
            cross = val_i[p] * val_j[p] * s
            M[i, j] += cross
            M[j, i] += cross
        return M

    return _Lane("numba", coupling_kernel, rank_two_kernel, psi2_matrix, pair_congruence)


def _choose_lane():
    mode = os.environ.get("SPINBOSON2P_BACKEND", "auto").strip().lower()
    if mode not in ("auto", "numba", "numpy"):
        raise ValueError(f"SPINBOSON2P_BACKEND must be auto|numba|numpy, got {mode!r}")
    if mode == "numpy":
        return numpy_impl, None
    try:
        lane = _build_numba_lane()
        return lane, lane
    except Exception:
        if mode == "numba":
            raise
        return numpy_impl, None


_active, numba_impl = _choose_lane()


def active_backend() -> str:
    return _active.name


def coupling_kernel(above, lamw, gap):
    return _active.coupling_kernel(above, lamw, float(gap))


def rank_two_kernel(above, lamw, gap):
    return _active.rank_two_kernel(above, lamw, float(gap))


def psi2_matrix(above, gap):
    return _active.psi2_matrix(above, float(gap))


def pair_congruence(rows_i, rows_j, val_i, val_j, scale, n):
    return _active.pair_congruence(rows_i, rows_j, val_i, val_j, scale, int(n))
