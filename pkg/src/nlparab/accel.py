"""Hot numeric kernels: pairwise power-law sums over grid nodes.

Every function here exists in two versions: a numba ``@njit`` one and a
pure-numpy fallback.  Selection happens once at import time:

* if the environment variable ``NLPARAB_NUMBA`` is set to ``0``, ``false``
  or ``off``, the numpy path is used;
* otherwise numba is used when it imports cleanly.

``USING_NUMBA`` records the active path; ``benchmarks/bench_accel.py``
compares the two.
"""

import os

import numpy as np

_flag = os.environ.get("NLPARAB_NUMBA", "1").strip().lower()
_WANT_NUMBA = _flag not in ("0", "false", "off", "no")

try:
    if _WANT_NUMBA:
        from numba import njit, prange
        USING_NUMBA = True
    else:
        raise ImportError
except ImportError:
    USING_NUMBA = False


def _pairwise_power_matrix_numpy(points, coef, p):
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, 1.0)
    out = coef * dist ** (-p)
    np.fill_diagonal(out, 0.0)
    return out


def _seminorm_sq_levels_numpy(values, points, p):
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, 1.0)
    w = dist ** (-p)
    np.fill_diagonal(w, 0.0)
    dv = values[:, :, None] - values[:, None, :]
    return np.einsum("mij,ij->m", dv * dv, w)


def _weighted_seminorm_sq_numpy(values, points, psi, p):
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, 1.0)
    w = np.minimum(psi[:, None], psi[None, :]) * dist ** (-p)
    np.fill_diagonal(w, 0.0)
    dv = values[:, None] - values[None, :]
    return float((dv * dv * w).sum())


if USING_NUMBA:

    @njit(cache=True, parallel=True)
    def _pairwise_power_matrix_numba(points, coef, p):  # pragma: no cover - jit
        k, n = points.shape
        out = np.zeros((k, k))
        for i in prange(k):
            for j in range(k):
                if i == j:
                    continue
                d2 = 0.0
                for a in range(n):
                    d = points[i, a] - points[j, a]
                    d2 += d * d
                out[i, j] = coef * d2 ** (-0.5 * p)
        return out

    @njit(cache=True, parallel=True)
    def _seminorm_sq_levels_numba(values, points, p):  # pragma: no cover - jit
        m, k = values.shape
        n = points.shape[1]
        out = np.zeros(m)
        for lev in prange(m):
            acc = 0.0
            for i in range(k):
                for j in range(k):
                    if i == j:
                        continue
                    d2 = 0.0
                    for a in range(n):
                        d = points[i, a] - points[j, a]
                        d2 += d * d
                    dv = values[lev, i] - values[lev, j]
                    acc += dv * dv * d2 ** (-0.5 * p)
            out[lev] = acc
        return out

    @njit(cache=True, parallel=True)
    def _weighted_seminorm_sq_numba(values, points, psi, p):  # pragma: no cover
        k = values.shape[0]
        n = points.shape[1]
        acc = 0.0
        for i in prange(k):
            row = 0.0
            for j in range(k):
                if i == j:
                    continue
                d2 = 0.0
                for a in range(n):
                    d = points[i, a] - points[j, a]
                    d2 += d * d
                w = psi[i] if psi[i] < psi[j] else psi[j]
                dv = values[i] - values[j]
                row += dv * dv * w * d2 ** (-0.5 * p)
            acc += row
        return acc


def pairwise_power_matrix(points, coef, p):
    """Matrix ``coef * |x_i - x_j|^(-p)`` with a zero diagonal.

    ``points`` has shape (K, n).  This is the kernel matrix of the
    translation-invariant families; modulated kernels multiply it by the
    sampled modulation afterwards.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USING_NUMBA:
        return _pairwise_power_matrix_numba(points, float(coef), float(p))
    return _pairwise_power_matrix_numpy(points, float(coef), float(p))


def seminorm_sq_levels(values, points, p):
    """Per-level sums ``sum_{i != j} (v_i - v_j)^2 |x_i - x_j|^(-p)``.

    ``values`` has shape (M, K); returns an array of length M.  Multiply by
    the squared cell volume for the lattice Gagliardo seminorm.
    """
    values = np.ascontiguousarray(np.atleast_2d(values), dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USING_NUMBA:
        return _seminorm_sq_levels_numba(values, points, float(p))
    return _seminorm_sq_levels_numpy(values, points, float(p))


def weighted_seminorm_sq(values, points, psi, p):
    """``sum_{i != j} (v_i - v_j)^2 min(psi_i, psi_j) |x_i - x_j|^(-p)``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    if USING_NUMBA:
        return float(_weighted_seminorm_sq_numba(values, points, psi, float(p)))
    return _weighted_seminorm_sq_numpy(values, points, psi, float(p))
