"""Independent reference results: heat kernels, symbol checks, own quadrature.

Nothing in this module calls the production assembly/quadrature code paths;
these are the oracles the rest of the test suite compares against, so they
deliberately duplicate near-singularity handling with different methods.
"""

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import (QuadratureBudgetError, UnsupportedDimensionError,
                     UnsupportedKernelError)
from .geometry import Grid
from .kernels import KernelSpec


# ---------------------------------------------------------------------------
# fractional heat kernel


def fractional_heat_kernel(dim: int, order: float, x, t: float, tol: float = 1e-10):
    """Heat kernel of the power-law jump process at time t > 0.

    For order 1/2 the closed Cauchy-Poisson formula is used; otherwise the
    radial Fourier inversion of exp(-t |xi|^(2s)) with an empirically
    controlled (doubling) discretization.  Values are nonnegative with unit
    mass.
    """
    value, _ = fractional_heat_kernel_with_error(dim, order, x, t, tol)
    return value


def fractional_heat_kernel_with_error(dim: int, order: float, x, t: float,
                                      tol: float = 1e-10):
    if t <= 0:
        raise ValueError(f"heat kernel requires t > 0, got {t}")
    if dim not in (1, 2):
        raise UnsupportedDimensionError(f"dim must be 1 or 2, got {dim}")
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    if dim == 1:
        r = np.abs(xa.reshape(-1))
    else:
        pts = xa.reshape(-1, 2) if xa.ndim > 1 or xa.size == 2 else None
        if pts is None:
            raise ValueError("2D kernel needs points of shape (..., 2)")
        r = np.sqrt((pts ** 2).sum(axis=1))
        scalar = xa.ndim == 1
    if abs(order - 0.5) < 1e-12:
        if dim == 1:
            out = t / (np.pi * (t * t + r * r))
        else:
            out = t / (2.0 * np.pi * (t * t + r * r) ** 1.5)
        err = 0.0
    else:
        out, err = _fourier_inversion(dim, order, r, t, tol)
    if scalar:
        return float(out[0]), err
    return out.reshape(xa.shape if dim == 1 else xa.shape[:-1]), err


def _fourier_inversion(dim: int, order: float, r: np.ndarray, t: float,
                       tol: float):
    """Radial inverse Fourier transform of exp(-t |xi|^(2s)).

    The symbol has a kink at xi = 0 for s < 1/2, so the segment [0, 1] is
    integrated in the substituted variable xi = u^4, which flattens the
    endpoint; beyond 1 the integrand is smooth and a plain Simpson grid
    resolving the oscillation cos(r_max xi) suffices.  Both pieces are
    refined by doubling until the change falls below tol; the last change
    is the reported error bound.
    """
    # spectral window: the damping at the cutoff sits four decades under tol
    decades = -np.log(max(tol, 1e-300)) + 9.2
    cutoff = max((decades / t) ** (1.0 / (2.0 * order)), 2.0)
    rmax = max(float(np.abs(r).max()) if r.size else 1.0, 1.0)
    n_near = max(512, int(8 * rmax))
    n_far = max(1024, int(4 * (cutoff - 1.0) * rmax / np.pi) + 1)
    prev = None
    err = np.inf
    for _ in range(8):
        u = np.linspace(0.0, 1.0, n_near + 1)
        xi_near = u ** 4
        damp_near = np.exp(-t * xi_near ** (2.0 * order)) * 4.0 * u ** 3
        xi_far = np.linspace(1.0, cutoff, n_far + 1)
        damp_far = np.exp(-t * xi_far ** (2.0 * order))
        cur = (_radial_transform(dim, r, xi_near, damp_near, u)
               + _radial_transform(dim, r, xi_far, damp_far, xi_far))
        if prev is not None:
            err = float(np.max(np.abs(cur - prev)))
            if err < tol:
                return cur, err
        prev = cur
        n_near *= 2
        n_far *= 2
    return prev, err


@lru_cache(maxsize=8)
def _similarity_profile(order: float, tol: float, z_max: float = 64.0,
                        samples: int = 2 ** 14 + 1):
    """Unit-time kernel on a dense grid of the similarity variable."""
    z = np.linspace(0.0, z_max, samples)
    vals, err = _fourier_inversion(1, order, z, 1.0, tol)
    return z, vals, err


def fractional_heat_kernel_interpolated(order: float, x, t: float,
                                        tol: float = 1e-7):
    """Fast general-order kernel via the cached self-similar profile.

    p(x, t) = t^(-1/(2s)) P(x t^(-1/(2s))) with P tabulated once; beyond
    the table the matched power law |z|^(-1-2s) continues it.  Intended for
    hot paths (per-step exterior data); accuracy is the table's inversion
    tolerance plus interpolation error on its dense grid.
    """
    if t <= 0:
        raise ValueError(f"heat kernel requires t > 0, got {t}")
    z_grid, profile, _ = _similarity_profile(float(order), float(tol))
    scale = t ** (-1.0 / (2.0 * order))
    z = np.abs(np.asarray(x, dtype=float)) * scale
    out = np.interp(z, z_grid, profile)
    beyond = z > z_grid[-1]
    if np.any(beyond):
        edge = z_grid[-1]
        out = np.where(beyond,
                       profile[-1] * (np.maximum(z, edge) / edge)
                       ** (-1.0 - 2.0 * order), out)
    return scale * out


def _radial_transform(dim, r, xi, weight, var):
    """Simpson transform over the variable ``var``; ``weight`` carries the
    symbol damping and any jacobian."""
    out = np.empty_like(r)
    block = max(1, 2 ** 22 // (len(xi) + 1))
    for start in range(0, len(r), block):
        rr = r[start:start + block, None]
        if dim == 1:
            integrand = np.cos(rr * xi[None, :]) * weight[None, :]
            out[start:start + block] = _simpson(integrand, var) / np.pi
        else:
            integrand = (special.j0(rr * xi[None, :]) * weight[None, :]
                         * xi[None, :])
            out[start:start + block] = _simpson(integrand, var) / (2.0 * np.pi)
    return out


def _simpson(rows, x):
    from scipy.integrate import simpson
    return simpson(rows, x=x, axis=1)


# ---------------------------------------------------------------------------
# lattice symbol check


@dataclass(frozen=True)
class SymbolRow:
    frequency: float
    eigenvalue: float
    target: float

    @property
    def relative_error(self) -> float:
        if self.target == 0.0:
            return abs(self.eigenvalue)
        return abs(self.eigenvalue - self.target) / abs(self.target)


def symbol_eigencheck(kernel: KernelSpec, grid: Grid,
                      frequencies: Sequence[float]) -> list:
    """Rayleigh quotients of sampled plane waves under the periodized operator.

    The grid is wrapped onto a circle of circumference 2L (the two boundary
    nodes coincide), the radial kernel is summed over periodic images, and
    the resulting circulant is applied to the sampled wave cos(xi x).  For
    frequencies on the dual lattice xi = pi k / L the quotient is the exact
    circulant eigenvalue; requested frequencies are snapped to the nearest
    dual point.  Requires a translation-invariant kernel.
    """
    if not kernel.translation_invariant:
        raise UnsupportedKernelError(
            "symbol check needs a translation-invariant kernel family")
    if grid.dim != 1 or kernel.dim != 1:
        raise UnsupportedDimensionError("symbol check is implemented in 1D")
    n_wrap = grid.nodes_per_axis - 1
    h = grid.spacing
    period = n_wrap * h  # == 2L
    coef, p = kernel.coefficient, kernel.exponent
    s = kernel.order

    images = 256
    j = np.arange(n_wrap, dtype=np.float64)
    m = np.arange(-images, images + 1, dtype=np.float64)
    dist = np.abs(j[:, None] * h + m[None, :] * period)
    mask = dist > 0
    cj = np.where(mask, coef * np.where(mask, dist, 1.0) ** (-p), 0.0).sum(axis=1)
    # non-oscillatory part of the truncated image tail
    far = (images + 0.5) * period
    tail_remainder = 2.0 * coef * far ** (-2.0 * s) / (2.0 * s)
    w_sing = coef * (h / 2.0) ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)

    # circulant first row of the wrapped operator, bond correction included;
    # self-images (j=0) couple a node to itself and drop out
    row = np.zeros(n_wrap)
    row[0] = h * cj[1:].sum() + 2.0 * w_sing / h ** 2
    row[1:] -= h * cj[1:]
    row[1] -= w_sing / h ** 2
    row[-1] -= w_sing / h ** 2

    nodes = grid.axis_nodes[:n_wrap]
    row_fft = np.fft.fft(row)
    rows = []
    for freq in frequencies:
        k = int(round(freq * period / (2.0 * np.pi)))
        xi = 2.0 * np.pi * k / period
        if k == 0:
            wave = np.ones(n_wrap)
        else:
            wave = np.cos(xi * nodes)
        image = np.real(np.fft.ifft(row_fft * np.fft.fft(wave)))
        rayleigh = float(wave @ image) / float(wave @ wave)
        if k != 0:
            # non-oscillatory completion of the truncated image sum
            rayleigh += tail_remainder
        rows.append(SymbolRow(frequency=xi, eigenvalue=rayleigh,
                              target=abs(xi) ** (2.0 * s)))
    return rows


# ---------------------------------------------------------------------------
# independent adaptive quadrature


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    intervals: int


def reference_quadrature(func: Callable, region, tol: float,
                         singular_points: Sequence[float] = (),
                         max_intervals: int = 20000) -> QuadratureResult:
    """Adaptive Simpson integration, independent of the lattice code paths.

    ``region`` is (a, b) with either end possibly infinite.  Declared
    singular points split the region; integrable endpoint singularities are
    handled by the adaptive grading.  If the error target cannot be met
    within the subdivision budget a :class:`QuadratureBudgetError` carrying
    the best estimate is raised.
    """
    a, b = region
    cuts = sorted(p for p in singular_points if a < p < b)
    edges = [a] + cuts + [b]
    total = 0.0
    err = 0.0
    used = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        f, lo2, hi2 = _map_finite(func, lo, hi)
        sub_tol = tol / max(1, len(edges) - 1)
        v, e, n = _adaptive_simpson(f, lo2, hi2, sub_tol, max_intervals - used)
        total += v
        err += e
        used += n
        if used >= max_intervals and err > tol:
            raise QuadratureBudgetError(
                f"quadrature budget of {max_intervals} intervals exhausted "
                f"(error estimate {err:.3e} > tol {tol:.3e})",
                value=total, error_estimate=err)
    return QuadratureResult(value=total, error_estimate=err, intervals=used)


def _map_finite(func, a, b):
    """Map a possibly infinite interval onto a finite one.

    The compactifying substitutions are evaluated a hair inside their
    singular endpoints so that integrands decaying exactly like the
    jacobian stay continuous there.
    """
    eps = 1e-13

    def clip(u, lo, hi):
        return min(max(u, lo + eps), hi - eps)

    if np.isinf(a) and np.isinf(b):
        return (lambda u, c=clip: (func(c(u, -1, 1) / (1 - c(u, -1, 1) ** 2))
                                   * (1 + c(u, -1, 1) ** 2)
                                   / (1 - c(u, -1, 1) ** 2) ** 2), -1.0, 1.0)
    if np.isinf(b):
        return (lambda u, c=clip: func(a + c(u, -1, 1) / (1 - c(u, -1, 1)))
                / (1 - c(u, -1, 1)) ** 2, 0.0, 1.0)
    if np.isinf(a):
        return (lambda u, c=clip: func(b - c(u, -1, 1) / (1 - c(u, -1, 1)))
                / (1 - c(u, -1, 1)) ** 2, 0.0, 1.0)
    return func, float(a), float(b)


def _safe_eval(f, x):
    try:
        with np.errstate(all="ignore"):
            v = f(x)
    except ZeroDivisionError:
        return 0.0
    if not np.isfinite(v):
        return 0.0
    return float(v)


def _adaptive_simpson(f, a, b, tol, budget):
    if budget <= 0:
        raise QuadratureBudgetError("no quadrature budget left", 0.0, np.inf)

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    m = 0.5 * (a + b)
    fa, fm, fb = (_safe_eval(f, a), _safe_eval(f, m), _safe_eval(f, b))
    whole = simpson(a, b, fa, fm, fb)
    # heap of (-error, lo, hi, flo, fmid, fhi, estimate); the running error
    # total is maintained incrementally, infinities counted separately
    heap = [(-np.inf, a, b, fa, fm, fb, whole)]
    total = whole
    total_err = 0.0
    unknown = 1
    count = 1
    while count < budget:
        neg_err, lo, hi, flo, fmid, fhi, est = heapq.heappop(heap)
        if np.isfinite(neg_err):
            total_err += neg_err  # remove this interval's error
        else:
            unknown -= 1
        mid = 0.5 * (lo + hi)
        m1, m2 = 0.5 * (lo + mid), 0.5 * (mid + hi)
        f1, f2 = _safe_eval(f, m1), _safe_eval(f, m2)
        left = simpson(lo, mid, flo, f1, fmid)
        right = simpson(mid, hi, fmid, f2, fhi)
        err = abs(left + right - est) / 15.0
        total += left + right - est
        half = 0.5 * err if np.isfinite(err) else np.inf
        for entry in ((lo, mid, flo, f1, fmid, left),
                      (mid, hi, fmid, f2, fhi, right)):
            if np.isfinite(half):
                total_err += half
                heapq.heappush(heap, (-half, *entry))
            else:
                unknown += 1
                heapq.heappush(heap, (-np.inf, *entry))
        count += 1
        if unknown == 0 and total_err < tol and count > 8:
            return total, total_err, count
    reported = total_err if unknown == 0 else np.inf
    if reported > tol:
        raise QuadratureBudgetError(
            f"quadrature budget of {budget} intervals exhausted "
            f"(error estimate {reported:.3e} > tol {tol:.3e})",
            value=total, error_estimate=reported)
    return total, reported, count
