"""Admissible jump kernels: symmetric, with two-sided power-law comparability.

A kernel K(x, y, t) on R^n with order ``s`` and ellipticity constant
``lam`` >= 1 must satisfy, uniformly in t,

    lam^-1 * |x-y|^(-n-2s)  <=  K(x, y, t)  <=  lam * |x-y|^(-n-2s).

Built-in families:

* ``constant_multiple``  -- K = multiple * |x-y|^(-n-2s)
* ``fractional_laplacian`` -- the constant multiple whose Fourier symbol is
  |xi|^(2s); the normalization is computed numerically (see
  :func:`normalization_constant`), never hard-coded
* ``modulated`` -- a(x, y, t) * |x-y|^(-n-2s) with a bounded symmetric
  modulation taking values in [lam^-1, lam]
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import accel
from .errors import EllipticityError, PreconditionError, SingularEvaluationError

FAMILIES = ("fractional_laplacian", "constant_multiple", "modulated")


@lru_cache(maxsize=None)
def normalization_constant(dim: int, order: float) -> float:
    """Constant C(n, s) making the symbol of C(n,s)|x-y|^(-n-2s) equal |xi|^(2s).

    Fixed by the plane-wave condition

        C(n,s) * int_{R^n} (1 - cos(z_1)) |z|^(-n-2s) dz = 1,

    and evaluated by adaptive quadrature.  The value is validated against an
    independent lattice symbol check in the test suite rather than taken from
    a closed-form table.
    """
    s = float(order)
    if not 0.0 < s < 1.0:
        raise ValueError(f"order must lie in (0,1), got {s}")
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    near, _ = integrate.quad(lambda z: (1.0 - np.cos(z)) * z ** (-1.0 - 2 * s), 0.0, 1.0)
    osc, _ = integrate.quad(lambda z: z ** (-1.0 - 2 * s), 1.0, np.inf,
                            weight="cos", wvar=1.0)
    total = 2.0 * (near + 1.0 / (2 * s) - osc)
    if dim == 2:
        # reduce the plane integral to the line integral: integrating the
        # weight (x^2 + y^2)^(-1-s) over y gives x^(-1-2s) times a constant
        # that is itself evaluated by quadrature
        cross, _ = integrate.quad(lambda u: (1.0 + u * u) ** (-1.0 - s),
                                  -np.inf, np.inf)
        total *= cross
    return 1.0 / total


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a jump kernel; evaluation is pure.

    ``modulation`` is a callable a(x, y, t) -> array that must be symmetric
    in (x, y) and take values in [lam^-1, lam]; it is only consulted for the
    ``modulated`` family.  ``autonomous`` declares time independence so the
    solver can factorize once.
    """

    dim: int
    order: float
    lam: float
    family: str
    modulation: Optional[Callable] = None
    multiple: float = 1.0
    autonomous: bool = True

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not 0.0 < self.order < 1.0:
            raise ValueError(f"order must lie in (0,1), got {self.order}")
        if self.lam < 1.0:
            raise EllipticityError(f"lam must be >= 1, got {self.lam}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.family == "modulated" and self.modulation is None:
            raise ValueError("modulated family requires a modulation callable")
        if self.family == "constant_multiple" and not (
            1.0 / self.lam <= self.multiple <= self.lam
        ):
            raise EllipticityError(
                f"multiple {self.multiple} outside [1/lam, lam] = "
                f"[{1.0 / self.lam}, {self.lam}]"
            )

    @property
    def exponent(self) -> float:
        """Singularity exponent n + 2s of the comparison power law."""
        return self.dim + 2.0 * self.order

    @property
    def coefficient(self) -> float:
        """Radial coefficient for the translation-invariant families."""
        if self.family == "fractional_laplacian":
            return normalization_constant(self.dim, self.order)
        if self.family == "constant_multiple":
            return self.multiple
        raise ValueError("modulated kernels have no single radial coefficient")

    @property
    def translation_invariant(self) -> bool:
        return self.family in ("fractional_laplacian", "constant_multiple")

    @classmethod
    def fractional_laplacian(cls, dim: int, order: float) -> "KernelSpec":
        c = normalization_constant(dim, order)
        # smallest admissible ellipticity constant, padded against roundoff
        lam = max(c, 1.0 / c) * (1.0 + 1e-9)
        return cls(dim=dim, order=order, lam=lam, family="fractional_laplacian")

    @classmethod
    def constant_multiple(cls, dim: int, order: float, multiple: float = 1.0,
                          lam: Optional[float] = None) -> "KernelSpec":
        if lam is None:
            lam = max(multiple, 1.0 / multiple) * (1.0 + 1e-9)
        return cls(dim=dim, order=order, lam=lam, family="constant_multiple",
                   multiple=multiple)

    @classmethod
    def modulated(cls, dim: int, order: float, lam: float,
                  modulation: Callable, autonomous: bool = False) -> "KernelSpec":
        return cls(dim=dim, order=order, lam=lam, family="modulated",
                   modulation=modulation, autonomous=autonomous)


def eval_kernel(kernel: KernelSpec, x, y, t: float = 0.0):
    """Evaluate K(x, y, t); symmetric in (x, y).

    In 1D, ``x`` and ``y`` are coordinates that broadcast elementwise like
    numpy scalars.  In 2D they are points with the pair on the last axis.
    Coincident points raise :class:`SingularEvaluationError`.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if kernel.dim == 1:
        d = np.abs(xa - ya)
        scalar_in = d.ndim == 0
    else:
        d = np.sqrt(((xa - ya) ** 2).sum(axis=-1))
        scalar_in = d.ndim == 0
    if np.any(d == 0.0):
        raise SingularEvaluationError("kernel evaluated at coincident points x == y")
    base = d ** (-kernel.exponent)
    if kernel.family == "modulated":
        amp = np.asarray(kernel.modulation(xa, ya, t), dtype=np.float64)
        out = amp * base
    else:
        out = kernel.coefficient * base
    if scalar_in:
        return float(out)
    return out


def kernel_matrix(kernel: KernelSpec, points, t: float = 0.0):
    """Dense matrix K(x_i, x_j, t) over grid points with a zero diagonal."""
    pts = np.ascontiguousarray(np.atleast_2d(points).reshape(len(points), -1),
                               dtype=np.float64)
    if kernel.translation_invariant:
        return accel.pairwise_power_matrix(pts, kernel.coefficient, kernel.exponent)
    base = accel.pairwise_power_matrix(pts, 1.0, kernel.exponent)
    xs = pts.squeeze(-1) if kernel.dim == 1 else pts
    amp = np.asarray(kernel.modulation(
        xs[:, None] if kernel.dim == 1 else xs[:, None, :],
        xs[None, :] if kernel.dim == 1 else xs[None, :, :], t), dtype=np.float64)
    out = amp * base
    np.fill_diagonal(out, 0.0)
    return out


@dataclass(frozen=True)
class EllipticityReport:
    ok: bool
    worst_ratio: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.ok


def check_ellipticity(kernel: KernelSpec, samples) -> EllipticityReport:
    """Check the two-sided bounds on a list of sampled triples (x, y, t).

    ``worst_ratio`` is max(ratio, 1/ratio) over the sampled normalized values
    K * |x-y|^(n+2s); the check passes iff worst_ratio <= lam (up to roundoff).
    """
    samples = list(samples)
    if not samples:
        raise PreconditionError("check_ellipticity requires a nonempty sample list")
    worst = 1.0
    for x, y, t in samples:
        val = eval_kernel(kernel, x, y, t)
        xa = np.asarray(x, dtype=np.float64)
        ya = np.asarray(y, dtype=np.float64)
        if kernel.dim == 1:
            d = np.abs(xa - ya)
        else:
            d = np.sqrt(((xa - ya) ** 2).sum(axis=-1))
        ratio = np.asarray(val) * d ** kernel.exponent
        hi = float(np.max(ratio))
        lo = float(np.min(ratio))
        worst = max(worst, hi, 1.0 / lo if lo > 0 else np.inf)
    ok = worst <= kernel.lam * (1.0 + 1e-12)
    return EllipticityReport(ok=ok, worst_ratio=worst, n_samples=len(samples))


def _mod_sin_cos(x, y, t):
    return 1.0 + 0.4 * np.sin(t) * np.cos(np.asarray(x) + np.asarray(y))


def _mod_radial_wiggle(x, y, t):
    d = np.abs(np.asarray(x) - np.asarray(y))
    return 1.25 + 0.5 * np.cos(np.log(np.maximum(d, 1e-300)))


MODULATIONS: dict = {
    # bounded in [0.6, 1.4]; time dependent
    "sin_cos": _mod_sin_cos,
    # bounded in [0.75, 1.75]; depends only on |x - y|, time independent
    "radial_wiggle": _mod_radial_wiggle,
}
