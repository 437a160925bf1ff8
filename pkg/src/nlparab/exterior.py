"""Analytic data on the complement of the computational box.

``ExteriorData`` wraps a callable g(y, t) defined for |y| beyond the grid's
coverage, together with a declared growth/decay exponent gamma such that
|g(y, t)| <= C (1 + |y|)^gamma.  Far-field integrals converge iff
gamma < 2s, so every consumer validates the pair (gamma, s) first.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DivergentTailError


@dataclass(frozen=True)
class ExteriorData:
    """Values of the solution outside the grid box.

    ``value(y, t)`` must accept an array of 1D coordinates (or (Q, 2) points
    in 2D) and a time, returning an array.  ``asymptotic_radius``, when set,
    tells the collar quadrature to extend at least that far before switching
    to the matched power-law far field (useful for compactly supported data).
    ``time_dependent`` declares whether the data actually varies in t;
    ``None`` means unknown, and consumers then probe conservatively.
    """

    value: Callable
    decay_exponent: float
    far_field_coefficient: float = 1.0
    asymptotic_radius: Optional[float] = None
    time_dependent: Optional[bool] = None

    def require_integrable(self, order: float) -> None:
        """Raise unless the tail integrand |g| / |y|^(n+2s) is integrable."""
        if self.decay_exponent >= 2.0 * order:
            raise DivergentTailError(
                f"exterior decay exponent gamma={self.decay_exponent} must be "
                f"< 2s = {2.0 * order} for far-field integrals to converge"
            )

    def __call__(self, y, t: float):
        return np.asarray(self.value(y, t), dtype=np.float64)


def zero_exterior() -> ExteriorData:
    return ExteriorData(value=lambda y, t: np.zeros_like(np.asarray(y, dtype=float)),
                        decay_exponent=0.0, far_field_coefficient=0.0,
                        time_dependent=False)


def constant_exterior(c: float) -> ExteriorData:
    return ExteriorData(value=lambda y, t: np.full_like(np.asarray(y, dtype=float), c),
                        decay_exponent=0.0, far_field_coefficient=abs(c),
                        time_dependent=False)


def power_decay_exterior(coefficient: float, exponent: float) -> ExteriorData:
    """g(y) = coefficient * (1 + |y|)^exponent, time independent."""
    def g(y, t):
        return coefficient * (1.0 + np.abs(np.asarray(y, dtype=float))) ** exponent
    return ExteriorData(value=g, decay_exponent=exponent,
                        far_field_coefficient=abs(coefficient),
                        time_dependent=False)


def negative_annulus_exterior(mass: float, inner: float, outer: float) -> ExteriorData:
    """g = -mass on inner <= |y| <= outer, zero elsewhere."""
    if not 0 < inner < outer:
        raise ValueError(f"need 0 < inner < outer, got {inner}, {outer}")

    def g(y, t):
        a = np.abs(np.asarray(y, dtype=float))
        return np.where((a >= inner) & (a <= outer), -mass, 0.0)

    return ExteriorData(value=g, decay_exponent=0.0, far_field_coefficient=abs(mass),
                        asymptotic_radius=2.0 * outer, time_dependent=False)


def heat_kernel_exterior(time_offset: float, order: float = 0.5) -> ExteriorData:
    """g(y, t) = p(y, time_offset + t), the heat kernel of the given order.

    The far field decays like |y|^(-1-2s), which is also the declared
    exponent; order 1/2 evaluates through the closed form, other orders
    through the cached Fourier inversion.
    """
    from .oracles import (fractional_heat_kernel,
                          fractional_heat_kernel_interpolated)

    if abs(order - 0.5) < 1e-12:
        def g(y, t):
            return fractional_heat_kernel(1, order, np.asarray(y, dtype=float),
                                          time_offset + t)
    else:
        def g(y, t):
            return fractional_heat_kernel_interpolated(
                order, np.asarray(y, dtype=float), time_offset + t)

    return ExteriorData(value=g, decay_exponent=-(1.0 + 2.0 * order),
                        far_field_coefficient=1.0, time_dependent=True)


GENERATORS: dict = {
    "zero": zero_exterior,
    "constant": constant_exterior,
    "power_decay": power_decay_exterior,
    "negative_annulus": negative_annulus_exterior,
    "heat_kernel": heat_kernel_exterior,
}
