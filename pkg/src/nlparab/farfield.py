"""Collar quadrature and matched power-law far fields for exterior integrals.

Integrals over the complement of the grid box are split into a numeric
collar [a, b] and an analytic remainder beyond b.  The collar uses
Gauss-Legendre panels whose widths grow geometrically away from the
interface, so the first panel resolves the distance (half a cell) between
the outermost node and the interface.  The construction is scale covariant:
scaling the geometry by rho scales every node and weight by rho.

Beyond b the integrand F is extrapolated by the power law matched at the
boundary, F(y) ~ F(b) * (|y - c| / |b - c|)^(p), which integrates in closed
form; c is the point the integrand is singular around (a grid node for
kernel integrals, the tail center for tail integrals).
"""

from functools import lru_cache

import numpy as np

_GAUSS_ORDER = 8
_GROWTH = 1.6


@lru_cache(maxsize=None)
def _gauss_nodes(order: int):
    return np.polynomial.legendre.leggauss(order)


def interval_panels(a: float, b: float, first_width: float,
                    gauss_order: int = _GAUSS_ORDER):
    """Gauss nodes/weights on [a, b] with geometrically growing panels."""
    if b <= a:
        return np.empty(0), np.empty(0)
    edges = [a]
    w = max(first_width, (b - a) * 1e-12)
    pos = a
    while pos + w < b:
        pos += w
        edges.append(pos)
        w *= _GROWTH
    edges.append(b)
    edges = np.asarray(edges)
    gx, gw = _gauss_nodes(gauss_order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def far_piece(boundary_value: float, boundary_distance: float,
              decay_margin: float):
    """Closed-form integral of the matched power law beyond the collar.

    For F(y) ~ B |y - c|^(-1 - decay_margin) matched so that F at the collar
    boundary equals ``boundary_value`` (at distance ``boundary_distance``
    from c), the remaining integral is value * distance / decay_margin.
    Exact whenever F is exactly that power law; requires decay_margin > 0.
    """
    if decay_margin <= 0:
        raise ValueError(f"far-field decay margin must be positive, got {decay_margin}")
    return boundary_value * boundary_distance / decay_margin


class ExteriorQuadrature1D:
    """Two-sided collar rule for integrals over |y| > interface in 1D.

    Holds the node/weight sets for both half-lines plus the collar end used
    by the matched far field.  ``interface`` is where the grid's cells end
    (L + h/2); ``far_radius`` defaults to a fixed multiple so that the whole
    construction scales linearly with the geometry.
    """

    def __init__(self, interface: float, first_width: float,
                 far_radius: float | None = None, gauss_order: int = _GAUSS_ORDER):
        if far_radius is None:
            far_radius = 16.0 * interface
        if far_radius <= interface:
            raise ValueError("far_radius must exceed the interface")
        self.interface = float(interface)
        self.far_radius = float(far_radius)
        nodes, weights = interval_panels(interface, far_radius, first_width,
                                         gauss_order)
        self.nodes_pos = nodes
        self.nodes_neg = -nodes
        self.weights = weights

    def integrate(self, integrand, center: float, decay_margin: float) -> float:
        """Integrate F over |y| > interface; F singular/centred around ``center``.

        ``integrand`` maps an array of y values to F(y) >= decaying values.
        The far remainder on each side uses the matched power law.
        """
        total = float(self.weights @ integrand(self.nodes_pos))
        total += float(self.weights @ integrand(self.nodes_neg))
        b = self.far_radius
        f_pos = float(np.asarray(integrand(np.array([b]))).item())
        f_neg = float(np.asarray(integrand(np.array([-b]))).item())
        total += far_piece(f_pos, b - center, decay_margin)
        total += far_piece(f_neg, b + center, decay_margin)
        return total
