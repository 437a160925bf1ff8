"""Parabolic tails and the empirical checks of the tail-estimation bounds.

The tail of v with respect to (x0, r, t1, t2) is the time-averaged weighted
mass outside the ball,

    tail(v) = r^(2s) / (t2 - t1) * int_t1^t2 int_{|x-x0|>r} |v| |x-x0|^(-n-2s),

and the supremum tail replaces the time average by a supremum.  Inside the
grid's coverage the spatial integral uses nodal values times exact per-cell
integrals of the weight (so constants integrate exactly); outside, collar
quadrature on the analytic exterior data plus the matched power-law far
field.  Time integration is the trapezoid rule over stored levels, with no
sub-step interpolation.

Everything here is 1D; the checks mirror three bounds relating supremum
tails, plain tails, and local means of sub/super/solutions.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AnomalyError, GeometryError, PreconditionError, \
    UnsupportedDimensionError
from .exterior import ExteriorData
from .farfield import far_piece, interval_panels
from .geometry import SpaceTimeField, window_extrema
from .kernels import KernelSpec
from .solver import positivity_gate, residual_classification_gate

TARGETS = ("positive_part", "negative_part", "absolute_value")


@dataclass(frozen=True)
class TailQuery:
    x0: float
    r: float
    t1: float
    t2: float
    target: str = "absolute_value"

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError(f"tail radius must be positive, got {self.r}")
        if self.t2 <= self.t1:
            raise GeometryError(f"need t1 < t2, got ({self.t1}, {self.t2})")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")


def _apply_target(values: np.ndarray, target: str) -> np.ndarray:
    if target == "positive_part":
        return np.maximum(values, 0.0)
    if target == "negative_part":
        return np.maximum(-values, 0.0)
    return np.abs(values)


def _weight_antiderivative(x, x0: float, s: float):
    """Antiderivative of |x - x0|^(-1-2s) on either side of x0."""
    d = np.asarray(x, dtype=float) - x0
    return -np.sign(d) * np.abs(d) ** (-2.0 * s) / (2.0 * s)


def _cell_weights(grid, x0: float, r: float, s: float) -> np.ndarray:
    """Exact integrals of the tail weight over cell parts outside B_r(x0)."""
    h = grid.spacing
    cover = grid.coverage_half_width
    xs = grid.axis_nodes
    lo = np.clip(xs - h / 2.0, -cover, cover)
    hi = np.clip(xs + h / 2.0, -cover, cover)
    w = np.zeros_like(xs)
    # part of the cell to the right of x0 + r
    a = np.maximum(lo, x0 + r)
    mask = hi > a
    w[mask] += (_weight_antiderivative(hi[mask], x0, s)
                - _weight_antiderivative(a[mask], x0, s))
    # part of the cell to the left of x0 - r
    b = np.minimum(hi, x0 - r)
    mask = lo < b
    w[mask] += (_weight_antiderivative(b[mask], x0, s)
                - _weight_antiderivative(lo[mask], x0, s))
    return w


class TailRule:
    """Reusable quadrature data for one (grid, x0, r, s) tail geometry."""

    def __init__(self, grid, ext: ExteriorData, x0: float, r: float, s: float,
                 first_width: float | None = None):
        if grid.dim != 1:
            raise UnsupportedDimensionError("tails are implemented in 1D")
        ext.require_integrable(s)
        self.x0, self.r, self.s = float(x0), float(r), float(s)
        self.ext = ext
        cover = grid.coverage_half_width
        far = 16.0 * max(cover, abs(x0) + r)
        if ext.asymptotic_radius is not None:
            far = max(far, ext.asymptotic_radius)
        self.far = far
        if abs(x0) + r >= far:
            raise GeometryError(
                f"ball B_{r}({x0}) reaches past the far radius {far}")
        if first_width is None:
            first_width = grid.spacing / 4.0
        self.cell_w = _cell_weights(grid, x0, r, s)
        start_pos = max(cover, x0 + r)
        start_neg = max(cover, r - x0)  # |y| for y < 0 side
        self.pos_nodes, pw = interval_panels(start_pos, far, first_width)
        self.neg_nodes, nw = interval_panels(start_neg, far, first_width)
        self.pos_w = pw * np.abs(self.pos_nodes - x0) ** (-1.0 - 2.0 * s)
        self.neg_w = nw * np.abs(-self.neg_nodes - x0) ** (-1.0 - 2.0 * s)

    def spatial_integral(self, nodal_values: np.ndarray, t: float,
                         target: str) -> float:
        """int_{|x-x0|>r} |part(v)| |x-x0|^(-1-2s) dx at one time level."""
        total = float(self.cell_w @ _apply_target(nodal_values, target))
        gp = _apply_target(np.asarray(self.ext(self.pos_nodes, t)), target)
        gn = _apply_target(np.asarray(self.ext(-self.neg_nodes, t)), target)
        total += float(self.pos_w @ gp) + float(self.neg_w @ gn)
        margin = 2.0 * self.s - self.ext.decay_exponent
        for sign, dist in ((1.0, self.far - self.x0), (-1.0, self.far + self.x0)):
            g_b = float(np.asarray(
                self.ext(np.array([sign * self.far]), t)).item())
            f_b = _apply_target(np.array([g_b]), target)[0] * dist ** (-1.0 - 2.0 * self.s)
            total += far_piece(f_b, dist, margin)
        return total


def _window_levels(field: SpaceTimeField, t1: float, t2: float) -> np.ndarray:
    tol = 1e-9 * max(abs(t1), abs(t2), t2 - t1, 1.0)
    idx = np.nonzero((field.times >= t1 - tol) & (field.times <= t2 + tol))[0]
    if len(idx) == 0:
        raise GeometryError(
            f"no stored time levels inside ({t1:g}, {t2:g}); "
            f"field covers [{field.times[0]:g}, {field.times[-1]:g}]")
    return idx


def _tail_profile(field, ext, q: TailQuery, rule: Optional[TailRule] = None):
    if q.t1 < field.times[0] - 1e-9 or q.t2 > field.times[-1] + 1e-9:
        raise GeometryError(
            f"tail window ({q.t1:g}, {q.t2:g}) outside the stored range "
            f"[{field.times[0]:g}, {field.times[-1]:g}]")
    s = field.order_s
    if s is None:
        raise ValueError("field carries no kernel order; tails need s")
    if rule is None:
        rule = TailRule(field.grid, ext, q.x0, q.r, s)
    levels = _window_levels(field, q.t1, q.t2)
    prof = np.array([rule.spatial_integral(field.values[m], float(field.times[m]),
                                           q.target) for m in levels])
    return prof, field.times[levels], rule


def tail(field: SpaceTimeField, ext: ExteriorData, q: TailQuery,
         rule: Optional[TailRule] = None) -> float:
    """Time-averaged parabolic tail of the chosen part of the field."""
    prof, times, rule = _tail_profile(field, ext, q, rule)
    if len(prof) == 1:
        avg = float(prof[0])
    else:
        avg = float(np.trapezoid(prof, times) / (times[-1] - times[0]))
    return q.r ** (2.0 * rule.s) * avg


def tail_sup(field: SpaceTimeField, ext: ExteriorData, q: TailQuery,
             rule: Optional[TailRule] = None) -> float:
    """Supremum-in-time parabolic tail."""
    prof, _, rule = _tail_profile(field, ext, q, rule)
    return q.r ** (2.0 * rule.s) * float(prof.max())


def tail_with_error(field: SpaceTimeField, ext: ExteriorData,
                    q: TailQuery) -> tuple:
    """Tail value plus a cheap quadrature error estimate.

    The estimate compares against a collar rule with much coarser panels;
    the lattice part is exact for piecewise constant data either way.
    """
    value = tail(field, ext, q)
    coarse = TailRule(field.grid, ext, q.x0, q.r, field.order_s,
                      first_width=12.0 * field.grid.spacing)
    rough = tail(field, ext, q, rule=coarse)
    return value, abs(value - rough)


# ---------------------------------------------------------------------------
# lemma checks


@dataclass(frozen=True)
class TailLemmaReport:
    lemma_id: str
    c_emp: float
    numerator: float
    denominator: float
    degenerate: bool

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.c_emp))


def _guarded_ratio(num: float, den: float, lemma_id: str) -> TailLemmaReport:
    tiny = 1e-14 * max(1.0, abs(num), abs(den))
    if abs(den) <= tiny:
        if abs(num) <= tiny:
            return TailLemmaReport(lemma_id, 0.0, num, den, degenerate=True)
        raise AnomalyError(
            f"{lemma_id}: zero denominator with nonzero numerator "
            f"{num:.3e}; preconditions are broken")
    return TailLemmaReport(lemma_id, num / den, num, den, degenerate=False)


def check_supTail_by_Tail(field: SpaceTimeField, ext: ExteriorData,
                          x0: float, r: float, t1: float, eps: float,
                          kernel: Optional[KernelSpec] = None) -> TailLemmaReport:
    """Supremum tail of u_+ against the time-averaged tail plus local mean.

    Requires a (discrete) subsolution that is nonnegative on B_r x (t1, t2],
    t2 = t1 + r^(2s); ``eps`` widens the averaging window backwards by
    eps * r^(2s).  The reported constant divides the supremum tail by
    eps^-1 (tail + mean).
    """
    s = field.order_s
    t2 = t1 + r ** (2.0 * s)
    t_back = t1 - eps * r ** (2.0 * s)
    if eps <= 0 or t_back < field.times[0] - 1e-9:
        raise PreconditionError(
            f"eps={eps} must be positive with t1 - eps r^(2s) = {t_back:g} "
            f"inside the stored range")
    positivity_gate(field, x0, r, t1, t2, "supTail-by-Tail check")
    residual_classification_gate(field, kernel, ext, "sub")
    num = tail_sup(field, ext, TailQuery(x0, r, t1, t2, "positive_part"))
    t_avg = tail(field, ext, TailQuery(x0, r, t_back, t2, "positive_part"))
    mean = window_extrema(field.positive_part(), x0, r, t_back, t2,
                          "averaging window").mean
    den = (t_avg + mean) / eps
    return _guarded_ratio(num, den, "supTail_by_Tail")


def check_supTail_by_Tail_minus(field: SpaceTimeField, ext: ExteriorData,
                                x0: float, r: float, t1: float, eps: float,
                                kernel: Optional[KernelSpec] = None
                                ) -> TailLemmaReport:
    """Same bound for the negative part of a supersolution."""
    s = field.order_s
    t2 = t1 + r ** (2.0 * s)
    t_back = t1 - eps * r ** (2.0 * s)
    if eps <= 0 or t_back < field.times[0] - 1e-9:
        raise PreconditionError(
            f"eps={eps} must be positive with t1 - eps r^(2s) = {t_back:g} "
            f"inside the stored range")
    residual_classification_gate(field, kernel, ext, "super")
    num = tail_sup(field, ext, TailQuery(x0, r, t1, t2, "negative_part"))
    t_avg = tail(field, ext, TailQuery(x0, r, t_back, t2, "negative_part"))
    mean = window_extrema(field.negative_part(), x0, r, t_back, t2,
                          "averaging window").mean
    den = (t_avg + mean) / eps
    return _guarded_ratio(num, den, "supTail_by_Tail_minus")


def check_tail_plus_by_minus(field: SpaceTimeField, ext: ExteriorData,
                             x0: float, r: float, big_r: float, t1: float,
                             kernel: Optional[KernelSpec] = None
                             ) -> TailLemmaReport:
    """Tail of u_+ against the local sup plus the rescaled tail of u_-.

    Requires a solution that is nonnegative on B_R x (t1, t2], R > 2r,
    t2 = t1 + r^(2s).
    """
    if not r < big_r / 2.0:
        raise PreconditionError(f"need r < R/2, got r={r}, R={big_r}")
    s = field.order_s
    t2 = t1 + r ** (2.0 * s)
    positivity_gate(field, x0, big_r, t1, t2, "tail-plus-by-minus check")
    residual_classification_gate(field, kernel, ext, "both")
    num = tail(field, ext, TailQuery(x0, r, t1, t2, "positive_part"))
    sup_loc = window_extrema(field, x0, r, t1, t2, "local sup window").sup
    t_minus = tail(field, ext, TailQuery(x0, big_r, t1, t2, "negative_part"))
    den = sup_loc + (r / big_r) ** (2.0 * s) * t_minus
    return _guarded_ratio(num, den, "tail_plus_by_minus")
