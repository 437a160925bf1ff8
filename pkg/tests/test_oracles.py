import numpy as np
import pytest

from nlparab.errors import (QuadratureBudgetError, UnsupportedKernelError)
from nlparab.geometry import Grid
from nlparab.kernels import KernelSpec
from nlparab.oracles import (fractional_heat_kernel,
                             fractional_heat_kernel_with_error,
                             reference_quadrature, symbol_eigencheck)


def test_closed_form_peak_value():
    # p(0, 1) = 1/pi, cross-checked against the Fourier inversion path
    closed = fractional_heat_kernel(1, 0.5, 0.0, 1.0)
    assert closed == pytest.approx(1.0 / np.pi, rel=1e-12)
    via_fourier, err = fractional_heat_kernel_with_error(
        1, 0.5 + 1e-9, np.array([0.0]), 1.0, tol=1e-10)
    assert abs(via_fourier[0] - closed) < 1e-8
    assert err < 1e-9


def test_kernel_requires_positive_time():
    with pytest.raises(ValueError):
        fractional_heat_kernel(1, 0.5, 0.0, 0.0)
    with pytest.raises(ValueError):
        fractional_heat_kernel(1, 0.5, 0.0, -1.0)


@pytest.mark.parametrize("order", [0.4, 0.5, 0.75])
def test_kernel_mass_one(order):
    # lattice mass over a wide window plus the matched power-law completion
    # of the heavy tail; completing at two nested windows and extrapolating
    # in the known correction order removes the leading completion error.
    # The underlying fact is that the symbol at frequency zero is one.
    t, half_width, n = 0.5, 80.0, 2801
    g = Grid(1, half_width, n)
    xs, h = g.axis_nodes, g.spacing
    half = fractional_heat_kernel(1, order, xs[n // 2:], t, tol=1e-7)
    vals = np.concatenate([half[:0:-1], half])  # the kernel is even
    assert np.all(vals >= 0)

    def completed_mass(edge_offset):
        j = edge_offset
        lat = (vals[n // 2 - j:n // 2 + j + 1].sum() * h
               - 0.5 * h * (vals[n // 2 - j] + vals[n // 2 + j]))
        edge = xs[n // 2 + j]
        p_edge = float(fractional_heat_kernel(1, order, edge, t, tol=1e-10))
        return lat + 2.0 * p_edge * edge / (2.0 * order), edge

    inner, e2 = completed_mass(n // 4)
    outer, e1 = completed_mass(n // 2)
    mass = outer + (outer - inner) / ((e1 / e2) ** (4 * order) - 1.0)
    assert mass == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("order", [0.4, 0.5, 0.6])
def test_kernel_self_similarity(order):
    xs = np.array([0.0, 0.3, 1.0, 2.5])
    for t in (0.5, 2.0):
        direct = fractional_heat_kernel(1, order, xs, t)
        scaled = t ** (-1 / (2 * order)) * fractional_heat_kernel(
            1, order, xs * t ** (-1 / (2 * order)), 1.0)
        assert np.allclose(direct, scaled, atol=1e-8)


def test_kernel_2d_closed_form():
    pt = np.array([0.3, 0.4])
    val = fractional_heat_kernel(2, 0.5, pt, 1.0)
    assert val == pytest.approx(1.0 / (2 * np.pi * (1 + 0.25) ** 1.5),
                                rel=1e-12)
    via_fourier = fractional_heat_kernel(2, 0.5 + 1e-9, pt.reshape(1, 2), 1.0)
    assert via_fourier[0] == pytest.approx(val, abs=1e-7)


def test_interpolated_kernel_matches_direct():
    # the cached self-similar table agrees with the direct inversion and
    # continues by the matched power law beyond its window
    from nlparab.oracles import fractional_heat_kernel_interpolated
    s = 0.75
    xs = np.linspace(-30.0, 30.0, 401)
    direct = fractional_heat_kernel(1, s, xs, 1.7, tol=1e-9)
    fast = fractional_heat_kernel_interpolated(s, xs, 1.7)
    assert np.abs(direct - fast).max() / direct.max() < 1e-4
    far = fractional_heat_kernel_interpolated(s, np.array([500.0]), 1.0)
    ref = fractional_heat_kernel(1, s, 500.0, 1.0, tol=1e-9)
    assert far[0] == pytest.approx(ref, rel=0.05)
    with pytest.raises(ValueError):
        fractional_heat_kernel_interpolated(s, xs, 0.0)


def test_symbol_zero_frequency(unit_kernel):
    g = Grid(1, np.pi * 4, 257)
    row = symbol_eigencheck(unit_kernel, g, [0.0])[0]
    assert row.eigenvalue == pytest.approx(0.0, abs=1e-13)


def test_symbol_normalized_two_percent(frac_kernel):
    g = Grid(1, np.pi * 4, 2048)
    for row in symbol_eigencheck(frac_kernel, g, [0.5, 1.0, 2.0]):
        assert row.relative_error < 0.02


def test_symbol_refinement_improves(frac_kernel):
    errs = []
    for n in (256, 512, 1024):
        rows = symbol_eigencheck(frac_kernel, Grid(1, np.pi * 4, n), [1.0])
        errs.append(rows[0].relative_error)
    assert errs[2] < errs[1] < errs[0]


def test_symbol_unnormalized_ratio_constant(unit_kernel):
    # plain |x-y|^(-1-2s) kernel: eigenvalues are a constant multiple of
    # |xi|^(2s) across the resolved band (the multiple is 1/C(1, 1/2) = pi)
    g = Grid(1, np.pi * 4, 1024)
    rows = symbol_eigencheck(unit_kernel, g, [0.5, 1.0, 2.0])
    ratios = [r.eigenvalue / r.target for r in rows]
    assert np.allclose(ratios, np.pi, rtol=2e-3)
    assert max(ratios) / min(ratios) == pytest.approx(1.0, abs=2e-3)


def test_symbol_rejects_modulated_kernels():
    from nlparab.kernels import MODULATIONS
    k = KernelSpec.modulated(1, 0.5, 2.0, MODULATIONS["sin_cos"])
    with pytest.raises(UnsupportedKernelError):
        symbol_eigencheck(k, Grid(1, np.pi, 65), [1.0])


def test_reference_quadrature_closed_forms():
    res = reference_quadrature(lambda x: x ** -2.0, (1.0, np.inf), 1e-9)
    assert res.value == pytest.approx(1.0, abs=1e-8)
    # two-sided version: the integral over |x| > 1 of x^-2 is 2
    left = reference_quadrature(lambda x: x ** -2.0, (-np.inf, -1.0), 1e-9)
    assert res.value + left.value == pytest.approx(2.0, abs=1e-7)
    both = reference_quadrature(lambda x: np.exp(-x * x),
                                (-np.inf, np.inf), 1e-10)
    assert both.value == pytest.approx(np.sqrt(np.pi), abs=1e-8)
    sing = reference_quadrature(lambda x: abs(x) ** -0.5, (0.0, 1.0), 1e-7)
    assert sing.value == pytest.approx(2.0, abs=1e-5)


def test_reference_quadrature_split_points():
    res = reference_quadrature(lambda x: abs(x - 0.3) ** -0.5, (0.0, 1.0),
                               1e-7, singular_points=(0.3,))
    expect = 2 * (0.3 ** 0.5) + 2 * (0.7 ** 0.5)
    assert res.value == pytest.approx(expect, abs=1e-5)


def test_reference_quadrature_budget_error():
    with pytest.raises(QuadratureBudgetError) as info:
        reference_quadrature(lambda x: np.cos(50 * x) ** 2, (0.0, 100.0),
                             1e-14, max_intervals=16)
    assert np.isfinite(info.value.value)
    assert info.value.error_estimate > 1e-14


def test_sampled_kernel_is_discrete_solution(heat_field_pair, frac_kernel):
    # the sampled closed-form kernel, with itself as exterior data, passes
    # the weak-residual gate: it is an exact global solution
    from nlparab.exterior import heat_kernel_exterior
    from nlparab.solver import (field_dt, make_bump_battery,
                                residual_gate_tolerance,
                                weak_residual_battery)
    field = heat_field_pair[0]
    ext = heat_kernel_exterior(0.0)
    tests = make_bump_battery(field.grid, field.times, 8, seed=77)
    res = weak_residual_battery(field, frac_kernel, ext, tests)
    dt = field_dt(field)
    tols = np.array([residual_gate_tolerance(field, dt, t) for t in tests])
    assert np.all(np.abs(res) <= tols)


def test_oracle_vs_lattice_on_smooth_integrands():
    # 50 randomized smooth bump-times-polynomial integrands: midpoint-cell
    # lattice sums against the adaptive oracle, within combined estimates
    rng = np.random.default_rng(21)
    g = Grid(1, 3.0, 3001)
    xs, h = g.axis_nodes, g.spacing
    for _ in range(50):
        c = rng.uniform(-1, 1)
        w = rng.uniform(0.5, 1.5)
        a0, a1, a2 = rng.uniform(-2, 2, 3)

        def f(x, c=c, w=w, a0=a0, a1=a1, a2=a2):
            return (a0 + a1 * x + a2 * x * x) * np.exp(-((x - c) / w) ** 2)

        lattice = float(f(xs).sum() * h)
        lattice_err = abs(lattice - float(f(xs[::2]).sum() * 2 * h))
        res = reference_quadrature(f, (-3.0 - h / 2, 3.0 + h / 2), 1e-9)
        assert abs(lattice - res.value) <= 10 * (lattice_err
                                                 + res.error_estimate + 1e-9)
