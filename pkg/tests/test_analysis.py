import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlparab.analysis import (EnsembleSpec, THEOREM_IDS, TAIL_LEMMA_IDS,
                              check_algebraic_inequality, check_sobolev,
                              check_weighted_poincare, default_alpha,
                              estimate_constants, run_member,
                              scan_algebraic_constant, sobolev_exponent,
                              tail_necessity_probe, verify_harnack,
                              verify_local_boundedness,
                              verify_local_boundedness_signed,
                              verify_weak_harnack, with_refinement)
from nlparab.errors import (GeometryError, PreconditionError,
                            UnsupportedRegimeError)
from nlparab.exterior import constant_exterior, zero_exterior
from nlparab.geometry import Grid, SpaceTimeField
from nlparab.solver import solve


@pytest.fixture(scope="module")
def ens():
    return EnsembleSpec(count=2, seed=99, base_n=128, dt=1 / 32, delta=0.2)


def test_default_alpha_midpoint():
    assert default_alpha(0.5) == pytest.approx(1.5)
    assert 1.0 < default_alpha(0.3) < 2 ** 0.6


# ---------------------------------------------------------------------------
# constant-field closed forms


def test_harnack_on_constant(ones_field):
    rep = verify_harnack(ones_field, constant_exterior(1.0), 0.0, 0.5, 1.5,
                         1.0)
    assert rep.lhs == 1.0
    assert rep.rhs_components == {"inf": 1.0, "tail": 0.0}
    assert rep.c_emp == 1.0
    assert rep.arithmetic_consistent()


def test_weak_harnack_on_constant(ones_field):
    rep = verify_weak_harnack(ones_field, constant_exterior(1.0), 0.0, 0.5,
                              1.5, 1.0)
    assert rep.c_emp == 1.0
    assert rep.arithmetic_consistent()


def test_local_bound_on_constant(ones_field):
    # tail(u_+) = 2 for the unit field, so C = 1 - 2 delta for delta < 1/2
    for delta in (0.1, 0.25, 0.4):
        rep = verify_local_boundedness(ones_field, constant_exterior(1.0),
                                       0.0, 0.5, 1.0, theta=0.5, delta=delta)
        assert rep.c_emp == pytest.approx(1.0 - 2.0 * delta, rel=1e-9)
        assert rep.arithmetic_consistent()


def test_local_bound_signed_on_constant(ones_field):
    rep = verify_local_boundedness_signed(ones_field, constant_exterior(1.0),
                                          0.0, 0.5, 1.5, 1.0, 0.5, 0.25)
    assert rep.c_emp == pytest.approx(1.0, rel=1e-12)
    assert rep.rhs_components["tail"] == 0.0


def test_local_bound_nonpositive_degenerates(ones_field):
    neg = ones_field.scaled(-1.0)
    rep = verify_local_boundedness(neg, constant_exterior(-1.0), 0.0, 0.5,
                                   1.0, 0.5, 0.25)
    assert rep.degenerate
    assert rep.passed


def test_harnack_parameter_validation(ones_field):
    ext = constant_exterior(1.0)
    with pytest.raises(PreconditionError):
        verify_harnack(ones_field, ext, 0.0, 1.0, 1.5, 1.0)  # r >= R/2
    with pytest.raises(PreconditionError):
        verify_harnack(ones_field, ext, 0.0, 0.5, 1.5, 1.0, alpha=2.5)
    with pytest.raises(PreconditionError):
        verify_local_boundedness(ones_field, ext, 0.0, 0.5, 1.0, theta=1.2)


def test_harnack_positivity_gate(ones_field):
    neg = ones_field.scaled(-1.0)
    with pytest.raises(PreconditionError):
        verify_harnack(neg, constant_exterior(-1.0), 0.0, 0.5, 1.5, 1.0)


def test_geometry_containment_checked(ones_field):
    ext = constant_exterior(1.0)
    with pytest.raises(GeometryError):
        verify_harnack(ones_field, ext, 0.0, 0.5, 1.5, 0.2)  # window leaks
    with pytest.raises(GeometryError):
        verify_harnack(ones_field, ext, 3.8, 0.5, 1.5, 1.0)  # ball leaks


def test_scale_invariance_of_verdicts(solved_bump):
    # all theorem sides are 1-homogeneous: scaling field and data leaves
    # every constant unchanged
    spec, field = solved_bump
    lam = 37.5
    scaled = field.scaled(lam)
    for verify, args in (
            (verify_harnack, (0.0, 0.5, 1.5, 1.0)),
            (verify_weak_harnack, (0.0, 0.5, 1.5, 1.0)),
            (verify_local_boundedness, (0.0, 0.5, 1.0, 0.5, 0.2)),
            (verify_local_boundedness_signed, (0.0, 0.5, 1.5, 1.0, 0.5, 0.2))):
        base = verify(field, zero_exterior(), *args)
        big = verify(scaled, zero_exterior(), *args)
        assert big.c_emp == pytest.approx(base.c_emp, rel=1e-10)


def test_report_arithmetic_recompute(solved_bump):
    spec, field = solved_bump
    rep = verify_harnack(field, zero_exterior(), 0.0, 0.5, 1.5, 1.0)
    assert rep.arithmetic_consistent()
    bad = rep.__class__(rep.theorem_id, rep.geometry, rep.lhs,
                        rep.rhs_components, rep.c_emp * 1.01)
    assert not bad.arithmetic_consistent()


def test_with_refinement_rules(ones_field):
    ext = constant_exterior(1.0)
    rep = verify_harnack(ones_field, ext, 0.0, 0.5, 1.5, 1.0)
    paired = with_refinement(rep, rep)
    assert paired.refinement_ratio == 1.0
    assert paired.passed
    worse = rep.__class__(rep.theorem_id, rep.geometry, rep.lhs,
                          rep.rhs_components, 3.0 * rep.c_emp)
    assert not with_refinement(rep, worse).passed


# ---------------------------------------------------------------------------
# algebraic inequality


def test_algebraic_equality_cases():
    for part, cands in (("i", (1.0,)), ("ii", (1.0, 1.0))):
        res = check_algebraic_inequality(part, 2.0 if part == "i" else 0.5,
                                         3.0, 3.0, 0.7, 0.7, cands)
        assert res.holds
        assert res.slack == pytest.approx(0.0, abs=1e-12)


def test_algebraic_domain_validation():
    with pytest.raises(PreconditionError):
        check_algebraic_inequality("i", 0.5, 1.0, 1.0, 1.0, 1.0, (1.0,))
    with pytest.raises(PreconditionError):
        check_algebraic_inequality("ii", 2.0, 1.0, 1.0, 1.0, 1.0, (1.0, 1.0))
    with pytest.raises(PreconditionError):
        check_algebraic_inequality("i", 2.0, -1.0, 1.0, 1.0, 1.0, (1.0,))
    with pytest.raises(PreconditionError):
        check_algebraic_inequality("i", 2.0, 1.0, 1.0, -1.0, 1.0, (1.0,))


def test_algebraic_scan_small():
    res = scan_algebraic_constant("i", 2.0, count=20000, seed=1)
    assert res["violations"] == 0
    assert np.isfinite(res["c"])
    res2 = scan_algebraic_constant("ii", 0.5, count=20000, seed=1)
    assert res2["violations"] == 0
    assert res2["c1"] == pytest.approx(0.5 / 0.5 / res2["kappa"])


@given(q=st.floats(min_value=0.05, max_value=0.95),
       a=st.floats(min_value=1e-3, max_value=1e3),
       b=st.floats(min_value=1e-3, max_value=1e3),
       alpha=st.floats(min_value=0.0, max_value=10.0),
       beta=st.floats(min_value=0.0, max_value=10.0))
def test_algebraic_part_ii_rate_constants_hold(q, a, b, alpha, beta):
    # the stated rates certify the bound pointwise across the whole domain
    rate1, rate2 = q / (1 - q), q / (1 - q) + 1 / q
    res = check_algebraic_inequality("ii", q, a, b, alpha, beta,
                                     (rate1, rate2))
    assert res.holds


def test_algebraic_detects_too_small_constant():
    # at q = 8 the unit constant genuinely fails on wide-range tuples
    from nlparab.analysis import sample_algebraic_tuples
    a, b, al, be = sample_algebraic_tuples("i", 8.0, 100000, 5)
    res = check_algebraic_inequality("i", 8.0, a, b, al, be, (0.01,))
    assert not res.holds


# ---------------------------------------------------------------------------
# weighted Poincare and Sobolev


def test_poincare_constant_field_degenerates():
    g = Grid(1, 2.0, 65)
    rep = check_weighted_poincare(g, np.full(g.n_points, 3.0), 0.0, 1.0, 0.5)
    assert rep.degenerate


def test_poincare_linear_profile_stable():
    cs = []
    for n in (129, 257):
        g = Grid(1, 2.0, n)
        rep = check_weighted_poincare(g, g.axis_nodes, 0.0, 1.0, 0.5)
        assert rep.finite and rep.c_emp > 0
        cs.append(rep.c_emp)
    assert 0.5 <= cs[1] / cs[0] <= 2.0


def test_poincare_scaling_invariance():
    # (f, r) -> (f(./rho), rho r) leaves the constant unchanged exactly
    rho = 4.0
    n = 129
    g1 = Grid(1, 2.0, n)
    g2 = Grid(1, 2.0 * rho, n)
    f1 = np.sin(g1.axis_nodes)
    f2 = np.sin(g2.axis_nodes / rho)
    a = check_weighted_poincare(g1, f1, 0.0, 1.0, 0.5)
    b = check_weighted_poincare(g2, f2, 0.0, rho, 0.5)
    assert a.c_emp == pytest.approx(b.c_emp, rel=1e-12)


def test_poincare_2d_snapshot():
    g = Grid(2, 1.5, 21)
    pts = g.points()
    v = pts[:, 0] + 0.5 * pts[:, 1] ** 2
    rep = check_weighted_poincare(g, v, (0.0, 0.0), 1.0, 0.5)
    assert rep.finite and rep.c_emp > 0


def test_poincare_profile_names():
    g = Grid(1, 2.0, 65)
    for name in ("cone", "smoothstep"):
        rep = check_weighted_poincare(g, g.axis_nodes ** 2, 0.0, 1.0, 0.5,
                                      psi_profile=name)
        assert rep.finite


def test_sobolev_exponent_paper_value():
    assert sobolev_exponent(2, 0.5) == pytest.approx(2.0)
    with pytest.raises(UnsupportedRegimeError):
        sobolev_exponent(1, 0.5)


def test_sobolev_constant_function():
    g = Grid(1, 2.0, 65)
    rep = check_sobolev((g, np.full(g.n_points, 2.0)), 1.0, "spatial", 0.25)
    assert rep.finite
    # seminorm vanishes: the bound reduces to comparing mean powers
    assert rep.c_emp == pytest.approx(
        (2.0 ** 4) ** 0.5 / 2.0 ** 2, rel=1e-2)


def test_sobolev_bumps_refinement_stable():
    rng = np.random.default_rng(31)
    ratios = []
    for _ in range(5):
        c = rng.uniform(-0.3, 0.3)
        w = rng.uniform(0.3, 0.8)
        cs = []
        for n in (129, 257):
            g = Grid(1, 2.0, n)
            v = np.exp(-((g.axis_nodes - c) / w) ** 2)
            cs.append(check_sobolev((g, v), 1.0, "spatial", 0.25).c_emp)
        ratios.append(cs[1] / cs[0])
    assert all(0.5 <= r <= 2.0 for r in ratios)


def test_sobolev_parabolic_mode(heat_field_pair):
    rep = check_sobolev(heat_field_pair[0], 1.0, "parabolic", 0.25)
    assert rep.finite and rep.c_emp > 0
    rep_fine = check_sobolev(heat_field_pair[1], 1.0, "parabolic", 0.25)
    assert 0.5 <= rep_fine.c_emp / rep.c_emp <= 2.0


def test_sobolev_2d_snapshot():
    g = Grid(2, 1.5, 25)
    pts = g.points()
    v = np.exp(-(pts ** 2).sum(axis=1))
    rep = check_sobolev((g, v), 1.0, "spatial", 0.5)
    assert rep.finite and rep.c_emp > 0


def test_sobolev_rejects_supercritical():
    g = Grid(1, 2.0, 33)
    with pytest.raises(UnsupportedRegimeError):
        check_sobolev((g, np.ones(g.n_points)), 1.0, "spatial", 0.5)


# ---------------------------------------------------------------------------
# ensembles


def test_ensemble_member_deterministic(ens):
    a = run_member(ens, 0, ("harnack",))
    b = run_member(ens, 0, ("harnack",))
    assert a[0].report.c_emp == b[0].report.c_emp


def test_ensemble_all_theorems_pass(ens):
    results = estimate_constants(ens, THEOREM_IDS + TAIL_LEMMA_IDS)
    assert len(results) == ens.count * 7
    for res in results:
        assert res.error is None, (res.theorem_id, res.error)
        assert res.report.passed
        assert res.report.degenerate or np.isfinite(res.report.c_emp)


def test_ensemble_unit_member_matches_trivial_constants():
    # a single member with constant unit data reproduces the closed forms
    spec = EnsembleSpec(count=1, seed=0, base_n=65, dt=1 / 16,
                        bump_count_range=(1, 1), amplitude_range=(1.0, 1.0),
                        delta=0.25)

    class Frozen(EnsembleSpec):
        def member_initial(self, rng, grid):
            return np.ones(grid.n_points)

        def member_exterior(self, rng):
            return constant_exterior(1.0)

    frozen = Frozen(**{f.name: getattr(spec, f.name)
                       for f in spec.__dataclass_fields__.values()})
    rows = run_member(frozen, 0, THEOREM_IDS)
    by_id = {r.theorem_id: r.report for r in rows}
    assert by_id["harnack"].c_emp == pytest.approx(1.0, abs=1e-12)
    assert by_id["weak_harnack"].c_emp == pytest.approx(1.0, abs=1e-12)
    assert by_id["local_bound"].c_emp == pytest.approx(0.5, abs=1e-9)
    assert by_id["local_bound_signed"].c_emp == pytest.approx(1.0, abs=1e-9)


def test_negative_exterior_ensemble_stable():
    # far negative mass: the u_- tail components activate, constants stay
    # finite and refinement stable while the fields remain positive locally
    spec = EnsembleSpec(count=3, seed=17, base_n=128, dt=1 / 32, delta=0.2,
                        exterior_kind="negative_annulus", negative_mass=2.0,
                        annulus=(30.0, 50.0))
    results = estimate_constants(
        spec, ("local_bound_signed", "tail_plus_by_minus", "weak_harnack"))
    for res in results:
        assert res.error is None, (res.theorem_id, res.error)
        assert res.report.passed
    signed = [r.report for r in results
              if r.theorem_id == "local_bound_signed"]
    assert all(rep.rhs_components["tail"] > 0 for rep in signed)


def test_modulated_kernel_ensemble():
    spec = EnsembleSpec(count=2, seed=23, base_n=96, dt=1 / 32, delta=0.2,
                        kernel_family="modulated", lam=2.0,
                        modulation="sin_cos")
    results = estimate_constants(spec, ("harnack", "weak_harnack"))
    for res in results:
        assert res.error is None, (res.theorem_id, res.error)
        assert res.report.passed


@pytest.mark.parametrize("order,r,big_r", [(0.35, 0.35, 1.1),
                                           (0.75, 0.6, 1.5)])
def test_ensemble_across_kernel_orders(order, r, big_r):
    # geometry windows scale with r^(2s); small orders need smaller radii
    # for the two-sided weak-Harnack window to fit the solved span
    spec = EnsembleSpec(count=2, seed=5, base_n=128, dt=1 / 32, delta=0.2,
                        order=order, r=r, big_r=big_r,
                        tail_t1=1.0 - 0.5 * r ** (2 * order))
    results = estimate_constants(spec, THEOREM_IDS + TAIL_LEMMA_IDS)
    for res in results:
        assert res.error is None, (res.theorem_id, res.error)
        assert res.report.passed


def test_member_error_recorded_not_raised():
    # geometry that cannot fit the solved window becomes a row error
    spec = EnsembleSpec(count=1, seed=3, base_n=65, dt=1 / 16, t_end=0.5,
                        t0=2.0)
    rows = run_member(spec, 0, ("harnack",))
    assert rows[0].report is None
    assert "harnack" in rows[0].theorem_id
    assert rows[0].error


def test_local_bound_delta_sweep(solved_bump):
    # the constant grows as the tail weight shrinks, stably under refinement
    spec, field = solved_bump
    mixed = SpaceTimeField(field.grid, field.times,
                           field.values - 0.3 * field.values.mean(),
                           order_s=0.5)
    cs = {}
    for delta in (0.1, 0.5, 0.9):
        cs[delta] = verify_local_boundedness(mixed, zero_exterior(), 0.0,
                                             0.5, 1.0, 0.5, delta).c_emp
    assert cs[0.1] > cs[0.5] > cs[0.9]
    fine = solve(spec.refined())
    mixed_fine = SpaceTimeField(fine.grid, fine.times,
                                fine.values - 0.3 * field.values.mean(),
                                order_s=0.5)
    for delta in (0.1, 0.5, 0.9):
        ratio = verify_local_boundedness(
            mixed_fine, zero_exterior(), 0.0, 0.5, 1.0, 0.5,
            delta).c_emp / cs[delta]
        assert 0.5 <= ratio <= 2.0


def test_theorems_on_exact_global_solution(heat_field_pair):
    # the sampled closed-form kernel is globally positive: tail terms of u_-
    # vanish and every constant is finite and refinement stable
    from nlparab.exterior import heat_kernel_exterior
    ext = heat_kernel_exterior(0.0)
    geo = dict(x0=0.0, r=0.25, big_r=0.7, t0=1.5)
    reps = []
    for f in heat_field_pair:
        rh = verify_harnack(f, ext, geo["x0"], geo["r"], geo["big_r"],
                            geo["t0"])
        rw = verify_weak_harnack(f, ext, geo["x0"], geo["r"], geo["big_r"],
                                 geo["t0"])
        assert rh.rhs_components["tail"] == 0.0
        assert rw.rhs_components["tail"] == 0.0
        assert rh.lhs <= rh.c_emp * rh.rhs_components["inf"] + 1e-12
        reps.append((rh.c_emp, rw.c_emp))
    assert 0.5 <= reps[1][0] / reps[0][0] <= 2.0
    assert 0.5 <= reps[1][1] / reps[0][1] <= 2.0


def test_tail_necessity_probe_quick():
    # two-mass version at the tuned resolution; the full three-mass sweep
    # runs in the acceptance suite
    pts = tail_necessity_probe(masses=(1.0, 100.0))
    assert pts[1].ratio_free / pts[0].ratio_free >= 10.0
    cs = [p.c_emp for p in pts]
    assert max(cs) / min(cs) <= 2.0
