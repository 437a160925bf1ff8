"""Acceptance criteria, one test per criterion, at their stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.  Everything is 1D desk scale: N <= 2048, minutes for
the whole module.
"""

import time

import numpy as np
import pytest

from nlparab.analysis import (EnsembleSpec, TAIL_LEMMA_IDS, THEOREM_IDS,
                              check_sobolev, check_weighted_poincare,
                              estimate_constants, scan_algebraic_constant,
                              tail_necessity_probe)
from nlparab.cli import main
from nlparab.exterior import constant_exterior, heat_kernel_exterior
from nlparab.geometry import Grid, SpaceTimeField
from nlparab.kernels import MODULATIONS, KernelSpec
from nlparab.nonlocal_op import (DEFAULT_PHI_SAMPLE_FACTORS,
                                 check_phi_eigenbounds)
from nlparab.oracles import fractional_heat_kernel, symbol_eigencheck
from nlparab.solver import SolveSpec, solve
from nlparab.tails import TailQuery, tail, tail_sup



def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_1_oracle_convergence():
    """Closed-form evolution reproduced within 2% at N=1024, dt=1/256."""
    started = time.perf_counter()
    kernel = KernelSpec.fractional_laplacian(1, 0.5)
    errs = []
    for n, dt in ((256, 1 / 64), (512, 1 / 128), (1024, 1 / 256)):
        grid = Grid(1, 8.0, n)
        init = fractional_heat_kernel(1, 0.5, grid.axis_nodes, 1.0)
        field = solve(SolveSpec(kernel=kernel, grid=grid, initial=init,
                                exterior=heat_kernel_exterior(1.0),
                                t_span=(0.0, 1.0), dt=dt))
        ref = fractional_heat_kernel(1, 0.5, grid.axis_nodes, 2.0)
        errs.append(float(np.abs(field.values[-1] - ref).max()
                          / np.abs(ref).max()))
    elapsed = time.perf_counter() - started
    ok = errs[2] <= 0.02 and errs[0] > errs[1] > errs[2] and elapsed < 60.0
    _report("criterion 1 (oracle convergence)", ok,
            f"relative errors {[f'{e:.4%}' for e in errs]} in {elapsed:.1f}s")


def test_criterion_2_exactness_on_constants():
    """u = c with matching exterior preserved to 1e-12 over 100 steps."""
    worst = 0.0
    grid = Grid(1, 3.0, 65)
    for kernel in (KernelSpec.fractional_laplacian(1, 0.5),
                   KernelSpec.constant_multiple(1, 0.35),
                   KernelSpec.modulated(1, 0.6, 2.0, MODULATIONS["sin_cos"])):
        c = 2.25
        field = solve(SolveSpec(kernel=kernel, grid=grid,
                                initial=np.full(grid.n_points, c),
                                exterior=constant_exterior(c),
                                t_span=(0.0, 1.0), dt=0.01))
        worst = max(worst, float(np.abs(field.values - c).max()))
    ok = worst < 1e-12
    _report("criterion 2 (constants exact)", ok,
            f"worst drift {worst:.2e} over 100 steps, all families")


def test_criterion_3_discrete_maximum_principle():
    """Zero violations over a 20-member random ensemble, implicit Euler."""
    rng = np.random.default_rng(2024)
    grid = Grid(1, 4.0, 128)
    kernel = KernelSpec.fractional_laplacian(1, 0.5)
    violations = 0
    worst = 0.0
    for _ in range(20):
        init = rng.uniform(-2.0, 3.0, grid.n_points)
        level = float(rng.uniform(-1.0, 1.0))
        field = solve(SolveSpec(kernel=kernel, grid=grid, initial=init,
                                exterior=constant_exterior(level),
                                t_span=(0.0, 1.0), dt=1 / 32))
        lo, hi = min(init.min(), level), max(init.max(), level)
        slack = 1e-10 * max(1.0, abs(lo), abs(hi))  # roundoff guard
        over = max(field.values.max() - hi, lo - field.values.min())
        worst = max(worst, over)
        if over > slack:
            violations += 1
    ok = violations == 0
    _report("criterion 3 (maximum principle)", ok,
            f"{violations} violations in 20 members "
            f"(worst overshoot {worst:.2e})")


def test_criterion_4_symbol_normalization():
    """Plane-wave eigenvalues match |xi|^(2s) within 2% at N=2048."""
    kernel = KernelSpec.fractional_laplacian(1, 0.5)
    grid = Grid(1, 4 * np.pi, 2048)
    rows = symbol_eigencheck(kernel, grid, (0.5, 1.0, 2.0))
    rels = [row.relative_error for row in rows]
    ok = all(r <= 0.02 for r in rels)
    _report("criterion 4 (symbol normalization)", ok,
            "relative errors " + ", ".join(f"{r:.2e}" for r in rels))


def test_criterion_5_theorem_stability():
    """20 nonnegative members: every C_emp finite, ratios in [1/2, 2]."""
    spec = EnsembleSpec(count=20, seed=501, base_n=256, dt=1 / 64, delta=0.2)
    results = estimate_constants(spec, THEOREM_IDS)
    bad = [r for r in results if r.report is None or not r.report.passed]
    ratios = [r.report.refinement_ratio for r in results if r.report]
    ok = not bad and all(0.5 <= x <= 2.0 for x in ratios)
    _report("criterion 5 (theorem stability)", ok,
            f"{len(results)} checks, ratio range "
            f"[{min(ratios):.3f}, {max(ratios):.3f}], {len(bad)} failures")


def test_criterion_6_tail_necessity():
    """Tail-free ratio grows >= 10x while tail-inclusive C_emp moves <= 2x."""
    points = tail_necessity_probe(masses=(1.0, 10.0, 100.0))
    growth = points[-1].ratio_free / points[0].ratio_free
    cs = [p.c_emp for p in points]
    spread = max(cs) / min(cs)
    ok = growth >= 10.0 and spread <= 2.0
    _report("criterion 6 (tail necessity)", ok,
            f"free-ratio growth {growth:.1f}x, C_emp spread {spread:.2f}x")


def test_criterion_7_lemma_suites():
    """Algebraic scans clean; Poincare/Sobolev stable; phi ratios stable."""
    details = []
    ok = True
    # algebraic inequality, 1e5 tuples per part, scanned constants
    for q in (1.5, 2.0, 4.0, 8.0):
        res = scan_algebraic_constant("i", q, count=100000, seed=7)
        ok &= res["violations"] == 0
        details.append(f"i(q={q}):c={res['c']:.3g}")
    for q in (0.25, 0.5, 0.75):
        res = scan_algebraic_constant("ii", q, count=100000, seed=7)
        ok &= res["violations"] == 0
        details.append(f"ii(q={q}):kappa={res['kappa']:.3g}")
    # weighted Poincare under one refinement
    cs = []
    for n in (257, 513):
        grid = Grid(1, 2.0, n)
        values = np.exp(-grid.axis_nodes ** 2) * (1 + 0.4 * grid.axis_nodes)
        cs.append(check_weighted_poincare(grid, values, 0.0, 1.0, 0.5).c_emp)
    ok &= 0.5 <= cs[1] / cs[0] <= 2.0
    details.append(f"poincare ratio {cs[1] / cs[0]:.3f}")
    # fractional embedding under one refinement (n > 2s regime)
    cs = []
    for n in (257, 513):
        grid = Grid(1, 2.0, n)
        values = np.exp(-2 * grid.axis_nodes ** 2)
        cs.append(check_sobolev((grid, values), 1.0, "spatial", 0.25).c_emp)
    ok &= 0.5 <= cs[1] / cs[0] <= 2.0
    details.append(f"sobolev ratio {cs[1] / cs[0]:.3f}")
    # comparison-bump eigenbound ratios across r in {0.5, 1, 2}
    kernel = KernelSpec.fractional_laplacian(1, 0.5)
    rep = check_phi_eigenbounds(kernel, 1.0, DEFAULT_PHI_SAMPLE_FACTORS, tol=1e-7)
    ok &= rep.passed and rep.spread <= 0.2
    details.append(f"phi spread {rep.spread:.2e}")
    _report("criterion 7 (lemma suites)", bool(ok), "; ".join(details))


def test_criterion_8_tail_lemma_checks():
    """Tail bounds finite and refinement stable; closed forms within 1%."""
    # closed forms on the constant unit field
    grid = Grid(1, 4.0, 129)
    times = np.linspace(0.0, 2.0, 65)
    ones = SpaceTimeField(grid, times, np.ones((65, grid.n_points)),
                          order_s=0.5)
    ext = constant_exterior(1.0)
    q = TailQuery(0.0, 1.0, 0.5, 1.5)
    t_avg = tail(ones, ext, q)
    t_sup = tail_sup(ones, ext, q)
    closed_ok = (abs(t_avg - 2.0) <= 0.02 and abs(t_sup - 2.0) <= 0.02)
    # ensemble stability for the three bounds
    spec = EnsembleSpec(count=10, seed=808, base_n=256, dt=1 / 64)
    results = estimate_constants(spec, TAIL_LEMMA_IDS)
    bad = [r for r in results if r.report is None or not r.report.passed]
    ratios = [r.report.refinement_ratio for r in results if r.report]
    ok = closed_ok and not bad
    _report("criterion 8 (tail bounds)", ok,
            f"closed forms ({t_avg:.4f}, {t_sup:.4f}) vs 2; "
            f"{len(results)} ensemble checks, {len(bad)} failures, "
            f"ratio range [{min(ratios):.3f}, {max(ratios):.3f}]")


def test_criterion_9_determinism(tmp_path):
    """Fixed-seed estimate runs are byte identical."""
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"""
[run]
seed = 4242

[kernel]
family = fractional_laplacian
order_s = 0.5

[grid]
half_width_L = 4.0
nodes_N = 96

[time]
t_end = 2.0
dt = 0.03125

[geometry]
radius_r = 0.5
radius_R = 1.5
time_t0 = 1.0
delta = 0.2

[ensemble]
count = 3

[output]
directory = {tmp_path / 'a'}
""")
    assert main(["estimate", "--config", str(cfg)]) == 0
    assert main(["estimate", "--config", str(cfg),
                 "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    b = (tmp_path / "b" / "results.csv").read_bytes()
    sa = (tmp_path / "a" / "summary.json").read_bytes()
    sb = (tmp_path / "b" / "summary.json").read_bytes()
    ok = a == b and sa == sb
    _report("criterion 9 (determinism)", ok,
            f"results.csv {len(a)} bytes identical: {a == b}; "
            f"summary.json identical: {sa == sb}")
