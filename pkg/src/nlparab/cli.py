"""Command-line front end: solve, tail, verify, estimate, oracle, lemma-check.

All behaviour is a pure function of (config file, seed): result tables use
deterministic float formatting (shortest round-trip repr) and contain no
wall-clock or locale-dependent content, so a rerun with the same seed is
byte identical.  Timings appear only in the solve command's metadata file.

Exit codes: 0 all requested verifications pass, 2 a verification failed,
1 configuration or runtime error.  A run that dies after creating its
output directory leaves a FAILED marker file there.
"""

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import oracles, tails
from .analysis import (MemberResult, TAIL_LEMMA_IDS, THEOREM_IDS,
                       check_sobolev, check_weighted_poincare, run_member,
                       scan_algebraic_constant)
from .config import RunConfig, parse_config
from .errors import NlparabError
from .geometry import Grid, save_field
from .kernels import KernelSpec
from .nonlocal_op import DEFAULT_PHI_SAMPLE_FACTORS, check_phi_eigenbounds
from .solver import (SolveSpec, make_bump_battery, solve,
                     weak_residual_battery)

RESULT_COLUMNS = ("theorem_id", "member_id", "N", "dt", "s", "lambda",
                  "alpha", "theta", "delta", "lhs", "rhs_inf", "rhs_mean",
                  "rhs_tail", "C_emp", "refinement_ratio", "pass")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_summary(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def result_row(cfg: RunConfig, res: MemberResult) -> tuple:
    rep = res.report
    nan = math.nan
    if rep is None:
        return (res.theorem_id, res.member_id, res.n, res.dt,
                cfg.kernel.order, cfg.kernel.lam, nan, nan, nan,
                nan, nan, nan, nan, nan, nan, False)
    comp = rep.rhs_components
    rhs_inf = comp.get("inf", nan)
    rhs_mean = comp.get("mean", nan)
    rhs_tail = comp.get("tail", comp.get("sum", nan))
    geo = rep.geometry
    return (res.theorem_id, res.member_id, res.n, res.dt,
            cfg.kernel.order, cfg.kernel.lam,
            geo.get("alpha", nan), geo.get("theta", nan),
            geo.get("delta", nan), rep.lhs, rhs_inf, rhs_mean, rhs_tail,
            rep.c_emp, rep.refinement_ratio, rep.passed)


def _base_solvespec(cfg: RunConfig) -> SolveSpec:
    xs = cfg.grid.axis_nodes
    # default initial data: a unit bump; ensemble members randomize theirs
    init = np.exp(-(xs / (0.25 * cfg.grid.half_width)) ** 2)
    return SolveSpec(kernel=cfg.kernel, grid=cfg.grid, initial=init,
                     exterior=cfg.exterior, t_span=(cfg.t_start, cfg.t_end),
                     dt=cfg.dt, scheme=cfg.scheme)


def _refined_config(cfg: RunConfig) -> RunConfig:
    """--refine doubles the configured base resolution and halves dt."""
    grid = Grid(cfg.grid.dim, cfg.grid.half_width,
                2 * cfg.grid.nodes_per_axis)
    ens = replace(cfg.ensemble, base_n=grid.nodes_per_axis, dt=cfg.dt / 2)
    return replace(cfg, grid=grid, dt=cfg.dt / 2, ensemble=ens)


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    started = time.perf_counter()
    spec = _base_solvespec(cfg)
    fld = solve(spec)
    solve_seconds = time.perf_counter() - started
    if "binary" in cfg.formats:
        save_field(fld, out / "field.field")
    if "csv" in cfg.formats:
        save_field(fld, out / "field.csv")
    tests = make_bump_battery(cfg.grid, fld.times, 20, cfg.seed)
    res = weak_residual_battery(fld, cfg.kernel, cfg.exterior, tests)
    meta = {
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "scheme": cfg.scheme,
        "grid": {"n": cfg.grid.dim, "L": cfg.grid.half_width,
                 "N": cfg.grid.nodes_per_axis},
        "time": {"t_start": cfg.t_start, "t_end": cfg.t_end, "dt": cfg.dt},
        "kernel": {"family": cfg.kernel.family, "s": cfg.kernel.order,
                   "lambda": cfg.kernel.lam},
        "timings_seconds": {"solve": solve_seconds},
        "residual_norms": {"max_abs": float(np.max(np.abs(res))),
                           "l2": float(np.linalg.norm(res))},
    }
    write_summary(out / "solve_meta.json", meta)
    return 0


def cmd_tail(cfg: RunConfig, out: Path) -> int:
    fld = solve(_base_solvespec(cfg))
    rows = []
    s = cfg.kernel.order
    t1, t2 = cfg.tail_t1, cfg.tail_t1 + cfg.r ** (2 * s)
    for radius in (cfg.r, cfg.big_r):
        for target in tails.TARGETS:
            q = tails.TailQuery(cfg.x0, radius, t1, t2, target)
            val, err = tails.tail_with_error(fld, cfg.exterior, q)
            sup = tails.tail_sup(fld, cfg.exterior, q)
            rows.append(("tail", cfg.x0, radius, t1, t2, target, val, err))
            rows.append(("tail_sup", cfg.x0, radius, t1, t2, target, sup, err))
    write_csv(out / "tails.csv",
              ("quantity", "x0", "r", "t1", "t2", "target", "value",
               "error_estimate"), rows)
    write_summary(out / "summary.json",
                  {"command": "tail", "seed": cfg.seed,
                   "config_sha256": cfg.sha256, "rows": len(rows)})
    return 0


def _verify_rows(cfg: RunConfig, theorems) -> list:
    spec = replace(cfg.ensemble, count=1)
    results = run_member(spec, 0, theorems)
    return results


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    theorems = THEOREM_IDS + TAIL_LEMMA_IDS
    results = _verify_rows(cfg, theorems)
    rows = [result_row(cfg, r) for r in results]
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    spec = replace(cfg.ensemble, count=1)
    base, fine, _ = spec.member_solvespecs(0)
    save_field(solve(base), out / "member0_base.field")
    save_field(solve(fine), out / "member0_fine.field")
    ok = all(r.report is not None and r.report.passed for r in results)
    write_summary(out / "summary.json", {
        "command": "verify", "seed": cfg.seed, "config_sha256": cfg.sha256,
        "pass": ok,
        "errors": [{"member": r.member_id, "theorem": r.theorem_id,
                    "message": r.error}
                   for r in results if r.error is not None],
    })
    return 0 if ok else 2


def cmd_estimate(cfg: RunConfig, out: Path, jobs: int) -> int:
    theorems = THEOREM_IDS + TAIL_LEMMA_IDS
    spec = cfg.ensemble
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_member = list(pool.map(
                lambda i: run_member(spec, i, theorems), range(spec.count)))
    else:
        per_member = [run_member(spec, i, theorems)
                      for i in range(spec.count)]
    results = [res for member in per_member for res in member]
    rows = [result_row(cfg, r) for r in results]
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)

    # replay anchor: member 0 fields
    base, fine, _ = spec.member_solvespecs(0)
    save_field(solve(base), out / "member0_base.field")
    save_field(solve(fine), out / "member0_fine.field")

    stats = {}
    for tid in theorems:
        cs = [r.report.c_emp for r in results
              if r.theorem_id == tid and r.report is not None
              and not r.report.degenerate]
        ratios = [r.report.refinement_ratio for r in results
                  if r.theorem_id == tid and r.report is not None
                  and np.isfinite(r.report.refinement_ratio)]
        fails = [r for r in results if r.theorem_id == tid
                 and (r.report is None or not r.report.passed)]
        stats[tid] = {
            "c_emp_max": max(cs) if cs else None,
            "c_emp_median": float(np.median(cs)) if cs else None,
            "ratio_min": min(ratios) if ratios else None,
            "ratio_max": max(ratios) if ratios else None,
            "failures": len(fails),
        }
    ok = all(r.report is not None and r.report.passed for r in results)
    write_summary(out / "summary.json", {
        "command": "estimate", "seed": cfg.seed,
        "config_sha256": cfg.sha256, "members": spec.count,
        "pass": ok, "theorems": stats,
        "errors": [{"member": r.member_id, "theorem": r.theorem_id,
                    "message": r.error}
                   for r in results if r.error is not None],
    })
    return 0 if ok else 2


def cmd_oracle(cfg: RunConfig, out: Path) -> int:
    rows = []
    ok = True
    # closed-form evolution comparison at three resolutions
    s = cfg.kernel.order
    kernel = KernelSpec.fractional_laplacian(1, 0.5)
    prev = math.inf
    for level in (2, 1, 0):
        n = max(cfg.grid.nodes_per_axis // (2 ** level), 16)
        dt = cfg.dt * (2 ** level)
        grid = Grid(1, cfg.grid.half_width, n)
        from .exterior import heat_kernel_exterior
        init = oracles.fractional_heat_kernel(1, 0.5, grid.axis_nodes, 1.0)
        fld = solve(SolveSpec(kernel=kernel, grid=grid, initial=init,
                              exterior=heat_kernel_exterior(1.0),
                              t_span=(0.0, 1.0), dt=dt))
        ref = oracles.fractional_heat_kernel(1, 0.5, grid.axis_nodes, 2.0)
        err = float(np.abs(fld.values[-1] - ref).max() / np.abs(ref).max())
        passed = err <= 0.02 or level > 0
        monotone = err <= prev
        rows.append(("heat_kernel_evolution", n, dt, err, 0.02,
                     passed and monotone))
        ok = ok and passed and monotone
        prev = err
    # lattice symbol against the requested exponent
    pi_l = round(cfg.grid.half_width / math.pi)
    sym_grid = Grid(1, math.pi * max(pi_l, 2), cfg.grid.nodes_per_axis)
    sym_kernel = KernelSpec.fractional_laplacian(1, s)
    for row in oracles.symbol_eigencheck(sym_kernel, sym_grid,
                                         (0.5, 1.0, 2.0)):
        passed = row.relative_error <= 0.02
        rows.append(("symbol", sym_grid.nodes_per_axis, row.frequency,
                     row.eigenvalue, row.target, passed))
        ok = ok and passed
    write_csv(out / "oracle.csv",
              ("check", "N", "parameter", "value", "reference", "pass"), rows)
    write_summary(out / "summary.json",
                  {"command": "oracle", "seed": cfg.seed,
                   "config_sha256": cfg.sha256, "pass": ok})
    return 0 if ok else 2


def cmd_lemma_check(cfg: RunConfig, out: Path) -> int:
    rows = []
    ok = True
    s = cfg.kernel.order
    # algebraic inequality, both parts
    for q in (1.5, 2.0, 4.0, 8.0):
        res = scan_algebraic_constant("i", q, count=100000, seed=cfg.seed)
        good = res["violations"] == 0
        rows.append(("algebraic_i", q, res["c"], math.nan, good))
        ok = ok and good
    for q in (0.25, 0.5, 0.75):
        res = scan_algebraic_constant("ii", q, count=100000, seed=cfg.seed)
        good = res["violations"] == 0
        rows.append(("algebraic_ii", q, res["c1"], res["c2"], good))
        ok = ok and good
    # comparison-bump eigenbounds
    samples = [f * cfg.r for f in DEFAULT_PHI_SAMPLE_FACTORS]
    rep = check_phi_eigenbounds(cfg.kernel, cfg.r, samples)
    rows.append(("phi_eigenbounds", cfg.r, rep.c1_emp, rep.spread,
                 rep.passed))
    ok = ok and rep.passed
    # weighted Poincare and Sobolev on a snapshot pair
    sob_s = min(s, 0.45)
    for name, check in (("weighted_poincare", lambda g, v:
                         check_weighted_poincare(g, v, 0.0, cfg.r, s)),
                        ("sobolev_spatial", lambda g, v:
                         check_sobolev((g, v), cfg.r, "spatial", sob_s))):
        cs = []
        for n in (cfg.grid.nodes_per_axis, 2 * cfg.grid.nodes_per_axis):
            g = Grid(1, cfg.grid.half_width, n)
            v = np.exp(-(g.axis_nodes / cfg.r) ** 2) * (1 + 0.3 * g.axis_nodes)
            cs.append(check(g, v).c_emp)
        ratio = cs[1] / cs[0] if cs[0] else math.inf
        good = bool(np.isfinite(ratio) and 0.5 <= ratio <= 2.0)
        rows.append((name, cfg.r, cs[0], ratio, good))
        ok = ok and good
    write_csv(out / "lemmas.csv",
              ("check", "parameter", "constant", "extra", "pass"), rows)
    write_summary(out / "summary.json",
                  {"command": "lemma-check", "seed": cfg.seed,
                   "config_sha256": cfg.sha256, "pass": ok})
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# entry point


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlparab",
        description="Simulation and verification toolkit for nonlocal "
                    "parabolic equations with symmetric elliptic kernels.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("solve", "run one evolution and store the field"),
            ("tail", "compute parabolic tails of a solved field"),
            ("verify", "verify the main inequalities on one run"),
            ("estimate", "ensemble study of empirical constants"),
            ("oracle", "compare solver and lattice symbol to closed forms"),
            ("lemma-check", "check the standalone lemmas")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker threads for ensemble members")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override")
        p.add_argument("--refine", action="store_true",
                       help="double N and halve dt before running")
    return parser


def run(cfg: RunConfig, jobs: int) -> int:
    """Dispatch a validated config; returns the process exit code."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.command == "solve":
            return cmd_solve(cfg, out)
        if cfg.command == "tail":
            return cmd_tail(cfg, out)
        if cfg.command == "verify":
            return cmd_verify(cfg, out)
        if cfg.command == "estimate":
            return cmd_estimate(cfg, out, jobs)
        if cfg.command == "oracle":
            return cmd_oracle(cfg, out)
        if cfg.command == "lemma-check":
            return cmd_lemma_check(cfg, out)
        raise NlparabError(f"unknown command {cfg.command!r}")
    except Exception as exc:
        (out / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
        raise


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text, command=args.command)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed,
                          ensemble=replace(cfg.ensemble, seed=args.seed))
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.refine:
            cfg = _refined_config(cfg)
        jobs = args.jobs if args.jobs is not None else cfg.jobs
        return run(cfg, jobs)
    except NlparabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - unexpected failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
