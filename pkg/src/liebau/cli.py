"""Command-line front end: ``liebau {certify,solve,green,reproduce-example}``."""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import certify as cert
from .config import RunConfig, build_problem, dump_config, load_config, parse_inline
from .errors import LiebauError
from .green import (GridFunction, build_kernel_params, eval_green, green_row_integral,
                    resonance_bound)
from .model import ShiftedProblem, coeff_extrema
from .reproduce import reproduce_example
from .solver import (Method, SolverConfig, default_guess, picard_solve, shooting_solve,
                     verify_localization)

EXIT_EXISTS, EXIT_UNDECIDED, EXIT_NONEXISTENT = 0, 1, 2
SWEEP_SIZE = 16


def _write(out_dir: Optional[str], name: str, text: str) -> None:
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
        fh.write(text)


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig(base_dir=os.getcwd())
    if args.problem:
        parse_inline(args.problem, "problem", cfg)
    if args.model:
        parse_inline(args.model, "model", cfg)
    if args.m is not None:
        cfg.set("certify", "m", args.m)
    if args.r1 is not None:
        cfg.set("certify", "R1", args.r1)
    if args.r2 is not None:
        cfg.set("certify", "R2", args.r2)
    if args.grid is not None:
        cfg.set("solve" if args.command == "solve" else "certify", "N" if args.command == "solve" else "grid",
                args.grid)
    if args.tol is not None:
        cfg.set("solve", "tol", args.tol)
    if getattr(args, "x0", None) is not None:
        cfg.set("solve", "x0", args.x0)
    if getattr(args, "v0", None) is not None:
        cfg.set("solve", "v0", args.v0)
    if getattr(args, "method", None) is not None:
        cfg.set("solve", "method", args.method)
    return cfg


def sweep_values(p) -> List[float]:
    """Candidate shifts, log-spaced below the resonance bound."""
    bound = math.sqrt(resonance_bound(p.a, p.T))
    s_high = coeff_extrema(p.s)[1]
    lo, hi = math.sqrt(max(s_high, 1e-6)) * 1.001, 0.999 * bound
    if lo < hi:
        return list(np.geomspace(lo, hi, SWEEP_SIZE))
    return list(np.geomspace(1e-3 * bound, hi, SWEEP_SIZE))


def certify_problem(p, model=None, m=None, R1=None, R2=None, grid=cert.DEFAULT_GRID):
    """Full certification pipeline; returns ``(report, verdict, m_used)``."""
    rep = cert.CertificateReport()
    rep.extend(cert.check_h0(p))
    rep.extend(cert.check_h3(p))
    rep.extend(cert.check_nonexistence(p))
    rep.extend(cert.check_corollary_explicit(p))
    if model is not None and coeff_extrema(model.e)[0] > 0.0:
        rep.extend(cert.check_corollary_model(model))

    candidates = [m] if m is not None else sweep_values(p)
    chosen, chosen_rep = None, None
    for mv in candidates:
        sp = ShiftedProblem.build(p, float(mv))
        sub = cert.CertificateReport()
        sub.extend(cert.check_h2(sp, model))
        if rep["H3"].passed:
            try:
                slab = cert.suggest_radii(sp)
                sub.extend(cert.check_radii(sp, slab))
                sub.extend(cert.check_h1(sp, slab, grid, prefix="H1.suggested"))
            except LiebauError as exc:
                sub.add(cert.Check("H1.suggested", cert.Status.INCONCLUSIVE, math.nan, str(exc)))
        if R1 is not None and R2 is not None:
            sub.extend(cert.check_h1(sp, cert.Slab(R1, R2, sp.kernel.cone_const), grid, prefix="H1.user"))
        chosen, chosen_rep = float(mv), sub
        probe = cert.CertificateReport(list(rep.checks) + list(sub.checks))
        if _existence(probe):
            break
    rep.extend(chosen_rep)
    if _existence(rep):
        verdict = "existence"
    elif cert.nonexistence_certified(rep):
        verdict = "nonexistence"
    else:
        verdict = "undecided"
    return rep, verdict, chosen


def _existence(rep) -> bool:
    names = rep.names()
    if any(n in names and rep[n].passed for n in ("cor1.eqexplcond", "corexist.eqexistprobreg")):
        return True
    if cert.thmain2_certified(rep):
        return True
    return any(rep.all_pass(pre) and len([n for n in names if n.startswith(pre)]) == 3
               for pre in ("H1.user.", "H1.suggested."))


def cmd_certify(args) -> int:
    cfg = _config(args)
    p, model = build_problem(cfg)
    rep, verdict, m = certify_problem(
        p, model, m=cfg.number("certify", "m"), R1=cfg.number("certify", "R1"),
        R2=cfg.number("certify", "R2"), grid=cfg.number("certify", "grid", cert.DEFAULT_GRID, int))
    text = rep.to_text() + f"m = {m:.10g}\nverdict = {verdict}\n"
    kv = rep.to_kv() + f"m = {m:.17g}\nverdict = {verdict}\n"
    sys.stdout.write(text)
    _write(args.out, "report.txt", text)
    _write(args.out, "report.kv", kv)
    return {"existence": EXIT_EXISTS, "nonexistence": EXIT_NONEXISTENT}.get(verdict, EXIT_UNDECIDED)


def cmd_solve(args) -> int:
    cfg = _config(args)
    p, _ = build_problem(cfg)
    solve_cfg = SolverConfig(N=cfg.number("solve", "N", 512, int), tol=cfg.number("solve", "tol", 1e-10),
                             max_iter=cfg.number("solve", "max_iter", 100, int))
    method = cfg.get("solve", "method", "shooting")
    if method not in ("shooting", "picard", "both"):
        raise LiebauError(f"unknown method {method!r}")
    m = cfg.number("certify", "m")
    R1, R2 = cfg.number("certify", "R1"), cfg.number("certify", "R2")
    slab = None
    if R1 is not None and R2 is not None:
        if m is None:
            raise LiebauError("a slab (R1, R2) needs the shift m for its cone constant")
        slab = cert.Slab(R1, R2, build_kernel_params(p.a, m, p.T, estimate=False).cone_const)
    x0 = cfg.number("solve", "x0")
    guess = (x0, cfg.number("solve", "v0", 0.0)) if x0 is not None else default_guess(p, slab)

    diag_lines = []
    try:
        sols = []
        if method in ("shooting", "both"):
            sols.append(shooting_solve(p, guess, solve_cfg))
        if method in ("picard", "both"):
            if m is None:
                m = 0.5 * math.sqrt(resonance_bound(p.a, p.T))
            sp = ShiftedProblem.build(p, m)
            start = GridFunction.constant(guess[0], p.T, solve_cfg.N)
            sols.append(picard_solve(sp, start, SolverConfig(N=solve_cfg.N, tol=solve_cfg.tol,
                                                             max_iter=max(solve_cfg.max_iter, 5000))))
    except LiebauError as exc:
        diag_lines.append(f"error = {type(exc).__name__}: {exc}")
        _write(args.out, "diagnostics.kv", "\n".join(diag_lines) + "\n")
        sys.stderr.write(f"solve failed: {type(exc).__name__}: {exc}\n")
        return 1

    status = 0
    for sol in sols:
        tag = sol.method.value
        diag = sol.diagnostics_kv()
        sys.stdout.write(f"[{tag}]\n{diag}")
        if args.out:
            name = "solution.csv" if sol is sols[0] else f"solution_{tag}.csv"
            os.makedirs(args.out, exist_ok=True)
            sol.to_csv(os.path.join(args.out, name))
        diag_lines.append(f"[{tag}]\n{diag}")
        if slab is not None:
            loc = verify_localization(sol, slab)
            sys.stdout.write(loc.to_text())
            diag_lines.append(loc.to_kv())
            if not loc.all_pass("localization"):
                status = 1
    _write(args.out, "diagnostics.kv", "".join(diag_lines))
    return status


def cmd_green(args) -> int:
    cfg = _config(args)
    a, T = args.a, args.T
    if (a is None or T is None) and ("problem" in cfg.sections or "model" in cfg.sections):
        p, _ = build_problem(cfg)
        a = p.a if a is None else a
        T = p.T if T is None else T
    m = cfg.number("certify", "m")
    if a is None or T is None or m is None:
        raise LiebauError("green needs a, m and T (flags --a --m --T or a config)")
    k = build_kernel_params(a, m, T)
    N = args.grid or 50
    lines = [f"regime = {k.regime.value}", f"a = {a:.17g}", f"m = {m:.17g}", f"T = {T:.17g}"]
    if k.roots:
        lines += [f"lambda1 = {k.roots[0]:.17g}", f"lambda2 = {k.roots[1]:.17g}"]
    if k.kappa is not None:
        lines.append(f"kappa = {k.kappa:.17g}")
    if k.osc:
        lines += [f"gamma = {k.osc[0]:.17g}", f"delta = {k.osc[1]:.17g}", f"D = {k.osc[2]:.17g}"]
    row = green_row_integral(k, 0.0, 2000)
    lines += [f"diag = {k.diag:.17g}", f"coneConst = {k.cone_const:.17g}",
              f"coneConstEstimate = {k.cone_const_estimate:.17g}",
              f"row_integral = {row:.17g}", f"inverse_m2 = {1.0 / (m * m):.17g}",
              f"row_integral_rel_err = {abs(row * m * m - 1.0):.3e}"]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    _write(args.out, "green_constants.kv", text)
    if args.out:
        grid = np.arange(N + 1) * (T / N)
        G = eval_green(k, grid[:, None], grid[None, :])
        rows = ["t,s,value"] + [f"{grid[i]:.17g},{grid[j]:.17g},{G[i, j]:.17g}"
                                for i in range(N + 1) for j in range(N + 1)]
        _write(args.out, "green.csv", "\n".join(rows) + "\n")
    return 0


def cmd_reproduce(args) -> int:
    kwargs = {}
    if args.m is not None:
        kwargs["m"] = args.m
    if args.r1 is not None:
        kwargs["R1"] = args.r1
    if args.r2 is not None:
        kwargs["R2"] = args.r2
    lines = reproduce_example(**kwargs)
    text = "".join(f"[{'PASS' if ln.ok else 'FAIL'}] {ln.name}: {ln.text}\n" for ln in lines)
    kv = "".join(f"{ln.name} = {'PASS' if ln.ok else 'FAIL'}\n" for ln in lines)
    sys.stdout.write(text)
    _write(args.out, "reproduce.txt", text)
    _write(args.out, "reproduce.kv", kv)
    return 0 if all(ln.ok for ln in lines) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liebau", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--problem", help="inline [problem] keys, e.g. 'a=0,T=1,r=2,s=1,alpha=0.25,beta=0.5'")
    common.add_argument("--model", help="inline [model] keys, e.g. 'a=1.6,b=99,c=1.49,e=1.54,T=1'")
    common.add_argument("--m", type=float, help="shift m")
    common.add_argument("--r1", type=float, help="inner radius R1")
    common.add_argument("--r2", type=float, help="outer radius R2")
    common.add_argument("--grid", type=int, help="grid size (x-grid for certify, N for solve/green)")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    sub.add_parser("certify", parents=[common], help="certify existence / non-existence")
    solve = sub.add_parser("solve", parents=[common], help="compute the periodic solution")
    solve.add_argument("--x0", type=float, help="initial x(0)")
    solve.add_argument("--v0", type=float, help="initial x'(0)")
    solve.add_argument("--method", choices=["shooting", "picard", "both"])
    green = sub.add_parser("green", parents=[common], help="Green's function constants and table")
    green.add_argument("--a", type=float)
    green.add_argument("--T", type=float)
    sub.add_parser("reproduce-example", parents=[common], help="reproduce the worked example")
    return parser


COMMANDS = {"certify": cmd_certify, "solve": cmd_solve, "green": cmd_green,
            "reproduce-example": cmd_reproduce}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.dump_config:
            sys.stdout.write(dump_config(_config(args)))
            return 0
        return COMMANDS[args.command](args)
    except LiebauError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
