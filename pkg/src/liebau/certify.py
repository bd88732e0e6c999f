"""Mechanical checks of the existence, non-existence and localization
conditions for ``x'' + a x' = r(t) x^alpha - s(t) x^beta``.

Every check returns a :class:`Check` carrying a status and a signed margin.
PASS implies ``margin >= 0`` and FAIL implies ``margin <= 0``; INCONCLUSIVE
is only produced by heuristic scans or when a rigorous margin is swamped by
the Lipschitz band.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .errors import ConeMismatch, DomainError, H3Violated, NoRealRoots, SlabError
from .green import resonance_bound
from .model import ProblemSpec, ShiftedProblem, SingularModelSpec, coeff_extrema, eval_fm

DEFAULT_GRID = 4096
REFINE_FACTOR = 4
REFINE_PASSES = 2


class Status(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Check:
    name: str
    status: Status
    margin: float
    detail: str = ""
    values: Dict[str, float] = field(default_factory=dict)
    witness: Optional[Tuple[float, float]] = None

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS


@dataclass
class CertificateReport:
    checks: List[Check] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "CertificateReport") -> "CertificateReport":
        self.checks.extend(other.checks)
        return self

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __iter__(self):
        return iter(self.checks)

    def __len__(self):
        return len(self.checks)

    def names(self) -> List[str]:
        return [c.name for c in self.checks]

    def all_pass(self, prefix: str = "") -> bool:
        sel = [c for c in self.checks if c.name.startswith(prefix)]
        return bool(sel) and all(c.passed for c in sel)

    def any_pass(self, prefix: str = "") -> bool:
        return any(c.passed for c in self.checks if c.name.startswith(prefix))

    def to_text(self) -> str:
        width = max((len(c.name) for c in self.checks), default=0)
        lines = []
        for c in self.checks:
            line = f"[{c.status.value:<12}] {c.name:<{width}}  margin={c.margin:+.6g}"
            if c.detail:
                line += f"  {c.detail}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"{c.name}.status = {c.status.value}")
            lines.append(f"{c.name}.margin = {c.margin:.17g}")
            for k in sorted(c.values):
                lines.append(f"{c.name}.{k} = {c.values[k]:.17g}")
            if c.witness is not None:
                lines.append(f"{c.name}.witness_t = {c.witness[0]:.17g}")
                lines.append(f"{c.name}.witness_x = {c.witness[1]:.17g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Slab:
    """Radii ``R1 < R2`` and the cone constant that fixes the inner floor ``cm*R1``."""

    R1: float
    R2: float
    cm: float

    def __post_init__(self):
        if not 0.0 < self.cm < 1.0:
            raise SlabError(f"cone constant must lie in (0, 1), got {self.cm!r}")
        if not 0.0 < self.R1 < self.R2:
            raise SlabError(f"radii must satisfy 0 < R1 < R2, got R1={self.R1!r}, R2={self.R2!r}")
        if not math.isfinite(self.R2):
            raise SlabError("R2 must be finite")

    @property
    def lower(self) -> float:
        return self.cm * self.R1

    @property
    def upper(self) -> float:
        return self.R2


def _status(ok: bool) -> Status:
    return Status.PASS if ok else Status.FAIL


# -- H0 / H3 / non-existence ------------------------------------------------

def check_h0(p: ProblemSpec) -> CertificateReport:
    margin = min(p.alpha, p.beta - p.alpha, 1.0 - p.beta, p.a)
    ok = p.a >= 0.0 and 0.0 < p.alpha < p.beta < 1.0
    return CertificateReport([Check(
        "H0", _status(ok), margin,
        f"a={p.a:g}, alpha={p.alpha:g}, beta={p.beta:g}")])


def check_h3(p: ProblemSpec) -> CertificateReport:
    r_low, _ = coeff_extrema(p.r)
    s_low, _ = coeff_extrema(p.s)
    return CertificateReport([Check(
        "H3", _status(r_low > 0.0 and s_low > 0.0), min(r_low, s_low),
        f"r_low={r_low:.6g}, s_low={s_low:.6g}",
        values={"r_low": r_low, "s_low": s_low})])


def nonexistence_cases(r_low, r_high, s_low, s_high):
    """The four sign cases as ``(name, holds, margin)`` triples."""
    return [
        ("nonexistence.case1", r_low >= 0.0 and s_high < 0.0, min(r_low, -s_high)),
        ("nonexistence.case2", r_low > 0.0 and s_high <= 0.0, min(r_low, -s_high)),
        ("nonexistence.case3", r_high <= 0.0 and s_low > 0.0, min(-r_high, s_low)),
        ("nonexistence.case4", r_high < 0.0 and s_low >= 0.0, min(-r_high, s_low)),
    ]


def check_nonexistence(p: ProblemSpec) -> CertificateReport:
    r_low, r_high = coeff_extrema(p.r)
    s_low, s_high = coeff_extrema(p.s)
    rep = CertificateReport()
    detail = f"r in [{r_low:.6g}, {r_high:.6g}], s in [{s_low:.6g}, {s_high:.6g}]"
    for name, holds, margin in nonexistence_cases(r_low, r_high, s_low, s_high):
        rep.add(Check(name, _status(holds), margin, detail))
    return rep


def nonexistence_certified(report: CertificateReport) -> bool:
    return report.any_pass("nonexistence.")


# -- (H1) rectangle scans -----------------------------------------------------

def _t_nodes(p: ProblemSpec):
    t = p.breakpoints()
    return np.asarray(p.r(t), dtype=float).reshape(-1), np.asarray(p.s(t), dtype=float).reshape(-1), t


def _extreme_over_t(sp: ShiftedProblem, x: np.ndarray, lowest: bool):
    """Min (or max) over t of ``f_m(t, x)`` and its argmin t, per x.

    ``f_m`` is affine in ``(r(t), s(t))`` and both are piecewise linear, so the
    t-extremum for fixed x sits on a coefficient breakpoint.
    """
    rv, sv, tv = _t_nodes(sp.base)
    xa = np.power(x, sp.base.alpha)
    xb = np.power(x, sp.base.beta)
    lin = sp.m * sp.m * x
    best = np.full(x.shape, np.inf if lowest else -np.inf)
    arg = np.zeros(x.shape)
    chunk = max(1, 2_000_000 // max(x.size, 1))
    for k in range(0, tv.size, chunk):
        vals = rv[k:k + chunk, None] * xa[None, :] - sv[k:k + chunk, None] * xb[None, :] + lin[None, :]
        idx = np.argmin(vals, axis=0) if lowest else np.argmax(vals, axis=0)
        ext = vals[idx, np.arange(x.size)]
        better = ext < best if lowest else ext > best
        best = np.where(better, ext, best)
        arg = np.where(better, tv[k:k + chunk][idx], arg)
    return best, arg


def lipschitz_bound(sp: ShiftedProblem, x_lo: float) -> float:
    """Bound on ``|df_m/dx|`` over ``x >= x_lo > 0``, uniformly in t."""
    p = sp.base
    r_abs = max(abs(v) for v in coeff_extrema(p.r))
    s_abs = max(abs(v) for v in coeff_extrema(p.s))
    return (r_abs * p.alpha * x_lo ** (p.alpha - 1.0)
            + s_abs * p.beta * x_lo ** (p.beta - 1.0) + sp.m * sp.m)


def _rectangle_check(name, sp, x_lo, x_hi, threshold, sense, grid):
    """Certify ``f_m >= threshold`` (sense '>=') or ``<=`` on ``[0,T] x [x_lo,x_hi]``."""
    lowest = sense == ">="
    L = lipschitz_bound(sp, x_lo)
    M = grid
    for attempt in range(REFINE_PASSES + 1):
        x = np.linspace(x_lo, x_hi, M)
        ext, targ = _extreme_over_t(sp, x, lowest)
        slack = ext - threshold if lowest else threshold - ext
        i = int(np.argmin(slack))
        worst = float(slack[i])
        band = L * (x_hi - x_lo) / (M - 1) / 2.0
        values = {"x_lo": x_lo, "x_hi": x_hi, "threshold": threshold,
                  "grid_worst": worst, "lipschitz_band": band, "grid": float(M)}
        rng = f"on [0,T] x [{x_lo:.6g}, {x_hi:.6g}]"
        if worst < 0.0:
            t_w, x_w = float(targ[i]), float(x[i])
            direct = eval_fm(sp, t_w, x_w)
            return Check(name, Status.FAIL, worst,
                         f"f_m {sense} {threshold:.6g} violated {rng}: f_m({t_w:.6g}, {x_w:.6g}) = {direct:.10g}",
                         values, (t_w, x_w))
        if worst - band >= 0.0:
            return Check(name, Status.PASS, worst - band,
                         f"f_m {sense} {threshold:.6g} {rng} (grid {M}, band {band:.3g})", values)
        M *= REFINE_FACTOR
    return Check(name, Status.INCONCLUSIVE, worst - band,
                 f"grid minimum {worst:.3g} within Lipschitz band {band:.3g} {rng}", values)


def check_h1(sp: ShiftedProblem, slab: Slab, grid: int = DEFAULT_GRID, prefix: str = "H1") -> CertificateReport:
    if not math.isclose(slab.cm, sp.kernel.cone_const, rel_tol=1e-12, abs_tol=0.0):
        raise ConeMismatch(f"slab cone constant {slab.cm!r} != kernel cone constant {sp.kernel.cone_const!r}")
    m2 = sp.m * sp.m
    cm, R1, R2 = slab.cm, slab.R1, slab.R2
    rep = CertificateReport()
    rep.add(_rectangle_check(f"{prefix}.eq1", sp, cm * R1, R2, 0.0, ">=", grid))
    rep.add(_rectangle_check(f"{prefix}.eq2", sp, cm * R1, R1, m2 * R1, ">=", grid))
    rep.add(_rectangle_check(f"{prefix}.eq3", sp, cm * R2, R2, m2 * R2, "<=", grid))
    return rep


# -- radii from the sufficient inequalities ----------------------------------

def _eqR1_lhs(sp: ShiftedProblem, R1: float) -> float:
    p, c = sp.base, sp.kernel.cone_const
    _, s_high = coeff_extrema(p.s)
    return (1.0 - c) * sp.m ** 2 * R1 ** (1.0 - p.alpha) + s_high * R1 ** (p.beta - p.alpha)


def _eqR1_rhs(sp: ShiftedProblem) -> float:
    r_low, _ = coeff_extrema(sp.base.r)
    return r_low * sp.kernel.cone_const ** sp.base.alpha


def check_radii(sp: ShiftedProblem, slab: Slab) -> CertificateReport:
    """Evaluate the two explicit radius inequalities for ``slab``."""
    p, c = sp.base, sp.kernel.cone_const
    r_high = coeff_extrema(p.r)[1]
    s_low = coeff_extrema(p.s)[0]
    lhs1, rhs1 = _eqR1_lhs(sp, slab.R1), _eqR1_rhs(sp)
    lhs2 = s_low * c ** p.beta * slab.R2 ** (p.beta - p.alpha)
    rep = CertificateReport()
    rep.add(Check("radii.eqR1", _status(lhs1 <= rhs1), rhs1 - lhs1,
                  f"{lhs1:.10g} <= {rhs1:.10g}", {"left": lhs1, "right": rhs1}))
    rep.add(Check("radii.eqR2", _status(r_high <= lhs2), lhs2 - r_high,
                  f"{r_high:.10g} <= {lhs2:.10g}", {"left": r_high, "right": lhs2}))
    return rep


def eqR1_root(sp: ShiftedProblem) -> float:
    """The unique R with equality in the R1 inequality (its left side is increasing)."""
    rhs = _eqR1_rhs(sp)

    def g(u):
        return _eqR1_lhs(sp, math.exp(u)) - rhs

    lo, hi = -1.0, 1.0
    while g(lo) >= 0.0:
        lo *= 2.0
        if lo < -700.0:
            raise DomainError("R1 root underflows double precision")
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 700.0:
            raise DomainError("R1 root overflows double precision")
    # 1e-13 absolute in log R is ~1e-13 relative in R
    return math.exp(bisect(g, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=400))


def eqR2_floor(sp: ShiftedProblem) -> float:
    p, c = sp.base, sp.kernel.cone_const
    r_high = coeff_extrema(p.r)[1]
    s_low = coeff_extrema(p.s)[0]
    log_val = (math.log(r_high) - math.log(s_low) - p.beta * math.log(c)) / (p.beta - p.alpha)
    if log_val > 690.0:
        raise DomainError("R2 lower bound overflows double precision")
    return math.exp(log_val)


def suggest_radii(sp: ShiftedProblem) -> Slab:
    r_low = coeff_extrema(sp.base.r)[0]
    s_low = coeff_extrema(sp.base.s)[0]
    if not (r_low > 0.0 and s_low > 0.0):
        raise H3Violated(f"need r_low > 0 and s_low > 0, got r_low={r_low!r}, s_low={s_low!r}")
    R1 = 0.9 * eqR1_root(sp)
    R2 = max(1.1 * eqR2_floor(sp), 2.0 * R1)
    return Slab(R1, R2, sp.kernel.cone_const)


# -- (H2) and the corollaries -------------------------------------------------

def h2_scan_limit(sp: ShiftedProblem) -> float:
    """Past this x, ``m^2 x`` dominates ``s_high x^beta``."""
    s_high = coeff_extrema(sp.base.s)[1]
    m2 = sp.m * sp.m
    if s_high <= 0.0:
        return 1.0
    log_ratio = math.log(s_high / m2) / (1.0 - sp.base.beta)
    return max(1.0, 2.0 * math.exp(min(log_ratio, 690.0)))


def check_h2(sp: ShiftedProblem, model: Optional[SingularModelSpec] = None,
             scan_points: int = 20000) -> CertificateReport:
    """``f_m(t, x) >= 0`` for all t and all ``x >= 0``.

    Rigorous routes first (split at x = 1, then the quadratic-discriminant
    route for regularized models); a heuristic scan otherwise.
    """
    p = sp.base
    m2 = sp.m * sp.m
    r_low = coeff_extrema(p.r)[0]
    s_high = coeff_extrema(p.s)[1]
    rep = CertificateReport()
    margin = min(r_low - s_high, m2 - s_high, r_low)
    if margin >= 0.0:
        rep.add(Check("H2", Status.PASS, margin,
                      f"analytic: r_low={r_low:.6g} >= 0, s_high={s_high:.6g} <= min(r_low, m^2={m2:.6g})",
                      {"r_low": r_low, "s_high": s_high, "m2": m2}))
        return rep
    if model is not None:
        e_low = coeff_extrema(model.e)[0]
        disc = model.c ** 2 - 4.0 * m2 * model.mu * e_low
        if e_low > 0.0 and disc < 0.0:
            rep.add(Check("H2", Status.PASS, -disc,
                          f"analytic: discriminant c^2 - 4 m^2 mu e_low = {disc:.6g} < 0",
                          {"discriminant": disc}))
            return rep
    x_max = h2_scan_limit(sp)
    x = np.unique(np.concatenate([
        np.linspace(0.0, 1.0, scan_points // 4),
        np.geomspace(1e-12, x_max, scan_points),
    ]))
    low, targ = _extreme_over_t(sp, x, lowest=True)
    i = int(np.argmin(low))
    worst = float(low[i])
    values = {"x_max": x_max, "scan_min": worst}
    if worst < 0.0:
        j = int(np.argmax(low < 0.0))  # smallest negative x is the readable witness
        t_w, x_w = float(targ[j]), float(x[j])
        values["witness_value"] = float(low[j])
        rep.add(Check("H2", Status.FAIL, worst,
                      f"f_m({t_w:.6g}, {x_w:.6g}) = {low[j]:.6g} < 0 (scan minimum {worst:.3g})",
                      values, (t_w, x_w)))
    else:
        rep.add(Check("H2", Status.INCONCLUSIVE, worst,
                      f"heuristic: no negative value on [0, {x_max:.4g}]; beyond it m^2 x dominates",
                      values))
    return rep


def check_corollary_explicit(p: ProblemSpec) -> CertificateReport:
    r_low = coeff_extrema(p.r)[0]
    s_low, s_high = coeff_extrema(p.s)
    lam = resonance_bound(p.a, p.T)
    right = min(lam, r_low)
    values = {"left": s_high, "right": right, "resonance_bound": lam, "r_low": r_low}
    if not (r_low > 0.0 and s_low > 0.0):
        return CertificateReport([Check("cor1.eqexplcond", Status.FAIL, min(r_low, s_low),
                                        "H3 does not hold", values)])
    return CertificateReport([Check(
        "cor1.eqexplcond", _status(s_high < right), right - s_high,
        f"s_high = {s_high:.6g} < min((pi/T)^2 + (a/2)^2 = {lam:.6g}, r_low = {r_low:.6g})",
        values)])


def check_corollary_model(model: SingularModelSpec) -> CertificateReport:
    e_low = coeff_extrema(model.e)[0]
    if not e_low > 0.0:
        raise DomainError(f"corollary requires e_low > 0, got {e_low!r}")
    left = (model.b + 1.0) * model.c ** 2 / (4.0 * e_low)
    right = (math.pi / model.T) ** 2 + model.a ** 2 / 4.0
    return CertificateReport([Check(
        "corexist.eqexistprobreg", _status(left < right), right - left,
        f"(b+1)c^2/(4 e_low) = {left:.6g} < (pi/T)^2 + a^2/4 = {right:.6g}",
        {"left": left, "right": right})])


def thmain2_certified(report: CertificateReport) -> bool:
    try:
        return report["H2"].passed and report["H3"].passed
    except KeyError:
        return False


# -- condition (H) roots ------------------------------------------------------

@dataclass(frozen=True)
class HRoots:
    """Positive roots of ``lam x + c_beta x^beta + c_alpha x^alpha`` on (0, inf).

    ``y_roots`` solve the reduced quadratic in ``y = x^(beta - alpha)``;
    ``log10_x_roots`` are the matching x-roots in log form; ``sign_pattern``
    lists the sign on each interval between consecutive positive roots.
    """

    y_roots: Tuple[float, ...]
    log10_x_roots: Tuple[float, ...]
    sign_pattern: str

    @property
    def x_roots(self) -> Tuple[float, ...]:
        return tuple(10.0 ** v if v < 308.0 else math.inf for v in self.log10_x_roots)


def condition_h_roots(lambda_star: float, c_alpha: float, c_beta: float,
                      alpha: float, beta: float) -> HRoots:
    if not math.isclose(1.0 - alpha, 2.0 * (beta - alpha), rel_tol=1e-12, abs_tol=1e-14):
        raise DomainError("exponents must satisfy 1 - alpha = 2 (beta - alpha)")
    A, B, C = lambda_star, c_beta, c_alpha
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        raise NoRealRoots(f"discriminant {disc:.6g} < 0: expression keeps the sign of {A:+g}",
                          sign=int(math.copysign(1, A)))
    sq = math.sqrt(disc)
    if B == 0.0:
        y = (-sq / (2 * A), sq / (2 * A))
    else:
        q = -0.5 * (B + math.copysign(sq, B))
        y = (q / A, C / q) if q != 0.0 else (0.0, 0.0)
    ys = tuple(sorted(y))
    pos = [v for v in ys if v > 0.0]
    k = beta - alpha
    logs = tuple(math.log10(v) / k for v in pos)

    def quad(v):
        return A * v * v + B * v + C

    probes = []
    edges = [0.0] + pos + [None]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi is None:
            probes.append(2.0 * lo + 1.0)
        elif lo == hi:
            continue
        else:
            probes.append(0.5 * (lo + hi))
    pattern = "".join("+" if quad(v) > 0 else "-" if quad(v) < 0 else "0" for v in probes)
    return HRoots(ys, logs, pattern)
