"""Numerical computation of the positive periodic solution.

Shooting on the period map is the method of record. Picard iteration of the
Green operator is a diagnostic: the existence argument is non-constructive
and the fixed-point map need not contract.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certify import CertificateReport, Check, Slab, Status
from .errors import (DomainError, NegativeState, NewtonDiverged, NonConvergence,
                     NotAutonomous, StateEscapedPositivity)
from .green import GridFunction, apply_green_operator
from .model import Constant, ProblemSpec, ShiftedProblem, Table, coeff_extrema, eval_fm


class Method(enum.Enum):
    PICARD = "picard"
    SHOOTING = "shooting"


@dataclass(frozen=True)
class SolverConfig:
    N: int = 512
    tol: float = 1e-10
    max_iter: int = 2000
    method: Method = Method.SHOOTING
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.N < 16:
            raise DomainError(f"grid size must be >= 16, got {self.N}")
        if not self.tol > 0.0:
            raise DomainError("tolerance must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


@dataclass(frozen=True)
class PeriodicSolution:
    x: GridFunction
    xprime: GridFunction
    ode_residual: float
    periodicity_defect: float
    method: Method
    iterations: int
    initial: Tuple[float, float] = (math.nan, math.nan)
    history: Tuple[float, ...] = ()

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(self.x.values.min()), float(self.x.values.max())

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,x,xprime\n")
            for t, x, v in zip(self.x.nodes, self.x.values, self.xprime.values):
                fh.write(f"{t:.17g},{x:.17g},{v:.17g}\n")

    def diagnostics(self) -> Dict[str, float]:
        lo, hi = self.bounds
        return {
            "method": self.method.value,
            "N": self.x.N,
            "iterations": self.iterations,
            "ode_residual": self.ode_residual,
            "periodicity_defect": self.periodicity_defect,
            "x_min": lo,
            "x_max": hi,
            "x0": self.initial[0],
            "v0": self.initial[1],
        }

    def diagnostics_kv(self) -> str:
        out = []
        for k, v in self.diagnostics().items():
            out.append(f"{k} = {v:.17g}" if isinstance(v, float) else f"{k} = {v}")
        return "\n".join(out) + "\n"


def constant_solution(p: ProblemSpec) -> float:
    """The stationary balance ``r x^alpha = s x^beta`` for constant coefficients."""
    if not p.autonomous:
        raise NotAutonomous("constant solution needs constant r and s")
    r, s = p.r.value, p.s.value
    if not (r > 0.0 and s > 0.0):
        raise DomainError(f"need r > 0 and s > 0, got r={r!r}, s={s!r}")
    return math.exp((math.log(r) - math.log(s)) / (p.beta - p.alpha))


def _periodic_derivatives(x: GridFunction):
    N, dt = x.N, x.T / x.N
    v = x.values[:N]
    d1 = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dt)
    d2 = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / (dt * dt)
    return d1, d2


def fd_residual(p: ProblemSpec, x: GridFunction) -> float:
    """Max-norm defect of ``x'' + a x' - rhs`` by periodic central differences."""
    d1, d2 = _periodic_derivatives(x)
    t = x.nodes[:x.N]
    return float(np.max(np.abs(d2 + p.a * d1 - p.rhs(t, x.values[:x.N]))))


def _close(v: np.ndarray) -> np.ndarray:
    return np.append(v, v[0])


def picard_solve(sp: ShiftedProblem, x0: GridFunction, cfg: SolverConfig = SolverConfig()) -> PeriodicSolution:
    """Iterate ``x <- K f_m(., x)`` from ``x0`` until the max-norm step is below tol."""
    if np.any(x0.values <= 0.0):
        raise NegativeState("Picard start must be positive")
    x = x0
    t = x0.nodes
    steps: List[float] = []
    for k in range(1, cfg.max_iter + 1):
        h = GridFunction(x.T, eval_fm(sp, t, x.values))
        xn = apply_green_operator(sp.kernel, h)
        step = float(np.max(np.abs(xn.values - x.values)))
        steps.append(step)
        if not np.isfinite(step) or np.any(xn.values <= 0.0):
            raise NonConvergence(f"iterate left the positive cone at step {k}", x, steps)
        x = xn
        if step < cfg.tol:
            d1, _ = _periodic_derivatives(x)
            xp = GridFunction(x.T, _close(d1))
            return PeriodicSolution(
                x=x, xprime=xp, ode_residual=fd_residual(sp.base, x),
                periodicity_defect=abs(x.values[-1] - x.values[0]) + abs(xp.values[-1] - xp.values[0]),
                method=Method.PICARD, iterations=k,
                initial=(float(x0.values[0]), 0.0), history=tuple(steps))
    raise NonConvergence(f"no convergence in {cfg.max_iter} iterations (last step {steps[-1]:.3g})",
                         x, steps)


# -- shooting -----------------------------------------------------------------

def _rhs_batch(p: ProblemSpec, t: float, x: np.ndarray, v: np.ndarray):
    bad = x <= 0.0
    xs = np.where(bad, 1.0, x)
    acc = -p.a * v + p.r(t) * xs ** p.alpha - p.s(t) * xs ** p.beta
    return v, acc, bad


def _substeps(p: ProblemSpec, N: int) -> int:
    """Smallest k such that ``N k`` steps put every table breakpoint on a step boundary.

    RK4 drops to first order across a kink of a piecewise-linear coefficient.
    """
    L = 1
    for c in (p.r, p.s):
        if isinstance(c, Table):
            L = math.lcm(L, c.samples.size - 1)
    return L // math.gcd(N, L)


def integrate_period(p: ProblemSpec, x0, v0, N: int, refine: int = 1):
    """Classical RK4 over one period for a batch of initial states.

    Returns ``(x, v, escaped)`` with shape ``(N+1, batch)``; a trajectory is
    flagged as escaped as soon as any stage sees ``x <= 0``. Table
    coefficients may force substeps between the returned nodes; ``refine``
    multiplies the substep count further.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    v = np.atleast_1d(np.asarray(v0, dtype=float)).copy()
    k = _substeps(p, N) * refine
    dt = p.T / (N * k)
    xs = np.empty((N + 1, x.size))
    vs = np.empty((N + 1, x.size))
    xs[0], vs[0] = x, v
    escaped = x <= 0.0
    for i in range(N * k):
        t = i * dt
        k1x, k1v, b1 = _rhs_batch(p, t, x, v)
        k2x, k2v, b2 = _rhs_batch(p, t + dt / 2, x + dt / 2 * k1x, v + dt / 2 * k1v)
        k3x, k3v, b3 = _rhs_batch(p, t + dt / 2, x + dt / 2 * k2x, v + dt / 2 * k2v)
        k4x, k4v, b4 = _rhs_batch(p, t + dt, x + dt * k3x, v + dt * k3v)
        x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        escaped = escaped | b1 | b2 | b3 | b4 | (x <= 0.0)
        if (i + 1) % k == 0:
            xs[(i + 1) // k], vs[(i + 1) // k] = x, v
    return xs, vs, escaped


def _period_map(p, z, N):
    xs, vs, esc = integrate_period(p, z[:, 0], z[:, 1], N)
    phi = np.stack([xs[-1] - z[:, 0], vs[-1] - z[:, 1]], axis=1)
    return phi, esc


def fd_jacobian(p: ProblemSpec, z: np.ndarray, N: int, step: float = 1e-6):
    """Forward-difference Jacobian of ``Phi(xi, eta) = (x(T) - xi, x'(T) - eta)``."""
    h = step * np.maximum(np.abs(z), 1.0)
    pts = np.array([z, z + [h[0], 0.0], z + [0.0, h[1]]])
    phi, esc = _period_map(p, pts, N)
    if esc[0]:
        raise StateEscapedPositivity(f"trajectory from {tuple(z)} reaches x <= 0")
    J = np.column_stack([(phi[1] - phi[0]) / h[0], (phi[2] - phi[0]) / h[1]])
    return phi[0], J, bool(esc[1] or esc[2])


def shooting_solve(p: ProblemSpec, guess: Tuple[float, float],
                   cfg: SolverConfig = SolverConfig()) -> PeriodicSolution:
    """Newton iteration on the period map, started from ``(x(0), x'(0)) = guess``."""
    x0, v0 = float(guess[0]), float(guess[1])
    if not x0 > 0.0:
        raise NegativeState(f"initial state x0 must be positive, got {x0!r}")
    N = cfg.N
    z = np.array([x0, v0])
    trail: List[float] = []
    for it in range(cfg.max_iter + 1):
        F, J, _ = fd_jacobian(p, z, N, cfg.fd_step)
        norm = float(np.max(np.abs(F)))
        trail.append(norm)
        if norm < cfg.tol:
            break
        if it == cfg.max_iter:
            raise NewtonDiverged(f"no convergence in {cfg.max_iter} Newton steps (|Phi| = {norm:.3g})", trail)
        try:
            dz = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(f"singular period-map Jacobian at {tuple(z)}", trail) from exc
        lam, escaped_any = 1.0, False
        for _ in range(20):
            zn = z + lam * dz
            if zn[0] > 0.0:
                Fn, esc = _period_map(p, zn[None, :], N)
                if not esc[0] and float(np.max(np.abs(Fn))) < norm:
                    z = zn
                    break
                escaped_any |= bool(esc[0])
            else:
                escaped_any = True
            lam *= 0.5
        else:
            if escaped_any:
                raise StateEscapedPositivity(
                    f"Newton step from {tuple(z)} leaves x > 0 even after 20 halvings")
            raise NewtonDiverged(f"no decrease of |Phi| from {tuple(z)} after 20 halvings", trail)
    xs, vs, _ = integrate_period(p, z[0], z[1], N)
    xf, vf, _ = integrate_period(p, z[0], z[1], N, refine=2)
    residual = float(max(np.max(np.abs(xs[:, 0] - xf[:, 0])), np.max(np.abs(vs[:, 0] - vf[:, 0]))))
    x = GridFunction(p.T, xs[:, 0])
    xp = GridFunction(p.T, vs[:, 0])
    return PeriodicSolution(
        x=x, xprime=xp, ode_residual=residual,
        periodicity_defect=abs(xs[-1, 0] - xs[0, 0]) + abs(vs[-1, 0] - vs[0, 0]),
        method=Method.SHOOTING, iterations=len(trail) - 1,
        initial=(float(z[0]), float(z[1])), history=tuple(trail))


def default_guess(p: ProblemSpec, slab: Optional[Slab] = None) -> Tuple[float, float]:
    """Constant solution for autonomous problems, else the slab midpoint."""
    if p.autonomous and p.r.value > 0.0 and p.s.value > 0.0:
        return constant_solution(p), 0.0
    if slab is not None:
        return 0.5 * (slab.lower + slab.upper), 0.0
    r_low, r_high = coeff_extrema(p.r)
    s_low, s_high = coeff_extrema(p.s)
    if r_low > 0.0 and s_low > 0.0:
        # balance of the averaged coefficients
        rm, sm = 0.5 * (r_low + r_high), 0.5 * (s_low + s_high)
        return math.exp((math.log(rm) - math.log(sm)) / (p.beta - p.alpha)), 0.0
    return 1.0, 0.0


def verify_localization(sol: PeriodicSolution, slab: Slab) -> CertificateReport:
    """Check ``cm R1 <= x(t) <= R2`` with absolute tolerance ``1e-6 R2``.

    Margins are raw distances; a margin inside ``[-tol, 0)`` still passes.
    """
    tol = 1e-6 * slab.R2
    lo, hi = sol.bounds
    lower, upper = lo - slab.lower, slab.R2 - hi
    rep = CertificateReport()
    rep.add(Check("localization.lower", Status.PASS if lower >= -tol else Status.FAIL, lower,
                  f"min x = {lo:.10g} >= cm R1 = {slab.lower:.10g}", {"min_x": lo, "bound": slab.lower}))
    rep.add(Check("localization.upper", Status.PASS if upper >= -tol else Status.FAIL, upper,
                  f"max x = {hi:.10g} <= R2 = {slab.R2:.10g}", {"max_x": hi, "bound": slab.R2}))
    return rep


def averaging_defect(p: ProblemSpec, x: GridFunction) -> Tuple[float, float]:
    """``int_0^T (r x^alpha - s x^beta) dt`` and the scale it should be compared to."""
    t = x.nodes
    ra = p.r(t) * x.values ** p.alpha
    sb = p.s(t) * x.values ** p.beta
    integral = float(np.trapezoid(ra - sb, t))
    scale = float(np.trapezoid(np.abs(ra) + np.abs(sb), t))
    return integral, scale


def cone_defect(sp: ShiftedProblem, x: GridFunction) -> float:
    """``min(Fx) - c_m max(Fx)`` normalised by ``max(Fx)`` for one operator step."""
    h = GridFunction(x.T, eval_fm(sp, x.nodes, x.values))
    Fx = apply_green_operator(sp.kernel, h).values
    return float((Fx.min() - sp.kernel.cone_const * Fx.max()) / Fx.max())
