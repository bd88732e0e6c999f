"""Periodic Green's function of ``x'' + a x' + m^2 x`` on ``[0, T]``.

The kernel is translation invariant: ``G(t, s) = g(t - s)`` for ``s <= t`` and
``G(t, s) = g(t - s + T)`` for ``t < s``, where the profile ``g`` lives on
``[0, T]``. Three closed forms for ``g`` exist depending on the sign of the
discriminant ``a^2 - 4 m^2``; all of them are positive as long as the shift
stays below the resonance bound ``m^2 < (pi/T)^2 + (a/2)^2``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import DomainError, ResonantOrBeyond

#: |m - a/2| below this is treated as the critical (double root) case.
CRITICAL_SWITCH = 1e-9

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Regime(enum.Enum):
    UNDERDAMPED = "UnderDamped"
    CRITICAL = "Critical"
    OSCILLATORY = "Oscillatory"


def resonance_bound(a: float, T: float) -> float:
    """Return ``(pi/T)^2 + (a/2)^2``, the supremum of admissible ``m^2``."""
    return (math.pi / T) ** 2 + (a / 2.0) ** 2


def classify_regime(a: float, m: float, T: float) -> Regime:
    if not a >= 0.0:
        raise DomainError(f"damping a must be >= 0, got {a!r}")
    if not m > 0.0:
        raise DomainError(f"shift m must be > 0, got {m!r}")
    if not T > 0.0:
        raise DomainError(f"period T must be > 0, got {T!r}")
    bound = resonance_bound(a, T)
    if m * m >= bound:
        raise ResonantOrBeyond(
            f"m^2 = {m * m:.10g} is not below the resonance bound "
            f"(pi/T)^2 + (a/2)^2 = {bound:.10g} (m must be < {math.sqrt(bound):.10g})"
        )
    if abs(m - a / 2.0) < CRITICAL_SWITCH:
        return Regime.CRITICAL
    if m < a / 2.0:
        return Regime.UNDERDAMPED
    return Regime.OSCILLATORY


@dataclass(frozen=True)
class KernelParams:
    """Regime tag plus every constant derived from ``(a, m, T)``.

    ``cone_const`` is the analytic value (or certified lower bound) of the
    cone constant ``c_m = G(s,s) / max G``; ``cone_const_estimate`` is the
    grid-based estimate of the true ratio and is for diagnostics only.
    """

    a: float
    m: float
    T: float
    regime: Regime
    roots: Optional[Tuple[float, float]]
    kappa: Optional[float]
    osc: Optional[Tuple[float, float, float]]
    diag: float
    cone_const: float
    cone_const_estimate: float = field(default=float("nan"))

    def __post_init__(self):
        if self.regime is Regime.UNDERDAMPED:
            l1, l2 = self.roots
            assert l1 < l2 < 0.0
        if self.regime is Regime.OSCILLATORY:
            _, delta, D = self.osc
            assert delta > 0.0 and D > 0.0 and 0.0 < delta * self.T < math.pi
        assert self.diag > 0.0
        assert 0.0 < self.cone_const < 1.0

    @property
    def bound(self) -> float:
        return resonance_bound(self.a, self.T)

    def profile(self, tau):
        """Evaluate ``g(tau)`` for ``tau`` in ``[0, T]`` (vectorised)."""
        tau = np.asarray(tau, dtype=float)
        T = self.T
        if self.regime is Regime.UNDERDAMPED:
            l1, l2 = self.roots
            # expm1 keeps 1 - e^{lT} accurate for small |l|T
            return (np.exp(l2 * tau) / -math.expm1(l2 * T)
                    - np.exp(l1 * tau) / -math.expm1(l1 * T)) / (l2 - l1)
        if self.regime is Regime.CRITICAL:
            m = self.m
            em1 = math.expm1(m * T)
            # written in the reversed argument T - tau: this orientation is the
            # one that solves x'' + a x' + m^2 x = h (not its adjoint)
            r = T - tau
            return np.exp(m * r) * (T * (em1 + 1.0) / em1 - r) / em1
        gamma, delta, D = self.osc
        return (np.exp(gamma * (T + tau)) * np.sin(delta * (T - tau))
                + np.exp(gamma * tau) * np.sin(delta * tau)) / (delta * D)


def _under_cone_const(l1, l2, T):
    e1, e2 = math.exp(l1 * T), math.exp(l2 * T)
    base = ((1.0 - e2) * l1) / ((1.0 - e1) * l2)
    return (-l2 / (l2 - l1) * (e2 - e1)
            / ((1.0 - e2) * base ** (l1 / (l2 - l1))))


def build_kernel_params(a: float, m: float, T: float, estimate: bool = True) -> KernelParams:
    regime = classify_regime(a, m, T)
    roots = kappa = osc = None
    if regime is Regime.UNDERDAMPED:
        sq = math.sqrt(a * a - 4.0 * m * m)
        l1, l2 = (-a - sq) / 2.0, (-a + sq) / 2.0
        roots = (l1, l2)
        diag = (1.0 / -math.expm1(l2 * T) - 1.0 / -math.expm1(l1 * T)) / (l2 - l1)
        cone = _under_cone_const(l1, l2, T)
    elif regime is Regime.CRITICAL:
        em1 = math.expm1(m * T)
        kappa = m * T / em1
        diag = T * (em1 + 1.0) / em1 ** 2
        cone = kappa * math.exp(1.0 - kappa)
    else:
        gamma = -a / 2.0
        delta = math.sqrt(4.0 * m * m - a * a) / 2.0
        D = 1.0 - 2.0 * math.exp(gamma * T) * math.cos(delta * T) + math.exp(2.0 * gamma * T)
        osc = (gamma, delta, D)
        diag = math.exp(gamma * T) * math.sin(delta * T) / (delta * D)
        if a == 0.0:
            cone = math.cos(m * T / 2.0)
        else:
            # lower bound only; the exact maximum of G has no closed form here
            cone = math.exp(gamma * T) * math.cos(delta * T / 2.0)
    p = KernelParams(a=a, m=m, T=T, regime=regime, roots=roots, kappa=kappa,
                     osc=osc, diag=diag, cone_const=cone)
    if estimate:
        est = p.diag / estimate_kernel_max(p)
        p = KernelParams(**{**p.__dict__, "cone_const_estimate": est})
    return p


def eval_green(p: KernelParams, t, s):
    """``G(t, s)``; scalars or broadcastable arrays in ``[0, T]``."""
    t_arr = np.asarray(t, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if (np.any(t_arr < 0.0) or np.any(t_arr > p.T)
            or np.any(s_arr < 0.0) or np.any(s_arr > p.T)):
        raise DomainError(f"t and s must lie in [0, {p.T}]")
    tau = np.where(s_arr <= t_arr, t_arr - s_arr, t_arr - s_arr + p.T)
    out = p.profile(tau)
    if out.ndim == 0:
        return float(out)
    return out


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def estimate_kernel_max(p: KernelParams, n: int = 501, refine_iters: int = 3) -> float:
    """Grid maximum of ``G`` on an ``n x n`` grid plus a short golden refinement."""
    grid = np.linspace(0.0, p.T, n)
    G = eval_green(p, grid[:, None], grid[None, :])
    i, j = np.unravel_index(np.argmax(G), G.shape)
    best = float(G[i, j])
    h = grid[1] - grid[0]
    t_best, s_best = grid[i], grid[j]

    def clip(v):
        return min(max(v, 0.0), p.T)

    t_best, val = _golden_max(lambda t: eval_green(p, t, s_best),
                              clip(t_best - h), clip(t_best + h), refine_iters)
    best = max(best, val)
    _, val = _golden_max(lambda s: eval_green(p, t_best, s),
                         clip(s_best - h), clip(s_best + h), refine_iters)
    return max(best, val)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the uniform partition of ``[0, T]`` into N cells."""

    T: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a grid function needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * (self.T / self.N)

    @classmethod
    def sample(cls, func, T: float, N: int) -> "GridFunction":
        t = np.arange(N + 1) * (T / N)
        return cls(T, np.broadcast_to(np.asarray(func(t), dtype=float), t.shape))

    @classmethod
    def constant(cls, value: float, T: float, N: int) -> "GridFunction":
        return cls(T, np.full(N + 1, float(value)))

    def to_csv(self, path, header=("t", "value")):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if header:
                w.writerow(header)
            for t, v in zip(self.nodes, self.values):
                w.writerow([f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        ts, vs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    t, v = float(row[0]), float(row[1])
                except ValueError:
                    if ts:
                        raise
                    continue  # header
                ts.append(t)
                vs.append(v)
        ts = np.asarray(ts)
        if ts.size < 2 or ts[0] != 0.0:
            raise ValueError(f"{path}: need >= 2 rows starting at t = 0")
        T = ts[-1]
        expected = np.arange(ts.size) * (T / (ts.size - 1))
        if np.max(np.abs(ts - expected)) > 1e-9 * T:
            raise ValueError(f"{path}: nodes are not uniform within 1e-9 relative")
        return cls(T, np.asarray(vs))


def green_row_integral(p: KernelParams, t: float, N: int) -> float:
    """Trapezoid approximation of the integral of ``G(t, .)`` over ``[0, T]``.

    The s-partition is split at ``s = t`` so the derivative kink is a node.
    """
    if N < 2:
        raise DomainError("N must be >= 2")
    if not 0.0 <= t <= p.T:
        raise DomainError(f"t must lie in [0, {p.T}]")
    n_left = int(round(N * t / p.T))
    n_left = min(max(n_left, 1 if t > 0.0 else 0), N - (1 if t < p.T else 0))
    total = 0.0
    if n_left > 0:
        s = np.linspace(0.0, t, n_left + 1)
        total += np.trapezoid(p.profile(t - s), s)
    if n_left < N:
        s = np.linspace(t, p.T, N - n_left + 1)
        total += np.trapezoid(p.profile(t - s + p.T), s)
    return float(total)


def apply_green_operator(p: KernelParams, h: GridFunction, corrected: bool = True) -> GridFunction:
    """Sample ``(K h)(t_i) = int_0^T G(t_i, s) h(s) ds`` at the nodes of ``h``.

    Trapezoid rule on the node grid; because t- and s-nodes coincide the kink
    at ``s = t`` is always a node. The kernel is periodic in ``s`` and
    depends on ``t - s`` only, so the weighted sum is a circular convolution
    and is evaluated with an FFT.

    With ``corrected`` the leading Euler-Maclaurin term of the kink is added:
    ``dG/ds`` jumps by exactly 1 at ``s = t`` for every regime, which makes
    the plain trapezoid sum low by ``dt^2 h(t_i) / 12``. This lifts the rule
    to fourth order for smooth periodic ``h``.
    """
    if not math.isclose(h.T, p.T, rel_tol=1e-12):
        raise DomainError(f"grid function period {h.T} differs from kernel period {p.T}")
    N = h.N
    dt = p.T / N
    v = np.array(h.values[:N])
    v[0] = 0.5 * (h.values[0] + h.values[N])
    col = p.profile(np.arange(N) * dt)
    conv = np.fft.irfft(np.fft.rfft(col) * np.fft.rfft(v), n=N) * dt
    out = np.empty(N + 1)
    out[:N] = conv
    out[N] = conv[0]
    if corrected:
        out += dt * dt / 12.0 * h.values
    return GridFunction(p.T, out)
