"""Problem definitions: the two-power periodic problem, the singular
pipe-tank model, their coefficient functions and the shift by ``m^2 x``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import DomainError, H0Violated, NegativeState, NonPositiveSample
from .green import GridFunction, KernelParams, build_kernel_params


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.value))
        return float(out) if out.ndim == 0 else out

    def extrema(self) -> Tuple[float, float]:
        return float(self.value), float(self.value)

    def breakpoints(self):
        return np.empty(0)


@dataclass(frozen=True)
class Table:
    """Piecewise-linear periodic interpolant of samples on ``i*T/N``.

    Evaluation outside ``[0, T]`` wraps periodically.
    """

    samples: np.ndarray
    T: float

    def __post_init__(self):
        v = np.array(self.samples, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a coefficient table needs at least 2 samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficient samples must be finite")
        if not self.T > 0.0:
            raise ValueError("table period must be positive")
        if abs(v[0] - v[-1]) > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
            raise ValueError(
                f"coefficient table is not periodic: first sample {v[0]!r} != last {v[-1]!r}")
        v[-1] = v[0]
        v.setflags(write=False)
        object.__setattr__(self, "samples", v)
        object.__setattr__(self, "T", float(self.T))

    @property
    def nodes(self) -> np.ndarray:
        n = self.samples.size - 1
        return np.arange(n + 1) * (self.T / n)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tw = np.where((t >= 0.0) & (t <= self.T), t, np.mod(t, self.T))
        out = np.interp(tw, self.nodes, self.samples)
        return float(out) if out.ndim == 0 else out

    def extrema(self) -> Tuple[float, float]:
        return float(self.samples.min()), float(self.samples.max())

    def breakpoints(self):
        return self.nodes

    @classmethod
    def from_grid(cls, g: GridFunction) -> "Table":
        return cls(g.values, g.T)

    @classmethod
    def from_csv(cls, path) -> "Table":
        return cls.from_grid(GridFunction.from_csv(path))


CoefficientFunction = Union[Constant, Table]


def as_coefficient(v) -> CoefficientFunction:
    if isinstance(v, (Constant, Table)):
        return v
    return Constant(float(v))


def coeff_extrema(h: CoefficientFunction) -> Tuple[float, float]:
    """``(min, max)`` over ``[0, T]``; exact since extrema of a
    piecewise-linear function sit on its nodes."""
    return h.extrema()


def _power(x, e):
    # x^e with 0^e = 0 for e > 0
    return np.power(np.maximum(x, 0.0), e)


@dataclass(frozen=True)
class ProblemSpec:
    """``x'' + a x' = r(t) x^alpha - s(t) x^beta`` with T-periodic conditions."""

    a: float
    T: float
    r: CoefficientFunction
    s: CoefficientFunction
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "r", as_coefficient(self.r))
        object.__setattr__(self, "s", as_coefficient(self.s))
        if not self.a >= 0.0:
            raise H0Violated(f"damping a must be >= 0, got {self.a!r}")
        if not self.T > 0.0:
            raise DomainError(f"period T must be > 0, got {self.T!r}")
        if not 0.0 < self.alpha < self.beta < 1.0:
            raise H0Violated(
                f"exponents must satisfy 0 < alpha < beta < 1, got alpha={self.alpha!r}, beta={self.beta!r}")
        for name in ("r", "s"):
            c = getattr(self, name)
            if isinstance(c, Table) and not math.isclose(c.T, self.T, rel_tol=1e-9):
                raise DomainError(f"coefficient {name} has period {c.T}, problem has {self.T}")

    @property
    def autonomous(self) -> bool:
        return isinstance(self.r, Constant) and isinstance(self.s, Constant)

    def rhs(self, t, x):
        """``r(t) x^alpha - s(t) x^beta`` (no shift)."""
        return self.r(t) * _power(x, self.alpha) - self.s(t) * _power(x, self.beta)

    def breakpoints(self) -> np.ndarray:
        """Times at which ``rhs(., x)`` can attain its t-extrema for fixed x."""
        pts = np.concatenate([self.r.breakpoints(), self.s.breakpoints(), [0.0]])
        return np.unique(pts)


@dataclass(frozen=True)
class SingularModelSpec:
    """``u'' + a u' = (e(t) - b u'^2)/u - c``, the one pipe / one tank model."""

    a: float
    b: float
    c: float
    e: CoefficientFunction
    T: float

    def __post_init__(self):
        object.__setattr__(self, "e", as_coefficient(self.e))
        if not (self.a >= 0.0 and self.b > 1.0 and self.c > 0.0):
            raise H0Violated(f"model requires a >= 0, b > 1, c > 0; got a={self.a}, b={self.b}, c={self.c}")
        if not self.T > 0.0:
            raise DomainError(f"period T must be > 0, got {self.T!r}")

    @property
    def mu(self) -> float:
        return 1.0 / (self.b + 1.0)


@dataclass(frozen=True)
class ShiftedProblem:
    """A problem together with the shift ``m`` and its (non-resonant) kernel."""

    base: ProblemSpec
    m: float
    kernel: KernelParams

    @classmethod
    def build(cls, base: ProblemSpec, m: float, estimate: bool = True) -> "ShiftedProblem":
        return cls(base, m, build_kernel_params(base.a, m, base.T, estimate=estimate))


def eval_fm(sp: ShiftedProblem, t, x):
    """``f_m(t, x) = r(t) x^alpha - s(t) x^beta + m^2 x`` for ``x >= 0``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise NegativeState("f_m is only defined for x >= 0")
    out = sp.base.rhs(t, x_arr) + sp.m * sp.m * x_arr
    return float(out) if np.ndim(out) == 0 else out


def _scale(h: CoefficientFunction, k: float) -> CoefficientFunction:
    if isinstance(h, Constant):
        return Constant(h.value * k)
    return Table(h.samples * k, h.T)


def regularize(model: SingularModelSpec) -> ProblemSpec:
    """Map the singular model to the regular two-power problem via ``u = x^mu``."""
    mu = model.mu
    return ProblemSpec(a=model.a, T=model.T, r=_scale(model.e, 1.0 / mu),
                       s=Constant(model.c / mu), alpha=1.0 - 2.0 * mu, beta=1.0 - mu)


def model_from_problem(p: ProblemSpec) -> Tuple[float, float]:
    """Recover ``(mu, b)`` from a regularized problem's exponents."""
    mu = 1.0 - p.beta
    return mu, (1.0 - mu) / mu


def singularize_solution(x: GridFunction, mu: float) -> GridFunction:
    if np.any(x.values <= 0.0):
        raise NonPositiveSample("u = x^mu needs strictly positive samples")
    return GridFunction(x.T, x.values ** mu)


def singular_residual(model: SingularModelSpec, u: GridFunction) -> float:
    """Max-norm defect of the singular equation by periodic central differences."""
    N, dt = u.N, u.T / u.N
    v = u.values[:N]
    d1 = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dt)
    d2 = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / dt ** 2
    t = u.nodes[:N]
    res = d2 + model.a * d1 - (model.e(t) - model.b * d1 ** 2) / v + model.c
    return float(np.max(np.abs(res)))
