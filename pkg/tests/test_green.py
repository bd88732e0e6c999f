import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liebau.errors import DomainError, ResonantOrBeyond
from liebau.green import (CRITICAL_SWITCH, GridFunction, KernelParams, Regime, apply_green_operator,
                          build_kernel_params, classify_regime, eval_green, green_row_integral,
                          resonance_bound)

# (a, m, T) spanning the three regimes, a = 0 included
TRIPLES = [
    (1.6, 0.7, 1.0),
    (3.0, 0.4, 2.0),
    (2.0, 1.0, 1.0),
    (0.0, math.pi / 2, 1.0),
    (1.0, 1.5, 1.0),
    (0.5, 3.0, 1.0),
]


def exact_periodic_response(a, m, t, modes):
    """Exact periodic solution of x'' + a x' + m^2 x = sum amp*cos(w t + ph)."""
    out = 0.0
    for amp, w, ph in modes:
        out = out + (amp * np.exp(1j * (w * t + ph)) / (m * m - w * w + 1j * a * w)).real
    return out


def dense_trapezoid(p, h):
    """Direct O(N^2) trapezoid sum with per-pair kernel calls."""
    t = h.nodes
    w = np.full(t.size, p.T / h.N)
    w[0] = w[-1] = 0.5 * p.T / h.N
    return np.array([np.sum(w * eval_green(p, ti, t) * h.values) for ti in t])


class TestClassify:
    def test_underdamped_example(self):
        assert classify_regime(1.6, 0.7, 1.0) is Regime.UNDERDAMPED

    def test_critical(self):
        assert classify_regime(2.0, 1.0, 1.0) is Regime.CRITICAL

    def test_resonance_boundary_rejected(self):
        with pytest.raises(ResonantOrBeyond, match="resonance bound"):
            classify_regime(0.0, math.pi, 1.0)

    def test_beyond_resonance_rejected(self):
        with pytest.raises(ResonantOrBeyond):
            classify_regime(1.6, 3.3, 1.0)

    @pytest.mark.parametrize("a,m,T", [(-1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0)])
    def test_bad_domain(self, a, m, T):
        with pytest.raises(DomainError):
            classify_regime(a, m, T)

    def test_near_critical_switch(self):
        assert classify_regime(2.0, 1.0 - 0.5 * CRITICAL_SWITCH, 1.0) is Regime.CRITICAL
        assert classify_regime(2.0, 1.0 - 2 * CRITICAL_SWITCH, 1.0) is Regime.UNDERDAMPED


class TestKernelParams:
    def test_example_cone_const(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        assert p.cone_const == pytest.approx(0.9414, abs=5e-4)
        l1, l2 = p.roots
        assert l1 < l2 < 0

    def test_critical_closed_form(self):
        p = build_kernel_params(2.0, 1.0, 1.0)
        kappa = 1.0 / (math.e - 1.0)
        assert p.kappa == pytest.approx(kappa, rel=1e-14)
        assert p.cone_const == pytest.approx(kappa * math.exp(1 - kappa), rel=1e-14)
        assert p.cone_const_estimate == pytest.approx(p.cone_const, abs=1e-4)

    def test_oscillatory_a0(self):
        m = math.pi / 2
        p = build_kernel_params(0.0, m, 1.0)
        assert p.cone_const == pytest.approx(math.sqrt(2) / 2, rel=1e-14)
        known_max = 1.0 / (2 * m * math.sin(m / 2))
        assert p.diag / known_max == pytest.approx(p.cone_const, rel=1e-12)

    def test_oscillatory_positive_damping_is_lower_bound(self):
        p = build_kernel_params(1.0, 1.5, 1.0)
        gamma, delta, D = p.osc
        assert p.cone_const == pytest.approx(math.exp(gamma) * math.cos(delta / 2), rel=1e-14)
        assert p.cone_const < p.cone_const_estimate < 1.0

    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_invariants(self, a, m, T):
        p = build_kernel_params(a, m, T)
        assert p.diag > 0
        assert 0 < p.cone_const <= p.cone_const_estimate * (1 + 1e-12)
        assert p.cone_const_estimate < 1
        if p.regime is Regime.OSCILLATORY:
            _, delta, D = p.osc
            assert delta > 0 and D > 0 and 0 < delta * T < math.pi

    def test_underdamped_closed_form_matches_grid(self):
        p = build_kernel_params(3.0, 0.4, 2.0)
        assert p.cone_const == pytest.approx(p.cone_const_estimate, rel=1e-6)

    def test_frozen(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        with pytest.raises(Exception):
            p.m = 1.0


class TestEvalGreen:
    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_diagonal(self, a, m, T):
        p = build_kernel_params(a, m, T)
        s = np.linspace(0, T, 57)
        assert np.max(np.abs(eval_green(p, s, s) - p.diag)) < 1e-12 * max(1.0, p.diag)

    def test_positive_on_grid(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        g = np.linspace(0, 1, 201)
        assert eval_green(p, g[:, None], g[None, :]).min() > 0

    def test_a0_grid_max(self):
        m = math.pi / 2
        p = build_kernel_params(0.0, m, 1.0)
        g = np.linspace(0, 1, 401)
        gmax = eval_green(p, g[:, None], g[None, :]).max()
        assert gmax == pytest.approx(1 / (2 * m * math.sin(m / 2)), rel=1e-3)

    def test_domain(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        with pytest.raises(DomainError):
            eval_green(p, 1.2, 0.5)
        with pytest.raises(DomainError):
            eval_green(p, 0.5, -0.1)

    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_branch_continuity(self, a, m, T):
        p = build_kernel_params(a, m, T)
        t = 0.37 * T
        eps = 1e-12
        assert abs(eval_green(p, t, t + eps) - eval_green(p, t, t - eps)) < 1e-10
        assert abs(eval_green(p, 0.0, T) - eval_green(p, T, 0.0)) < 1e-10
        assert abs(eval_green(p, 0.0, T) - p.diag) < 1e-10

    def test_near_critical_agreement(self):
        a = 2.0
        crit = build_kernel_params(a, 1.0, 1.0, estimate=False)
        under = build_kernel_params(a, 1.0 - 2e-6, 1.0, estimate=False)
        g = np.linspace(0, 1, 41)
        G1 = eval_green(under, g[:, None], g[None, :])
        G2 = eval_green(crit, g[:, None], g[None, :])
        assert np.max(np.abs(G1 - G2)) < 1e-5
        # right at the switch threshold both formulas give the same values
        at = build_kernel_params(a, 1.0 - 1.01 * CRITICAL_SWITCH, 1.0, estimate=False)
        assert at.regime is Regime.UNDERDAMPED
        assert np.max(np.abs(eval_green(at, g[:, None], g[None, :]) - G2)) < 1e-6

    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_kernel_solves_the_ode(self, a, m, T):
        # oracle: exact Fourier response of the linear periodic problem
        w = 2 * math.pi / T
        modes = [(1.0, w, 0.0), (0.3, 2 * w, -math.pi / 2)]
        p = build_kernel_params(a, m, T)
        t0 = 0.37 * T
        s = np.linspace(0, T, 200001)
        h = sum(amp * np.cos(om * s + ph) for amp, om, ph in modes)
        val = np.trapezoid(eval_green(p, t0, s) * h, s)
        assert val == pytest.approx(exact_periodic_response(a, m, t0, modes), abs=1e-8)


class TestOrderingProperty:
    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_chain(self, a, m, T):
        p = build_kernel_params(a, m, T)
        g = np.linspace(0, T, 201)
        G = eval_green(p, g[:, None], g[None, :])
        assert np.all(G >= p.diag - 1e-12)
        assert np.all(p.diag >= p.cone_const * G - 1e-12)

    @settings(max_examples=40, deadline=None)
    @given(a=st.floats(0.0, 4.0), frac=st.floats(0.02, 0.98), T=st.floats(0.5, 3.0))
    def test_chain_random(self, a, frac, T):
        m = frac * math.sqrt(resonance_bound(a, T))
        p = build_kernel_params(a, m, T, estimate=False)
        g = np.linspace(0, T, 61)
        G = eval_green(p, g[:, None], g[None, :])
        assert G.min() > 0
        assert np.all(G >= p.diag * (1 - 1e-12))
        assert np.all(p.diag >= p.cone_const * G * (1 - 1e-12))


class TestRowIntegral:
    @pytest.mark.parametrize("a,m,T,t", [(1.6, 0.7, 1.0, 0.3), (2.0, 1.0, 1.0, 0.0), (0.0, 1.0, 1.0, 0.5)])
    def test_identity(self, a, m, T, t):
        p = build_kernel_params(a, m, T)
        assert green_row_integral(p, t, 2000) == pytest.approx(1 / m ** 2, rel=1e-6)

    def test_example_value(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        assert green_row_integral(p, 0.3, 2000) == pytest.approx(2.040816, rel=1e-6)

    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_second_order(self, a, m, T):
        p = build_kernel_params(a, m, T)
        e1 = abs(green_row_integral(p, 0.3 * T, 100) * m * m - 1)
        e2 = abs(green_row_integral(p, 0.3 * T, 200) * m * m - 1)
        assert 3.5 < e1 / e2 < 4.5

    def test_pre(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        with pytest.raises(DomainError):
            green_row_integral(p, 0.3, 1)
        with pytest.raises(DomainError):
            green_row_integral(p, 1.5, 100)


class TestOperator:
    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_constant(self, a, m, T):
        p = build_kernel_params(a, m, T)
        Kh = apply_green_operator(p, GridFunction.constant(m * m, T, 256))
        assert np.max(np.abs(Kh.values - 1.0)) < 1e-8

    def test_zero(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        assert np.all(apply_green_operator(p, GridFunction.constant(0.0, 1.0, 64)).values == 0.0)

    def test_stationary_state(self):
        from liebau.model import ProblemSpec, ShiftedProblem, eval_fm
        # r x^alpha = s x^beta at x* = (r/s)^(1/(beta-alpha))
        sp = ShiftedProblem.build(ProblemSpec(1.6, 1.0, 154.0, 149.0, 0.98, 0.99), 0.7)
        xs = (154 / 149) ** 100
        h = GridFunction.constant(eval_fm(sp, 0.0, xs), 1.0, 256)
        assert np.max(np.abs(apply_green_operator(sp.kernel, h).values - xs)) < 1e-8 * xs

    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_fft_matches_dense_trapezoid(self, a, m, T):
        p = build_kernel_params(a, m, T)
        h = GridFunction.sample(lambda t: 1 + np.sin(2 * np.pi * t / T) ** 2 + 0.1 * t * (T - t), T, 48)
        fast = apply_green_operator(p, h, corrected=False).values
        assert np.max(np.abs(fast - dense_trapezoid(p, h))) < 1e-12 * np.max(np.abs(fast))

    @pytest.mark.parametrize("a,m,T", TRIPLES)
    def test_kink_correction_order(self, a, m, T):
        w = 2 * math.pi / T
        modes = [(1.0, w, 0.0), (0.5, 3 * w, 0.3)]
        p = build_kernel_params(a, m, T)
        errs = {}
        for corrected in (False, True):
            errs[corrected] = []
            for N in (64, 128):
                h = GridFunction.sample(lambda t: sum(A * np.cos(om * t + ph) for A, om, ph in modes), T, N)
                Kh = apply_green_operator(p, h, corrected=corrected)
                exact = exact_periodic_response(a, m, h.nodes, modes)
                errs[corrected].append(np.max(np.abs(Kh.values - exact)))
        assert 3.5 < errs[False][0] / errs[False][1] < 4.5
        assert errs[True][0] / errs[True][1] > 12

    def test_period_mismatch(self):
        p = build_kernel_params(1.6, 0.7, 1.0)
        with pytest.raises(DomainError):
            apply_green_operator(p, GridFunction.constant(1.0, 2.0, 16))


class TestResonanceDegeneration:
    def test_diag_shrinks(self):
        a, T = 1.0, 1.0
        lim = resonance_bound(a, T)
        d_far = build_kernel_params(a, math.sqrt(0.9 * lim), T, estimate=False).diag
        d_near = build_kernel_params(a, math.sqrt(0.999 * lim), T, estimate=False).diag
        assert d_near < d_far


class TestGridFunction:
    def test_csv_roundtrip(self, tmp_path):
        g = GridFunction.sample(lambda t: np.exp(np.sin(2 * np.pi * t)) / 3, 1.0, 33)
        g.to_csv(tmp_path / "g.csv")
        back = GridFunction.from_csv(tmp_path / "g.csv")
        assert back.T == g.T and np.array_equal(back.values, g.values)

    def test_spacing(self):
        g = GridFunction.constant(1.0, 2.0, 10)
        assert g.N == 10 and np.allclose(np.diff(g.nodes), 0.2, rtol=0, atol=1e-15)

    def test_nonuniform_rejected(self, tmp_path):
        (tmp_path / "bad.csv").write_text("t,value\n0,1\n0.3,2\n1,1\n")
        with pytest.raises(ValueError, match="uniform"):
            GridFunction.from_csv(tmp_path / "bad.csv")

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            GridFunction(1.0, [1.0, np.nan])
