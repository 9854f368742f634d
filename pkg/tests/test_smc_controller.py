import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermosmc.pde_core import PlantBounds
from thermosmc.smc_controller import (
    AssumptionViolatedError,
    ConfigError,
    ControllerConfig,
    DisturbanceBounds,
    GainState,
    InvalidMarginError,
    ModeError,
    adapt_step,
    check_gain_conditions,
    control_output,
    k_thresholds,
    ultimate_bound,
    ultimate_bound_report,
)


def flat_bounds(theta=1.0, lam=-0.01, a=1.0, b=1.0, a1=None):
    a1 = a if a1 is None else a1
    return PlantBounds(theta, theta, lam, lam, a, a, a1, a1, b, b, b, b)


def bi_cfg(k=15.0, gamma=4.0, alpha=1 / 300, **kw):
    return ControllerConfig(k, k, gamma, gamma, alpha, alpha, **kw)


MONO = ControllerConfig(15.0, 15.0, 4.0, 4.0, eps0=0.5, eps1=0.5)


class TestControlOutput:
    def test_positive_error(self):
        assert control_output(GainState(2.0, 2.0), 0.5, 0.5, MONO) == (-9.5, -9.5)

    def test_negative_error(self):
        assert control_output(GainState(2.0, 2.0), -0.5, -0.5, MONO) == (9.5, 9.5)

    def test_zero_error_ignores_relay(self):
        assert control_output(GainState(50.0, 7.0), 0.0, 0.0, MONO) == (0.0, 0.0)

    @given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0, 100), st.floats(0, 100))
    def test_odd_symmetry(self, z0, z1, m0, m1):
        g = GainState(m0, m1)
        u = control_output(g, z0, z1, MONO)
        v = control_output(g, -z0, -z1, MONO)
        assert v == (-u[0], -u[1])


class TestAdaptation:
    def test_one_euler_step(self):
        g = adapt_step(GainState(0.0, 0.0), 0.5, -0.5, 0.1, bi_cfg())
        assert g.m0 == pytest.approx(0.2) and g.m1 == pytest.approx(0.2)
        assert g.t == pytest.approx(0.1)

    def test_dead_zone_freezes(self):
        g = adapt_step(GainState(1.3, 1.3), 0.3, -0.5, 0.1, MONO)
        assert (g.m0, g.m1) == (1.3, 1.3)

    def test_mono_outside_dead_zone(self):
        g = adapt_step(GainState(1.0, 1.0), 0.6, 0.0, 0.1, MONO)
        assert g.m0 == pytest.approx(1.24)

    def test_pure_leakage(self):
        cfg = bi_cfg(alpha=0.1)
        g = adapt_step(GainState(1.0, 1.0), 0.0, 0.0, 0.5, cfg)
        g = adapt_step(g, 0.0, 0.0, 0.5, cfg)
        assert g.m0 == pytest.approx(0.9025)
        g1 = adapt_step(GainState(1.0, 1.0), 0.0, 0.0, 0.999, bi_cfg(alpha=1.0))
        assert g1.m0 == pytest.approx(0.001)

    def test_leakage_one_second(self):
        # the leakage step needs dt * alpha < 1, so split one unit second
        cfg = bi_cfg(alpha=0.1)
        assert adapt_step(GainState(1.0, 1.0), 0.0, 0.0, 1.0, cfg).m0 == pytest.approx(0.9)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ConfigError):
            adapt_step(GainState(0, 0), 0, 0, 0.0, MONO)

    def test_rejects_large_leak_step(self):
        with pytest.raises(ConfigError):
            adapt_step(GainState(0, 0), 0, 0, 10.0, bi_cfg(alpha=0.2))

    @pytest.mark.parametrize("kw", [
        dict(gamma0=0.0), dict(alpha0=-1.0), dict(eps1=-0.1), dict(m0_init=-1.0),
        dict(alpha0=0.1), dict(k0=math.nan),
    ])
    def test_config_validation(self, kw):
        base = dict(k0=1.0, k1=1.0, gamma0=1.0, gamma1=1.0)
        with pytest.raises(ConfigError):
            ControllerConfig(**{**base, **kw})

    @settings(max_examples=200)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=60),
           st.floats(0, 20), st.sampled_from(["bi", "mono"]))
    def test_nonnegative(self, zs, m_init, mode):
        cfg = bi_cfg(gamma=3.0, alpha=0.5, m0_init=m_init, m1_init=m_init) if mode == "bi" else \
            ControllerConfig(15, 15, 3.0, 3.0, eps0=0.2, eps1=0.2, m0_init=m_init, m1_init=m_init)
        g = GainState.initial(cfg)
        for z in zs:
            g = adapt_step(g, z, -z, 0.1, cfg)
            assert g.m0 >= 0 and g.m1 >= 0

    @settings(max_examples=200)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=60), st.floats(0, 1))
    def test_mono_nondecreasing(self, zs, eps):
        cfg = ControllerConfig(1, 1, 2.0, 0.7, eps0=eps, eps1=eps)
        g = GainState.initial(cfg)
        for z in zs:
            nxt = adapt_step(g, z, z, 0.05, cfg)
            assert nxt.m0 >= g.m0 and nxt.m1 >= g.m1
            g = nxt

    @settings(max_examples=200)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=80), st.floats(0.1, 5), st.floats(0.01, 2),
           st.floats(0, 30), st.floats(0.01, 0.4))
    def test_bi_bounded(self, fractions, zmax, alpha, m_init, dt):
        # dt * alpha <= 0.8 < 1 keeps the Euler leakage contractive
        cfg = bi_cfg(gamma=2.5, alpha=alpha, m0_init=m_init, m1_init=m_init)
        if dt * alpha >= 1:
            return
        cap = max(m_init, cfg.gamma0 * zmax / alpha)
        g = GainState.initial(cfg)
        for f in fractions:
            g = adapt_step(g, f * zmax, -f * zmax, dt, cfg)
            assert g.m0 <= cap * (1 + 1e-12) and g.m1 <= cap * (1 + 1e-12)


class TestGainConditions:
    def test_stabilizing_reaction_threshold(self):
        rep = check_gain_conditions(flat_bounds(lam=-0.01), None, bi_cfg())
        assert rep.lam_bar_M == 0.0
        assert rep.thresholds["k0_bi"] == pytest.approx(-1.0)
        assert rep.margins["k0_bi"] == pytest.approx(16.0)
        assert rep.passed

    def test_boundary_of_k1_inequality(self):
        b = flat_bounds(lam=0.0, a=1.0, a1=2.0)
        cfg = ControllerConfig(10.0, -2.0, 1.0, 1.0, 0.1, 0.1)
        rep = check_gain_conditions(b, None, cfg)
        assert rep.checks["k1_bi"] and rep.margins["k1_bi"] == 0.0
        assert not rep.checks["k1_mono"]

    def test_k0_bi_is_strict(self):
        b = flat_bounds(lam=0.0, a=1.0)
        rep = check_gain_conditions(b, None, ControllerConfig(-1.0, 5.0, 1.0, 1.0, 0.1, 0.1))
        assert not rep.checks["k0_bi"]
        assert not rep.passed

    def test_destabilizing_reaction(self):
        lam = 1.0
        b = flat_bounds(theta=1.0, lam=lam, a=0.5, b=2.0)
        thr = k_thresholds(b)
        assert thr["k0_bi"] == pytest.approx(lam * math.pi**2 / (math.pi**2 - 4 * lam) * 2.0 - 0.5)
        rep = check_gain_conditions(b, None, bi_cfg())
        assert any("lam_M > 0" in n for n in rep.notes)

    def test_reaction_limit_raises(self):
        with pytest.raises(AssumptionViolatedError):
            check_gain_conditions(flat_bounds(theta=2.0, lam=math.pi**2 / 2), None, bi_cfg())

    @given(st.floats(0.1, 10), st.floats(-5, 2), st.floats(-5, 20), st.floats(0.1, 5), st.floats(0.01, 50))
    def test_mono_threshold_offset(self, theta, lam, a, b, gamma):
        if theta * math.pi**2 - 4 * max(lam, 0) <= 0.01:
            return
        bounds = flat_bounds(theta, lam, a, b)
        cfg = ControllerConfig(1.0, 1.0, gamma, 2 * gamma)
        thr = k_thresholds(bounds, cfg)
        assert thr["k0_mono"] - thr["k0_bi"] == pytest.approx(gamma)
        assert thr["k1_mono"] - thr["k1_bi"] == pytest.approx(2 * gamma)

    def test_report_lines(self):
        lines = check_gain_conditions(flat_bounds(), None, MONO).lines()
        assert lines[-1].startswith("overall (mono)")


class TestUltimateBound:
    def test_zero_disturbance(self):
        assert ultimate_bound(flat_bounds(), DisturbanceBounds(0, 0), bi_cfg()) == 0.0

    def test_homogeneous_in_phi(self):
        d = DisturbanceBounds(1.5, 0.7)
        b1 = ultimate_bound(flat_bounds(), d, bi_cfg())
        b2 = ultimate_bound(flat_bounds(), d.scaled(2.0), bi_cfg())
        assert b2 == pytest.approx(2 * b1, rel=1e-14)

    def test_default_scenario_matches_oracle(self, ref):
        bounds = PlantBounds(ref["theta"], ref["theta"], ref["lam"], ref["lam"], ref["a0"], ref["a0"],
                             ref["a1"], ref["a1"], ref["b0"], ref["b1"], ref["b0"], ref["b1"])
        rep = ultimate_bound_report(bounds, DisturbanceBounds(ref["phi0"], ref["phi1"]),
                                    bi_cfg(gamma=0.3))
        assert rep.beta_min == pytest.approx(ref["bi_beta_min"], rel=1e-10)
        assert rep.rho == pytest.approx(ref["bi_rho"], rel=1e-12)
        assert rep.eta == pytest.approx(ref["bi_eta"], rel=1e-10)
        assert rep.bound == pytest.approx(ref["bi_B"], rel=1e-10)

    def test_margin_outside_range(self):
        with pytest.raises(InvalidMarginError):
            ultimate_bound(flat_bounds(), DisturbanceBounds(1, 1), bi_cfg(alpha=0.1), epsilon_margin=0.1)
        with pytest.raises(InvalidMarginError):
            ultimate_bound(flat_bounds(), DisturbanceBounds(1, 1), bi_cfg(alpha=0.1), epsilon_margin=0.0)

    def test_mono_has_no_bound(self):
        with pytest.raises(ModeError):
            ultimate_bound(flat_bounds(), DisturbanceBounds(1, 1), MONO)

    def test_failing_conditions(self):
        with pytest.raises(ConfigError):
            ultimate_bound(flat_bounds(a=1.0), DisturbanceBounds(1, 1), bi_cfg(k=-3.0))
