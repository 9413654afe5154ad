import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spion_mc.errors import ConfigError
from spion_mc.params import ML_PER_MIN, TestbedConfig, effective_velocity
from spion_mc.physics import (
    DISPERSION_CRITICAL,
    G,
    RE_CRITICAL,
    FlowRegime,
    TransportRegime,
    diffusion_coefficient,
    dispersion_factor,
    gravity_report,
    regime_report,
    regime_thresholds,
    reynolds,
    stokes_friction,
)


def with_velocity(cfg, u, a=None):
    a = cfg.a if a is None else a
    return cfg.replace(a=a, Qb=u * math.pi * a**2)


def test_reynolds(cfg):
    assert reynolds(cfg) == pytest.approx(70.7, abs=0.3)
    assert reynolds(with_velocity(cfg, 1.41)) == pytest.approx(2100, rel=0.02)
    assert reynolds(cfg.replace(nu=2 * cfg.nu)) == pytest.approx(reynolds(cfg) / 2, rel=1e-15)


def test_stokes_and_diffusion(cfg):
    assert stokes_friction(cfg) == pytest.approx(4.62e-10, rel=0.01)
    assert stokes_friction(cfg.replace(Rp=2 * cfg.Rp)) == pytest.approx(2 * stokes_friction(cfg))
    # the stored friction value is what downstream formulas use
    assert cfg.zeta == 5.18e-10 != pytest.approx(stokes_friction(cfg), rel=0.05)
    assert diffusion_coefficient(cfg) == pytest.approx(7.93e-12, rel=0.01)
    assert diffusion_coefficient(cfg.replace(kT=2 * cfg.kT)) == pytest.approx(2 * diffusion_coefficient(cfg))
    assert diffusion_coefficient(cfg.replace(zeta=2 * cfg.zeta)) == pytest.approx(diffusion_coefficient(cfg) / 2)


def test_dispersion(cfg):
    assert dispersion_factor(cfg, 0.4) == pytest.approx(0.0120, rel=0.05)
    assert dispersion_factor(cfg, 0.2) == pytest.approx(dispersion_factor(cfg, 0.4) / 2, rel=1e-15)
    assert dispersion_factor(with_velocity(cfg, 0.56e-3), 0.4) == pytest.approx(1.0, rel=0.05)
    assert dispersion_factor(cfg.replace(Qb=0.0), 0.4) == math.inf
    with pytest.raises(ConfigError):
        dispersion_factor(cfg, 0.0)


def test_gravity(cfg):
    g = gravity_report(cfg)
    assert G == 9.81
    assert g.force == pytest.approx(2.45e-18, rel=0.02)
    assert g.drift == pytest.approx(4.73e-9, rel=0.02)
    assert g.onset / 3600 == pytest.approx(4.4, rel=0.02)
    assert g.critical_mass == pytest.approx(6.6e-17, rel=0.02)
    g0 = gravity_report(cfg.replace(m_p=0.0))
    assert (g0.force, g0.drift) == (0.0, 0.0)
    assert g0.onset == math.inf


def test_regime_report(cfg):
    rep = regime_report(cfg, 0.4)
    assert rep.flow_regime is FlowRegime.LAMINAR
    assert rep.transport_regime is TransportRegime.FLOW_DOMINATED
    assert regime_report(with_velocity(cfg, 2.0)).flow_regime is FlowRegime.TURBULENT
    assert regime_report(with_velocity(cfg, 1e-4), 0.4).transport_regime is TransportRegime.DIFFUSION_DOMINATED
    d = rep.to_dict()
    assert d["flow_regime"] == "laminar"


def test_threshold_values(cfg):
    th = regime_thresholds(cfg, 0.4)
    assert th.turbulent_Qb / ML_PER_MIN == pytest.approx(150, rel=0.02)
    assert th.turbulent_a * 1e3 == pytest.approx(22.3, abs=0.05)
    assert th.diffusive_u_eff * 1e3 == pytest.approx(0.56, rel=0.05)
    assert th.diffusive_a * 1e3 == pytest.approx(0.082, rel=0.02)
    assert th.diffusive_d == pytest.approx(33.6, rel=0.01)


def test_thresholds_substitute_back(cfg):
    d = 0.4
    th = regime_thresholds(cfg, d)
    u = effective_velocity(cfg)
    re_checks = [
        cfg.replace(Qb=th.turbulent_Qb),
        with_velocity(cfg, th.turbulent_u_eff),
        with_velocity(cfg, u, a=th.turbulent_a),
    ]
    for c in re_checks:
        assert reynolds(c) == pytest.approx(RE_CRITICAL, rel=1e-9)
    ad_checks = [
        (with_velocity(cfg, th.diffusive_u_eff), d),
        (cfg.replace(Qb=th.diffusive_Qb), d),
        (with_velocity(cfg, u, a=th.diffusive_a), d),
        (cfg, th.diffusive_d),
        (cfg.replace(kT=th.diffusive_D * cfg.zeta), d),
    ]
    for c, dd in ad_checks:
        assert dispersion_factor(c, dd) == pytest.approx(DISPERSION_CRITICAL, rel=1e-9)


def test_threshold_display(cfg):
    disp = regime_thresholds(cfg, 0.4).to_display()
    assert disp["turbulent_Qb"][1] == "mL/min"
    assert disp["diffusive_a"][0] == pytest.approx(0.082, rel=0.02)


def test_thresholds_undefined_without_flow(cfg):
    with pytest.raises(ConfigError):
        regime_thresholds(cfg.replace(Qb=0.0))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_ratio_invariance(k1, k2):
    cfg = TestbedConfig()
    # Re = 2 a u / nu with u ~ Qb / a^2: scale a, keep Qb / (a nu) fixed
    c = cfg.replace(a=k1 * cfg.a, Qb=k1 * k2 * cfg.Qb, nu=k2 * cfg.nu)
    assert reynolds(c) == pytest.approx(reynolds(cfg), rel=1e-12)
    # alpha_D = d D / (a_c^2 u) = d D pi / (0.01 Qb): scale d and Qb together
    c = cfg.replace(Qb=k1 * cfg.Qb, kT=k2 * cfg.kT)
    assert dispersion_factor(c, 0.4 * k1 / k2) == pytest.approx(dispersion_factor(cfg, 0.4), rel=1e-12)
