import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spion_mc.cir import (
    BetaInit,
    CirModel,
    F_s,
    cir,
    cir_limit,
    cir_numeric_oracle,
    cir_windowed,
    f_rho,
    f_s,
    golden_section_max,
    h_peak,
    limit_shape,
    numeric_peak,
    sample_cir,
    t_peak,
    t_start,
)
from spion_mc.errors import ConfigError
from spion_mc.params import TestbedConfig

MM = 1e-3
shape = st.floats(1.0, 6.0)


def model(a=3.0, b=3.0, d=0.1, lz=0.0, cfg=None):
    return CirModel(cfg or TestbedConfig(), d, BetaInit(a, b), lz=lz)


def test_init_validation():
    with pytest.raises(ConfigError):
        BetaInit(0.5, 3)
    with pytest.raises(ConfigError):
        CirModel(TestbedConfig(), 0.1, lz=0.3)
    with pytest.raises(ConfigError):
        CirModel(TestbedConfig(), -0.1)


def test_densities():
    s = np.linspace(0, 1, 11)
    assert np.all(f_s(BetaInit(1, 1), s) == 1.0)
    assert f_s(BetaInit(1, 2), 0.25) == pytest.approx(1.5)
    assert f_s(BetaInit(3, 3), 0.5) == pytest.approx(1.875)
    cfg = TestbedConfig()
    rho = np.linspace(0, cfg.a, 7)
    assert np.allclose(f_rho(BetaInit(1, 1), cfg, rho), 2 * rho / cfg.a**2)
    assert f_rho(BetaInit(1, 2), cfg, cfg.a) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("a,b", [(1, 1), (1, 2), (3, 3), (3.41, 3.28), (5.5, 2.2)])
def test_normalization(a, b):
    init = BetaInit(a, b)
    cfg = TestbedConfig()
    total_s, _ = integrate.quad(lambda s: float(f_s(init, s)), 0, 1, epsabs=1e-13)
    total_rho, _ = integrate.quad(lambda r: float(f_rho(init, cfg, r)), 0, cfg.a, epsabs=1e-13)
    assert total_s == pytest.approx(1.0, abs=1e-9)
    assert total_rho == pytest.approx(1.0, abs=1e-9)


def test_cdf_cases():
    x = np.linspace(0, 1, 101)
    assert np.allclose(F_s(BetaInit(1, 1), x), x, atol=1e-12)
    assert np.allclose(F_s(BetaInit(1, 2), x), 2 * x - x**2, atol=1e-12)
    assert F_s(BetaInit(3, 3), 0.5) == pytest.approx(0.5, abs=1e-12)


def test_t_start():
    m = model()
    assert t_start(m) == pytest.approx(1.060, abs=0.005)
    assert t_start(model(d=0.2)) == pytest.approx(2 * t_start(m), rel=1e-14)


def test_peak_timing():
    m = model()
    assert t_peak(m) / t_start(m) == pytest.approx(5 / 3, rel=1e-15)
    # with an onset of 1.09 s the peak falls at 1.82 s
    assert 1.09 * t_peak(m) / t_start(m) == pytest.approx(1.82, abs=0.01)
    assert t_peak(model(1, 2)) == t_start(model(1, 2))
    assert t_peak(model(d=0.4)) == pytest.approx(4 * t_peak(m), rel=1e-14)


def test_peak_values():
    m = model()
    assert h_peak(m) / m.c_d == pytest.approx(30 * 4 * 27 / 5**5, abs=1e-12)
    assert h_peak(m) / m.c_d == pytest.approx(1.0368, abs=1e-3)
    m11 = model(1, 1)
    assert h_peak(m11) == pytest.approx(m11.c_d, rel=1e-14)
    assert cir_limit(m11, t_start(m11)) == pytest.approx(m11.c_d, rel=1e-12)
    m12 = model(1, 2)
    assert cir_limit(m12, t_start(m12)) == pytest.approx(2 * m12.c_d, rel=1e-12)
    assert float(cir_limit(m, t_peak(m))) == pytest.approx(h_peak(m), rel=1e-12)
    prod = [h_peak(model(d=d)) * d for d in (0.05, 0.1, 0.2, 0.4)]
    assert np.ptp(prod) / prod[0] <= 1e-9


def test_limit_11_closed_form():
    m = model(1, 1)
    t = t_start(m) * np.linspace(1, 30, 50)
    assert np.allclose(cir_limit(m, t), m.c_d * m.d / (m.u0 * t), rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(shape, shape, st.floats(0.0, 50.0))
def test_limit_nonnegative_and_causal(a, b, tt):
    m = model(a, b)
    t = tt * t_start(m)
    h = float(cir_limit(m, t))
    assert h >= 0.0
    if tt < 1.0:
        assert h == 0.0


@pytest.mark.parametrize("a,b", [(1, 1), (1, 2), (3, 3), (3.5, 3.5)])
def test_tail_slope(a, b):
    m = model(a, b)
    t0 = t_start(m)
    t1, t2 = 20 * t0, 200 * t0
    slope = math.log(cir_limit(m, t2) / cir_limit(m, t1)) / math.log(t2 / t1)
    assert slope == pytest.approx(-b, rel=0.02)


@pytest.mark.parametrize("a,b", [(2, 2), (3, 3), (3.41, 3.28), (5, 1.5)])
def test_grid_argmax(a, b):
    m = model(a, b)
    t = np.linspace(t_start(m), 10 * t_start(m), 20001)
    step = t[1] - t[0]
    assert abs(t[np.argmax(cir_limit(m, t))] - t_peak(m)) <= step
    assert numeric_peak(m) == pytest.approx(t_peak(m), abs=1e-6 * t_start(m))


def test_golden_section():
    x = golden_section_max(lambda v: -(v - 0.3) ** 2, 0, 1, 1e-10)
    assert x == pytest.approx(0.3, abs=1e-8)


def test_windowed_support_and_decay():
    m = model(lz=5 * MM)
    onset = (m.d - m.lz / 2) / m.u0
    assert float(cir_windowed(m, 0.999 * onset)) == 0.0
    assert float(cir_windowed(m, 1e6)) == pytest.approx(0.0, abs=1e-20)
    assert float(cir(m, 2.0)) == float(cir_windowed(m, 2.0))


def test_windowed_close_to_limit_at_peak():
    m = model(lz=5 * MM)
    tp = t_peak(m)
    assert float(cir_windowed(m, tp)) == pytest.approx(float(cir_limit(m, tp)), rel=0.03)


def test_windowed_converges_to_limit():
    base = model()
    t0 = t_start(base)
    t = np.linspace(1.01 * t0, 20 * t0, 4000)
    ref = cir_limit(base, t)
    devs = [np.max(np.abs(cir_windowed(base, t, lz * MM) - ref) / ref) for lz in (20, 10, 5, 1, 0.1)]
    assert all(x > y for x, y in zip(devs, devs[1:]))


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(0.5, 20.0))
def test_single_shape_reduction(b, lz_mm):
    # with alpha = 1 the window integral has an elementary antiderivative
    m = model(1.0, b, lz=lz_mm * MM)
    hi = (m.d + m.lz / 2) / m.u0
    t = hi * np.linspace(1.0, 5.0, 9)
    ref = m.c_d * m.d / m.lz * (((m.d + m.lz / 2) / (m.u0 * t)) ** b - ((m.d - m.lz / 2) / (m.u0 * t)) ** b)
    assert np.allclose(cir_windowed(m, t), ref, rtol=1e-10, atol=0)


def test_oracle_33_window():
    m = model(lz=5 * MM)
    t0 = t_start(m)
    for t in np.linspace(t0, 10 * t0, 40):
        ref = float(cir_windowed(m, t))
        val = cir_numeric_oracle(m, t)
        assert val == pytest.approx(ref, rel=1e-6, abs=1e-18)


def test_oracle_11_random_times():
    m = model(1, 1, lz=20 * MM)
    rng = np.random.default_rng(3)
    t0 = t_start(m)
    for t in rng.uniform(0.8 * t0, 10 * t0, 50):
        assert cir_numeric_oracle(m, t) == pytest.approx(float(cir_windowed(m, t)), rel=1e-6, abs=1e-18)


def test_oracle_before_onset():
    m = model(lz=5 * MM)
    assert cir_numeric_oracle(m, 0.9 * (m.d - m.lz / 2) / m.u0) == 0.0


def test_smoothed_oracle():
    # second, independent quadrature route: 2-D rule with a smoothed delta
    m = model(lz=5 * MM)
    t0 = t_start(m)
    for t in (1.3 * t0, 2 * t0, 4 * t0):
        val = cir_numeric_oracle(m, t, mode="smoothed")
        assert val == pytest.approx(float(cir_windowed(m, t)), rel=1e-3)


def test_sample_cir():
    m = model()
    h = sample_cir(m, 30, 0.1)
    assert h.shape == (30,)
    assert h[0] == pytest.approx(float(cir_limit(m, t_start(m))))
    assert np.allclose(h, cir_limit(m, t_start(m) + 0.1 * np.arange(30)))


def test_limit_shape_boundary():
    # 0^0 = 1 at alpha = 1, x = 1, leaving only 1 / B(1, 2)
    assert float(limit_shape(1.0, 1.0, 2.0)) == pytest.approx(2.0, rel=1e-14)
