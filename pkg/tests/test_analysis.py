import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from movestab.analysis import (
    default_window,
    detect_extinction,
    envelope_constant,
    equivalence_ratio,
    fit_exponential_rate,
    fit_power_exponent,
)
from movestab.dalembert import EnergyTrace, InitialData, static_boundary_run
from movestab.errors import DomainError, WindowError


def exp_trace(rate, C=1.0, n=201, T=10.0):
    t = np.linspace(0, T, n)
    E = C * np.exp(-rate * t)
    return EnergyTrace(t, E)


def test_exponential_fit_exact():
    fit = fit_exponential_rate(exp_trace(0.7))
    assert fit.rate == pytest.approx(0.7, rel=1e-12)
    assert fit.residual_rms < 1e-12 and fit.C == pytest.approx(1.0)
    assert fit.to_dict()["kind"] == "exponential"


def test_exponential_fit_with_ripple():
    t = np.linspace(0, 20, 2001)
    E = np.exp(-1.3 * t) * (1.5 + np.sin(7 * t))
    fit = fit_exponential_rate(EnergyTrace(t, E), (2, 20))
    assert fit.rate == pytest.approx(1.3, rel=0.02)
    assert fit.C >= 1.0


def test_power_fit_exact():
    t = np.linspace(1, 200, 500)
    fit = fit_power_exponent(EnergyTrace(t, 3.0 * t**-1.1))
    assert fit.value == pytest.approx(1.1, rel=1e-12)
    assert fit.C == pytest.approx(3.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(1e-6, 1e6))
def test_fit_scale_covariant(rate, scale):
    # multiplying E by a constant leaves the rate unchanged
    a = fit_exponential_rate(exp_trace(rate))
    b = fit_exponential_rate(exp_trace(rate, C=scale))
    assert b.rate == pytest.approx(a.rate, rel=1e-9)


def test_fit_skips_roundoff_floor():
    t = np.linspace(0, 10, 101)
    E = np.exp(-5 * t)
    E[t > 6] = 1e-20  # below 1e3 eps E(0)
    fit = fit_exponential_rate(EnergyTrace(t, E))
    assert fit.rate == pytest.approx(5.0, rel=1e-10)


def test_fit_window_errors():
    tr = exp_trace(1.0)
    with pytest.raises(WindowError):
        fit_exponential_rate(tr, (20, 30))
    z = EnergyTrace(np.linspace(0, 1, 5), np.array([1.0, 0.5, 0.0, 0.0, 0.0]))
    with pytest.raises(WindowError):
        fit_exponential_rate(z)
    with pytest.raises(WindowError):
        fit_power_exponent(exp_trace(1.0), (0, 5))


def test_envelope_constant():
    t = np.linspace(0, 5, 51)
    E = 2.0 * np.exp(-t)
    E[0] = 1.0
    assert envelope_constant(EnergyTrace(t, E), 1.0, (1, 5)) == pytest.approx(2.0)


def test_equivalence_ratio_identical_traces():
    tr = exp_trace(0.5)
    c1, c2 = equivalence_ratio(tr, tr, lambda t: t)
    assert c1 == pytest.approx(1.0) and c2 == pytest.approx(1.0)
    with pytest.raises(DomainError):
        equivalence_ratio(tr, tr, lambda t: t + 100)


def test_detect_extinction_synthetic():
    t = np.linspace(0, 2, 21)
    E = np.where(t < 1.0, 1.0, 0.0)
    assert detect_extinction(EnergyTrace(t, E)) == pytest.approx(1.0)
    assert detect_extinction(exp_trace(0.1)) is None
    assert detect_extinction(EnergyTrace(t, np.zeros_like(t))) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-14, 1e-3), st.floats(1.0, 100.0))
def test_extinction_threshold_monotone(th, factor):
    # a larger threshold never detects a later time
    t = np.linspace(0, 20, 401)
    tr = EnergyTrace(t, np.exp(-3 * t))
    lo = detect_extinction(tr, th)
    hi = detect_extinction(tr, th * factor)
    assert lo is not None and hi is not None and hi <= lo


def test_damped_string_has_no_extinction_for_mu_below_one():
    d = InitialData.mode(1, 0.6)
    tr = static_boundary_run(d, None, 0.3, 0.5, 3.0, 0.3 / 256)
    assert detect_extinction(tr) is None


def test_default_window():
    tr = exp_trace(1.0)
    assert default_window(tr, 0.6) == (1.2, 10.0)
