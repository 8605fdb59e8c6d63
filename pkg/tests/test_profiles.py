import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from movestab.errors import InvalidProfileError
from movestab.profiles import (
    constant_profile,
    eval_profile,
    example1_breakpoints,
    example1_profile,
    profile_from_dict,
    tabulated_profile,
    validate_profile,
)

alphas = st.floats(0.01, 0.99)
betas = st.floats(-0.99, -0.01)


def test_example1_first_piece(ex1):
    # a = 0.5 t + 0.1 on [0.2, 0.6]
    t = np.linspace(0.2, 0.6, 41)
    a, slope = eval_profile(ex1, t)
    assert np.allclose(a, 0.5 * t + 0.1, atol=1e-15)
    assert np.all(slope[:-1] == 0.5)


def test_example1_breakpoint_values(ex1):
    assert eval_profile(ex1, 0.6)[0] == pytest.approx(0.4, abs=1e-15)
    assert eval_profile(ex1, 1.2)[0] == pytest.approx(0.2, abs=1e-15)
    assert eval_profile(ex1, 0.2)[0] == pytest.approx(0.2, abs=1e-15)
    assert example1_breakpoints(0.5, -1 / 3) == pytest.approx((0.2, 0.6, 1.2))


def test_eval_examples(ex1):
    a, s = eval_profile(ex1, 0.2)
    assert a == pytest.approx(0.2, abs=1e-15) and s == 0.5  # right-hand slope
    a, s = eval_profile(ex1, 1.0)
    assert a == pytest.approx(4 / 15, abs=1e-15) and s == pytest.approx(-1 / 3)
    assert eval_profile(constant_profile(0.5), 3.7) == (0.5, 0.0)


@pytest.mark.parametrize("alpha,beta,word", [(0.5, 0.5, "beta < 0"), (0.5, -1.0, "-1 < beta"),
                                             (1.0, -0.5, "alpha < 1"), (0.0, -0.5, "0 < alpha")])
def test_example1_range_errors_name_bound(alpha, beta, word):
    with pytest.raises(InvalidProfileError, match=word.replace("<", r"\<")
                       .replace("-", r"\-")):
        example1_profile(alpha, beta)


def test_validate_examples(ex1):
    d = validate_profile(ex1)
    assert d.passed and d.min_a == pytest.approx(0.2, abs=1e-12)
    d = validate_profile(constant_profile(0.5))
    assert d.passed and d.lipschitz == 0.0
    bad = tabulated_profile([(0.0, 0.3), (0.5, 0.4), (1.0, 0.35)])
    d = validate_profile(bad)
    assert not d.checks["periodic"]
    assert d.periodicity_defect == pytest.approx(0.05)


def test_tabulated_interpolates_and_wraps():
    p = tabulated_profile([(0.0, 0.3), (0.25, 0.4), (0.5, 0.3), (0.75, 0.2)])
    assert eval_profile(p, 0.125)[0] == pytest.approx(0.35)
    assert eval_profile(p, 0.875)[0] == pytest.approx(0.25)  # wrap segment
    assert eval_profile(p, 1.125)[0] == pytest.approx(0.35)
    assert p.lipschitz == pytest.approx(0.4)


def test_tabulated_rejects_bad_samples():
    with pytest.raises(InvalidProfileError):
        tabulated_profile([(0.0, 0.3), (0.0, 0.4)])
    with pytest.raises(InvalidProfileError):
        tabulated_profile([(0.0, 0.3), (1.5, 0.4)])


def test_profile_dict_roundtrip(ex1):
    for p in (ex1, constant_profile(0.4),
              tabulated_profile([(0.0, 0.3), (0.5, 0.4)])):
        q = profile_from_dict(p.to_dict())
        t = np.linspace(-1, 2, 31)
        assert np.array_equal(eval_profile(p, t)[0], eval_profile(q, t)[0])


@settings(max_examples=60, deadline=None)
@given(alphas, betas, st.floats(-5, 5), st.integers(-20, 20))
def test_periodicity(alpha, beta, t, n):
    p = example1_profile(alpha, beta)
    a1, s1 = eval_profile(p, t)
    a2, s2 = eval_profile(p, t + n)
    assert a2 == pytest.approx(a1, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(alphas, betas)
def test_example1_continuity_and_lipschitz(alpha, beta):
    # both affine pieces, written out independently, agree at the breakpoints
    d = 2 * (alpha - beta)
    t1 = alpha * (1 + beta) / d
    t2 = (alpha * (1 + beta) - 2 * beta) / d
    t3 = (alpha * (3 + beta) - 2 * beta) / d
    first = lambda t: alpha * t + alpha * (1 - alpha) * (1 + beta) / d  # noqa: E731
    second = lambda t: beta * t - beta + alpha * (1 - beta**2) / d  # noqa: E731
    assert first(t2) == pytest.approx(second(t2), abs=1e-12)
    assert first(t1) == pytest.approx(second(t3), abs=1e-12)
    assert t3 - t1 == pytest.approx(1.0)
    p = example1_profile(alpha, beta)
    assert p.lipschitz == max(alpha, abs(beta))
    tt = np.linspace(t1, t3, 101)
    expect = np.where(tt <= t2, first(tt), second(tt))
    assert np.allclose(eval_profile(p, tt)[0], expect, atol=1e-12)
    assert validate_profile(p).min_a > 0
