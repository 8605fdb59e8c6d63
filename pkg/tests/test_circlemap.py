import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from movestab.circlemap import (
    CircleLift,
    ConjugacyMap,
    PLLift,
    birkhoff_conjugacy,
    boundary_map,
    conjugacy_residual,
    derivative_bounds,
    example1_conjugacy,
    example1_lift_closed_form,
    example1_lift_constants,
    identity_conjugacy,
    invert_monotone,
    lift_diagnostics,
    load_conjugacy,
    near_rational,
    rotation_number,
    save_conjugacy,
)
from movestab.errors import BracketError, MonotonicityError
from movestab.profiles import constant_profile, eval_profile, example1_profile, tabulated_profile

from conftest import ALPHA, BETA, RHO_FORMULA


def test_invert_monotone_scalar_and_vector():
    assert invert_monotone(lambda x: x**3, 8.0, (0.0, 3.0)) == pytest.approx(2.0, abs=1e-10)
    y = np.linspace(0.1, 26.0, 50)
    x = invert_monotone(lambda x: x**3, y, (0.0, 3.0), fprime=lambda x: 3 * x**2)
    assert np.allclose(x**3, y, atol=1e-10)


def test_invert_monotone_errors():
    with pytest.raises(BracketError):
        invert_monotone(lambda x: x, 5.0, (0.0, 1.0))
    with pytest.raises(MonotonicityError):
        invert_monotone(lambda x: -x, -0.5, (0.0, 1.0))


def test_pl_lift_degree_one():
    g = PLLift(np.array([0.0, 0.4]), np.array([0.1, 0.3]))
    x = np.linspace(-2, 2, 81)
    assert np.allclose(g(x + 1), g(x) + 1)
    assert np.allclose(g.inverse(g(x)), x)
    with pytest.raises(MonotonicityError):
        PLLift(np.array([0.0, 0.4]), np.array([0.3, 0.1]))


def test_example1_lift_constants():
    l1, l2, F0, x0 = example1_lift_constants(ALPHA, BETA)
    assert (l1, l2) == pytest.approx((3.0, 0.5))
    assert F0 == pytest.approx(0.4) and x0 == pytest.approx(0.2)


def test_boundary_map_matches_definition(ex1, ex1_map):
    # F(t - a(t)) = t + a(t)
    t = np.linspace(-1, 2, 301)
    a, _ = eval_profile(ex1, t)
    assert np.allclose(ex1_map(t - a), t + a, atol=1e-13)
    assert np.allclose(ex1_map(0.1), example1_lift_closed_form(ALPHA, BETA, 0.1))
    diag = lift_diagnostics(ex1_map)
    assert diag["increasing"]
    assert diag["degree_one_defect"] < 1e-13
    assert diag["closed_form_defect"] < 1e-13
    assert abs(diag["degree_one_consistency"]) < 1e-13


def test_constant_profile_gives_rotation():
    F = boundary_map(constant_profile(0.3))
    x = np.linspace(0, 1, 11)
    assert np.allclose(F(x), x + 0.6)
    assert rotation_number(F, n_max=256).rho == pytest.approx(0.6, abs=1e-12)


def test_rotation_number_example1(ex1_rotation):
    assert ex1_rotation.rho == pytest.approx(RHO_FORMULA, abs=1e-12)
    assert abs(ex1_rotation.rho_plain - RHO_FORMULA) <= ex1_rotation.error_bound
    assert ex1_rotation.seed_spread < 1e-12


def test_rotation_number_rational_case():
    # a rigid rotation by 1/3 has rotation number exactly 1/3
    F = CircleLift.rotation(1 / 3)
    r = rotation_number(F, n_max=3000)
    assert r.rho == pytest.approx(1 / 3, abs=1e-12)
    assert near_rational(r.rho)[0]


def test_birkhoff_conjugacy_example1(ex1_map, ex1_birkhoff):
    H = ex1_birkhoff
    assert H.residual_sup < 1e-4
    x = np.random.default_rng(1).uniform(0, 1, 500)
    assert conjugacy_residual(H, ex1_map, RHO_FORMULA, x)["sup"] < 1e-4
    assert np.allclose(H(x + 1) - H(x), 1.0)
    assert np.allclose(H.inverse(H(x)), x, atol=1e-10)
    lo, hi = derivative_bounds(H)
    assert 0 < lo < 1 < hi


def test_birkhoff_near_rational_warns():
    F = CircleLift.rotation(0.5)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        birkhoff_conjugacy(F, 0.5, N=64, grid_size=32)
    assert any("rotation number" in str(w.message) for w in rec)


def test_closed_form_conjugacy(ex1_map):
    l1, l2, _, x0 = example1_lift_constants(ALPHA, BETA)
    H = example1_conjugacy(ALPHA, BETA)
    assert H.rho == pytest.approx(RHO_FORMULA, abs=1e-15)
    # exact on the steep branch, not on the other one
    left = np.linspace(0, x0, 200)
    right = np.linspace(x0 + 0.01, 0.99, 200)
    assert conjugacy_residual(H, ex1_map, H.rho, left)["sup"] < 1e-13
    assert conjugacy_residual(H, ex1_map, H.rho, right)["sup"] > 0.1
    Hp = example1_conjugacy(ALPHA, BETA, periodic=True)
    grid = np.linspace(0, 1, 1001)
    assert conjugacy_residual(Hp, ex1_map, Hp.rho, grid)["sup"] < 1e-12
    # derivative bounds in closed form
    h0 = 1 / math.log(l1 / l2)
    assert Hp.lambda1 == pytest.approx(h0 * (l1 - l2) / l1)
    assert Hp.lambda2 == pytest.approx(h0 * (l1 - l2) / l2)
    # sampled bounds approach the one-sided limits at the period ends
    lo, hi = derivative_bounds(Hp)
    assert (lo, hi) == pytest.approx((Hp.lambda1, Hp.lambda2), rel=1e-3)


def test_closed_form_matches_birkhoff_up_to_shift(ex1_birkhoff):
    Hp = example1_conjugacy(ALPHA, BETA, periodic=True)
    x = np.linspace(0, 1, 257)[:-1]
    diff = Hp(x) - ex1_birkhoff(x)
    assert np.ptp(diff) < 1e-3


def test_conjugacy_roundtrip_json(tmp_path, ex1_birkhoff):
    for H in (ex1_birkhoff, example1_conjugacy(ALPHA, BETA, periodic=True),
              identity_conjugacy(0.5)):
        path = tmp_path / "h.json"
        save_conjugacy(H, path)
        G = load_conjugacy(path)
        x = np.linspace(0, 1, 33)
        assert np.allclose(G(x), H(x), atol=1e-14)
        assert isinstance(G, ConjugacyMap)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-0.95, -0.05))
def test_rotation_formula_property(alpha, beta):
    p = example1_profile(alpha, beta)
    l1, l2, _, _ = example1_lift_constants(alpha, beta)
    r = rotation_number(boundary_map(p), n_max=4096)
    assert abs(r.rho_plain - math.log(l1) / math.log(l1 / l2)) <= r.error_bound + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.15, 0.35), min_size=3, max_size=8))
def test_tabulated_lift_degree_one(values):
    n = len(values)
    steps = np.abs(np.diff(values + values[:1])) * n
    assume(steps.max() < 0.9)
    p = tabulated_profile([(k / n, v) for k, v in enumerate(values)])
    F = boundary_map(p)
    x = np.linspace(-1, 1, 97)
    assert np.allclose(F(x + 1), F(x) + 1, atol=1e-12)
    assert np.all(np.diff(F(x)) > 0)


def test_log_conjugacy_bounds_degrade_on_long_intervals():
    # the literal log map has H' = h0 / (x + h1), so no uniform lower bound
    H = example1_conjugacy(ALPHA, BETA)
    lo, hi = derivative_bounds(H, (0.0, 100.0))
    assert lo == pytest.approx(H.h0 / (100 + H.h1), rel=1e-12)
    assert hi == pytest.approx(H.h0 / H.h1, rel=1e-12)
