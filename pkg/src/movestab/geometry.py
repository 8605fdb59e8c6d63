"""Spacetime change of variables built from a conjugacy H.

``Phi(x, t) = (xi, tau)`` with ``xi = (H(t + x) - H(t - x)) / 2`` and
``tau = (H(t + x) + H(t - x)) / 2``.  It straightens the moving domain
``0 <= x <= a(t)`` into the strip ``0 <= xi <= rho / 2`` and multiplies the
d'Alembertian by ``K = H'(t + x) H'(t - x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circlemap import ConjugacyMap, invert_monotone
from .errors import BracketError
from .profiles import MotionProfile, eval_profile


@dataclass(frozen=True)
class TransformedPoint:
    xi: np.ndarray | float
    tau: np.ndarray | float


def phi_forward(H: ConjugacyMap, x, t) -> TransformedPoint:
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    p = H(t + x)
    q = H(t - x)
    xi = 0.5 * (p - q)
    tau = 0.5 * (p + q)
    if xi.ndim == 0:
        return TransformedPoint(float(xi), float(tau))
    return TransformedPoint(xi, tau)


def phi_inverse(H: ConjugacyMap, xi, tau):
    """Return ``(x, t)`` with ``phi_forward(H, x, t) == (xi, tau)``."""
    xi = np.asarray(xi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    s_plus = H.inverse(tau + xi)
    s_minus = H.inverse(tau - xi)
    x = 0.5 * (s_plus - s_minus)
    t = 0.5 * (s_plus + s_minus)
    if x.ndim == 0:
        return float(x), float(t)
    return x, t


def dalembertian_factor(H: ConjugacyMap, xi, tau):
    """``K(xi, tau) = H'(H^-1(tau + xi)) * H'(H^-1(tau - xi))``."""
    xi = np.asarray(xi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    return H.derivative(H.inverse(tau + xi)) * H.derivative(H.inverse(tau - xi))


def dalembertian_factor_xt(H: ConjugacyMap, x, t):
    """K pulled back to physical coordinates: ``H'(t + x) H'(t - x)``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return H.derivative(t + x) * H.derivative(t - x)


def lambda_t(H: ConjugacyMap, t, y):
    """``Lambda_t(y) = (H(y + t) - H(t - y)) / 2``, increasing in y."""
    return 0.5 * (H(np.asarray(y) + t) - H(t - np.asarray(y)))


def lambda_t_inverse(H: ConjugacyMap, t, level=1.0, y_max=None):
    """Solve ``Lambda_t(y) = level`` for ``y >= 0`` with an expanding bracket.

    ``y_max`` caps the expansion (for closed-form maps, the domain of
    ``H(t - y)`` ends at ``t - y = -h1``).
    """
    t = float(t)
    if y_max is None and H.kind == "closed_form_example1" and not H.periodic:
        y_max = t + H.h1 - 1e-15 * max(1.0, abs(t))
    fn = lambda y: lambda_t(H, t, y)  # noqa: E731
    hi = 1.0
    while True:
        if y_max is not None and hi >= y_max:
            hi = y_max
            if fn(hi) < level:
                raise BracketError(
                    f"level {level} exceeds sup Lambda_t = {float(fn(hi))} at t={t}")
            break
        if fn(hi) >= level:
            break
        hi *= 2.0
        if hi > 1e12:
            raise BracketError(f"Lambda_t never reaches {level} at t={t}")
    return invert_monotone(fn, level, (0.0, hi), tol=1e-14)


def domain_width_b(H: ConjugacyMap, t):
    """Literal ``b(t) = Lambda_t^-1(1) - t``; returns ``(b, Lambda_t^-1(1))``."""
    y = lambda_t_inverse(H, t, 1.0)
    return y - float(t), y


def example1_remark_width(H: ConjugacyMap, t):
    """Closed form ``(t + h1) exp(h2/h0) tanh(1/h0)`` printed for the two-slope example."""
    return (np.asarray(t) + H.h1) * np.exp(H.h2 / H.h0) * np.tanh(1.0 / H.h0)


def pointwise_coefficients(H: ConjugacyMap, p: MotionProfile, t):
    """Coefficients of ``u_t`` and ``u_x`` in the transformed velocity at x = a(t).

    ``f1 = 1/H'(a+t) - 1/H'(t-a)`` and ``f2 = 1/H'(a+t) + 1/H'(t-a)``.
    """
    a, _ = eval_profile(p, t)
    dp = H.derivative(np.asarray(t) + a)
    dm = H.derivative(np.asarray(t) - a)
    return 1.0 / dp - 1.0 / dm, 1.0 / dp + 1.0 / dm


def transformed_grid(H: ConjugacyMap, p: MotionProfile, t_values, nx=33):
    """Rows ``(x, t, xi, tau, K)`` over ``0 <= x <= a(t)`` for CSV dumps."""
    rows = []
    for t in np.atleast_1d(t_values):
        a, _ = eval_profile(p, float(t))
        x = np.linspace(0.0, a, nx)
        pt = phi_forward(H, x, np.full_like(x, t))
        K = dalembertian_factor_xt(H, x, np.full_like(x, t))
        rows.extend(zip(x, np.full_like(x, t), pt.xi, pt.tau, K))
    return np.array(rows)
