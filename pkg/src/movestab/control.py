"""Boundary feedback synthesis and decay-rate predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circlemap import CircleLift, ConjugacyMap
from .errors import BracketError, ConfigurationError, SingularFeedbackError
from .profiles import MotionProfile, eval_profile


@dataclass(frozen=True)
class FeedbackLaw:
    mu: float
    H: ConjugacyMap
    profile: MotionProfile
    rho: float
    omega_paper: float | None
    omega_roundtrip: float | None
    T0: float | None

    def gain(self, t):
        return feedback_gain(self.H, self.profile, self.mu, t)

    def reflection(self, t):
        return reflection_coefficient(self.H, self.profile, self.mu, t)

    def to_dict(self):
        return {"mu": self.mu, "omega_paper": self.omega_paper,
                "omega_roundtrip": self.omega_roundtrip, "T0": self.T0}


def _check_mu(mu):
    if mu < 0:
        raise ConfigurationError(f"mu={mu} must be nonnegative")


def feedback_gain(H: ConjugacyMap, p: MotionProfile, mu, t):
    """Feedback ``f(t)`` in ``u_t + f(t) u_x = 0`` at ``x = a(t)``.

    Identically 1 when ``mu == 1``.
    """
    _check_mu(mu)
    t = np.asarray(t, dtype=float)
    if mu == 1.0:
        return np.ones_like(t) if t.ndim else 1.0
    a, _ = eval_profile(p, t)
    P = H.derivative(t + a)
    Q = H.derivative(t - a)
    num = (mu - 1.0) * P + (mu + 1.0) * Q
    den = (1.0 - mu) * P + (mu + 1.0) * Q
    small = np.abs(den) <= 1e-14 * (np.abs(P) + np.abs(Q))
    if np.any(small):
        bad = float(np.atleast_1d(t)[np.argmax(np.atleast_1d(small))])
        raise SingularFeedbackError(f"feedback denominator vanishes at t={bad}", t=bad)
    f = num / den
    return float(f) if f.ndim == 0 else f


def reflection_coefficient(H: ConjugacyMap, p: MotionProfile, mu, t, both=False):
    """Characteristic reflection ``r = (1 - f) / (1 + f)`` at the moving end.

    Equals ``((1 - mu) / (1 + mu)) H'(t + a) / H'(t - a)``.  With
    ``both=True`` the two algebraic forms are returned as a pair.
    """
    _check_mu(mu)
    t = np.asarray(t, dtype=float)
    a, _ = eval_profile(p, t)
    ratio = H.derivative(t + a) / H.derivative(t - a)
    direct = (1.0 - mu) / (1.0 + mu) * ratio
    if not both:
        return float(direct) if np.ndim(direct) == 0 else direct
    f = feedback_gain(H, p, mu, t)
    f = np.asarray(f, dtype=float)
    if np.any(f == -1.0):
        raise SingularFeedbackError("f = -1: infinite reflection")
    via_f = (1.0 - f) / (1.0 + f)
    return via_f, direct


def reflection_rule(H: ConjugacyMap, p: MotionProfile, mu):
    """Vectorized ``t -> r(t)`` used by the characteristic solver."""
    c = (1.0 - mu) / (1.0 + mu)
    if H.kind == "identity" or mu == 1.0:
        return lambda t: np.full(np.shape(t), c)

    def rule(t):
        t = np.asarray(t, dtype=float)
        a, _ = eval_profile(p, t)
        return c * H.derivative(t + a) / H.derivative(t - a)

    return rule


def extinction_time(H: ConjugacyMap, p: MotionProfile, rho, F: CircleLift | None = None):
    """``T0 = (I + a)^-1 (H^-1 (3 rho / 2))``."""
    target = H.inverse(1.5 * rho)
    if not np.isfinite(target):
        raise BracketError("3 rho / 2 is outside the range of H")
    if F is not None and F.plus is not None:
        return float(F.plus.inverse(target))
    from .circlemap import invert_monotone

    plus = lambda t: np.asarray(t) + eval_profile(p, t)[0]  # noqa: E731
    return float(invert_monotone(plus, float(target), (target - 1.0, target), tol=1e-14))


def decay_rate_predictions(mu, rho):
    """``omega_paper = ln|(1+mu)/(1-mu)|`` and the round-trip rate ``(2/rho) omega_paper``.

    Raises ConfigurationError for ``mu == 1`` (finite-time extinction instead).
    """
    _check_mu(mu)
    if mu == 1.0:
        raise ConfigurationError("mu = 1 is the extinction branch; no finite rate")
    if rho <= 0:
        raise ConfigurationError("rho must be positive")
    w = math.log(abs((1.0 + mu) / (1.0 - mu)))
    return {"omega_paper": w, "omega_roundtrip": 2.0 * w / rho}


def synthesize(H: ConjugacyMap, p: MotionProfile, mu, rho, F: CircleLift | None = None):
    _check_mu(mu)
    if mu == 1.0:
        wp = wr = None
        T0 = extinction_time(H, p, rho, F)
    else:
        d = decay_rate_predictions(mu, rho)
        wp, wr = d["omega_paper"], d["omega_roundtrip"]
        T0 = None
    return FeedbackLaw(mu=float(mu), H=H, profile=p, rho=float(rho), omega_paper=wp,
                       omega_roundtrip=wr, T0=T0)
