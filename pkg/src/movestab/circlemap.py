"""Boundary lift F = (I + a) o (I - a)^-1, rotation numbers and conjugacies.

Convention used throughout the package: a conjugacy ``H`` satisfies
``H(F(x)) = H(x) + rho``, i.e. it carries F to the rigid rotation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import BracketError, DomainError, MonotonicityError, ResolutionError
from .profiles import MotionProfile, eval_profile, example1_profile

# ---------------------------------------------------------------------------
# monotone inversion


def invert_monotone(fn, y, bracket, tol=1e-12, fprime=None, max_iter=200,
                    check_samples=17):
    """Solve ``fn(x) = y`` for increasing ``fn`` on ``bracket``.

    Works elementwise on array ``y``.  With ``fprime`` a Newton step is tried
    first and rejected whenever it leaves the current bracket, so the
    bisection fallback always terminates.

    Raises
    ------
    BracketError
        if some ``y`` lies outside ``[fn(lo), fn(hi)]``.
    MonotonicityError
        if ``fn`` is visibly decreasing somewhere on the bracket.
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo_b, hi_b = (np.broadcast_to(np.asarray(b, dtype=float), y.shape).copy()
                  for b in bracket)
    if np.any(hi_b < lo_b):
        raise BracketError("bracket has hi < lo")
    if check_samples:
        s = np.linspace(0.0, 1.0, check_samples)
        pts = lo_b[..., None] + (hi_b - lo_b)[..., None] * s
        vals = np.asarray(fn(pts.ravel()), dtype=float).reshape(pts.shape)
        if np.any(np.diff(vals, axis=-1) < -1e-12 * (1.0 + np.abs(vals[..., 1:]))):
            raise MonotonicityError("function is not increasing on the bracket")
    f_lo = np.asarray(fn(lo_b), dtype=float)
    f_hi = np.asarray(fn(hi_b), dtype=float)
    bad = (y < f_lo - tol) | (y > f_hi + tol)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise BracketError(
            f"value {y[k]!r} outside range [{f_lo[k]!r}, {f_hi[k]!r}] of the bracket")
    lo, hi = lo_b, hi_b
    x = 0.5 * (lo + hi)
    done = np.zeros(y.shape, dtype=bool)
    done |= np.abs(f_lo - y) <= tol
    x = np.where(np.abs(f_lo - y) <= tol, lo, x)
    hit_hi = ~done & (np.abs(f_hi - y) <= tol)
    x = np.where(hit_hi, hi, x)
    done |= hit_hi
    for _ in range(max_iter):
        if done.all():
            break
        fx = np.asarray(fn(x), dtype=float) - y
        conv = np.abs(fx) <= tol
        done |= conv
        below = fx < 0
        lo = np.where(~done & below, x, lo)
        hi = np.where(~done & ~below, x, hi)
        mid = 0.5 * (lo + hi)
        if fprime is not None:
            d = np.asarray(fprime(x), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - fx / d
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            mid = np.where(ok, newton, mid)
        stalled = (hi - lo) <= 2.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(x))
        done |= stalled
        x = np.where(done, x, mid)
    return float(x[0]) if scalar else x


# ---------------------------------------------------------------------------
# degree-one lifts


@dataclass(frozen=True)
class PLLift:
    """Piecewise-linear increasing map with ``g(x + 1) = g(x) + 1``.

    Nodes ``x`` lie in ``[x[0], x[0] + 1)``.
    """

    x: np.ndarray
    y: np.ndarray
    _xe: np.ndarray = field(init=False, repr=False)
    _ye: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        xe = np.concatenate([x - 1.0, x, x + 1.0, [x[0] + 2.0]])
        ye = np.concatenate([y - 1.0, y, y + 1.0, [y[0] + 2.0]])
        if np.any(np.diff(xe) <= 0) or np.any(np.diff(ye) <= 0):
            raise MonotonicityError("PL lift nodes must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "_xe", xe)
        object.__setattr__(self, "_ye", ye)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = np.floor(x - self.x[0])
        return np.interp(x - n, self._xe, self._ye) + n

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        n = np.floor(y - self.y[0])
        return np.interp(y - n, self._ye, self._xe) + n

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        n = np.floor(x - self.x[0])
        xr = x - n
        i = np.clip(np.searchsorted(self._xe, xr, side="right") - 1, 0, len(self._xe) - 2)
        return (self._ye[i + 1] - self._ye[i]) / (self._xe[i + 1] - self._xe[i])


@dataclass(frozen=True)
class CircleLift:
    """Degree-one increasing lift ``F`` of a circle homeomorphism."""

    fn: Callable
    inv: Callable | None = None
    profile: MotionProfile | None = None
    pl: PLLift | None = None
    minus: PLLift | None = None  # I - a
    plus: PLLift | None = None  # I + a
    l1: float | None = None
    l2: float | None = None
    F0: float | None = None
    x0: float | None = None

    def __call__(self, x):
        return self.fn(x)

    def inverse(self, y):
        if self.inv is not None:
            return self.inv(y)
        y = np.asarray(y, dtype=float)
        lo = np.floor(y) - 3.0
        return invert_monotone(self.fn, y, (lo, lo + 6.0), tol=1e-14, check_samples=0)

    def unit(self, f):
        """F restricted to arguments already reduced to ``[0, 1)``."""
        return self.fn(f)

    @classmethod
    def from_function(cls, fn, inv=None):
        return cls(fn=fn, inv=inv)

    @classmethod
    def rotation(cls, c):
        return cls(fn=lambda x: np.asarray(x, dtype=float) + c,
                   inv=lambda y: np.asarray(y, dtype=float) - c)


def example1_lift_constants(alpha, beta):
    l1 = (1.0 + alpha) / (1.0 - alpha)
    l2 = (1.0 + beta) / (1.0 - beta)
    F0 = l2 * (l1 - 1.0) / (l1 - l2)
    x0 = (1.0 - l2) / (l1 - l2)
    return l1, l2, F0, x0


def example1_lift_closed_form(alpha, beta, x):
    """Two-branch formula for F on ``[0, 1)``, extended by ``F(x+1) = F(x)+1``."""
    l1, l2, F0, x0 = example1_lift_constants(alpha, beta)
    x = np.asarray(x, dtype=float)
    n = np.floor(x)
    r = x - n
    return np.where(r <= x0, l1 * r + F0, l2 * r + F0 + 1.0 - l2) + n


def boundary_map(p: MotionProfile) -> CircleLift:
    """Build ``F = (I + a) o (I - a)^-1`` for a profile.

    All profile kinds are piecewise linear, so ``I - a``, ``I + a`` and ``F``
    are represented exactly by node tables.
    """
    t = p.t_nodes
    a = p.a_nodes
    minus = PLLift(t, t - a)
    plus = PLLift(t, t + a)
    xs = t - a
    ys = t + a
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    # rotate so nodes sit in [xs[0], xs[0] + 1)
    shift = np.floor(xs - xs[0])
    xs, ys = xs - shift, ys - shift
    order = np.argsort(xs)
    F_pl = PLLift(xs[order], ys[order])
    kw = {}
    if p.kind == "example1":
        l1, l2, F0, x0 = example1_lift_constants(p.alpha, p.beta)
        kw = dict(l1=l1, l2=l2, F0=F0, x0=x0)
    return CircleLift(fn=F_pl, inv=F_pl.inverse, profile=p, pl=F_pl,
                      minus=minus, plus=plus, **kw)


def lift_diagnostics(F: CircleLift, n_grid=4096, rng=None):
    """Monotonicity and degree-one defects on a grid; closed-form check for example1."""
    x = np.arange(n_grid) / n_grid
    Fx = F(x)
    out = {
        "increasing": bool(np.all(np.diff(Fx) > 0)),
        "degree_one_defect": float(np.max(np.abs(F(x + 1.0) - Fx - 1.0))),
    }
    if F.l1 is not None:
        p = F.profile
        out["closed_form_defect"] = float(np.max(np.abs(
            Fx - example1_lift_closed_form(p.alpha, p.beta, x))))
        out["degree_one_consistency"] = float(F.l1 * F.x0 + F.l2 * (1.0 - F.x0) - 1.0)
    return out


# ---------------------------------------------------------------------------
# rotation number


@dataclass(frozen=True)
class RotationEstimate:
    rho: float
    n_iterations: int
    error_bound: float
    method: str
    rho_plain: float
    rho_weighted: float | None = None
    seed_spread: float = 0.0


def bump_weights(n):
    """Smooth weights ``exp(-1 / (s (1 - s)))`` on ``s = (k + 1) / (n + 1)``, summing to 1."""
    s = (np.arange(n) + 1.0) / (n + 1.0)
    w = np.exp(-1.0 / (s * (1.0 - s)))
    return w / w.sum()


def orbit_increments(F: CircleLift, seeds, n):
    """Displacements ``F(x_k) - x_k`` along orbits started at ``seeds``.

    Orbits are carried on the fractional part only, so no precision is lost
    as ``F^k(x)`` grows.
    """
    f = np.asarray(seeds, dtype=float) % 1.0
    out = np.empty((len(f), n))
    fn = F.unit
    for k in range(n):
        y = fn(f)
        out[:, k] = y - f
        f = y - np.floor(y)
    return out


def rotation_number(F: CircleLift, seeds=(0.0, 0.3819660112501051, 0.7), n_max=2**17,
                    tol=1e-12, weighted=True) -> RotationEstimate:
    """Estimate ``lim (F^n(x) - x) / n``.

    The plain orbit average carries the rigorous bound ``|estimate - rho| <= 1/n``.
    When ``weighted`` is set, a smoothly weighted Birkhoff average of the
    same increments is also returned; for smoothly conjugate maps it converges
    far faster than ``1/n`` and becomes the headline ``rho``.
    """
    n = int(min(n_max, max(1, math.ceil(1.0 / tol))))
    inc = orbit_increments(F, seeds, n)
    plain = inc.mean(axis=1)
    rho_plain = float(np.mean(plain))
    rho_w = None
    spread = float(np.ptp(plain))
    method = "plain"
    rho = rho_plain
    if weighted:
        wv = inc @ bump_weights(n)
        rho_w = float(np.mean(wv))
        spread = float(np.ptp(wv))
        rho = rho_w
        method = "weighted"
    return RotationEstimate(rho=rho, n_iterations=n, error_bound=1.0 / n, method=method,
                            rho_plain=rho_plain, rho_weighted=rho_w, seed_spread=spread)


def near_rational(rho, max_den=64, tol=1e-9):
    fr = Fraction(rho).limit_denominator(max_den)
    return abs(float(fr) - rho) <= tol, fr


# ---------------------------------------------------------------------------
# conjugacies


@dataclass(frozen=True)
class ConjugacyMap:
    """Increasing map ``H`` with ``H(F(x)) ~= H(x) + rho``.

    ``kind`` is one of ``identity``, ``closed_form_example1`` or
    ``birkhoff_sampled``.  Sampled maps are stored on a uniform grid over one
    period and satisfy ``H(x + 1) = H(x) + 1``.
    """

    kind: str
    rho: float | None = None
    h0: float | None = None
    h1: float | None = None
    h2: float | None = None
    periodic: bool = False
    grid: np.ndarray | None = None
    values: np.ndarray | None = None
    offset: float = 0.0
    lambda1: float | None = None
    lambda2: float | None = None
    bounds_interval: tuple | None = None
    residual_sup: float | None = None
    residual_mean: float | None = None
    orbit_residual: float | None = None
    meta: dict = field(default_factory=dict)
    _interp: object = field(default=None, repr=False, compare=False)
    _dinterp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "birkhoff_sampled" and self._interp is None:
            x = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            m = len(x)
            pad = 4
            xe = np.concatenate([x[m - pad:] - 1.0, x, x[:pad] + 1.0])
            ve = np.concatenate([v[m - pad:] - 1.0, v, v[:pad] + 1.0])
            P = PchipInterpolator(xe, ve, extrapolate=True)
            object.__setattr__(self, "grid", x)
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "_interp", P)
            object.__setattr__(self, "_dinterp", P.derivative())

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x + self.offset
        if self.kind == "closed_form_example1":
            if self.periodic:
                n = np.floor(x)
                return self._log(x - n) + n + self.offset
            return self._log(x) + self.offset
        n = np.floor(x)
        return self._interp(x - n) + n + self.offset

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return np.ones_like(x)
        if self.kind == "closed_form_example1":
            if self.periodic:
                x = x - np.floor(x)
            self._check_domain(x)
            return self.h0 / (x + self.h1)
        return self._dinterp(x - np.floor(x))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "identity":
            return y - self.offset
        if self.kind == "closed_form_example1" and not self.periodic:
            return np.exp((y - self.offset - self.h2) / self.h0) - self.h1
        h_start = float(self(0.0))
        n = np.floor(y - h_start)
        r = y - n
        x = invert_monotone(self, r, (np.zeros_like(r), np.ones_like(r)), tol=1e-14,
                            fprime=self.derivative, check_samples=0)
        return x + n

    def _check_domain(self, x):
        if np.any(x <= -self.h1):
            raise DomainError(f"closed-form conjugacy undefined for x <= -h1 = {-self.h1}")

    def _log(self, x):
        self._check_domain(x)
        return self.h0 * np.log(np.abs(x + self.h1)) + self.h2

    # -- utilities --------------------------------------------------------
    def shifted(self, c):
        """Same map plus an additive constant."""
        return replace(self, offset=self.offset + c, _interp=self._interp,
                       _dinterp=self._dinterp)

    def with_bounds(self, interval, lam1, lam2):
        return replace(self, lambda1=lam1, lambda2=lam2, bounds_interval=tuple(interval),
                       _interp=self._interp, _dinterp=self._dinterp)

    def to_dict(self):
        d = {"kind": self.kind, "rho": self.rho, "offset": self.offset,
             "lambda1": self.lambda1, "lambda2": self.lambda2,
             "bounds_interval": list(self.bounds_interval) if self.bounds_interval else None,
             "residual_sup": self.residual_sup, "residual_mean": self.residual_mean}
        if self.kind == "closed_form_example1":
            d.update(h0=self.h0, h1=self.h1, h2=self.h2, periodic=self.periodic)
        if self.kind == "birkhoff_sampled":
            d["grid"] = [[float(x), float(v)] for x, v in zip(self.grid, self.values)]
            d["orbit_residual"] = self.orbit_residual
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        common = dict(rho=d.get("rho"), offset=d.get("offset", 0.0),
                      lambda1=d.get("lambda1"), lambda2=d.get("lambda2"),
                      bounds_interval=tuple(d["bounds_interval"]) if d.get("bounds_interval") else None,
                      residual_sup=d.get("residual_sup"), residual_mean=d.get("residual_mean"))
        if kind == "identity":
            return cls(kind="identity", **common)
        if kind == "closed_form_example1":
            return cls(kind=kind, h0=d["h0"], h1=d["h1"], h2=d["h2"],
                       periodic=d.get("periodic", False), **common)
        if kind == "birkhoff_sampled":
            g = np.asarray(d["grid"], dtype=float)
            return cls(kind=kind, grid=g[:, 0], values=g[:, 1],
                       orbit_residual=d.get("orbit_residual"), **common)
        raise ValueError(f"unknown conjugacy kind {kind!r}")


def identity_conjugacy(rho=None) -> ConjugacyMap:
    return ConjugacyMap(kind="identity", rho=rho, lambda1=1.0, lambda2=1.0,
                        residual_sup=0.0 if rho is not None else None)


def save_conjugacy(H: ConjugacyMap, path):
    with open(path, "w") as fh:
        json.dump(H.to_dict(), fh, indent=1)


def load_conjugacy(path) -> ConjugacyMap:
    with open(path) as fh:
        return ConjugacyMap.from_dict(json.load(fh))


def example1_conjugacy(alpha, beta, periodic=False) -> ConjugacyMap:
    """Closed-form log conjugacy ``H(x) = h0 ln|x + h1| + h2`` for the two-slope profile.

    With ``periodic=True`` the formula is used on ``[0, 1)`` only and extended
    by ``H(x + 1) = H(x) + 1``; the literal form (default) is evaluated on the
    whole half-line ``x > -h1``.
    """
    example1_profile(alpha, beta)  # range check
    l1, l2, _, _ = example1_lift_constants(alpha, beta)
    h0 = 1.0 / math.log(l1 / l2)
    h1 = l2 / (l1 - l2)
    h2 = -math.log(h1)
    lam1 = h0 * (l1 - l2) / l1
    lam2 = h0 * (l1 - l2) / l2
    return ConjugacyMap(kind="closed_form_example1", rho=math.log(l1) / math.log(l1 / l2),
                        h0=h0, h1=h1, h2=h2, periodic=periodic, lambda1=lam1,
                        lambda2=lam2, bounds_interval=(0.0, 1.0))


def conjugacy_residual(H: ConjugacyMap, F: CircleLift, rho, grid):
    """sup and mean of ``|H(F(x)) - H(x) - rho|`` over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    r = np.abs(H(F(grid)) - H(grid) - rho)
    return {"sup": float(np.max(r)), "mean": float(np.mean(r))}


def derivative_bounds(H: ConjugacyMap, interval=(0.0, 1.0), grid=4096):
    """Extremes of H' over ``interval``.

    Sampled maps use divided differences of the stored grid values; closed
    forms are differentiated exactly on ``grid`` points including both ends.
    """
    lo, hi = interval
    if H.kind == "identity":
        return 1.0, 1.0
    if H.kind == "birkhoff_sampled":
        h = H.grid[1] - H.grid[0]
        n0 = math.floor(lo)
        n1 = math.ceil(hi)
        xs = np.concatenate([H.grid + k for k in range(n0, n1)] + [[n1 + H.grid[0]]])
        vs = H(xs)
        dd = np.diff(vs) / np.diff(xs)
        mids = 0.5 * (xs[1:] + xs[:-1])
        keep = (mids >= lo - h) & (mids <= hi + h)
        return float(dd[keep].min()), float(dd[keep].max())
    xs = np.linspace(lo, hi, grid)
    d = H.derivative(xs)
    return float(d.min()), float(d.max())


def birkhoff_conjugacy(F: CircleLift, rho, N=2**14, grid_size=2**12, weighting="bump",
                       rational_den=64, rational_tol=1e-9) -> ConjugacyMap:
    """Sampled conjugacy from averaging ``F^n(x) - n rho`` over ``n < N``.

    ``weighting='cesaro'`` is the plain average, whose defect
    ``G(F(x)) - G(x) - rho = (F^N(x) - x - N rho) / N`` is bounded by ``1/N``.
    ``weighting='bump'`` uses smooth weights and converges much faster for
    maps with smooth or piecewise-smooth conjugacies.

    Raises ResolutionError when the sampled map is not strictly increasing.
    """
    close, fr = near_rational(rho, rational_den, rational_tol)
    if close:
        warnings.warn(f"rotation number {rho!r} is within {rational_tol} of {fr}; "
                      "conjugacy may not exist", RuntimeWarning, stacklevel=2)
    x = np.arange(grid_size) / grid_size
    if weighting == "cesaro":
        w = np.full(N, 1.0 / N)
    elif weighting == "bump":
        w = bump_weights(N)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    f = x.copy()
    drift = np.zeros(grid_size)  # integer part of F^n(x) minus n*rho
    acc = np.zeros(grid_size)
    defect = np.zeros(grid_size)
    fn = F.unit
    for n in range(N):
        acc += w[n] * (drift + f)
        y = fn(f)
        defect += w[n] * (y - f - rho)
        fl = np.floor(y)
        drift += fl - rho
        f = y - fl
    G = acc
    d = np.diff(G)
    if not (np.all(d > 0) and G[0] + 1.0 > G[-1]):
        k = int(np.argmin(d)) if len(d) else 0
        raise ResolutionError(
            "sampled conjugacy is not strictly increasing; refine the grid or check "
            "whether rho is near-rational",
            {"min_increment": float(d.min()), "at": float(x[k]), "rho": rho,
             "nearest_fraction": str(fr)})
    H = ConjugacyMap(kind="birkhoff_sampled", rho=float(rho), grid=x, values=G,
                     orbit_residual=float(np.max(np.abs(defect))),
                     meta={"N": N, "weighting": weighting})
    res = conjugacy_residual(H, F, rho, x)
    lam1, lam2 = derivative_bounds(H, (0.0, 1.0))
    return replace(H, residual_sup=res["sup"], residual_mean=res["mean"], lambda1=lam1,
                   lambda2=lam2, bounds_interval=(0.0, 1.0), _interp=H._interp,
                   _dinterp=H._dinterp)


def anchor_conjugacy(H: ConjugacyMap, p: MotionProfile, rho=None) -> ConjugacyMap:
    """Shift H so that ``H(a(0)) = rho / 2``.

    Places the boundary point ``(a(0), 0)`` at transformed time 0, which is
    the normalization under which the extinction time formula and the energy
    clock ``H(a(t) + t) - rho/2`` start at ``t = 0``.
    """
    rho = H.rho if rho is None else rho
    a0, _ = eval_profile(p, 0.0)
    return H.shifted(0.5 * rho - float(H(a0)))
