"""Exact characteristic solvers for the damped string problems.

Every wave field is carried by the density ``g = h'`` of its d'Alembert
profile, ``u(x, t) = h(t + x) - h(t - x)``.  The Dirichlet end at ``x = 0``
is built into this odd representation.  At the moving end the boundary
condition ``u_t + f u_x = 0`` becomes the bounce recursion

    g(F(s)) = r(t) g(s),   t = (I - a)^-1(s),   r = (1 - f) / (1 + f),

which is applied band by band, each band being the image under F of the
previous one.  The only approximation is the interpolation of ``g`` at
off-grid points ``F^-1(sigma)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .circlemap import CircleLift, ConjugacyMap, boundary_map, identity_conjugacy
from .control import reflection_rule
from .errors import ConfigurationError, DomainError, InadmissibleDataError
from .profiles import MotionProfile, constant_profile, eval_profile

# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class InitialData:
    """Displacement ``phi``, its derivative ``dphi`` and velocity ``psi`` on ``(0, L)``."""

    phi: Callable
    dphi: Callable
    psi: Callable
    descriptor: dict = field(default_factory=dict)

    @classmethod
    def zero(cls):
        z = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        return cls(z, z, z, {"type": "zero"})

    @classmethod
    def sine(cls, wavenumber, amplitude=1.0):
        k, A = float(wavenumber), float(amplitude)
        return cls(lambda x: A * np.sin(k * np.asarray(x)),
                   lambda x: A * k * np.cos(k * np.asarray(x)),
                   lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                   {"type": "sine", "wavenumber": k, "amplitude": A})

    @classmethod
    def mode(cls, k, length, amplitude=1.0):
        d = cls.sine(k * math.pi / length, amplitude)
        return cls(d.phi, d.dphi, d.psi, {"type": "mode", "k": k, "amplitude": amplitude})

    @classmethod
    def bump(cls, center, width, amplitude=1.0, shape="tent", travelling=0):
        """Compactly supported displacement bump.

        ``shape`` is ``tent`` (kinked, H^1 only) or ``quartic`` ((1 - r^2)^2,
        C^1).  ``travelling=+1`` sets ``psi = -phi'`` so the bump moves right.
        """
        c, w, A = float(center), float(width), float(amplitude)

        def r(x):
            return (np.asarray(x, dtype=float) - c) / w

        if shape == "tent":
            def phi(x):
                return A * np.clip(1.0 - np.abs(r(x)), 0.0, None)

            def dphi(x):
                rr = r(x)
                return np.where(np.abs(rr) < 1.0, -A * np.sign(rr) / w, 0.0)
        elif shape == "quartic":
            def phi(x):
                rr = r(x)
                return np.where(np.abs(rr) < 1.0, A * (1.0 - rr**2) ** 2, 0.0)

            def dphi(x):
                rr = r(x)
                return np.where(np.abs(rr) < 1.0, -4.0 * A * rr * (1.0 - rr**2) / w, 0.0)
        else:
            raise ConfigurationError(f"unknown bump shape {shape!r}")
        if travelling:
            def psi(x):
                return -travelling * dphi(x)
        else:
            def psi(x):
                return np.zeros_like(np.asarray(x, dtype=float))
        return cls(phi, dphi, psi, {"type": "bump", "center": c, "width": w,
                                    "amplitude": A, "shape": shape,
                                    "travelling": travelling})

    @classmethod
    def step_velocity(cls, value=1.0, start=0.0, stop=None):
        v = float(value)

        def psi(x):
            x = np.asarray(x, dtype=float)
            inside = x >= start
            if stop is not None:
                inside &= x < stop
            return np.where(inside, v, 0.0)

        z = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        return cls(z, z, psi, {"type": "step_velocity", "value": v, "start": start,
                               "stop": stop})

    @classmethod
    def table(cls, x, phi, psi):
        x = np.asarray(x, dtype=float)
        ph = np.asarray(phi, dtype=float)
        ps = np.asarray(psi, dtype=float)
        slopes = np.diff(ph) / np.diff(x)

        def dphi(s):
            s = np.asarray(s, dtype=float)
            i = np.clip(np.searchsorted(x, s, side="right") - 1, 0, len(slopes) - 1)
            return slopes[i]

        return cls(lambda s: np.interp(s, x, ph), dphi, lambda s: np.interp(s, x, ps),
                   {"type": "table", "x": x.tolist(), "phi": ph.tolist(),
                    "psi": ps.tolist()})

    @classmethod
    def generic(cls, seed=0, n_modes=256, length=1.0, smoothness=2.0, amplitude=1.0):
        """Standing-wave series with mode weights ``n^-smoothness`` and random signs.

        ``smoothness=2`` gives the spectral envelope of a kinked (tent-like)
        profile without the accidental near-zeros a single bump has at some
        modes.  Vanishes at ``x = 0``.
        """
        rng = np.random.default_rng(seed)
        n = np.arange(1, int(n_modes) + 1)
        c = amplitude * rng.choice([-1.0, 1.0], len(n)) / n**smoothness
        k = n * math.pi / length

        def phi(x):
            x = np.asarray(x, dtype=float)
            return (np.sin(np.multiply.outer(x, k)) @ c).reshape(x.shape)

        def dphi(x):
            x = np.asarray(x, dtype=float)
            return (np.cos(np.multiply.outer(x, k)) @ (c * k)).reshape(x.shape)

        z = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        return cls(phi, dphi, z, {"type": "generic", "seed": seed, "n_modes": int(n_modes),
                                  "smoothness": smoothness, "amplitude": amplitude})

    @classmethod
    def from_csv(cls, path):
        """Table with header columns ``x, phi, psi``."""
        data = np.genfromtxt(path, delimiter=",", names=True)
        return cls.table(data["x"], data["phi"], data["psi"])

    @classmethod
    def from_dict(cls, d, length, seed=None):
        kind = d.get("type")
        if kind == "mode":
            return cls.mode(int(d["k"]), length, d.get("amplitude", 1.0))
        if kind == "sine":
            return cls.sine(d["wavenumber"], d.get("amplitude", 1.0))
        if kind == "bump":
            return cls.bump(d.get("center", 0.5 * length), d.get("width", 0.25 * length),
                            d.get("amplitude", 1.0), d.get("shape", "tent"),
                            d.get("travelling", 0))
        if kind == "step_velocity":
            return cls.step_velocity(d.get("value", 1.0), d.get("start", 0.0),
                                     d.get("stop"))
        if kind == "table":
            if "path" in d:
                return cls.from_csv(d["path"])
            return cls.table(d["x"], d["phi"], d["psi"])
        if kind == "generic":
            return cls.generic(d.get("seed", 0 if seed is None else seed),
                               d.get("n_modes", 256), length, d.get("smoothness", 2.0),
                               d.get("amplitude", 1.0))
        if kind == "zero":
            return cls.zero()
        raise ConfigurationError(f"unknown initial-data type {kind!r}")


# ---------------------------------------------------------------------------
# characteristic field


@dataclass
class CharacteristicField:
    """Samples of ``g = h'`` at ``s0 + j ds``; ``s0 = -a(0)``."""

    s0: float
    ds: float
    g: np.ndarray
    a0: float
    source: dict = field(default_factory=dict)
    _interp: object = field(default=None, repr=False)
    _h: object = field(default=None, repr=False)

    @property
    def s_max(self):
        return self.s0 + (len(self.g) - 1) * self.ds

    @property
    def nodes(self):
        return self.s0 + self.ds * np.arange(len(self.g))

    def _invalidate(self):
        self._interp = self._h = None

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        slack = 1e-9 * max(1.0, abs(self.s_max))
        if np.any(s < self.s0 - slack) or np.any(s > self.s_max + slack):
            raise DomainError(
                f"characteristic coordinate outside computed range [{self.s0}, {self.s_max}]")
        return np.clip(s, self.s0, self.s_max)

    def density(self, s):
        """Monotone-cubic interpolation of ``g``."""
        s = self._check(s)
        if self._interp is None:
            self._interp = PchipInterpolator(self.nodes, self.g, extrapolate=False)
        return self._interp(s)

    def profile(self, s):
        """``h(s)`` with ``h(s0) = 0`` (exact antiderivative of the interpolant)."""
        s = self._check(s)
        if self._h is None:
            if self._interp is None:
                self._interp = PchipInterpolator(self.nodes, self.g, extrapolate=False)
            self._h = self._interp.antiderivative()
        return self._h(s)

    def energy_window(self, lo, hi):
        """Composite trapezoid of ``g^2`` over ``[lo, hi]`` (vectorized)."""
        lo = self._check(lo)
        hi = self._check(hi)
        u_lo = (lo - self.s0) / self.ds
        u_hi = (hi - self.s0) / self.ds
        return window_integrals(self.g**2, self.ds, u_lo, u_hi)


def window_integrals(q, ds, u_lo, u_hi):
    """Trapezoid integrals of nodal data ``q`` between fractional node positions.

    Prefix sums restart every block of ``B`` cells (``B`` at least the widest
    window), so a window never subtracts two large running totals; this keeps
    full relative precision on strongly decaying data.
    """
    q = np.asarray(q, dtype=float)
    n = len(q)
    u_lo = np.asarray(u_lo, dtype=float)
    u_hi = np.asarray(u_hi, dtype=float)
    j_lo = np.clip(np.floor(u_lo).astype(int), 0, n - 2)
    j_hi = np.clip(np.floor(u_hi).astype(int), 0, n - 2)
    th_lo = u_lo - j_lo
    th_hi = u_hi - j_hi
    span = int(np.max(j_hi - j_lo)) if np.size(j_hi) else 0
    B = max(64, span + 2)
    cells = 0.5 * ds * (q[1:] + q[:-1])
    nb = -(-len(cells) // B)
    padded = np.zeros(nb * B)
    padded[:len(cells)] = cells
    blocks = padded.reshape(nb, B).cumsum(axis=1)
    totals = blocks[:, -1]

    def local(j):
        b, r = np.divmod(j, B)
        return np.where(r == 0, 0.0, blocks[b, np.maximum(r - 1, 0)])

    b1, b2 = j_lo // B, j_hi // B
    c_lo, c_hi = local(j_lo), local(j_hi)
    between = np.where(b1 == b2, c_hi - c_lo, totals[b1] - c_lo + c_hi)
    far = b2 > b1 + 1
    if np.any(far):
        ctot = np.concatenate([[0.0], np.cumsum(totals)])
        between = np.where(far, between + ctot[np.maximum(b2, b1 + 1)] - ctot[b1 + 1], between)

    def partial(j, th):
        return ds * (th * q[j] + 0.5 * th**2 * (q[j + 1] - q[j]))

    return between - partial(j_lo, th_lo) + partial(j_hi, th_hi)


def init_field(phi, psi, a0, ds, dphi=None, source=None) -> CharacteristicField:
    """Glue initial data into ``g`` on ``[-a0, a0]``.

    ``g(x) = (phi'(x) + psi(x)) / 2`` for ``x > 0`` and
    ``g(-x) = (phi'(x) - psi(x)) / 2``.  The step is reduced to ``a0 / m``
    with an integer ``m >= 32`` so that 0 and ``a0`` are nodes.
    """
    if isinstance(phi, InitialData):
        data = phi
        phi, psi, dphi, source = data.phi, data.psi, data.dphi, data.descriptor
    if abs(float(np.asarray(phi(np.array([0.0])))[0])) > 1e-12:
        raise InadmissibleDataError("phi(0) must vanish (left end is clamped)")
    m = max(32, int(math.ceil(a0 / ds - 1e-9)))
    ds = a0 / m
    x = ds * np.arange(1, m + 1)
    if dphi is None:
        eps = 1e-6 * a0
        dphi = lambda z: (phi(z + eps) - phi(z - eps)) / (2 * eps)  # noqa: E731
    d = np.asarray(dphi(x), dtype=float)
    v = np.asarray(psi(x), dtype=float)
    right = 0.5 * (d + v)
    left = 0.5 * (d - v)
    d0 = float(np.asarray(dphi(np.array([0.0])))[0])
    g = np.concatenate([left[::-1], [0.5 * d0], right])
    return CharacteristicField(s0=-a0, ds=ds, g=g, a0=a0, source=dict(source or {}))


def init_field_from_density(density, a0, ds, source=None) -> CharacteristicField:
    """Field whose seed density on ``[-a0, a0]`` is a given callable."""
    m = max(32, int(math.ceil(a0 / ds - 1e-9)))
    ds = a0 / m
    s = -a0 + ds * np.arange(2 * m + 1)
    return CharacteristicField(s0=-a0, ds=ds, g=np.asarray(density(s), dtype=float), a0=a0,
                               source=dict(source or {"type": "density"}))


def extend_field(fld: CharacteristicField, F: CircleLift, r, horizon) -> CharacteristicField:
    """Apply the bounce recursion until ``g`` is known up to ``horizon + sup a``.

    ``r`` maps physical time to the reflection coefficient.  ``F`` must carry
    the ``plus``/``minus`` lifts of a profile (see ``boundary_map``).
    """
    p = F.profile
    a_sup = float(np.max(p.a_nodes))
    target = horizon + a_sup + 2 * fld.ds
    g = fld.g
    n_have = len(g)
    s0, ds = fld.s0, fld.ds
    frontier_idx = n_have - 1
    buf = g
    while s0 + frontier_idx * ds < target:
        frontier = s0 + frontier_idx * ds
        f_front = float(F(frontier))
        j_hi = int(math.floor((f_front - s0) / ds + 1e-9))
        j_hi = min(j_hi, int(math.ceil((target - s0) / ds)) + 1)
        j = np.arange(frontier_idx + 1, j_hi + 1)
        if len(j) == 0:
            raise ConfigurationError("grid step too coarse for the bounce map")
        sigma = s0 + j * ds
        s = np.minimum(F.inverse(sigma), frontier)
        t_star = F.minus.inverse(s)
        lo = max(0, int(math.floor((s.min() - s0) / ds)) - 4)
        xs = s0 + ds * np.arange(lo, frontier_idx + 1)
        local = PchipInterpolator(xs, buf[lo:frontier_idx + 1], extrapolate=True)
        new = np.asarray(r(t_star), dtype=float) * local(s)
        buf = np.concatenate([buf, new])
        frontier_idx = j_hi
    fld.g = buf
    fld._invalidate()
    return fld


def eval_state(fld: CharacteristicField, x, t, profile: MotionProfile | None = None):
    """``(u, u_t, u_x)`` at ``(x, t)``; requires ``0 <= x <= a(t)``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < -1e-15):
        raise DomainError("x must be nonnegative")
    if profile is not None:
        a, _ = eval_profile(profile, t)
        if np.any(x > a + 1e-12):
            raise DomainError("x beyond the moving boundary a(t)")
    sp, sm = t + x, t - x
    u = fld.profile(sp) - fld.profile(sm)
    gp, gm = fld.density(sp), fld.density(sm)
    return u, gp - gm, gp + gm


def write_snapshots(fld: CharacteristicField, p: MotionProfile, times, path, nx=65):
    """Field snapshots ``t, x, u, u_t, u_x`` on ``nx`` points of ``[0, a(t)]``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u", "u_t", "u_x"])
        for t in np.atleast_1d(times):
            a, _ = eval_profile(p, float(t))
            x = np.linspace(0.0, a, nx)
            u, ut, ux = eval_state(fld, x, np.full_like(x, float(t)))
            for row in zip(np.full_like(x, float(t)), x, u, ut, ux):
                w.writerow([repr(float(v)) for v in row])


def moving_energy(fld: CharacteristicField, p: MotionProfile, t):
    """``E_u(t) = int_{t - a}^{t + a} g(s)^2 ds``."""
    t = np.asarray(t, dtype=float)
    a, _ = eval_profile(p, t)
    return fld.energy_window(t - a, t + a)


def direct_energy(fld: CharacteristicField, p: MotionProfile, t, n_quad=2000):
    """``1/2 int_0^{a(t)} (u_t^2 + u_x^2) dx`` by Gauss-Legendre quadrature."""
    a, _ = eval_profile(p, float(t))
    xq, wq = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * a * (xq + 1.0)
    _, ut, ux = eval_state(fld, x, np.full_like(x, float(t)))
    return 0.25 * a * float(np.sum(wq * (ut**2 + ux**2)))


# ---------------------------------------------------------------------------
# energy traces


@dataclass
class EnergyTrace:
    t: np.ndarray
    E: np.ndarray
    clock: str = "t"
    a_t: np.ndarray | None = None
    tau: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trace times must be strictly increasing")
        if np.any(self.E < 0):
            raise ValueError("energies must be nonnegative")

    def bound_ratio(self, omega):
        """``E(t) / (E(0) exp(-omega t))``."""
        if omega is None or self.E[0] == 0:
            return None
        return self.E / (self.E[0] * np.exp(-omega * (self.t - self.t[0])))

    def to_csv(self, path, omega=None):
        ratio = self.bound_ratio(omega)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "a_t", "E", "tau", "E_over_bound"])
            for k in range(len(self.t)):
                w.writerow([
                    repr(float(self.t[k])),
                    "" if self.a_t is None else repr(float(self.a_t[k])),
                    repr(float(self.E[k])),
                    "" if self.tau is None else repr(float(self.tau[k])),
                    "" if ratio is None else repr(float(ratio[k])),
                ])

    @classmethod
    def from_csv(cls, path):
        cols = {"t": [], "a_t": [], "E": [], "tau": []}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                for k in cols:
                    cols[k].append(float(row[k]) if row[k] != "" else np.nan)
        a = np.array(cols["a_t"])
        tau = np.array(cols["tau"])
        return cls(np.array(cols["t"]), np.array(cols["E"]),
                   a_t=None if np.all(np.isnan(a)) else a,
                   tau=None if np.all(np.isnan(tau)) else tau)


def _output_times(horizon, ds, dt_out):
    step = max(1, int(round((dt_out or ds) / ds)))
    n = int(math.floor(horizon / (step * ds) + 1e-9))
    return step * ds * np.arange(n + 1)


# ---------------------------------------------------------------------------
# solver runs


@dataclass
class MovingRun:
    field: CharacteristicField
    trace: EnergyTrace
    F: CircleLift
    profile: MotionProfile
    H: ConjugacyMap
    mu: float


def moving_boundary_run(data: InitialData, p: MotionProfile, H: ConjugacyMap, mu, horizon,
                        ds=None, dt_out=None, F: CircleLift | None = None) -> MovingRun:
    """Solve the moving-boundary system with the conjugacy feedback of strength ``mu``."""
    F = F or boundary_map(p)
    a0, _ = eval_profile(p, 0.0)
    if ds is None:
        ds = 2.0 * a0 / 2**12
    fld = init_field(data, None, a0, ds)
    extend_field(fld, F, reflection_rule(H, p, mu), horizon)
    t = _output_times(horizon, fld.ds, dt_out)
    a, _ = eval_profile(p, t)
    E = fld.energy_window(t - a, t + a)
    tau = None
    if H.rho is not None:
        tau = H(a + t) - 0.5 * H.rho
    trace = EnergyTrace(t, E, clock="t", a_t=a, tau=tau,
                        meta={"system": "moving_boundary", "mu": mu, "profile": p.to_dict()})
    return MovingRun(fld, trace, F, p, H, mu)


def static_boundary_run(phi, psi, L, mu, horizon, ds, dt_out=None, dphi=None, density=None,
                        return_field=False):
    """Damped string ``v(0) = 0``, ``v_tau + mu v_xi = 0`` at ``xi = L``.

    Constant-profile specialization of the moving solver: ``F`` is the shift
    by ``2L`` and the reflection is ``(1 - mu) / (1 + mu)``.  ``density``
    replaces ``phi``/``psi`` by a seed density on ``[-L, L]``.
    """
    if mu < 0:
        raise ConfigurationError("mu must be nonnegative")
    p = constant_profile(L)
    F = boundary_map(p)
    if density is not None:
        fld = init_field_from_density(density, L, ds)
    elif isinstance(phi, InitialData):
        fld = init_field(phi, None, L, ds)
    else:
        fld = init_field(phi, psi, L, ds, dphi=dphi)
    extend_field(fld, F, reflection_rule(identity_conjugacy(), p, mu), horizon)
    t = _output_times(horizon, fld.ds, dt_out)
    E = fld.energy_window(t - L, t + L)
    trace = EnergyTrace(t, E, clock="tau", a_t=np.full_like(t, L), tau=t,
                        meta={"system": "static_boundary", "mu": mu, "L": L})
    if return_field:
        return trace, fld
    return trace


# ---------------------------------------------------------------------------
# interior point damper


def scattering_coefficients(k=1.0):
    """Reflection and transmission of a wave hitting a point damper of strength k.

    Solves continuity of v together with ``[v_xi] = k v_tau`` for a unit
    incoming wave; returns ``(reflection, transmission, absorbed_fraction)``
    in displacement amplitudes.
    """
    # unknowns R, T for incoming exp(i(xi - tau)) from the left:
    # 1 + R = T ;  (T - (1 - R)) = k * (-T)   [v_xi jump vs v_tau]
    A = np.array([[1.0, -1.0], [1.0, 1.0 + k]])
    b = np.array([-1.0, 1.0])
    R, T = np.linalg.solve(A, b)
    return float(R), float(T), float(1.0 - R**2 - T**2)


def damper_outgoing(A, B, k=1.0):
    """Outgoing densities ``(X, Y)`` from incoming ``(A, B)`` at the damper.

    ``A`` arrives from the left segment, ``B`` from the right one (each in
    its own odd d'Alembert representation).
    """
    X = (k * A - 2.0 * B) / (2.0 + k)
    Y = (k * B - 2.0 * A) / (2.0 + k)
    return X, Y


@dataclass
class PointwiseRun:
    trace: EnergyTrace
    g_left: np.ndarray
    g_right: np.ndarray
    ds: float
    xi0_effective: float
    i0: int
    M: int
    absorbed: np.ndarray | None = None


def pointwise_grid(xi0, n_min):
    """Uniform grid of ``M >= n_min`` cells on (0, 1) with the damper on a node.

    Irrational locations are replaced by their best rational approximation
    with denominator at most ``n_min``.
    """
    if not 0.0 < xi0 < 1.0:
        raise ConfigurationError("damper location must lie in (0, 1)")
    fr = Fraction(xi0).limit_denominator(int(n_min))
    q = fr.denominator
    M = q * int(math.ceil(n_min / q))
    i0 = fr.numerator * (M // q)
    return M, i0, float(fr)


def static_pointwise_run(phi, psi, xi0, horizon, ds, dphi=None, dt_out=None,
                         damping=1.0) -> PointwiseRun:
    """String on (0, 1), clamped at both ends, with point damper ``v_tau delta_{xi0}``."""
    if isinstance(phi, InitialData):
        data = phi
    else:
        if dphi is None:
            eps = 1e-7
            dphi = lambda z: (phi(z + eps) - phi(z - eps)) / (2 * eps)  # noqa: E731
        data = InitialData(phi, dphi, psi)
    M, i0, xi_eff = pointwise_grid(xi0, int(math.ceil(1.0 / ds)))
    i2 = M - i0
    h = 1.0 / M
    n_steps = int(math.ceil(horizon / h))
    x1 = h * np.arange(1, i0 + 1)  # left segment, distance from xi = 0
    eta = h * np.arange(1, i2 + 1)  # right segment, distance from xi = 1
    g1 = np.zeros(2 * i0 + 1 + n_steps + 1)
    g2 = np.zeros(2 * i2 + 1 + n_steps + 1)
    d1, v1 = data.dphi(x1), data.psi(x1)
    g1[i0 + 1:2 * i0 + 1] = 0.5 * (d1 + v1)
    g1[:i0] = (0.5 * (d1 - v1))[::-1]
    g1[i0] = 0.5 * float(np.asarray(data.dphi(np.array([0.0])))[0])
    xr = 1.0 - eta
    d2, v2 = -data.dphi(xr), data.psi(xr)
    g2[i2 + 1:2 * i2 + 1] = 0.5 * (d2 + v2)
    g2[:i2] = (0.5 * (d2 - v2))[::-1]
    g2[i2] = 0.5 * float(-np.asarray(data.dphi(np.array([1.0])))[0])
    chunk = 2 * min(i0, i2)
    absorbed = np.zeros(n_steps + 1)
    n = 1
    while n <= n_steps:
        m = np.arange(n, min(n + chunk, n_steps + 1))
        A = g1[m]
        B = g2[m]
        X, Y = damper_outgoing(A, B, damping)
        g1[m + 2 * i0] = X
        g2[m + 2 * i2] = Y
        absorbed[m] = A**2 + B**2 - X**2 - Y**2
        n = m[-1] + 1
    step = max(1, int(round((dt_out or h) / h)))
    idx = np.arange(0, n_steps + 1, step)
    E = (window_integrals(g1**2, h, idx, idx + 2 * i0)
         + window_integrals(g2**2, h, idx, idx + 2 * i2))
    E = np.maximum(E, 0.0)
    trace = EnergyTrace(idx * h, E, clock="tau",
                        meta={"system": "static_pointwise", "xi0": xi0,
                              "xi0_effective": xi_eff, "cells": M})
    return PointwiseRun(trace, g1, g2, h, xi_eff, i0, M, absorbed)


# ---------------------------------------------------------------------------
# finite-difference oracle


def fd_oracle_run(system, cells, T, cfl=1.0, n_out=101):
    """Leapfrog solution of a static damped string, for cross-checking.

    ``system`` holds ``L``, ``mu`` and ``data`` (an ``InitialData``).  The
    damped end uses a centred ghost-point update, second order in space and
    time.  Returns ``(x, t_out, u_out)`` with ``u_out[k]`` the field at
    ``t_out[k]``.
    """
    if not 0 < cfl <= 1.0:
        raise ConfigurationError(f"CFL number {cfl} must lie in (0, 1]")
    L = float(system["L"])
    mu = float(system["mu"])
    data: InitialData = system["data"]
    h = L / cells
    n_steps = int(math.ceil(T / (cfl * h)))
    k = T / n_steps
    lam = k / h
    if lam > 1.0 + 1e-12:
        raise ConfigurationError("CFL violation")
    x = h * np.arange(cells + 1)
    u0 = np.asarray(data.phi(x), dtype=float)
    u0[0] = 0.0
    v0 = np.asarray(data.psi(x), dtype=float)
    lap = np.zeros_like(u0)
    lap[1:-1] = u0[2:] - 2 * u0[1:-1] + u0[:-2]
    u1 = u0 + k * v0 + 0.5 * lam**2 * lap
    if mu == 0.0:
        u1[-1] = u0[-1]
    else:
        b = lam / mu
        u1[-1] = u0[-1] + k * v0[-1] * (1.0 - b) + lam**2 * (u0[-2] - u0[-1])
    u1[0] = 0.0
    out_steps = np.unique(np.round(np.linspace(0, n_steps, n_out)).astype(int))
    t_out = out_steps * k
    u_out = np.empty((len(out_steps), cells + 1))
    want = {int(s): i for i, s in enumerate(out_steps)}
    if 0 in want:
        u_out[want[0]] = u0
    if 1 in want:
        u_out[want[1]] = u1
    prev, cur = u0, u1
    l2 = lam**2
    for n in range(1, n_steps):
        nxt = np.empty_like(cur)
        nxt[1:-1] = 2 * cur[1:-1] - prev[1:-1] + l2 * (cur[2:] - 2 * cur[1:-1] + cur[:-2])
        nxt[0] = 0.0
        if mu == 0.0:
            nxt[-1] = cur[-1]
        else:
            b = lam / mu
            nxt[-1] = (2 * cur[-1] - prev[-1] * (1.0 - b)
                       + 2 * l2 * (cur[-2] - cur[-1])) / (1.0 + b)
        prev, cur = cur, nxt
        if n + 1 in want:
            u_out[want[n + 1]] = cur
    return x, t_out, u_out


def fd_energy(x, u_prev, u_next, u_mid, k):
    """Discrete energy at the midpoint time (used for drift checks)."""
    h = x[1] - x[0]
    ut = (u_next - u_prev) / (2 * k)
    ux = np.diff(u_mid) / h
    return 0.5 * (np.sum(0.5 * (ut[1:] ** 2 + ut[:-1] ** 2)) * h + np.sum(ux**2) * h)
