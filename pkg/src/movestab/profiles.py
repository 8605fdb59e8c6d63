"""1-periodic boundary trajectories a(t).

Every supported kind is piecewise linear over one period, so a profile is
stored as a node table ``(t_i, a_i)`` on a base period ``[t_0, t_0 + 1)``
and evaluated by periodic linear interpolation.  Slopes at breakpoints are
right-continuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidProfileError

PERIOD = 1.0


@dataclass(frozen=True)
class MotionProfile:
    """Boundary motion ``x = a(t)`` with period 1.

    ``t_nodes`` lie in ``[t_nodes[0], t_nodes[0] + 1)`` and the interpolant
    wraps around from the last node to ``t_nodes[0] + 1``.
    """

    kind: str
    t_nodes: np.ndarray
    a_nodes: np.ndarray
    lipschitz: float
    alpha: float | None = None
    beta: float | None = None
    a0: float | None = None
    samples: tuple | None = None
    period: float = PERIOD
    periodicity_defect: float = 0.0
    slopes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_nodes, dtype=float)
        a = np.asarray(self.a_nodes, dtype=float)
        t_ext = np.append(t, t[0] + PERIOD)
        a_ext = np.append(a, a[0])
        slopes = np.diff(a_ext) / np.diff(t_ext)
        if self.kind == "example1":
            # exact slopes, no rounding from node differences
            slopes = np.array([self.alpha, self.beta])
        object.__setattr__(self, "t_nodes", t)
        object.__setattr__(self, "a_nodes", a)
        object.__setattr__(self, "slopes", slopes)

    @property
    def t_start(self):
        return float(self.t_nodes[0])

    def __call__(self, t):
        return eval_profile(self, t)[0]

    def to_dict(self):
        if self.kind == "example1":
            return {"kind": "example1", "alpha": self.alpha, "beta": self.beta}
        if self.kind == "constant":
            return {"kind": "constant", "a0": self.a0}
        return {"kind": "tabulated", "samples": [list(s) for s in self.samples]}


def example1_breakpoints(alpha, beta):
    """The three breakpoints of the two-slope profile (last = first + 1)."""
    d = 2.0 * (alpha - beta)
    t1 = alpha * (1.0 + beta) / d
    t2 = (alpha * (1.0 + beta) - 2.0 * beta) / d
    t3 = (alpha * (3.0 + beta) - 2.0 * beta) / d
    return t1, t2, t3


def example1_closed_form(alpha, beta, t):
    """Direct evaluation of the two affine pieces on ``[t1, t3]`` (no wrapping)."""
    d = 2.0 * (alpha - beta)
    t1, t2, t3 = example1_breakpoints(alpha, beta)
    t = np.asarray(t, dtype=float)
    first = alpha * t + alpha * (1.0 - alpha) * (1.0 + beta) / d
    second = beta * t - beta + alpha * (1.0 - beta**2) / d
    return np.where(t <= t2, first, second)


def example1_profile(alpha, beta) -> MotionProfile:
    """Two-slope profile with rising slope ``alpha`` and falling slope ``beta``.

    Requires ``-1 < beta < 0 < alpha < 1``.
    """
    if not -1.0 < beta:
        raise InvalidProfileError(f"beta={beta} violates -1 < beta")
    if not beta < 0.0:
        raise InvalidProfileError(f"beta={beta} violates beta < 0")
    if not 0.0 < alpha:
        raise InvalidProfileError(f"alpha={alpha} violates 0 < alpha")
    if not alpha < 1.0:
        raise InvalidProfileError(f"alpha={alpha} violates alpha < 1")
    t1, t2, _ = example1_breakpoints(alpha, beta)
    a_nodes = example1_closed_form(alpha, beta, [t1, t2])
    return MotionProfile(
        kind="example1",
        t_nodes=np.array([t1, t2]),
        a_nodes=a_nodes,
        lipschitz=max(alpha, abs(beta)),
        alpha=float(alpha),
        beta=float(beta),
    )


def constant_profile(a0) -> MotionProfile:
    if not a0 > 0:
        raise InvalidProfileError(f"a0={a0} must be positive")
    return MotionProfile(
        kind="constant",
        t_nodes=np.array([0.0]),
        a_nodes=np.array([float(a0)]),
        lipschitz=0.0,
        a0=float(a0),
    )


def tabulated_profile(samples) -> MotionProfile:
    """Piecewise-linear profile through ``(t, a)`` samples covering one period.

    If the last sample sits one period after the first it closes the loop and
    its mismatch with the first value is kept as ``periodicity_defect``.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise InvalidProfileError("tabulated samples must be a list of (t, a) pairs")
    t, a = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) <= 0):
        raise InvalidProfileError("tabulated sample times must be strictly increasing")
    span = t[-1] - t[0]
    if span > PERIOD + 1e-12:
        raise InvalidProfileError(f"samples span {span} > one period")
    defect = 0.0
    if abs(span - PERIOD) <= 1e-12:
        defect = abs(a[-1] - a[0])
        t, a = t[:-1], a[:-1]
    t_ext = np.append(t, t[0] + PERIOD)
    a_ext = np.append(a, a[0])
    lip = float(np.max(np.abs(np.diff(a_ext) / np.diff(t_ext))))
    return MotionProfile(
        kind="tabulated",
        t_nodes=t,
        a_nodes=a,
        lipschitz=lip,
        samples=tuple(map(tuple, arr.tolist())),
        periodicity_defect=float(defect),
    )


def profile_from_dict(d) -> MotionProfile:
    kind = d.get("kind")
    if kind == "example1":
        return example1_profile(float(d["alpha"]), float(d["beta"]))
    if kind == "constant":
        return constant_profile(float(d["a0"]))
    if kind == "tabulated":
        return tabulated_profile(d["samples"])
    raise InvalidProfileError(f"unknown profile kind {kind!r}")


SNAP = 1e-13


def _locate(p: MotionProfile, t):
    t = np.asarray(t, dtype=float)
    # breakpoints from arithmetic carry round-off; a point within SNAP below a
    # node belongs to the segment on its right
    n = np.floor(t - p.t_start + SNAP)
    tr = t - n
    idx = np.searchsorted(p.t_nodes, tr + SNAP, side="right") - 1
    # tr can round up to exactly t_start + 1
    wrap = idx >= len(p.t_nodes)
    idx = np.where(wrap, len(p.t_nodes) - 1, idx)
    return tr, np.clip(idx, 0, len(p.t_nodes) - 1)


def eval_profile(p: MotionProfile, t):
    """Return ``(a(t), a'(t))``; the slope at a breakpoint is the right-hand one."""
    tr, idx = _locate(p, t)
    a = p.a_nodes[idx] + p.slopes[idx] * (tr - p.t_nodes[idx])
    slope = p.slopes[idx]
    if np.ndim(t) == 0:
        return float(a), float(slope)
    return a, slope


@dataclass
class ProfileDiagnostics:
    min_a: float
    lipschitz: float
    periodicity_defect: float
    checks: dict

    @property
    def passed(self):
        return all(self.checks.values())


def validate_profile(p: MotionProfile, n_grid=4096) -> ProfileDiagnostics:
    """Check positivity, L(a) < 1 and periodicity on a dense grid plus all nodes."""
    grid = np.concatenate([p.t_start + np.arange(n_grid) / n_grid, p.t_nodes])
    a, _ = eval_profile(p, grid)
    min_a = float(np.min(a))
    checks = {
        "positive": min_a > 0.0,
        "lipschitz_lt_1": p.lipschitz < 1.0,
        "periodic": p.periodicity_defect <= 1e-12,
    }
    return ProfileDiagnostics(min_a, float(p.lipschitz), float(p.periodicity_defect), checks)
