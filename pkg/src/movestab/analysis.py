"""Decay fits, energy-equivalence ratios and extinction detection on energy traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dalembert import EnergyTrace
from .errors import DomainError, WindowError

FLOOR = 1e3 * np.finfo(float).eps


@dataclass(frozen=True)
class DecayFit:
    kind: str  # "exponential" | "power"
    value: float  # rate or exponent
    window: tuple
    residual_rms: float
    C: float
    n_points: int

    @property
    def rate(self):
        return self.value

    def to_dict(self):
        return {"kind": self.kind, "value": self.value, "window": list(self.window),
                "residual_rms": self.residual_rms, "C": self.C, "n_points": self.n_points}


def _select(trace: EnergyTrace, window):
    t, E = trace.t, trace.E
    lo, hi = window if window is not None else (t[0], t[-1])
    sel = (t >= lo) & (t <= hi)
    if not np.any(sel):
        raise WindowError(f"fit window {window} contains no samples")
    if np.any(E[sel] <= 0):
        raise WindowError("non-positive energy inside the fit window (extinction branch?)")
    # log fits ignore the floating-point floor
    keep = sel & (E > FLOOR * E[0])
    if keep.sum() < 2:
        raise WindowError("fewer than two usable samples above the round-off floor")
    return t[keep], E[keep], (float(lo), float(hi))


def fit_exponential_rate(trace: EnergyTrace, window=None) -> DecayFit:
    """Least-squares slope of ``ln E`` against ``t``.

    ``C`` is the smallest constant with ``E(t) <= C exp(-rate t) E(0)`` on
    the window.
    """
    t, E, win = _select(trace, window)
    y = np.log(E)
    A = np.vstack([t, np.ones_like(t)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    rate = -float(slope)
    resid = y - (slope * t + icpt)
    C = float(np.max(E / (trace.E[0] * np.exp(-rate * (t - trace.t[0])))))
    return DecayFit("exponential", rate, win, float(np.sqrt(np.mean(resid**2))), C, len(t))


def fit_power_exponent(trace: EnergyTrace, window=None) -> DecayFit:
    """Least-squares slope of ``ln E`` against ``ln t`` (returned with flipped sign)."""
    t, E, win = _select(trace, window)
    if np.any(t <= 0):
        raise WindowError("power-law fit needs t > 0 throughout the window")
    lt = np.log(t)
    y = np.log(E)
    A = np.vstack([lt, np.ones_like(lt)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    p = -float(slope)
    resid = y - (slope * lt + icpt)
    C = float(np.max(E * t**p))
    return DecayFit("power", p, win, float(np.sqrt(np.mean(resid**2))), C, len(t))


def envelope_constant(trace: EnergyTrace, omega, window=None):
    """Smallest C with ``E(t) <= C exp(-omega t) E(0)`` over the window."""
    t, E = trace.t, trace.E
    lo, hi = window if window is not None else (t[0], t[-1])
    sel = (t >= lo) & (t <= hi)
    return float(np.max(E[sel] / (E[0] * np.exp(-omega * (t[sel] - t[0])))))


def equivalence_ratio(traceU: EnergyTrace, traceV: EnergyTrace, clock, t_window=None):
    """``(c1, c2)``: extremes of ``E_u(t) / E_V(clock(t))`` over the samples of traceU.

    ``E_V`` is linearly interpolated in its own time variable.
    """
    t = traceU.t
    if t_window is not None:
        sel = (t >= t_window[0]) & (t <= t_window[1])
    else:
        sel = np.ones_like(t, dtype=bool)
    tau = np.asarray(clock(t[sel]), dtype=float)
    if tau.min() < traceV.t[0] - 1e-12 or tau.max() > traceV.t[-1] + 1e-12:
        raise DomainError(
            f"clock maps into [{tau.min()}, {tau.max()}], outside the V-trace range "
            f"[{traceV.t[0]}, {traceV.t[-1]}]")
    ev = np.interp(tau, traceV.t, traceV.E)
    eu = traceU.E[sel]
    ok = (ev > FLOOR * traceV.E[0]) & (eu > FLOOR * traceU.E[0])
    ratio = eu[ok] / ev[ok]
    return float(ratio.min()), float(ratio.max())


def detect_extinction(trace: EnergyTrace, threshold=None):
    """First sample time after which every sample stays ``<= threshold``.

    Default threshold is ``1e-12 E(0)``.  Returns None if the last sample is
    still above it.
    """
    E = trace.E
    if threshold is None:
        threshold = 1e-12 * E[0]
    above = np.nonzero(E > threshold)[0]
    if len(above) == 0:
        return float(trace.t[0])
    last = above[-1]
    if last == len(E) - 1:
        return None
    return float(trace.t[last + 1])


def default_window(trace: EnergyTrace, bounce_period):
    """Drop the first two bounce periods."""
    return (trace.t[0] + 2.0 * bounce_period, trace.t[-1])
