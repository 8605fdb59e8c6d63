"""SVG figures for run reports.

Figures are built on bare ``Figure`` objects (no pyplot state); ids and
metadata are pinned so replaying a run gives byte-identical files.
"""

from __future__ import annotations

import functools
import threading

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

_RC = {
    "svg.hashsalt": "movestab",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
}


# rcParams are process-global; rendering is serialized across sweep workers
_LOCK = threading.RLock()


def _locked(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with _LOCK:
            return fn(*args, **kwargs)
    return wrapper


def _save(fig, path):
    FigureCanvasSVG(fig)
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})


def _figure(size=(6.0, 3.6)):
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=size)
        ax = fig.add_subplot(1, 1, 1)
    return fig, ax


@_locked
def plot_energy_decay(trace, path, omega_paper=None, omega_roundtrip=None, fit=None,
                      title=None):
    """``ln E`` against ``t`` with the predicted slopes drawn from ``E(0)``."""
    t, E = trace.t, trace.E
    ok = E > 0
    fig, ax = _figure()
    with matplotlib.rc_context(_RC):
        ax.plot(t[ok], np.log(E[ok]), color="k", label="ln E")
        lnE0 = np.log(E[0]) if E[0] > 0 else 0.0
        if omega_roundtrip is not None:
            ax.plot(t, lnE0 - omega_roundtrip * (t - t[0]), "--", color="tab:blue",
                    label=f"round-trip rate {omega_roundtrip:.4g}")
        if omega_paper is not None:
            ax.plot(t, lnE0 - omega_paper * (t - t[0]), ":", color="tab:red",
                    label=f"unnormalized rate {omega_paper:.4g}")
        if fit is not None and fit.kind == "exponential":
            lo, hi = fit.window
            tt = np.array([lo, hi])
            ax.plot(tt, np.log(fit.C * E[0]) - fit.value * (tt - t[0]), "-", color="tab:green",
                    alpha=0.7, label=f"fit {fit.value:.4g}")
        lo = np.log(E[ok]).min() if ok.any() else -1.0
        ax.set_ylim(lo - 1.0, lnE0 + 1.0)
        ax.set_xlabel("t")
        ax.set_ylabel("ln E")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize="small")
        fig.tight_layout()
    _save(fig, path)
    return path


@_locked
def plot_power_decay(trace, path, fit=None, title=None):
    """Log-log energy plot for the pointwise damper."""
    t, E = trace.t, trace.E
    ok = (t > 0) & (E > 0)
    fig, ax = _figure()
    with matplotlib.rc_context(_RC):
        ax.loglog(t[ok], E[ok], color="k", label="E")
        if fit is not None and fit.kind == "power":
            lo, hi = fit.window
            tt = np.geomspace(max(lo, t[ok][0]), hi, 20)
            ax.loglog(tt, fit.C * tt ** (-fit.value), "--", color="tab:green",
                      label=f"C t^-{fit.value:.3g}")
        ax.set_xlabel("t")
        ax.set_ylabel("E")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower left", fontsize="small")
        fig.tight_layout()
    _save(fig, path)
    return path


@_locked
def plot_conjugacy(H, path, F=None, rho=None, n=512):
    """Conjugacy minus identity, and its residual when ``F`` is given."""
    x = np.linspace(0.0, 1.0, n, endpoint=False)
    fig = Figure(figsize=(6.0, 4.8))
    with matplotlib.rc_context(_RC):
        ax1 = fig.add_subplot(2, 1, 1)
        ax1.plot(x, H(x) - x, color="k")
        ax1.set_ylabel("H(x) - x")
        ax2 = fig.add_subplot(2, 1, 2, sharex=ax1)
        ax2.plot(x, H.derivative(x), color="tab:blue")
        ax2.set_ylabel("H'(x)")
        ax2.set_xlabel("x")
        if F is not None and rho is not None:
            ax3 = ax2.twinx()
            ax3.plot(x, H(F(x)) - H(x) - rho, color="tab:red", alpha=0.6)
            ax3.set_ylabel("residual", color="tab:red")
        fig.tight_layout()
    _save(fig, path)
    return path


@_locked
def plot_sweep(values, rates, path, predicted=None, xlabel="mu", ylabel="fitted rate"):
    fig, ax = _figure()
    with matplotlib.rc_context(_RC):
        ax.plot(values, rates, "o-", color="k", label="measured")
        if predicted is not None:
            ax.plot(values, predicted, "s--", color="tab:blue", label="predicted")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(fontsize="small")
        fig.tight_layout()
    _save(fig, path)
    return path
