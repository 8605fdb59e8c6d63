"""Scenario orchestration: profile, boundary map, conjugacy, feedback, solve, analyze, write."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import jsonschema
import numpy as np

from . import analysis, circlemap, control, dalembert, plotting
from .errors import MovestabError, PipelineError, WindowError
from .profiles import constant_profile, eval_profile, profile_from_dict, validate_profile
from .scenario import Scenario, load_schema

log = logging.getLogger(__name__)

RHO_MATCH_TOL = 1e-6
RESIDUAL_GRID = 2048
DT_OUT = 0.005  # default trace spacing; extinction runs keep the full grid


@contextmanager
def stage(name):
    try:
        yield
    except PipelineError:
        raise
    except (MovestabError, ValueError, FloatingPointError) as err:
        raise PipelineError(name, err) from err


def _clean(v):
    """JSON-safe scalar: numpy to float, non-finite to None."""
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def empty_summary(kind, name=None):
    return {
        "kind": kind, "name": name, "rho_estimate": None, "rho_formula_value": None,
        "conjugacy_residual": None, "lambda1": None, "lambda2": None,
        "omega_paper": None, "omega_roundtrip": None, "fitted_rate": None, "T0": None,
        "extinction_detected": None, "discrepancy_flags": [],
    }


def _flag(summary, code, message, value=None):
    summary["discrepancy_flags"].append({"code": code, "message": message,
                                         "value": _clean(value)})


# ---------------------------------------------------------------------------
# map stage


def example1_formula_check(p, rho_hat):
    """Distances of the estimate to ``ln l1 / ln(l1/l2)`` and to its complement."""
    l1, l2, _, _ = circlemap.example1_lift_constants(p.alpha, p.beta)
    formula = math.log(l1) / math.log(l1 / l2)
    complement = math.log(1.0 / l2) / math.log(l1 / l2)
    return formula, abs(rho_hat - formula), abs(rho_hat - complement)


def closed_form_residuals(p, rho=None, n=RESIDUAL_GRID):
    """Residual of the literal log conjugacy on ``[0, x0]`` and ``[x0, 1]``."""
    H = circlemap.example1_conjugacy(p.alpha, p.beta, periodic=False)
    F = circlemap.boundary_map(p)
    rho = H.rho if rho is None else rho
    x0 = F.x0
    left = circlemap.conjugacy_residual(H, F, rho, np.linspace(0.0, x0, n))
    right = circlemap.conjugacy_residual(H, F, rho, np.linspace(x0, 1.0, n))
    return left["sup"], right["sup"]


def build_profile(s: Scenario):
    if s.profile is not None:
        return profile_from_dict(s.profile)
    if s.L is not None:
        return constant_profile(s.L)
    raise PipelineError("profile", ValueError("scenario has neither profile nor L"))


def prepare_map(s: Scenario, summary, need_conjugacy=True):
    """Profile, lift, rotation number and (optionally) the conjugacy."""
    ctx = {}
    with stage("profile"):
        p = build_profile(s)
        diag = validate_profile(p)
        if not diag.passed:
            failed = [k for k, ok in diag.checks.items() if not ok]
            raise ValueError(f"profile fails admissibility checks: {failed}")
    ctx["profile"] = p
    with stage("map"):
        F = circlemap.boundary_map(p)
        if p.kind == "constant":
            rho = 2.0 * p.a0
            est = None
        else:
            opts = dict(s.rotation or {})
            est = circlemap.rotation_number(F, n_max=opts.get("n_max", 2**17),
                                            tol=opts.get("tol", 1e-12))
            rho = est.rho
            summary["rho_error_bound"] = est.error_bound
    ctx.update(F=F, rho=rho, rotation=est)
    summary["rho_estimate"] = rho
    if p.kind == "example1":
        formula, d_formula, d_comp = example1_formula_check(p, rho)
        summary["rho_formula_value"] = formula
        summary["rho_distance_formula"] = d_formula
        summary["rho_distance_complement"] = d_comp
        if d_formula > RHO_MATCH_TOL:
            _flag(summary, "rho_formula_unmatched",
                  "estimate does not match ln l1 / ln(l1/l2)", d_formula)
        if d_comp > RHO_MATCH_TOL:
            _flag(summary, "rho_complement_unmatched",
                  "estimate does not match ln(1/l2) / ln(l1/l2)", d_comp)
        left, right = closed_form_residuals(p)
        summary["closed_form_residual_left"] = left
        summary["closed_form_residual_right"] = right
        if right > 1e-8:
            _flag(summary, "example1_closed_form_conjugacy_residual",
                  "literal log conjugacy fails H(F(x)) = H(x) + rho on [x0, 1]", right)
    if need_conjugacy:
        with stage("conjugacy"):
            H = build_conjugacy(s, p, F, rho)
            res = circlemap.conjugacy_residual(H, F, rho,
                                               np.arange(RESIDUAL_GRID) / RESIDUAL_GRID)
            lam1, lam2 = circlemap.derivative_bounds(H, (0.0, 1.0))
        ctx["H"] = H
        summary["conjugacy_kind"] = H.kind
        summary["conjugacy_residual"] = res["sup"]
        summary["lambda1"] = lam1
        summary["lambda2"] = lam2
    ctx["summary"] = dict(summary)
    return ctx


def build_conjugacy(s: Scenario, p, F, rho):
    desc = dict(s.conjugacy or {"kind": "identity" if p.kind == "constant" else "birkhoff"})
    kind = desc["kind"]
    if kind == "identity":
        if p.kind != "constant":
            log.warning("identity conjugacy on a non-constant profile is not a conjugacy")
        H = circlemap.identity_conjugacy(rho)
    elif kind == "closed_form":
        H = circlemap.example1_conjugacy(p.alpha, p.beta, periodic=desc.get("periodic", True))
    else:
        H = circlemap.birkhoff_conjugacy(F, rho, N=desc.get("N", 2**14),
                                         grid_size=desc.get("grid_size", 2**12),
                                         weighting=desc.get("weighting", "bump"))
    if desc.get("anchor", True):
        H = circlemap.anchor_conjugacy(H, p, rho)
    return H


# ---------------------------------------------------------------------------
# run kinds


def _data(s: Scenario, length):
    return dalembert.InitialData.from_dict(s.data or {"type": "mode", "k": 1}, length,
                                           seed=s.seed)


def _dt_out(s: Scenario, mu):
    if s.dt_out is not None:
        return s.dt_out
    return None if mu == 1.0 else DT_OUT


def _fit_and_flags(trace, summary, s: Scenario, period, omega_paper, omega_roundtrip, mu):
    if mu == 1.0:
        te = analysis.detect_extinction(trace)
        summary["extinction_detected"] = te
        return None
    window = s.fit_window or analysis.default_window(trace, period)
    try:
        fit = analysis.fit_exponential_rate(trace, window)
    except WindowError as err:
        _flag(summary, "fit_unavailable", str(err))
        return None
    summary["fitted_rate"] = fit.value
    summary["fit"] = fit.to_dict()
    if omega_paper is not None and omega_paper > 0:
        C = analysis.envelope_constant(trace, omega_paper, window)
        summary["paper_bound_constant"] = C
        # the bound with a finite C survives t -> infinity only if the decay is fast enough
        summary["paper_bound_holds"] = bool(fit.value >= omega_paper)
        if abs(fit.value / omega_paper - 1.0) > 0.1:
            _flag(summary, "omega_length_normalization",
                  "fitted rate differs from ln|(1+mu)/(1-mu)| by more than 10%; "
                  "the rate needs the round-trip normalization 2/rho",
                  fit.value / omega_paper)
    if omega_roundtrip is not None and omega_roundtrip > 0:
        summary["fit_over_roundtrip"] = fit.value / omega_roundtrip
    return fit


def run_moving(s: Scenario, summary, ctx=None):
    if ctx is None:
        ctx = prepare_map(s, summary)
    else:
        summary.update({k: v for k, v in ctx["summary"].items() if k != "kind"})
        summary["discrepancy_flags"] = list(ctx["summary"]["discrepancy_flags"])
    p, F, rho, H = ctx["profile"], ctx["F"], ctx["rho"], ctx["H"]
    mu = float(s.mu)
    summary["mu"] = mu
    with stage("feedback"):
        law = control.synthesize(H, p, mu, rho, F)
    summary["omega_paper"] = law.omega_paper
    summary["omega_roundtrip"] = law.omega_roundtrip
    summary["T0"] = law.T0
    a0, _ = eval_profile(p, 0.0)
    with stage("solve"):
        run = dalembert.moving_boundary_run(_data(s, a0), p, H, mu, s.horizon, ds=s.ds,
                                            dt_out=_dt_out(s, mu), F=F)
    with stage("analyze"):
        fit = _fit_and_flags(run.trace, summary, s, rho, law.omega_paper,
                             law.omega_roundtrip, mu)
        if mu == 1.0 and law.T0 is not None and summary["extinction_detected"] is not None:
            summary["extinction_minus_T0"] = summary["extinction_detected"] - law.T0
            summary["extinction_formula_minus_a"] = float(F.minus.inverse(a0))
    summary["ds"] = run.field.ds
    _energy_summary(summary, run.trace)
    return {"trace": run.trace, "fit": fit, "field": run.field, "profile": p,
            "omega": law.omega_roundtrip, "law": law}


def run_static(s: Scenario, summary):
    L = float(s.L if s.L is not None else s.profile["a0"])
    mu = float(s.mu)
    summary["mu"] = mu
    summary["rho_estimate"] = 2.0 * L
    with stage("feedback"):
        if mu == 1.0:
            wp = wr = None
            summary["T0"] = 2.0 * L
        else:
            d = control.decay_rate_predictions(mu, 2.0 * L)
            wp, wr = d["omega_paper"], d["omega_roundtrip"]
    summary["omega_paper"], summary["omega_roundtrip"] = wp, wr
    summary["conjugacy_kind"] = "identity"
    summary["conjugacy_residual"] = 0.0
    summary["lambda1"] = summary["lambda2"] = 1.0
    ds = s.ds or 2.0 * L / 2**12
    with stage("solve"):
        trace, fld = dalembert.static_boundary_run(_data(s, L), None, L, mu, s.horizon, ds,
                                                   dt_out=_dt_out(s, mu), return_field=True)
    with stage("analyze"):
        fit = _fit_and_flags(trace, summary, s, 2.0 * L, wp, wr, mu)
    summary["ds"] = fld.ds
    _energy_summary(summary, trace)
    return {"trace": trace, "fit": fit, "field": fld, "profile": constant_profile(L),
            "omega": wr}


def run_pointwise(s: Scenario, summary):
    xi0 = float(s.xi0)
    summary["xi0"] = xi0
    ds = s.ds or 1.0 / 4096
    with stage("solve"):
        run = dalembert.static_pointwise_run(_data(s, 1.0), None, xi0, s.horizon, ds,
                                             dt_out=s.dt_out or 0.01)
    summary["xi0_effective"] = run.xi0_effective
    summary["cells"] = run.M
    fit = None
    with stage("analyze"):
        window = s.fit_window or (min(10.0, 0.05 * s.horizon), s.horizon)
        try:
            fit = analysis.fit_power_exponent(run.trace, window)
            summary["fitted_exponent"] = fit.value
            summary["fit"] = fit.to_dict()
        except WindowError as err:
            _flag(summary, "fit_unavailable", str(err))
        frac = circlemap.near_rational(xi0, 16, 1e-12)
        if frac[0]:
            _flag(summary, "rational_damper_location",
                  f"xi0 = {frac[1]} is rational; modes with a node there are never damped",
                  xi0)
    _energy_summary(summary, run.trace)
    return {"trace": run.trace, "fit": fit, "run": run}


def _energy_summary(summary, trace):
    summary["energy_initial"] = float(trace.E[0])
    summary["energy_final"] = float(trace.E[-1])


# ---------------------------------------------------------------------------
# writing


class _Outputs:
    """Tracks written files; removes them all if the run fails."""

    def __init__(self, out_dir):
        self.dir = out_dir
        self.files = []
        self._made_dir = not os.path.isdir(out_dir)
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.dir, name)
        self.files.append(p)
        return p

    def discard(self):
        for p in self.files:
            if os.path.exists(p):
                os.remove(p)
        if self._made_dir and os.path.isdir(self.dir) and not os.listdir(self.dir):
            os.rmdir(self.dir)


def write_summary(summary, path):
    summary = _clean(summary)
    jsonschema.validate(summary, load_schema("summary"))
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def run_scenario(s: Scenario, out_dir=None, plot=None, ctx=None):
    """Execute a scenario and write its artifacts; returns the manifest.

    The manifest maps ``files`` to the written paths and carries the summary.
    """
    out_dir = out_dir or (s.outputs or {}).get("dir") or "movestab_out"
    plot = (s.outputs or {}).get("plot", True) if plot is None else plot
    if s.kind == "sweep":
        return run_sweep(s, out_dir, plot=plot)
    outs = _Outputs(out_dir)
    summary = empty_summary(s.kind, s.name)
    try:
        if s.kind == "map_analysis":
            ctx = prepare_map(s, summary, need_conjugacy=s.conjugacy is not None)
            if "H" in ctx and plot:
                plotting.plot_conjugacy(ctx["H"], outs.path("conjugacy.svg"), ctx["F"],
                                        ctx["rho"])
            if "H" in ctx and ctx["H"].kind == "birkhoff_sampled":
                circlemap.save_conjugacy(ctx["H"], outs.path("conjugacy.json"))
            result = None
        elif s.kind == "moving_boundary":
            result = run_moving(s, summary, ctx)
        elif s.kind == "static_boundary":
            result = run_static(s, summary)
        elif s.kind == "static_pointwise":
            result = run_pointwise(s, summary)
        else:
            raise PipelineError("dispatch", ValueError(f"unknown kind {s.kind!r}"))
        with stage("write"):
            if result is not None:
                trace = result["trace"]
                trace.to_csv(outs.path("energy.csv"), omega=result.get("omega"))
                if plot:
                    if s.kind == "static_pointwise":
                        plotting.plot_power_decay(trace, outs.path("energy.svg"),
                                                  result["fit"], title=s.name)
                    else:
                        plotting.plot_energy_decay(trace, outs.path("energy.svg"),
                                                   summary["omega_paper"],
                                                   summary["omega_roundtrip"],
                                                   result["fit"], title=s.name)
                snaps = (s.outputs or {}).get("snapshots")
                if snaps and "field" in result:
                    dalembert.write_snapshots(result["field"], result["profile"], snaps,
                                              outs.path("snapshots.csv"))
            summary = write_summary(summary, outs.path("summary.json"))
    except BaseException:
        outs.discard()
        raise
    return {"files": list(outs.files), "summary": summary, "dir": out_dir}


def synthesize_feedback(s: Scenario, out_dir, n=1000, plot=True):
    """Tabulate ``f(t)`` and ``r(t)`` over one period for the scenario's feedback law."""
    outs = _Outputs(out_dir)
    summary = empty_summary("synthesize", s.name)
    try:
        ctx = prepare_map(s, summary)
        mu = float(s.mu if s.mu is not None else 1.0)
        summary["mu"] = mu
        with stage("feedback"):
            law = control.synthesize(ctx["H"], ctx["profile"], mu, ctx["rho"], ctx["F"])
            t = np.arange(n) / n
            a, _ = eval_profile(ctx["profile"], t)
            f = np.broadcast_to(law.gain(t), t.shape)
            r = np.broadcast_to(law.reflection(t), t.shape)
        summary["omega_paper"] = law.omega_paper
        summary["omega_roundtrip"] = law.omega_roundtrip
        summary["T0"] = law.T0
        with stage("write"):
            with open(outs.path("feedback.csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "a_t", "f", "r"])
                for row in zip(t, a, f, r):
                    w.writerow([repr(float(v)) for v in row])
            summary = write_summary(summary, outs.path("summary.json"))
    except BaseException:
        outs.discard()
        raise
    return {"files": list(outs.files), "summary": summary, "dir": out_dir}


# ---------------------------------------------------------------------------
# sweeps


def sweep_threads():
    v = os.environ.get("MOVESTAB_THREADS")
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            log.warning("ignoring MOVESTAB_THREADS=%r", v)
    return min(4, os.cpu_count() or 1)


SWEEP_COLUMNS = ["index", "parameter", "value", "omega_paper", "omega_roundtrip",
                 "fitted_rate", "fitted_exponent", "T0", "extinction_detected",
                 "energy_final", "dir"]


def run_sweep(s: Scenario, out_dir, plot=True):
    """Fan a base scenario out over a list of mu or xi0 values.

    Runs share the (expensive) conjugacy, execute on a thread pool capped by
    ``MOVESTAB_THREADS`` and write into their own subdirectories.
    """
    sw = s.sweep
    base, param, values = sw["base"], sw["parameter"], list(sw["values"])
    os.makedirs(out_dir, exist_ok=True)
    shared = None
    if base == "moving_boundary":
        first = s.override(kind=base, **{param: values[0]})
        shared = prepare_map(first, empty_summary(base))

    def one(i, v):
        sub = Scenario(**{**s.__dict__, "kind": base, "sweep": None, param: v})
        m = run_scenario(sub, os.path.join(out_dir, f"run_{i:03d}"), plot=plot, ctx=shared)
        return i, v, m

    with ThreadPoolExecutor(max_workers=sweep_threads()) as pool:
        results = sorted(pool.map(lambda iv: one(*iv), enumerate(values)))
    rows = []
    for i, v, m in results:
        sm = m["summary"]
        rows.append([i, param, v] + [sm.get(k) for k in SWEEP_COLUMNS[3:-1]]
                    + [os.path.relpath(m["dir"], out_dir)])
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow(["" if x is None else (repr(x) if isinstance(x, float) else x)
                        for x in row])
    files = [csv_path] + [f for _, _, m in results for f in m["files"]]
    if plot:
        key = "fitted_exponent" if base == "static_pointwise" else "fitted_rate"
        meas = [m["summary"].get(key) for _, _, m in results]
        if any(x is not None for x in meas):
            pred = None
            if key == "fitted_rate":
                pred = [m["summary"].get("omega_roundtrip") for _, _, m in results]
                pred = [np.nan if x is None else x for x in pred]
            svg = os.path.join(out_dir, "sweep.svg")
            plotting.plot_sweep(values, [np.nan if x is None else x for x in meas], svg,
                                predicted=pred, xlabel=param, ylabel=key.replace("_", " "))
            files.append(svg)
    return {"files": files, "summary": {"kind": "sweep", "runs": len(results)},
            "dir": out_dir}
