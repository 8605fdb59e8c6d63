"""Scenario files: JSON parsing, schema validation and cross-field checks."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .errors import ScenarioError

KINDS = ("map_analysis", "moving_boundary", "static_boundary", "static_pointwise", "sweep")


def load_schema(name):
    """Load one of the bundled schemas (``scenario`` or ``summary``)."""
    text = resources.files("movestab").joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


@dataclass
class Scenario:
    kind: str
    profile: dict | None = None
    conjugacy: dict | None = None
    mu: float | None = None
    L: float | None = None
    xi0: float | None = None
    data: dict | None = None
    horizon: float | None = None
    dt_out: float | None = None
    ds: float | None = None
    fit_window: tuple | None = None
    rotation: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    sweep: dict | None = None
    name: str | None = None
    source: str | None = None

    def to_dict(self):
        d = {k: copy.deepcopy(getattr(self, k)) for k in (
            "kind", "profile", "conjugacy", "mu", "L", "xi0", "data", "horizon", "dt_out",
            "ds", "rotation", "outputs", "seed", "sweep", "name")}
        if self.fit_window is not None:
            d["fit_window"] = list(self.fit_window)
        return {k: v for k, v in d.items() if v is not None}

    def override(self, **kw):
        """Copy with the non-None keyword values replaced."""
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return scenario_from_dict(d, source=self.source)


def _field_name(err: jsonschema.ValidationError):
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "required":
        return None
    return path or "<root>"


def _require(d, key, kind):
    if d.get(key) is None:
        raise ScenarioError(f"{key} required for kind {kind!r}")


def _check_cross_fields(d):
    kind = d["kind"]
    if kind in ("map_analysis", "moving_boundary"):
        _require(d, "profile", kind)
    if kind == "moving_boundary":
        _require(d, "mu", kind)
        _require(d, "horizon", kind)
    if kind == "static_boundary":
        _require(d, "mu", kind)
        _require(d, "horizon", kind)
        if d.get("L") is None and (d.get("profile") or {}).get("kind") != "constant":
            raise ScenarioError("L required for kind 'static_boundary' "
                                "(or a constant profile)")
    if kind == "static_pointwise":
        _require(d, "xi0", kind)
        _require(d, "horizon", kind)
    if kind == "sweep":
        _require(d, "sweep", kind)
        sw = d["sweep"]
        base = sw["base"]
        param = sw["parameter"]
        if base == "static_pointwise" and param != "xi0":
            raise ScenarioError("sweep over a pointwise base must vary xi0")
        if base != "static_pointwise" and param != "mu":
            raise ScenarioError(f"sweep over {base!r} must vary mu")
        inner = {k: v for k, v in d.items() if k != "sweep"}
        inner["kind"] = base
        inner[param] = sw["values"][0]
        _check_cross_fields(inner)
    prof = d.get("profile")
    if prof is not None:
        pk = prof["kind"]
        if pk == "example1":
            for key in ("alpha", "beta"):
                if key not in prof:
                    raise ScenarioError(f"profile.{key} required for example1 profiles")
        elif pk == "constant" and "a0" not in prof:
            raise ScenarioError("profile.a0 required for constant profiles")
        elif pk == "tabulated" and "samples" not in prof:
            raise ScenarioError("profile.samples required for tabulated profiles")
    conj = d.get("conjugacy")
    if conj is not None and conj["kind"] == "closed_form":
        if prof is None or prof["kind"] != "example1":
            raise ScenarioError("conjugacy.kind 'closed_form' needs an example1 profile")
    if d.get("fit_window") is not None:
        lo, hi = d["fit_window"]
        if not lo < hi:
            raise ScenarioError("fit_window must satisfy lo < hi")
    data = d.get("data")
    if data is not None and data.get("path") is not None:
        if not os.path.exists(data["path"]):
            raise ScenarioError(f"data.path: file {data['path']!r} does not exist")


def scenario_from_dict(d, source=None) -> Scenario:
    """Validate a decoded scenario and build the Scenario object."""
    try:
        jsonschema.validate(d, load_schema("scenario"))
    except jsonschema.ValidationError as err:
        name = _field_name(err)
        if name is None:
            raise ScenarioError(f"validation error: {err.message}") from None
        raise ScenarioError(f"validation error in field {name}: {err.message}") from None
    _check_cross_fields(d)
    fw = d.get("fit_window")
    return Scenario(
        kind=d["kind"], profile=d.get("profile"), conjugacy=d.get("conjugacy"),
        mu=d.get("mu"), L=d.get("L"), xi0=d.get("xi0"), data=d.get("data"),
        horizon=d.get("horizon"), dt_out=d.get("dt_out"), ds=d.get("ds"),
        fit_window=tuple(fw) if fw is not None else None,
        rotation=d.get("rotation", {}), outputs=d.get("outputs", {}),
        seed=d.get("seed", 0), sweep=d.get("sweep"), name=d.get("name"), source=source)


def load_scenario(path) -> Scenario:
    """Read and validate a JSON scenario file.

    Parse errors report line and column; validation errors name the field.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(
            f"{path}: parse error at line {err.lineno}, column {err.colno}: {err.msg}") from None
    if not isinstance(d, dict):
        raise ScenarioError(f"{path}: top-level JSON value must be an object")
    base = os.path.dirname(os.path.abspath(path))
    data = d.get("data")
    if isinstance(data, dict) and isinstance(data.get("path"), str):
        if not os.path.isabs(data["path"]):
            data["path"] = os.path.join(base, data["path"])
    return scenario_from_dict(d, source=str(path))
