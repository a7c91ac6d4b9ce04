"""Scenario configuration: parsing, validation, defaults and initial data.

A scenario is a JSON file with five sections::

    {
      "model":      {"a": 2.0, "flux": {"kind": "burgers"}, "u_range": [-1, 1]},
      "stochastic": {"dim": 1, "densities": [{"kind": "uniform"}], "quad_order": 8},
      "grid":       {"x_lo": 0.0, "x_hi": 6.283185307179586, "cells": 2048, "bc": "periodic"},
      "data":       {"u0": [[...g0 shapes...], [...g1 shapes...]],
                     "v0": {"mode": "perturbed", "shapes": [...]}},
      "run":        {"epsilons": [0.1, 0.01], "t_end": 0.5, ...}
    }

u0(x, y) = g0(x) + sum_j y_j g_j(x), each g a sum of named shapes.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .model import PSystemModel
from .params import Density1D, ParamSpace
from .relax import Grid1D, GridField

SHAPE_PARAMS = {
    "constant": {"value": 0.0},
    "sine": {"amplitude": 1.0, "wavenumber": 1.0, "phase": 0.0},
    "cosine": {"amplitude": 1.0, "wavenumber": 1.0, "phase": 0.0},
    "gaussian": {"amplitude": 1.0, "center": 0.0, "width": 1.0},
    "bump": {"amplitude": 1.0, "center": 0.0, "width": 1.0},
    "step": {"left": 1.0, "right": 0.0, "position": 0.0},
}


@dataclass(frozen=True)
class Shape:
    kind: str
    params: tuple = ()

    @classmethod
    def make(cls, kind, **params):
        if kind not in SHAPE_PARAMS:
            raise ConfigError(f"unknown shape {kind!r}")
        full = dict(SHAPE_PARAMS[kind])
        unknown = set(params) - set(full)
        if unknown:
            raise ConfigError(f"shape {kind!r} has no parameters {sorted(unknown)}")
        full.update({k: float(v) for k, v in params.items()})
        return cls(kind, tuple(sorted(full.items())))

    def __call__(self, x):
        p = dict(self.params)
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, p["value"])
        if self.kind == "sine":
            return p["amplitude"] * np.sin(p["wavenumber"] * x + p["phase"])
        if self.kind == "cosine":
            return p["amplitude"] * np.cos(p["wavenumber"] * x + p["phase"])
        if self.kind == "gaussian":
            return p["amplitude"] * np.exp(-(((x - p["center"]) / p["width"]) ** 2))
        if self.kind == "bump":
            r = (x - p["center"]) / p["width"]
            out = np.zeros_like(x)
            inside = np.abs(r) < 1
            out[inside] = p["amplitude"] * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
            return out
        return np.where(x < p["position"], p["left"], p["right"])

    def to_dict(self):
        return {"kind": self.kind, **dict(self.params)}


def _sum_shapes(shapes, x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    for s in shapes:
        out = out + s(x)
    return out


@dataclass(frozen=True)
class InitialData:
    """u0 = g0 + sum_j y_j g_j; v0 = f(u0) (+ perturbation when ``v_mode == "perturbed"``)."""

    u_terms: tuple
    v_mode: str = "equilibrium"
    v_shapes: tuple = ()

    def u0(self, x, nodes):
        nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
        if nodes.shape[1] != len(self.u_terms) - 1:
            raise ValueError("node dimension does not match the number of random terms")
        base = _sum_shapes(self.u_terms[0], x)
        out = np.repeat(base[None], nodes.shape[0], axis=0)
        for j, terms in enumerate(self.u_terms[1:]):
            out = out + nodes[:, j:j + 1] * _sum_shapes(terms, x)[None]
        return out

    def v0(self, model, x, nodes):
        v = model.f(self.u0(x, nodes))
        if self.v_mode == "perturbed":
            v = v + _sum_shapes(self.v_shapes, x)[None]
        return v

    def field(self, model, grid, nodes):
        x = grid.x
        return GridField.from_uv(model, grid, np.atleast_2d(nodes), self.u0(x, nodes),
                                 self.v0(model, x, nodes))

    def to_dict(self):
        out = {"u0": [[s.to_dict() for s in terms] for terms in self.u_terms],
               "v0": {"mode": self.v_mode}}
        if self.v_mode == "perturbed":
            out["v0"]["shapes"] = [s.to_dict() for s in self.v_shapes]
        return out


@dataclass(frozen=True)
class RunConfig:
    epsilons: tuple = (0.1, 0.01, 0.001)
    nus: tuple = (1e-2, 1e-3, 1e-4)
    cfl: float = 0.9
    t_end: float = 0.5
    snapshots: tuple = ()
    seed: int = 0
    splitting: str = "lie"
    mc_samples: int = 256
    observe_x: float | None = None

    def to_dict(self):
        out = {
            "epsilons": list(self.epsilons), "nus": list(self.nus), "cfl": self.cfl,
            "t_end": self.t_end, "snapshots": list(self.snapshots), "seed": self.seed,
            "splitting": self.splitting, "mc_samples": self.mc_samples,
        }
        if self.observe_x is not None:
            out["observe_x"] = self.observe_x
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    model: PSystemModel
    space: ParamSpace
    grid: Grid1D
    data: InitialData
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "stochastic": {"dim": self.space.dim,
                           "densities": [d.to_dict() for d in self.space.densities],
                           "quad_order": self.space.quad_order},
            "grid": {"x_lo": self.grid.x_lo, "x_hi": self.grid.x_hi, "cells": self.grid.m,
                     "bc": self.grid.bc},
            "data": self.data.to_dict(),
            "run": self.run.to_dict(),
        }

    @property
    def observe_x(self):
        if self.run.observe_x is not None:
            return self.run.observe_x
        return 0.5 * (self.grid.x_lo + self.grid.x_hi)


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_SHAPE = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": sorted(SHAPE_PARAMS)},
                   **{p: _NUM for ps in SHAPE_PARAMS.values() for p in ps}},
    "additionalProperties": False,
}
SCHEMA = {
    "type": "object",
    "required": ["model", "stochastic", "grid", "data"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object", "required": ["a", "flux", "u_range"], "additionalProperties": False,
            "properties": {
                "a": _POS,
                "flux": {
                    "type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["burgers", "linear", "polynomial"]},
                                   "c": _NUM, "coeffs": {"type": "array", "items": _NUM}},
                },
                "u_range": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            },
        },
        "stochastic": {
            "type": "object", "required": ["dim"], "additionalProperties": False,
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "quad_order": {"type": "integer", "minimum": 1},
                "densities": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["uniform", "beta", "table"]},
                                   "alpha": {"type": "number", "minimum": 0},
                                   "values": {"type": "array", "minItems": 2,
                                              "items": {"type": "number", "minimum": 0}}},
                }},
            },
        },
        "grid": {
            "type": "object", "required": ["x_lo", "x_hi", "cells"], "additionalProperties": False,
            "properties": {"x_lo": _NUM, "x_hi": _NUM,
                           "cells": {"type": "integer", "minimum": 4},
                           "bc": {"enum": ["periodic", "outflow"]}},
        },
        "data": {
            "type": "object", "required": ["u0"], "additionalProperties": False,
            "properties": {
                "u0": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _SHAPE}},
                "v0": {"type": "object", "required": ["mode"], "additionalProperties": False,
                       "properties": {"mode": {"enum": ["equilibrium", "perturbed"]},
                                      "shapes": {"type": "array", "items": _SHAPE}}},
            },
        },
        "run": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "epsilons": {"type": "array", "minItems": 1, "items": _POS},
                "nus": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "t_end": _POS,
                "snapshots": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "seed": {"type": "integer", "minimum": 0},
                "splitting": {"enum": ["lie", "strang"]},
                "mc_samples": {"type": "integer", "minimum": 16},
                "observe_x": _NUM,
            },
        },
    },
}


def _path(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1]
        parts.append(missing)
    if err.validator == "additionalProperties":
        extra = err.message.split("'")[1] if "'" in err.message else ""
        if extra:
            parts.append(extra)
    return ".".join(parts) or "<root>"


def parse_dict(raw):
    """Validate ``raw`` and build a :class:`ScenarioConfig`.

    Raises :class:`ConfigError` listing every problem found, each prefixed
    with a dotted key path such as ``model.a``.
    """
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = [f"{_path(e)}: {e.message}" for e in
              sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))]
    if errors:
        raise ConfigError(errors)
    raw = copy.deepcopy(raw)
    problems = []

    mod = raw["model"]
    flux = mod["flux"]
    lo, hi = mod["u_range"]
    if not lo < hi:
        problems.append("model.u_range: lower end must be below upper end")
    if flux["kind"] == "linear" and "c" not in flux:
        problems.append("model.flux.c: required for linear flux")
    if flux["kind"] == "polynomial" and "coeffs" not in flux:
        problems.append("model.flux.coeffs: required for polynomial flux")

    st = raw["stochastic"]
    dim = st["dim"]
    dens = st.get("densities", [{"kind": "uniform"}])
    if len(dens) not in (1, dim):
        problems.append(f"stochastic.densities: expected 1 or {dim} entries, got {len(dens)}")

    gr = raw["grid"]
    if not gr["x_hi"] > gr["x_lo"]:
        problems.append("grid.x_hi: must exceed grid.x_lo")

    data = raw["data"]
    if len(data["u0"]) != dim + 1:
        problems.append(f"data.u0: expected {dim + 1} shape lists (g0..g{dim}), got {len(data['u0'])}")
    v0 = data.get("v0", {"mode": "equilibrium"})
    if v0["mode"] == "perturbed" and not v0.get("shapes"):
        problems.append("data.v0.shapes: perturbed mode needs at least one shape")

    run = raw.get("run", {})
    eps = run.get("epsilons", list(RunConfig.epsilons))
    if any(b >= a for a, b in zip(eps, eps[1:])):
        problems.append("run.epsilons: must be strictly descending")
    t_end = run.get("t_end", RunConfig.t_end)
    snaps = run.get("snapshots", [])
    if any(b <= a for a, b in zip(snaps, snaps[1:])):
        problems.append("run.snapshots: must be strictly increasing")
    if snaps and snaps[-1] > t_end:
        problems.append("run.snapshots: snapshot time beyond run.t_end")
    if problems:
        raise ConfigError(problems)

    try:
        if flux["kind"] == "burgers":
            model = PSystemModel.burgers(mod["a"], (lo, hi))
        elif flux["kind"] == "linear":
            model = PSystemModel.linear(flux["c"], mod["a"], (lo, hi))
        else:
            model = PSystemModel.polynomial(flux["coeffs"], mod["a"], (lo, hi))
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    try:
        densities = tuple(Density1D(d["kind"], d.get("alpha", 0.0), tuple(d.get("values", ())))
                          for d in dens)
        space = ParamSpace(dim, densities, st.get("quad_order", 8))
    except ValueError as exc:
        raise ConfigError(f"stochastic: {exc}") from exc
    grid = Grid1D(float(gr["x_lo"]), float(gr["x_hi"]), int(gr["cells"]), gr.get("bc", "periodic"))
    shapes = lambda lst: tuple(Shape.make(s["kind"], **{k: v for k, v in s.items() if k != "kind"})
                               for s in lst)
    initial = InitialData(tuple(shapes(t) for t in data["u0"]), v0["mode"],
                          shapes(v0.get("shapes", [])) if v0["mode"] == "perturbed" else ())
    runcfg = RunConfig(
        epsilons=tuple(float(e) for e in eps),
        nus=tuple(float(n) for n in run.get("nus", RunConfig.nus)),
        cfl=float(run.get("cfl", RunConfig.cfl)),
        t_end=float(t_end),
        snapshots=tuple(float(s) for s in snaps),
        seed=int(run.get("seed", 0)),
        splitting=run.get("splitting", "lie"),
        mc_samples=int(run.get("mc_samples", RunConfig.mc_samples)),
        observe_x=float(run["observe_x"]) if "observe_x" in run else None,
    )
    return ScenarioConfig(model, space, grid, initial, runcfg)


def parse_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"<file>: {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: not valid JSON ({exc})") from exc
    return parse_dict(raw)


def serialize(cfg):
    """Canonical JSON text of a scenario (defaults filled in)."""
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def default_burgers():
    """The Burgers scenario used throughout the acceptance suite."""
    return parse_dict({
        "model": {"a": 2.0, "flux": {"kind": "burgers"}, "u_range": [-1.0, 1.0]},
        "stochastic": {"dim": 1, "densities": [{"kind": "uniform"}], "quad_order": 8},
        "grid": {"x_lo": 0.0, "x_hi": 2 * np.pi, "cells": 2048, "bc": "periodic"},
        "data": {
            "u0": [[{"kind": "constant", "value": 0.5}, {"kind": "sine", "amplitude": 0.25}],
                   [{"kind": "sine", "amplitude": 0.1, "wavenumber": 2.0}]],
            "v0": {"mode": "perturbed", "shapes": [{"kind": "cosine", "amplitude": 0.2}]},
        },
        "run": {"epsilons": [1e-1, 1e-2, 1e-3, 1e-4], "nus": [1e-2, 1e-3, 1e-4], "t_end": 0.5,
                "seed": 0, "mc_samples": 256, "observe_x": np.pi},
    })
