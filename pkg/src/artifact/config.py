"""Run configuration: a YAML key-value tree with located validation errors.

The dialect is plain YAML block mappings of scalars. Every key is checked
against the schema of its section; unknown keys, duplicate keys and
malformed values raise ConfigError carrying the 1-based line and column.
dump_config writes a tree that load_config reads back unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .core import ConfigError
from .model import ExponentialWarp, ModelManifold, euclidean, hyperbolic, pinch_model
from .nonlinearity import (ConstantL, Exp2m1, ExpHarmonic, MeanCurvature, NonlinearTriple, PhiQuotient,
                           PowerDecay, PowerF, PowerL, PowerLaw, PowerSum, RationalPower)


def _mark(node):
    return node.start_mark.line + 1, node.start_mark.column + 1


def _convert(node, path, marks):
    """Turn a composed YAML node into plain Python, recording key locations."""
    marks[path] = _mark(node)
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            if not isinstance(k, yaml.ScalarNode):
                raise ConfigError("mapping keys must be scalars", *_mark(k))
            key = str(k.value)
            if key in out:
                raise ConfigError(f"duplicate key '{key}'", *_mark(k))
            marks[path + (key,)] = _mark(k)
            out[key] = _convert(v, path + (key,), marks)
            marks[path + (key,)] = _mark(k)
        return out
    if isinstance(node, yaml.SequenceNode):
        out = []
        for i, v in enumerate(node.value):
            out.append(_convert(v, path + (i,), marks))
        return out
    return _LOADER.construct_object(node, deep=True)


_LOADER = yaml.SafeLoader("")


@dataclass
class Config:
    data: dict
    marks: dict

    def section(self, key, required=False):
        if key not in self.data:
            if required:
                raise ConfigError(f"missing section '{key}'", 1, 1)
            return None
        return Section(self.data[key], (key,), self.marks)


def load_config(text) -> Config:
    """Parse YAML text (or a path-like object) into a Config."""
    if hasattr(text, "read_text"):
        text = text.read_text()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        m = e.problem_mark or e.context_mark
        line, col = (m.line + 1, m.column + 1) if m is not None else (0, 0)
        raise ConfigError(f"malformed config: {e.problem or e}", line, col) from None
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed config: {e}") from None
    if node is None:
        return Config({}, {})
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("top level must be a mapping", *_mark(node))
    marks = {}
    data = _convert(node, (), marks)
    cfg = Config(data, marks)
    Section(data, (), marks).check(TOP_LEVEL)
    return cfg


def load_config_file(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return load_config(text)


def dump_config(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


class Section:
    """A mapping inside the config with location-aware accessors."""

    def __init__(self, data, path, marks):
        self.path = path
        self.marks = marks
        if not isinstance(data, dict):
            raise ConfigError(f"'{'.'.join(map(str, path))}' must be a mapping", *self.where())
        self.data = data

    def where(self, key=None):
        p = self.path if key is None else self.path + (key,)
        while p and p not in self.marks:
            p = p[:-1]
        return self.marks.get(p, (0, 0))

    def name(self, key):
        return ".".join(map(str, self.path + (key,)))

    def check(self, allowed):
        for k in self.data:
            if k not in allowed:
                raise ConfigError(f"unknown key '{self.name(k)}' (allowed: {', '.join(sorted(allowed))})",
                                  *self.where(k))
        return self

    def has(self, key):
        return key in self.data

    def keys(self):
        return list(self.data)

    def sub(self, key, required=True):
        if key not in self.data:
            if required:
                raise ConfigError(f"missing key '{self.name(key)}'", *self.where())
            return None
        return Section(self.data[key], self.path + (key,), self.marks)

    def get(self, key, kind=float, default=None, required=False, choices=None):
        if key not in self.data:
            if required:
                raise ConfigError(f"missing key '{self.name(key)}'", *self.where())
            return default
        v = self.data[key]
        try:
            if kind is float:
                if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                    raise TypeError
                v = float(v)
                if math.isnan(v):
                    raise TypeError
            elif kind is int:
                if isinstance(v, bool) or not (isinstance(v, int) or (isinstance(v, float) and v.is_integer())):
                    raise TypeError
                v = int(v)
            elif kind is bool:
                if not isinstance(v, bool):
                    raise TypeError
            elif kind is str:
                if not isinstance(v, str):
                    raise TypeError
        except (TypeError, ValueError):
            raise ConfigError(f"'{self.name(key)}' must be of type {kind.__name__}, got {v!r}",
                              *self.where(key)) from None
        if choices is not None and v not in choices:
            raise ConfigError(f"'{self.name(key)}' must be one of {sorted(choices)}, got {v!r}", *self.where(key))
        return v


TOP_LEVEL = {"triple", "weight", "beta_bar", "model", "grid", "ko", "bvp", "construct", "residual",
             "counterexample", "theorems"}


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

_PHI_KEYS = {
    "power": {"p"},
    "mean_curvature": set(),
    "exp_harmonic": set(),
    "power_sum": {"p", "q"},
    "rational_power": {"p", "q"},
}


def _wrap(section, fn):
    try:
        return fn()
    except ValueError as e:
        raise ConfigError(f"{'.'.join(map(str, section.path))}: {e}", *section.where()) from None


def build_phi(s: Section):
    fam = s.get("family", str, required=True, choices=set(_PHI_KEYS))
    s.check({"family"} | _PHI_KEYS[fam])
    if fam == "power":
        return _wrap(s, lambda: PowerLaw(s.get("p", required=True)))
    if fam == "mean_curvature":
        return MeanCurvature()
    if fam == "exp_harmonic":
        return ExpHarmonic()
    if fam == "power_sum":
        return _wrap(s, lambda: PowerSum(s.get("p", required=True), s.get("q", required=True)))
    return _wrap(s, lambda: RationalPower(s.get("p", required=True), s.get("q", required=True)))


def build_f(s: Section):
    fam = s.get("family", str, required=True, choices={"power", "exp2m1"})
    if fam == "power":
        s.check({"family", "omega", "threshold"})
        return _wrap(s, lambda: PowerF(s.get("omega", required=True), s.get("threshold", default=0.0)))
    s.check({"family"})
    return Exp2m1()


def build_l(s: Section, phi):
    fam = s.get("family", str, required=True, choices={"constant", "power", "phi_quotient"})
    if fam == "constant":
        s.check({"family", "c"})
        return _wrap(s, lambda: ConstantL(s.get("c", default=1.0)))
    if fam == "power":
        s.check({"family", "exponent"})
        return _wrap(s, lambda: PowerL(s.get("exponent", required=True)))
    s.check({"family", "chi"})
    return _wrap(s, lambda: PhiQuotient(phi, s.get("chi", required=True)))


def build_weight(s: Section):
    fam = s.get("family", str, required=True, choices={"power_decay"})
    s.check({"family", "mu", "scale"})
    return _wrap(s, lambda: PowerDecay(s.get("mu", required=True), s.get("scale", default=1.0)))


def build_triple(cfg: Config) -> NonlinearTriple:
    s = cfg.section("triple", required=True).check({"phi", "f", "l"})
    phi = build_phi(s.sub("phi"))
    f = build_f(s.sub("f"))
    l = build_l(s.sub("l"), phi)
    w = cfg.section("weight")
    return NonlinearTriple(phi, f, l, build_weight(w) if w is not None else None)


_MODEL_KEYS = {
    "euclidean": {"m"},
    "hyperbolic": {"m", "kappa"},
    "exponential": {"m", "kappa", "c"},
    "pinch": {"m", "delta", "shifted"},
    "power_end": {"m", "kappa", "alpha"},
    "shrinking_end": {"m", "alpha"},
}


def build_model(s: Section) -> ModelManifold:
    from .verify import power_end_model, shrinking_end_model

    fam = s.get("family", str, required=True, choices=set(_MODEL_KEYS))
    s.check({"family"} | _MODEL_KEYS[fam])
    m = s.get("m", int, required=True)

    def make():
        if fam == "euclidean":
            return euclidean(m)
        if fam == "hyperbolic":
            return hyperbolic(m, s.get("kappa", default=1.0))
        if fam == "exponential":
            return ModelManifold(m, ExponentialWarp(s.get("kappa", default=1.0), s.get("c", default=1.0)))
        if fam == "pinch":
            return pinch_model(m, s.get("delta", required=True), s.get("shifted", bool, default=True))
        if fam == "power_end":
            return power_end_model(m, s.get("kappa", default=1.0), s.get("alpha", required=True))
        return shrinking_end_model(m, s.get("alpha", required=True))

    return _wrap(s, make)


def build_grid(cfg: Config, r_min=0.01, r_max=10.0, N=201):
    s = cfg.section("grid")
    if s is None:
        return r_min, r_max, N
    s.check({"r_min", "r_max", "N", "spacing"})
    a, b = s.get("r_min", default=r_min), s.get("r_max", default=r_max)
    n = s.get("N", int, default=N)
    if not (0 <= a < b) or n < 2:
        raise ConfigError("grid needs 0 <= r_min < r_max and N >= 2", *s.where())
    return a, b, n


def grid_spacing(cfg: Config):
    s = cfg.section("grid")
    if s is None:
        return "linear"
    return s.get("spacing", str, default="linear", choices={"linear", "geometric"})
