"""Study configuration files (YAML) and their validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from .errors import ParseError, ValidationError
from .scenarios.graphlike import MODES, GraphLikeScenario
from .scenarios.multiplication import EXAMPLES

TOP_KEYS = {"scenario", "n_range", "z0", "tolerances", "outputs", "jobs"}
TOLERANCE_KEYS = {"bound", "que", "oracle", "commute"}
SCENARIO_KEYS = {
    "multiplication": {"family", "example", "points_per_piece"},
    "unit_interval": {"family", "cosine_modes"},
    "graphlike": {"family", "mode", "edge_lengths", "vertex_dims", "cells", "transversal",
                  "a", "dim", "section_mass"},
}


@dataclass(frozen=True)
class Tolerances:
    bound: float = 1e-9
    que: float = 1e-10
    oracle: float = 1e-10
    commute: float = 1e-10


@dataclass(frozen=True)
class MultiplicationParams:
    example: str = "A"
    points_per_piece: int = 17
    family: str = field(default="multiplication", init=False)


@dataclass(frozen=True)
class UnitIntervalParams:
    cosine_modes: Optional[int] = None
    family: str = field(default="unit_interval", init=False)


@dataclass(frozen=True)
class GraphLikeParams:
    mode: str = "bumpy"
    edge_lengths: Tuple[float, ...] = (1.0, 1.5, 2.0)
    vertex_dims: Tuple[int, ...] = (2, 2, 2, 2)
    cells: int = 8
    transversal: int = 4
    a: float = 0.25
    dim: int = 2
    section_mass: float = 2.0
    family: str = field(default="graphlike", init=False)

    def scenario(self, z0: complex) -> GraphLikeScenario:
        return GraphLikeScenario(self.edge_lengths, self.vertex_dims, self.cells, self.transversal,
                                 self.mode, self.a, self.dim, self.section_mass, z0)


ScenarioParams = Union[MultiplicationParams, UnitIntervalParams, GraphLikeParams]


@dataclass(frozen=True)
class StudyConfig:
    scenario: ScenarioParams
    n_range: Tuple[int, int]
    z0: complex = -1.0
    tolerances: Tolerances = Tolerances()
    outputs: Optional[str] = None
    jobs: int = 1

    @property
    def ns(self):
        return list(range(self.n_range[0], self.n_range[1] + 1))


def _line_index(node, prefix=(), out=None):
    """Map key paths to 1-based line numbers using the composed YAML tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = prefix + (str(key.value),)
            out[path] = key.start_mark.line + 1
            _line_index(value, path, out)
    return out


class _Reader:
    def __init__(self, lines: Dict[tuple, int]):
        self.lines = lines

    def fail(self, msg, path):
        raise ParseError(msg, line=self.lines.get(tuple(path)), field=".".join(path))

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            self.fail("expected a mapping", path)
        for key in value:
            if key not in allowed:
                self.fail(f"unknown key '{key}'", tuple(path) + (str(key),))
        return value

    def number(self, value, path, kind=float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"expected a number, got {value!r}", path)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                self.fail(f"expected an integer, got {value!r}", path)
            return int(value)
        return float(value)

    def number_list(self, value, path, kind=float, length=None):
        if not isinstance(value, list):
            self.fail("expected a list", path)
        if length is not None and len(value) != length:
            self.fail(f"expected {length} entries, got {len(value)}", path)
        return tuple(self.number(v, tuple(path) + (str(i),), kind) for i, v in enumerate(value))

    def string(self, value, path):
        if not isinstance(value, str):
            self.fail(f"expected a string, got {value!r}", path)
        return value


def _scenario(reader: _Reader, raw) -> ScenarioParams:
    path = ("scenario",)
    if not isinstance(raw, dict):
        reader.fail("expected a mapping", path)
    if "family" not in raw:
        reader.fail("missing 'family'", path + ("family",))
    family = reader.string(raw["family"], path + ("family",))
    if family not in SCENARIO_KEYS:
        reader.fail(f"unknown family '{family}'; expected one of {sorted(SCENARIO_KEYS)}",
                    path + ("family",))
    reader.mapping(raw, path, SCENARIO_KEYS[family])
    kw: Dict[str, Any] = {}
    p = lambda k: path + (k,)  # noqa: E731
    if family == "multiplication":
        if "example" in raw:
            kw["example"] = reader.string(raw["example"], p("example"))
        if "points_per_piece" in raw:
            kw["points_per_piece"] = reader.number(raw["points_per_piece"], p("points_per_piece"), int)
        return MultiplicationParams(**kw)
    if family == "unit_interval":
        if raw.get("cosine_modes") is not None:
            kw["cosine_modes"] = reader.number(raw["cosine_modes"], p("cosine_modes"), int)
        return UnitIntervalParams(**kw)
    for key, kind in (("cells", int), ("transversal", int), ("dim", int), ("a", float),
                      ("section_mass", float)):
        if key in raw:
            kw[key] = reader.number(raw[key], p(key), kind)
    if "mode" in raw:
        kw["mode"] = reader.string(raw["mode"], p("mode"))
    if "edge_lengths" in raw:
        kw["edge_lengths"] = reader.number_list(raw["edge_lengths"], p("edge_lengths"))
    if "vertex_dims" in raw:
        kw["vertex_dims"] = reader.number_list(raw["vertex_dims"], p("vertex_dims"), int)
    return GraphLikeParams(**kw)


def parse_config(text: str, source: str = "<config>") -> StudyConfig:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ParseError(f"{source}: invalid YAML: {exc.problem}", line=line) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: invalid YAML: {exc}") from None
    reader = _Reader(_line_index(node) if node is not None else {})
    if raw is None:
        raw = {}
    reader.mapping(raw, (), TOP_KEYS)
    for key in ("scenario", "n_range"):
        if key not in raw:
            reader.fail(f"missing required key '{key}'", (key,))
    scenario = _scenario(reader, raw["scenario"])
    n_range = reader.number_list(raw["n_range"], ("n_range",), int, length=2)
    z0 = complex(-1.0)
    if "z0" in raw:
        re_, im_ = reader.number_list(raw["z0"], ("z0",), float, length=2)
        z0 = complex(re_, im_)
    tol = Tolerances()
    if "tolerances" in raw:
        t = reader.mapping(raw["tolerances"], ("tolerances",), TOLERANCE_KEYS)
        tol = Tolerances(**{k: reader.number(v, ("tolerances", k)) for k, v in t.items()})
    outputs = None
    if raw.get("outputs") is not None:
        outputs = reader.string(raw["outputs"], ("outputs",))
    jobs = 1
    if raw.get("jobs") is not None:
        jobs = reader.number(raw["jobs"], ("jobs",), int)
    cfg = StudyConfig(scenario, n_range, z0, tol, outputs, jobs)
    validate(cfg)
    return cfg


def validate(cfg: StudyConfig) -> None:
    lo, hi = cfg.n_range
    if lo < 1:
        raise ValidationError(f"n_range must start at n >= 1, got {lo}", "n_range nonempty, n >= 1")
    if hi < lo:
        raise ValidationError(f"n_range [{lo}, {hi}] is empty", "n_range nonempty")
    for name in TOLERANCE_KEYS:
        if not getattr(cfg.tolerances, name) > 0:
            raise ValidationError(f"tolerance '{name}' must be positive", "tolerances positive")
    if cfg.jobs < 1:
        raise ValidationError("jobs must be a positive integer", "jobs positive")
    sc = cfg.scenario
    if isinstance(sc, MultiplicationParams):
        if sc.example not in EXAMPLES:
            raise ValidationError(f"unknown example '{sc.example}'; expected one of {sorted(EXAMPLES)}",
                                  "multiplication example")
        if sc.points_per_piece < 2:
            raise ValidationError("points_per_piece must be >= 2", "quadrature weights positive")
    elif isinstance(sc, UnitIntervalParams):
        if sc.cosine_modes is not None:
            p = 2 ** (hi + 1)
            if sc.cosine_modes < p or sc.cosine_modes % p:
                raise ValidationError(
                    f"cosine_modes must be a positive multiple of 2^(max n + 1) = {p}",
                    "cosine modes commensurate with the finest mesh")
    else:
        if sc.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}", "graph-like mode")
        try:
            spec = sc.scenario(cfg.z0)
        except ValueError as exc:
            raise ValidationError(str(exc), "graph-like discretization") from None
        if spec.mode == "embedded" and 2 * spec.a / (lo * min(spec.edge_lengths)) >= 1:
            raise ValidationError(
                f"edge of length {min(spec.edge_lengths)} degenerates at n={lo} (2a/(n l) >= 1)",
                "2a/(n l_e) < 1")


def load_config(path: Union[str, Path]) -> StudyConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
