"""Experiment configuration: YAML in, validated dataclasses out.

Every default is materialised on parse so that the serialised config records
exactly what ran.  Errors carry the offending field path and, when it comes
from a file, its line number.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

__all__ = [
    "ConfigError",
    "WaveConfig",
    "ContrastConfig",
    "GridConfig",
    "NormConfig",
    "TruncationConfig",
    "GeometryConfig",
    "BieConfig",
    "ValidationConfig",
    "OutputConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "parse_complex",
    "TASKS",
]

TASKS = ("solve", "sweep", "rates", "farfield", "bie-validate")


class ConfigError(ValueError):
    """Invalid configuration, with field path and optional source line."""

    def __init__(self, path, message, line=None):
        self.path = path
        self.line = line
        where = f"{path}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {message}")


def parse_complex(value, path="value"):
    """Accept a number, ``[re, im]`` or a Python complex literal such as ``"1-0.5j"``."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(path, f"cannot read {value!r} as a complex number")


def _complex_out(z):
    return [z.real, z.imag]


@dataclass
class WaveConfig:
    k: float = 1.0
    dimension: int = 3
    rho: float = 1.0
    kappa: float = 1.0


@dataclass
class ContrastConfig:
    delta: float = 1.0
    tau: complex = 1.0 + 0j


@dataclass
class GridConfig:
    start: float = None
    stop: float = None
    points_per_decade: int = 4
    trim_low: float = 0.0
    trim_high: float = 0.0
    tau: complex = None


@dataclass
class NormConfig:
    outer_radius: float = 2.0
    quadrature_order: int = 32
    norm_kind: str = "FarField_L2"


@dataclass
class TruncationConfig:
    tol: float = 1e-15
    max_order: int = 200


@dataclass
class GeometryConfig:
    kind: str = "circle"
    n_nodes: int = 256
    x_cos: list = field(default_factory=list)
    x_sin: list = field(default_factory=list)
    y_cos: list = field(default_factory=list)
    y_sin: list = field(default_factory=list)


@dataclass
class BieConfig:
    zeta: float = None
    eta: float = 1.0
    iota: float = None
    tau: complex = 1 - 0.5j
    incident_angle: float = 0.0
    n_angles: int = 64
    convergence_nodes: list = field(default_factory=lambda: [16, 32, 64, 128])
    tolerance: float = 1e-8


@dataclass
class ValidationConfig:
    slope: float = None
    slope_tol: float = 0.05


@dataclass
class OutputConfig:
    csv: str = None
    json: str = "record.json"


@dataclass
class ExperimentConfig:
    task: str
    wave: WaveConfig = field(default_factory=WaveConfig)
    model: str = None
    contrast: ContrastConfig = field(default_factory=ContrastConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    norm: NormConfig = field(default_factory=NormConfig)
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    incident: list = None
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    bie: BieConfig = field(default_factory=BieConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        def conv(v):
            if isinstance(v, complex):
                return _complex_out(v)
            if dataclasses.is_dataclass(v):
                return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
            if isinstance(v, list):
                return [conv(x) for x in v]
            return v

        return conv(self)

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_COMPLEX_FIELDS = {("contrast", "tau"), ("grid", "tau"), ("bie", "tau")}
_SECTIONS = {
    "wave": WaveConfig,
    "contrast": ContrastConfig,
    "grid": GridConfig,
    "norm": NormConfig,
    "truncation": TruncationConfig,
    "geometry": GeometryConfig,
    "bie": BieConfig,
    "validation": ValidationConfig,
    "output": OutputConfig,
}


def _line_index(text):
    """Map field paths to 1-based source lines using the YAML node tree."""
    lines = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, val in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(val, path)

    if root is not None:
        walk(root, "")
    return lines


def _coerce(value, current, path, line):
    if current is None or isinstance(current, (list, str)):
        return value
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true/false", line)
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(path, f"expected an integer, got {value!r}", line)
        return value
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            try:
                return float(value)
            except (TypeError, ValueError):
                raise ConfigError(path, f"expected a number, got {value!r}", line) from None
        return float(value)
    return value


def _build_section(cls, raw, name, lines):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a mapping", lines.get(name))
    obj = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    for key, value in raw.items():
        path = f"{name}.{key}"
        line = lines.get(path)
        if key not in known:
            raise ConfigError(path, f"unknown field (expected one of {sorted(known)})", line)
        if (name, key) in _COMPLEX_FIELDS:
            value = None if value is None else parse_complex(value, path)
        else:
            value = _coerce(value, getattr(obj, key), path, line)
        setattr(obj, key, value)
    return obj


def parse_config(data, text=None):
    """Validate a mapping (optionally with its YAML source for line numbers)."""
    lines = _line_index(text) if text else {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping at top level")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, f"unknown field (expected one of {sorted(known)})", lines.get(key))
    if "task" not in data:
        raise ConfigError("task", f"required; one of {list(TASKS)}")
    task = data["task"]
    if task not in TASKS:
        raise ConfigError("task", f"must be one of {list(TASKS)}, got {task!r}", lines.get("task"))
    given = {k for k in data}
    given |= {f"{k}.{f}" for k, v in data.items() if isinstance(v, dict) for f in v}
    cfg = ExperimentConfig(task=task)
    for name, cls in _SECTIONS.items():
        if name in data:
            setattr(cfg, name, _build_section(cls, data[name], name, lines))
    if "model" in data:
        cfg.model = str(data["model"])
    if "incident" in data:
        cfg.incident = data["incident"]
    _finalise(cfg, lines, given)
    return cfg


def _finalise(cfg, lines, given):
    """Fill task-dependent defaults and check ranges."""
    w = cfg.wave
    if cfg.task == "bie-validate" and "wave.dimension" not in given:
        w.dimension = 2
    if w.dimension not in (2, 3):
        raise ConfigError("wave.dimension", "must be 2 or 3", lines.get("wave.dimension"))
    for name in ("k", "rho", "kappa"):
        if not getattr(w, name) > 0:
            raise ConfigError(f"wave.{name}", "must be positive", lines.get(f"wave.{name}"))
    models = {"solve": ("Transmission", "U", "V", "W", "T"), "farfield": ("Transmission", "U", "V", "W", "T"),
              "rates": ("U", "V", "W", "T"), "sweep": ("Transmission",), "bie-validate": ("U", "V", "W", "T", "all")}
    if cfg.model is None:
        cfg.model = {"solve": "Transmission", "farfield": "Transmission", "rates": "U", "sweep": "Transmission",
                     "bie-validate": "all"}[cfg.task]
    if cfg.model not in models[cfg.task]:
        raise ConfigError("model", f"task {cfg.task} accepts {list(models[cfg.task])}", lines.get("model"))
    if cfg.contrast.tau.imag > 0:
        raise ConfigError("contrast.tau", "Im tau must be <= 0", lines.get("contrast.tau"))
    if not cfg.contrast.delta > 0:
        raise ConfigError("contrast.delta", "must be positive", lines.get("contrast.delta"))
    g = cfg.grid
    if cfg.task in ("rates", "sweep"):
        if g.start is None or g.stop is None:
            up = cfg.task == "rates" and cfg.model == "U"
            g.start = 2.0 if up else -8.0
            g.stop = 8.0 if up else -2.0
        if abs(g.stop - g.start) < 3 - 1e-12:
            raise ConfigError("grid", "grid must span at least three decades", lines.get("grid"))
        if g.points_per_decade < 1:
            raise ConfigError("grid.points_per_decade", "must be positive", lines.get("grid.points_per_decade"))
        if g.tau is None:
            g.tau = 1.0 + 0j if (cfg.task == "rates" and cfg.model == "U") else 1 - 0.5j
    if cfg.task == "rates" and cfg.validation.slope is None:
        cfg.validation.slope = -0.5 if cfg.model == "U" else 0.5
    if cfg.norm.norm_kind not in ("H1_annulus", "FarField_L2", "Boundary_trace"):
        raise ConfigError("norm.norm_kind", "must be H1_annulus, FarField_L2 or Boundary_trace", lines.get("norm.norm_kind"))
    if not cfg.norm.outer_radius > 1:
        raise ConfigError("norm.outer_radius", "must exceed 1", lines.get("norm.outer_radius"))
    if cfg.norm.quadrature_order < 16:
        raise ConfigError("norm.quadrature_order", "must be at least 16", lines.get("norm.quadrature_order"))
    if not cfg.truncation.tol > 0:
        raise ConfigError("truncation.tol", "must be positive", lines.get("truncation.tol"))
    if cfg.incident is None:
        cfg.incident = [0.0, 0.0, 1.0] if w.dimension == 3 else [0.0]
    inc = cfg.incident
    if w.dimension == 3:
        if not (isinstance(inc, list) and len(inc) == 3):
            raise ConfigError("incident", "3D incident direction must be a list of three numbers", lines.get("incident"))
        nrm = math.sqrt(sum(float(v) ** 2 for v in inc))
        if abs(nrm - 1) > 1e-12:
            raise ConfigError("incident", "direction must have unit length", lines.get("incident"))
        cfg.incident = [float(v) for v in inc]
    else:
        if isinstance(inc, (int, float)):
            inc = [inc]
        if not (isinstance(inc, list) and len(inc) == 1):
            raise ConfigError("incident", "2D incident is a one-element list [angle]", lines.get("incident"))
        cfg.incident = [float(inc[0])]
    geo = cfg.geometry
    if geo.kind not in ("circle", "kite", "trig"):
        raise ConfigError("geometry.kind", "must be circle, kite or trig", lines.get("geometry.kind"))
    if geo.n_nodes < 4 or geo.n_nodes % 2:
        raise ConfigError("geometry.n_nodes", "must be even and at least 4", lines.get("geometry.n_nodes"))
    if cfg.task == "bie-validate" and w.dimension != 2:
        raise ConfigError("wave.dimension", "bie-validate runs in two dimensions", lines.get("wave.dimension"))
    if cfg.bie.tau.imag >= 0:
        raise ConfigError("bie.tau", "model V needs Im tau < 0", lines.get("bie.tau"))
    if cfg.output.csv is None:
        cfg.output.csv = {"solve": "solve.csv", "sweep": "interior.csv", "rates": "rates.csv",
                          "farfield": "farfield.csv", "bie-validate": "bie.csv"}[cfg.task]
    for name in ("csv", "json"):
        p = Path(getattr(cfg.output, name))
        if p.is_absolute() or ".." in p.parts:
            raise ConfigError(f"output.{name}", "must be a plain relative file name inside --out", lines.get(f"output.{name}"))


def load_config(path):
    """Read and validate a YAML configuration file."""
    path = Path(path).resolve()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<yaml>", str(exc).splitlines()[0], mark.line + 1 if mark else None) from exc
    return parse_config(data, text=text)
