"""Experiment configuration: flat INI sections of ``key = value`` pairs.

Example::

    [model]
    name = integrable
    omega = golden

    [grid]
    dim = 2
    resolution = 32
    sample_resolution = 64

    [operator]
    dt = 0.05
    v_max = 4
    window_n = 64

    [experiment]
    times = 1, 2, 4, 8, 16, 32, 64, 128, 256, 512

Every key has a default; unknown sections or keys are rejected so typos
surface as configuration errors (exit code 2 from the CLI).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..grid import ConfigurationError, PeriodicGrid
from ..models import CATALOG, GOLDEN, build_model, golden_direction


@dataclass(frozen=True)
class ModelBlock:
    name: str = "integrable"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GridBlock:
    dim: int = 1
    resolution: int = 128
    # source grid of the closed-form path (per axis)
    sample_resolution: int = 512


@dataclass(frozen=True)
class OperatorBlock:
    dt: float = 0.05
    v_max: float = 4.0
    window_n: int = 64
    critical: str = "auto"
    path: str = "auto"


@dataclass(frozen=True)
class ExperimentBlock:
    times: tuple = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512)
    fit_lo: float = 0.0
    fit_hi: float = float("inf")
    seed: int = 0
    tol: float = 2e-2
    defect_tol: float = 1e-2
    sample_pairs: int = 500
    span: int = 10
    tau: float = 0.0
    delta: float = 0.3
    m_count: int = 6
    x0: tuple = (0.5,)
    radii: tuple = (0.2, 0.1, 0.05, 0.025, 0.0125)
    horizon: float = 5000.0
    probe_resolution: int = 256


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    operator: OperatorBlock = field(default_factory=OperatorBlock)
    experiment: ExperimentBlock = field(default_factory=ExperimentBlock)
    source: str = ""

    def build_model(self):
        return build_model(self.model.name, **_model_kwargs(self))

    def make_grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.grid.dim, self.grid.resolution)

    def omega(self) -> np.ndarray:
        """Drift frequency of the configured model (Integrable-type models)."""
        kw = _model_kwargs(self)
        w = kw.get("omega", kw.get("omega0"))
        if w is None:
            w = golden_direction() if self.grid.dim == 2 else np.array([GOLDEN])
        return np.atleast_1d(np.asarray(w, dtype=float))


def _model_kwargs(cfg: ExperimentConfig) -> dict:
    kw = {}
    for key, raw in cfg.model.params.items():
        kw[key] = _model_value(raw, cfg.grid.dim)
    if cfg.model.name == "mechanical":
        kw.setdefault("n", cfg.grid.dim)
    return kw


def _model_value(raw: str, dim: int):
    s = raw.strip()
    if s.lower() == "golden":
        return tuple(golden_direction()) if dim == 2 else (GOLDEN,)
    parts = [p.strip() for p in s.split(",") if p.strip()]
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigurationError(f"model parameter {raw!r} is not numeric") from exc
    if len(nums) == 1 and "," not in s:
        v = nums[0]
        return int(v) if parts[0].lstrip("+-").isdigit() else v
    return tuple(nums)


def _cast(block_cls, key: str, raw: str):
    ftype = {f.name: f for f in fields(block_cls)}[key]
    default = ftype.default
    try:
        if isinstance(default, tuple):
            vals = [float(p) for p in raw.split(",") if p.strip()]
            if not vals:
                raise ValueError("empty list")
            return tuple(int(v) if v.is_integer() and isinstance(default[0], int) else v for v in vals)
        if isinstance(default, int):
            v = float(raw)
            if not v.is_integer():
                raise ValueError(f"{raw!r} is not an integer")
            return int(v)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigurationError(f"[{block_cls.__name__}] {key} = {raw!r}: {exc}") from exc


_SECTIONS = {"grid": GridBlock, "operator": OperatorBlock, "experiment": ExperimentBlock}


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    unknown = set(cp.sections()) - set(_SECTIONS) - {"model"}
    if unknown:
        raise ConfigurationError(f"unknown section(s): {sorted(unknown)}")
    blocks = {}
    for name, cls in _SECTIONS.items():
        kw = {}
        if cp.has_section(name):
            allowed = {f.name for f in fields(cls)}
            for key, raw in cp.items(name):
                if key not in allowed:
                    raise ConfigurationError(f"unknown key [{name}] {key}")
                kw[key] = _cast(cls, key, raw)
        blocks[name] = cls(**kw)
    if cp.has_section("model"):
        params = dict(cp.items("model"))
        name = params.pop("name", "integrable").strip()
        model = ModelBlock(name, params)
    else:
        model = ModelBlock()
    cfg = ExperimentConfig(model, blocks["grid"], blocks["operator"], blocks["experiment"], source)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(p))


def validate(cfg: ExperimentConfig) -> None:
    if cfg.model.name not in CATALOG:
        raise ConfigurationError(f"unknown model {cfg.model.name!r}; choose from {sorted(CATALOG)}")
    g, op, ex = cfg.grid, cfg.operator, cfg.experiment
    if g.dim not in (1, 2):
        raise ConfigurationError("grid dim must be 1 or 2")
    if g.resolution < 8 or g.sample_resolution < 8:
        raise ConfigurationError("grid resolutions must be >= 8")
    if not 0 < op.dt <= 0.5 or abs(round(1 / op.dt) * op.dt - 1) > 1e-9:
        raise ConfigurationError("dt must be 1/m for an integer m >= 2")
    if op.v_max <= 0:
        raise ConfigurationError("v_max must be positive")
    if op.window_n < 1:
        raise ConfigurationError("window_n must be >= 1")
    if op.critical not in ("auto", "exact", "probe", "zero"):
        raise ConfigurationError("critical must be auto, exact, probe or zero")
    if op.path not in ("auto", "analytic", "dp"):
        raise ConfigurationError("path must be auto, analytic or dp")
    t = np.asarray(ex.times, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ConfigurationError("times must be positive and strictly increasing")
    if ex.tol <= 0 or ex.defect_tol <= 0:
        raise ConfigurationError("tolerances must be positive")
    if ex.sample_pairs < 1 or ex.span < 1 or ex.m_count < 1:
        raise ConfigurationError("sample_pairs, span and m_count must be >= 1")
    if not 0 < ex.delta < 0.5:
        raise ConfigurationError("delta must lie in (0, 1/2)")
    r = np.asarray(ex.radii, dtype=float)
    if np.any(r <= 0) or np.any(r > 1) or np.any(np.diff(r) >= 0):
        raise ConfigurationError("radii must be strictly descending values in (0, 1]")
    if ex.horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    try:
        model = cfg.build_model()
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"model {cfg.model.name!r}: {exc}") from exc
    if model.dim != g.dim:
        raise ConfigurationError(f"model dimension {model.dim} differs from grid dim {g.dim}")
