"""Experiment configuration: JSON document <-> validated dataclasses.

Defaults are the reference qubit parameters
(delta = 0.6, beta = 0.1, m = 0.1, lambda = L = hbar = 1, dx = 1, x0 = -10).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError
from .collision_map import ParticleDensity, QuadratureSpec, wigner_valid
from .scattering import BACKENDS, ScatteringModel, qubit_model

SWEEP_AXES = ("gamma", "delta", "dx")


@dataclass(frozen=True)
class ModelConfig:
    delta: float = 0.6
    lam: float = 1.0
    barrier_length: float = 1.0
    mass: float = 0.1
    hbar: float = 1.0
    dimension: int = 2
    # optional custom system: ascending energies and coupling as {"re": [[..]], "im": [[..]]}
    energies: list | None = None
    coupling: dict | None = None


@dataclass(frozen=True)
class ParticleConfig:
    beta: float = 0.1
    dx: float = 1.0
    x0: float = -10.0


@dataclass(frozen=True)
class MapConfig:
    backend: str = "approx"
    nodes: int = 400
    p_cut_tolerance: float = 1e-14


@dataclass(frozen=True)
class RunConfig:
    gamma: float = 1.0
    gamma_grid: list | None = None
    t_max: float = 25.0
    sample_dt: float = 0.1
    seed: int = 0
    trajectories: int = 1
    renormalize: bool = False
    dephase: bool = False
    ensemble: bool = False
    s_const: float = 0.01
    compare: bool = False
    threads: int = 1
    tol: float = 1e-10


@dataclass(frozen=True)
class SweepAxis:
    min: float
    max: float
    count: int
    scale: str = "linear"

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    particle: ParticleConfig = field(default_factory=ParticleConfig)
    map: MapConfig = field(default_factory=MapConfig)
    run: RunConfig = field(default_factory=RunConfig)
    sweep: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        out["model"]["lambda"] = out["model"].pop("lam")
        return out

    def scattering_model(self, delta=None):
        mc = self.model
        if mc.energies is None:
            return qubit_model(mc.delta if delta is None else delta, mc.lam, mc.barrier_length, mc.mass, mc.hbar)
        if delta is not None:
            raise ConfigError("sweep.delta", "cannot sweep delta with custom energies")
        coupling = np.asarray(mc.coupling["re"], dtype=float) + 1j * np.asarray(mc.coupling.get("im", 0.0))
        return ScatteringModel(np.asarray(mc.energies, dtype=float), coupling, mc.barrier_length, mc.mass, mc.hbar)

    def particle_density(self, dx=None):
        p = self.particle
        return ParticleDensity(p.beta, self.model.mass, p.dx if dx is None else dx, p.x0, self.model.hbar)

    def quadrature(self):
        return QuadratureSpec(self.map.nodes, self.map.p_cut_tolerance)

    def gamma_values(self):
        if "gamma" in self.sweep:
            return self.sweep["gamma"].values()
        if self.run.gamma_grid is not None:
            return np.asarray(self.run.gamma_grid, dtype=float)
        return np.array([self.run.gamma])

    def axis(self, name):
        if name in self.sweep:
            return self.sweep[name].values()
        if name == "gamma":
            return self.gamma_values()
        base = self.model.delta if name == "delta" else self.particle.dx
        return np.array([base])


def _section(cls, raw, prefix, renames=None):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(prefix, "must be an object")
    raw = dict(raw)
    for src, dst in (renames or {}).items():
        if src in raw:
            raw[dst] = raw.pop(src)
    known = {f.name for f in fields(cls)}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigError(f"{prefix}.{extra[0]}", "unknown field")
    return cls(**raw)


def _positive(value, name, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(name, f"must be a finite number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigError(name, f"must be {'>= 0' if allow_zero else '> 0'}, got {value!r}")


def _integer(value, name, lo):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(name, f"must be an integer >= {lo}, got {value!r}")


def validate(cfg):
    m, p, mp, r = cfg.model, cfg.particle, cfg.map, cfg.run
    for name in ("delta", "barrier_length", "mass", "hbar"):
        _positive(getattr(m, name), f"model.{name}")
    _positive(m.lam, "model.lambda", allow_zero=True)
    _integer(m.dimension, "model.dimension", 1)
    if m.energies is not None:
        if m.coupling is None or "re" not in m.coupling:
            raise ConfigError("model.coupling", "custom energies need a coupling {'re': ..., 'im': ...}")
        if len(m.energies) != m.dimension:
            raise ConfigError("model.energies", f"expected {m.dimension} values")
    elif m.dimension != 2:
        raise ConfigError("model.dimension", "only the qubit model is built in; give custom energies for d != 2")
    _positive(p.beta, "particle.beta")
    _positive(p.dx, "particle.dx")
    if not isinstance(p.x0, (int, float)) or not math.isfinite(p.x0):
        raise ConfigError("particle.x0", "must be a finite number")
    if mp.backend not in BACKENDS:
        raise ConfigError("map.backend", f"must be one of {sorted(BACKENDS)}, got {mp.backend!r}")
    _integer(mp.nodes, "map.nodes", 16)
    if not 0 < mp.p_cut_tolerance < 1:
        raise ConfigError("map.p_cut_tolerance", "must lie in (0, 1)")
    _positive(r.gamma, "run.gamma", allow_zero=True)
    if r.gamma_grid is not None:
        if not r.gamma_grid:
            raise ConfigError("run.gamma_grid", "must be non-empty")
        for i, g in enumerate(r.gamma_grid):
            _positive(g, f"run.gamma_grid[{i}]", allow_zero=True)
    _positive(r.t_max, "run.t_max")
    _positive(r.sample_dt, "run.sample_dt")
    _integer(r.seed, "run.seed", 0)
    _integer(r.trajectories, "run.trajectories", 1)
    _integer(r.threads, "run.threads", 1)
    _positive(r.s_const, "run.s_const")
    _positive(r.tol, "run.tol")
    for name, ax in cfg.sweep.items():
        _positive(ax.min, f"sweep.{name}.min", allow_zero=name == "gamma")
        _positive(ax.max, f"sweep.{name}.max")
        _integer(ax.count, f"sweep.{name}.count", 1)
        if ax.max < ax.min:
            raise ConfigError(f"sweep.{name}.max", "must be >= min")
        if ax.scale not in ("linear", "log"):
            raise ConfigError(f"sweep.{name}.scale", "must be 'linear' or 'log'")
        if ax.scale == "log" and ax.min <= 0:
            raise ConfigError(f"sweep.{name}.min", "log scale needs min > 0")
    for dx in cfg.axis("dx"):
        if not wigner_valid(p.beta, m.mass, dx, m.hbar):
            raise ConfigError(
                "particle.dx",
                f"Wigner function invalid for dx = {dx:g}: need 4*pi*dx*sqrt(m/beta) >= hbar",
            )
    return cfg


def from_dict(doc):
    """Build a validated config from a JSON document.

    Accepts a bare config, a ResultTable metadata block (``{"config": ...}``)
    or a whole JSON result (``{"metadata": {"config": ...}}``).
    """
    if not isinstance(doc, dict):
        raise ConfigError("config", "must be a JSON object")
    if "metadata" in doc:
        doc = doc["metadata"]
    if "config" in doc:
        doc = doc["config"]
    known = {"model", "particle", "map", "run", "sweep"}
    extra = sorted(set(doc) - known)
    if extra:
        raise ConfigError(extra[0], "unknown section")
    sweep_raw = doc.get("sweep") or {}
    if not isinstance(sweep_raw, dict):
        raise ConfigError("sweep", "must be an object")
    sweep = {}
    for name, ax in sweep_raw.items():
        if name not in SWEEP_AXES:
            raise ConfigError(f"sweep.{name}", f"axis must be one of {SWEEP_AXES}")
        sweep[name] = _section(SweepAxis, ax, f"sweep.{name}")
    try:
        cfg = ExperimentConfig(
            model=_section(ModelConfig, doc.get("model"), "model", {"lambda": "lam"}),
            particle=_section(ParticleConfig, doc.get("particle"), "particle"),
            map=_section(MapConfig, doc.get("map"), "map"),
            run=_section(RunConfig, doc.get("run"), "run"),
            sweep=sweep,
        )
    except TypeError as exc:  # missing required sweep fields
        raise ConfigError("sweep", str(exc)) from None
    return validate(cfg)


def load(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
    return from_dict(doc)


def override(cfg, *, seed=None, threads=None, backend=None):
    run, mp = cfg.run, cfg.map
    if seed is not None:
        run = replace(run, seed=seed)
    if threads is not None:
        run = replace(run, threads=threads)
    if backend is not None:
        mp = replace(mp, backend=backend)
    return validate(replace(cfg, run=run, map=mp))
