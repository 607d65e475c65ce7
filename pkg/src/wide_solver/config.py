"""Run configuration: JSON loading, schema validation and problem assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .energy import preset
from .errors import ConfigError, WideError
from .functional import ConstraintSet, ProblemSpec, TimeGrid
from .grid import SpatialField, SpatialGrid
from .optimize import MAX_CONDITIONING, SolveOptions, SweepPlan

MIN_HORIZON_RATIO = 5.0
MIN_STEPS_PER_EPS = 10.0


def schema():
    text = resources.files("wide_solver").joinpath("data/config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    base_dir: Path = field(default=Path("."))

    # convenient views ---------------------------------------------------------

    @property
    def preset_name(self):
        return self.raw["preset"]

    @property
    def schedule(self):
        eps = self.raw["eps"]
        return tuple(float(e) for e in (eps if isinstance(eps, list) else [eps]))

    @property
    def seed(self):
        return int(self.raw.get("seed", 0))

    @property
    def window(self):
        return self.raw.get("window")

    @property
    def checks(self):
        c = {"energy_tolerance": 0.05, "monotone_tolerance": 1e-3}
        c.update(self.raw.get("checks", {}))
        return c

    @property
    def oracle(self):
        o = {"kind": "auto", "dt": 1e-3}
        o.update(self.raw.get("oracle", {}))
        return o

    @property
    def warm_start(self):
        return bool(self.raw.get("warm_start", True))

    def solve_options(self):
        return SolveOptions(**self.raw.get("solver", {}))

    def grid(self):
        d = self.raw["domain"]
        return SpatialGrid(d["length"], d["nodes"], d.get("bc", "periodic"))

    def time_grid(self):
        t = self.raw["time"]
        return TimeGrid.from_step(t["horizon"], t["dt"])

    def plan(self):
        return SweepPlan(self.schedule, self.warm_start)

    def with_seed(self, seed):
        raw = dict(self.raw)
        raw["seed"] = int(seed)
        return RunConfig(raw, self.base_dir)

    # assembly -----------------------------------------------------------------

    def problem(self, schedule=None) -> ProblemSpec:
        p = preset(self.preset_name)
        kappa = p.kappa if self.raw.get("kappa") is None else int(self.raw["kappa"])
        if kappa and not p.dissipation:
            raise ConfigError(f"kappa=1 requested but preset {self.preset_name!r} has no dissipation")
        grid = self.grid()
        p.energy.validate(grid)
        rng = np.random.default_rng(self.seed)
        init = self.raw.get("initial", {})
        w0 = profile(grid, init.get("position", {"profile": "zero"}), rng, self.base_dir)
        w1 = profile(grid, init.get("velocity", {"profile": "zero"}), rng, self.base_dir)
        return ProblemSpec(
            p.energy, p.dissipation, kappa, self.time_grid(), ConstraintSet(w0, w1),
            schedule or self.schedule, self.preset_name,
        )


def profile(grid: SpatialGrid, desc: dict, rng, base_dir=Path(".")) -> SpatialField:
    """Named initial profiles evaluated at the grid nodes."""
    kind = desc["profile"]
    L = grid.length
    x = grid.x
    amp = float(desc.get("amplitude", 1.0))
    if kind == "zero":
        return SpatialField(grid, np.zeros(grid.nodes))
    if kind == "single-mode":
        k = int(desc.get("k", 1))
        freq = 2 * np.pi * k / L if grid.periodic else np.pi * k / L
        return SpatialField(grid, amp * np.sin(freq * x))
    if kind == "gaussian":
        center = float(desc.get("center", 0.5 * L))
        width = float(desc.get("width", 0.1 * L))
        d = x - center
        if grid.periodic:
            d = (d + 0.5 * L) % L - 0.5 * L
        return SpatialField(grid, amp * np.exp(-0.5 * (d / width) ** 2))
    if kind == "random-modes":
        modes = int(desc.get("modes", 4))
        k = np.arange(1, modes + 1)
        freq = (2 * np.pi if grid.periodic else np.pi) * k / L
        a = rng.standard_normal(modes) / k**2
        b = rng.standard_normal(modes) / k**2 if grid.periodic else np.zeros(modes)
        v = np.sin(np.outer(x, freq)) @ a + np.cos(np.outer(x, freq)) @ b
        return SpatialField(grid, amp * v)
    if kind == "file":
        path = Path(desc["path"])
        if not path.is_absolute():
            path = base_dir / path
        try:
            vals = np.loadtxt(path, dtype=float, ndmin=1)
        except OSError as exc:
            raise ConfigError(f"cannot read initial data file {path}: {exc}") from exc
        if vals.shape != (grid.nodes,):
            raise ConfigError(f"{path} holds {vals.size} values, the grid has {grid.nodes} nodes")
        return SpatialField(grid, vals)
    raise ConfigError(f"unknown profile {kind!r}")


def validate(raw: dict):
    """Schema validation followed by the semantic guards; raises :class:`ConfigError`."""
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    eps = raw["eps"] if isinstance(raw["eps"], list) else [raw["eps"]]
    T, dt = raw["time"]["horizon"], raw["time"]["dt"]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("guard eps-schedule: values must be strictly decreasing")
    if T / max(eps) < MIN_HORIZON_RATIO:
        raise ConfigError(f"guard T/max(eps) >= {MIN_HORIZON_RATIO:g} violated: T/max(eps) = {T / max(eps):.4g}")
    if T / min(eps) > MAX_CONDITIONING:
        raise ConfigError(f"guard T/min(eps) <= {MAX_CONDITIONING:g} violated: T/min(eps) = {T / min(eps):.4g}")
    if dt > min(eps) / MIN_STEPS_PER_EPS * (1 + 1e-12):
        raise ConfigError(f"guard dt <= min(eps)/10 violated: dt = {dt:g}, min(eps)/10 = {min(eps) / 10:g}")
    steps = round(T / dt)
    if abs(steps * dt - T) > 1e-9 * T:
        raise ConfigError(f"guard horizon/dt integer violated: T = {T:g} is not a multiple of dt = {dt:g}")
    window = raw.get("window")
    if window is not None and window > T:
        raise ConfigError(f"guard window <= T violated: window = {window:g}, T = {T:g}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return from_dict(raw, path.parent)


def from_dict(raw: dict, base_dir=Path(".")) -> RunConfig:
    validate(raw)
    cfg = RunConfig(raw, Path(base_dir))
    try:
        cfg.problem()
        cfg.solve_options()
    except ConfigError:
        raise
    except (WideError, ValueError, KeyError) as exc:
        raise ConfigError(f"config rejected: {exc}") from None
    return cfg
