"""Line-oriented run configuration: ``section.key = value`` with '#' comments.

The format is deliberately dependency-free and diff-friendly.  Parsing is
lossless: unknown or duplicate keys are rejected with the offending line
number, and ``effective_config`` re-serializes a prepared run (with every
derived value resolved, e.g. an auto step size) such that re-running it
reproduces the original diagnostics bitwise for equal seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumState, build_equilibrium
from .grid import Field, Grid, State, read_field
from .model import ModelParams, SourceSpec
from .solver import StepControls, cfl_limits

__all__ = ["ConfigError", "PreparedRun", "load_run", "effective_config"]

_MODEL_FIELDS = (
    "rho", "c_p", "d_c", "tau_phi", "eps_interface", "lambda_cpl",
    "beta", "gamma", "alpha", "L_c", "L_phi",
    "A_d", "A_r", "E_d", "E_r", "R_gas", "k_lo", "k_hi",
)

_KNOWN_KEYS = (
    {f"model.{f}" for f in _MODEL_FIELDS}
    | {"model.k_law"}
    | {"source.preset", "source.value", "source.amp", "source.t0", "source.sigma",
       "source.C0", "source.s_sup"}
    | {"grid.dim", "grid.n", "grid.length"}
    | {"controls.dt", "controls.scheme", "controls.t_end", "controls.snapshot_every"}
    | {"initial.preset", "initial.amplitude", "initial.mode", "initial.jitter",
       "initial.theta_bar", "initial.theta0", "initial.c0", "initial.phi0",
       "initial.theta_star", "initial.theta_file", "initial.c_file", "initial.phi_file"}
    | {"equilibrium.curvature_min"}
    | {"sweep.alphas"}
    | {"conv.grids", "conv.steps", "conv.t_end", "conv.ref_factor", "conv.n_temporal"}
    | {"seed", "outputs.dir"}
)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path or "config"
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass
class PreparedRun:
    """A parsed configuration with every object built and derived value resolved."""

    params: ModelParams
    source: SourceSpec
    grid: Grid
    controls: StepControls
    initial: State
    theta_min0: float
    equilibrium: EquilibriumState | None
    curvature_min: float | None
    seed: int
    out_dir: str
    sweep_alphas: tuple[float, ...] | None
    conv: dict | None
    path: str
    _raw_items: "_Items | None" = None


class _Items:
    def __init__(self, mapping: dict[str, tuple[str, int]], path: str):
        self.mapping = mapping
        self.path = path
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.mapping

    def raw(self, key: str) -> str:
        self.used.add(key)
        try:
            return self.mapping[key][0]
        except KeyError:
            raise ConfigError(f"missing required key {key!r}", path=self.path) from None

    def line(self, key: str) -> int | None:
        entry = self.mapping.get(key)
        return entry[1] if entry else None

    def get_float(self, key: str, default: float | None = None) -> float:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required key {key!r}", path=self.path)
            return default
        text = self.raw(key)
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {text!r}",
                              line=self.line(key), path=self.path) from None

    def get_int(self, key: str, default: int | None = None) -> int:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required key {key!r}", path=self.path)
            return default
        text = self.raw(key)
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {text!r}",
                              line=self.line(key), path=self.path) from None

    def get_str(self, key: str, default: str | None = None) -> str:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required key {key!r}", path=self.path)
            return default
        return self.raw(key)

    def get_floats(self, key: str, default: tuple[float, ...] | None = None) -> tuple[float, ...]:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required key {key!r}", path=self.path)
            return default
        text = self.raw(key)
        try:
            return tuple(float(x) for x in text.split(","))
        except ValueError:
            raise ConfigError(f"{key} expects comma-separated numbers, got {text!r}",
                              line=self.line(key), path=self.path) from None

    def get_ints(self, key: str, default: tuple[int, ...] | None = None) -> tuple[int, ...]:
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required key {key!r}", path=self.path)
            return default
        text = self.raw(key)
        try:
            return tuple(int(x) for x in text.split(","))
        except ValueError:
            raise ConfigError(f"{key} expects comma-separated integers, got {text!r}",
                              line=self.line(key), path=self.path) from None


def _parse_text(text: str, path: str) -> _Items:
    mapping: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", line=lineno, path=path)
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"empty key or value in {stripped!r}", line=lineno, path=path)
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, path=path)
        if key in mapping:
            raise ConfigError(f"duplicate key {key!r} (first set on line {mapping[key][1]})",
                              line=lineno, path=path)
        mapping[key] = (value, lineno)
    return _Items(mapping, path)


def _build_params(items: _Items) -> ModelParams:
    kwargs = {name: items.get_float(f"model.{name}") for name in _MODEL_FIELDS}
    kwargs["k_law"] = items.get_str("model.k_law", "smoothstep")
    try:
        return ModelParams(**kwargs)
    except ValueError as exc:
        name = str(exc).split()[0]
        raise ConfigError(str(exc), line=items.line(f"model.{name}"), path=items.path) from exc


def _build_source(items: _Items) -> SourceSpec:
    preset = items.get_str("source.preset", "zero")
    c0 = items.get_float("source.C0", math.nan)
    s_sup = items.get_float("source.s_sup", math.nan)
    c0_opt = None if math.isnan(c0) else c0
    s_sup_opt = None if math.isnan(s_sup) else s_sup
    try:
        if preset == "zero":
            src = SourceSpec.zero()
            if c0_opt is not None or s_sup_opt is not None:
                src = SourceSpec(h_ext=src.h_ext, C0=c0_opt or 0.0, s_sup=s_sup_opt or 0.0,
                                 preset="zero", time_profile=src.time_profile)
            return src
        if preset == "constant":
            return SourceSpec.constant(items.get_float("source.value"),
                                       C0=c0_opt, s_sup=s_sup_opt)
        if preset == "gaussian-pulse":
            return SourceSpec.gaussian_pulse(
                items.get_float("source.amp"),
                items.get_float("source.t0"),
                items.get_float("source.sigma"),
                C0=c0_opt, s_sup=s_sup_opt,
            )
    except ValueError as exc:
        raise ConfigError(str(exc), line=items.line("source.preset"), path=items.path) from exc
    raise ConfigError(
        f"unknown source preset {preset!r}; choose zero, constant or gaussian-pulse",
        line=items.line("source.preset"), path=items.path,
    )


def _build_grid(items: _Items) -> Grid:
    n = items.get_ints("grid.n")
    lengths = items.get_floats("grid.length")
    if len(lengths) == 1 and len(n) == 2:
        lengths = (lengths[0], lengths[0])
    if len(lengths) != len(n):
        raise ConfigError("grid.n and grid.length must have matching lengths",
                          line=items.line("grid.length"), path=items.path)
    if items.has("grid.dim") and items.get_int("grid.dim") != len(n):
        raise ConfigError(f"grid.dim contradicts grid.n {n}",
                          line=items.line("grid.dim"), path=items.path)
    try:
        if len(n) == 1:
            return Grid.line(n[0], lengths[0])
        return Grid.box((n[0], n[1]), (lengths[0], lengths[1]))
    except ValueError as exc:
        raise ConfigError(str(exc), line=items.line("grid.n"), path=items.path) from exc


def _cosine_mode(grid: Grid, mode: int) -> np.ndarray:
    """Zero-flux-compatible cosine mode with exactly zero discrete mean for mode >= 1."""
    coords = grid.centers()
    lengths = grid.lengths
    out = np.ones(grid.shape)
    for axis in range(grid.dim):
        out = out * np.cos(mode * math.pi * coords[axis] / lengths[axis])
    return out


def _build_initial(items: _Items, grid: Grid, params: ModelParams, seed: int):
    preset = items.get_str("initial.preset")
    rng = np.random.default_rng(seed)
    equilibrium = None
    if preset == "homogeneous":
        theta0 = items.get_float("initial.theta0")
        c0 = items.get_float("initial.c0")
        phi0 = items.get_float("initial.phi0")
        theta = np.full(grid.shape, theta0)
        c = np.full(grid.shape, c0)
        phi = np.full(grid.shape, phi0)
        theta_star_default = theta0
    elif preset == "equilibrium-perturbed":
        theta_bar = items.get_float("initial.theta_bar")
        amplitude = items.get_float("initial.amplitude", 0.0)
        mode = items.get_int("initial.mode", 1)
        if mode < 1:
            raise ConfigError("initial.mode must be >= 1 (zero discrete mean)",
                              line=items.line("initial.mode"), path=items.path)
        jitter = items.get_float("initial.jitter", 0.0)
        equilibrium = build_equilibrium(theta_bar, params)
        bump = amplitude * _cosine_mode(grid, mode)
        theta = equilibrium.theta_bar + bump
        c = equilibrium.c_bar + bump
        phi = equilibrium.phi_bar + bump
        if jitter > 0.0:
            noise_t = rng.uniform(-jitter, jitter, size=grid.shape)
            theta = theta + (noise_t - noise_t.mean())
            c = c + rng.uniform(-jitter, jitter, size=grid.shape)
            phi = phi + rng.uniform(-jitter, jitter, size=grid.shape)
        theta_star_default = float(np.min(theta))
    elif preset == "file":
        fields = {}
        for name in ("theta", "c", "phi"):
            key = f"initial.{name}_file"
            path = Path(items.get_str(key))
            if not path.exists():
                raise ConfigError(f"referenced file {path} does not exist",
                                  line=items.line(key), path=items.path)
            fields[name] = read_field(path)
        if any(f.grid != grid for f in fields.values()):
            raise ConfigError("field files do not match the configured grid",
                              line=items.line("grid.n"), path=items.path)
        theta, c, phi = (fields[k].values for k in ("theta", "c", "phi"))
        theta_star_default = float(np.min(theta))
    else:
        raise ConfigError(
            f"unknown initial preset {preset!r}; choose homogeneous, "
            "equilibrium-perturbed or file",
            line=items.line("initial.preset"), path=items.path,
        )
    theta_min0 = items.get_float("initial.theta_star", theta_star_default)
    state = State(0.0, Field(grid, theta), Field(grid, c), Field(grid, phi))
    return state, theta_min0, equilibrium


def load_run(path, *, seed: int | None = None, out_dir: str | None = None) -> PreparedRun:
    """Parse a configuration file into fully built objects.

    ``seed`` and ``out_dir`` override the corresponding config entries (the
    CLI flags map here).  An ``auto`` step size resolves to the explicit
    monotonicity bound computed for the configured run.
    """
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise ConfigError(f"configuration file {cfg_path} does not exist")
    items = _parse_text(cfg_path.read_text(), str(cfg_path))

    params = _build_params(items)
    source = _build_source(items)
    grid = _build_grid(items)
    seed_val = seed if seed is not None else items.get_int("seed", 0)
    initial, theta_min0, equilibrium = _build_initial(items, grid, params, seed_val)

    scheme = items.get_str("controls.scheme", "explicit-monotone")
    t_end = items.get_float("controls.t_end")
    dt_raw = items.get_str("controls.dt", "auto")
    if dt_raw == "auto":
        theta_hat = initial.theta.max() + t_end * source.s_sup / params.rho_cp
        dt = cfl_limits(params, grid, theta_hat)
    else:
        try:
            dt = float(dt_raw)
        except ValueError:
            raise ConfigError(f"controls.dt expects a number or 'auto', got {dt_raw!r}",
                              line=items.line("controls.dt"), path=items.path) from None
    try:
        controls = StepControls(
            dt=dt,
            scheme=scheme,
            t_end=t_end,
            snapshot_every=items.get_int("controls.snapshot_every", 100),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), line=items.line("controls.scheme"), path=items.path) from exc

    curvature_min = items.get_float("equilibrium.curvature_min", math.nan)
    curvature_opt = None if math.isnan(curvature_min) else curvature_min

    sweep = items.get_floats("sweep.alphas", ()) or None

    conv = None
    if any(items.has(k) for k in ("conv.grids", "conv.steps", "conv.t_end",
                                  "conv.ref_factor", "conv.n_temporal")):
        conv = {
            "grids": items.get_ints("conv.grids", (16, 32, 64)),
            "steps": items.get_ints("conv.steps", (500, 1000, 2000)),
            "t_end": items.get_float("conv.t_end", 0.1),
            "ref_factor": items.get_int("conv.ref_factor", 4),
            "n_temporal": items.get_int("conv.n_temporal", 32),
        }

    return PreparedRun(
        params=params,
        source=source,
        grid=grid,
        controls=controls,
        initial=initial,
        theta_min0=theta_min0,
        equilibrium=equilibrium,
        curvature_min=curvature_opt,
        seed=seed_val,
        out_dir=out_dir if out_dir is not None else items.get_str("outputs.dir", "out"),
        sweep_alphas=sweep,
        conv=conv,
        path=str(cfg_path),
        _raw_items=items,
    )


def effective_config(prep: PreparedRun) -> str:
    """Serialize a prepared run so that re-parsing reproduces it exactly."""
    p = prep.params
    lines = ["# effective configuration (derived values resolved)"]
    for name in _MODEL_FIELDS:
        lines.append(f"model.{name} = {getattr(p, name)!r}")
    lines.append(f"model.k_law = {p.k_law}")

    src = prep.source
    lines.append(f"source.preset = {src.preset}")
    if src.preset == "constant":
        lines.append(f"source.value = {src.preset_args[0]!r}")
    elif src.preset == "gaussian-pulse":
        amp, t0, sigma = src.preset_args
        lines.append(f"source.amp = {amp!r}")
        lines.append(f"source.t0 = {t0!r}")
        lines.append(f"source.sigma = {sigma!r}")
    lines.append(f"source.C0 = {src.C0!r}")
    lines.append(f"source.s_sup = {src.s_sup!r}")

    g = prep.grid
    lines.append(f"grid.n = {','.join(str(k) for k in g.n)}")
    lines.append(f"grid.length = {','.join(repr(x) for x in g.lengths)}")

    c = prep.controls
    lines.append(f"controls.dt = {c.dt!r}")
    lines.append(f"controls.scheme = {c.scheme}")
    lines.append(f"controls.t_end = {c.t_end!r}")
    lines.append(f"controls.snapshot_every = {c.snapshot_every}")

    items = prep._raw_items
    lines.append(f"initial.preset = {items.get_str('initial.preset')}")
    for key in ("initial.amplitude", "initial.mode", "initial.jitter",
                "initial.theta_bar", "initial.theta0", "initial.c0", "initial.phi0",
                "initial.theta_file", "initial.c_file", "initial.phi_file"):
        if items.has(key):
            lines.append(f"{key} = {items.raw(key)}")
    lines.append(f"initial.theta_star = {prep.theta_min0!r}")

    if prep.curvature_min is not None:
        lines.append(f"equilibrium.curvature_min = {prep.curvature_min!r}")
    if prep.sweep_alphas:
        lines.append(f"sweep.alphas = {','.join(repr(a) for a in prep.sweep_alphas)}")
    if prep.conv is not None:
        lines.append(f"conv.grids = {','.join(str(k) for k in prep.conv['grids'])}")
        lines.append(f"conv.steps = {','.join(str(k) for k in prep.conv['steps'])}")
        lines.append(f"conv.t_end = {prep.conv['t_end']!r}")
        lines.append(f"conv.ref_factor = {prep.conv['ref_factor']}")
        lines.append(f"conv.n_temporal = {prep.conv['n_temporal']}")
    lines.append(f"seed = {prep.seed}")
    lines.append(f"outputs.dir = {prep.out_dir}")
    return "\n".join(lines) + "\n"
