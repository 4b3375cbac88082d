"""YAML experiment configurations.

A config names a model, its parameters, an initial state, the Fock cutoffs, a
time grid and the tomographic sampling.  An optional ``scales`` table holds
per-scale overrides (``desk`` for laptop runs, ``full`` for the long ones);
the top-level ``scale`` key picks which one is merged in.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .fockcore import BipartiteState
from .models import (
    AtomFieldParams,
    BECParams,
    binomial_state,
    build_hamiltonian_af,
    build_hamiltonian_bec,
    pacs_state,
    product_state,
    two_mode_squeezed,
)
from .tomography import AngleGrid, QuadratureGrid

MODELS = ("atom_field", "bec")
STATE_KINDS = ("cs", "pacs", "pacs_product", "binomial", "squeezed")
TIME_UNITS = ("scaled", "physical")

_TOP_KEYS = {
    "name", "model", "params", "initial_state", "cutoffs", "time", "angles",
    "grid", "seed", "output", "scale", "scales", "timeseries", "method",
}
_PARAM_KEYS = {
    "atom_field": {"omega_f", "omega_a", "gamma", "g"},
    "bec": {"omega0", "omega1", "u", "lam"},
}
_STATE_KEYS = {
    "cs": {"alpha_a", "alpha_b"},
    "pacs": {"alpha", "m"},
    "pacs_product": {"alpha_a", "alpha_b", "m1", "m2"},
    "binomial": {"n"},
    "squeezed": {"zeta"},
}
_TS_KEYS = {"column", "n_init", "window_count", "max_dim", "fnn_threshold", "seed"}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_complex(value, key: str) -> complex:
    """Accept a number, a string such as ``"1+0.5j"`` or a ``[re, im]`` pair."""
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        return complex(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {value!r} as a complex number") from None


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _number(section: dict, key: str, where: str, default=None, kind=float):
    if key not in section:
        if default is None:
            raise ConfigError(f"{where}.{key} is required")
        return default
    try:
        val = kind(section[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {section[key]!r}") from None
    if kind is int and float(section[key]) != val:
        raise ConfigError(f"{where}.{key}: expected an integer, got {section[key]!r}")
    if kind is float and not math.isfinite(val):
        raise ConfigError(f"{where}.{key} must be finite")
    return val


@dataclass(frozen=True)
class TimeseriesSettings:
    column: str = "d1"
    n_init: int = 100
    window_count: int = 14
    max_dim: int = 10
    fnn_threshold: float = 0.01
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: str
    params: AtomFieldParams | BECParams
    initial_state: dict
    cutoff_a: int
    cutoff_b: int
    n_max: int
    dt: float
    n_steps: int
    time_unit: str
    angles: AngleGrid
    grid: QuadratureGrid
    seed: int
    output_dir: Path
    figures: bool
    method: str = "numeric"
    timeseries: TimeseriesSettings = field(default_factory=TimeseriesSettings)
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def rate(self) -> float:
        """g for the atom-field model, U for the BEC model."""
        return self.params.g if self.model == "atom_field" else self.params.u

    @property
    def rate_label(self) -> str:
        return "g" if self.model == "atom_field" else "U"

    @property
    def dt_physical(self) -> float:
        return self.dt * math.pi / self.rate if self.time_unit == "scaled" else self.dt

    def physical_time(self, step: int) -> float:
        return step * self.dt_physical

    def scaled_time(self, step: int) -> float:
        """Time in units of pi / g (or pi / U), the convention of the output column."""
        return self.physical_time(step) * self.rate / math.pi

    def hamiltonian(self):
        build = build_hamiltonian_af if self.model == "atom_field" else build_hamiltonian_bec
        return build(self.params, self.n_max, self.cutoff_a, self.cutoff_b)

    def build_state(self) -> BipartiteState:
        s = self.initial_state
        kind = s["kind"]
        ca, cb = self.cutoff_a, self.cutoff_b
        if kind == "binomial":
            return binomial_state(s["n"], ca, cb)
        if kind == "squeezed":
            return two_mode_squeezed(s["zeta"], ca, cb)
        alpha_a, alpha_b, m1, m2 = self.product_labels()
        return product_state(pacs_state(alpha_a, m1, ca), pacs_state(alpha_b, m2, cb))

    def product_labels(self):
        """(alpha_a, alpha_b, m1, m2) for the product-state families."""
        s = self.initial_state
        kind = s["kind"]
        if kind == "cs":
            return s["alpha_a"], s["alpha_b"], 0, 0
        if kind == "pacs":
            return s["alpha"], 0j, s["m"], 0
        if kind == "pacs_product":
            return s["alpha_a"], s["alpha_b"], s["m1"], s["m2"]
        raise ConfigError(f"initial state {kind!r} is not a product of field states")

    def resolved(self) -> dict:
        """Plain mapping of the effective settings, stable for YAML dumping."""
        return self.raw


def _parse_state(sec) -> dict:
    if not isinstance(sec, dict) or "kind" not in sec:
        raise ConfigError("initial_state must be a mapping with a 'kind'")
    kind = sec["kind"]
    if kind not in STATE_KINDS:
        raise ConfigError(f"initial_state.kind must be one of {STATE_KINDS}, got {kind!r}")
    _check_keys(sec, _STATE_KEYS[kind] | {"kind"}, "initial_state")
    w = "initial_state"
    out = {"kind": kind}
    if kind == "cs":
        out["alpha_a"] = parse_complex(sec.get("alpha_a", 0), f"{w}.alpha_a")
        out["alpha_b"] = parse_complex(sec.get("alpha_b", 0), f"{w}.alpha_b")
    elif kind == "pacs":
        out["alpha"] = parse_complex(sec.get("alpha", 0), f"{w}.alpha")
        out["m"] = _number(sec, "m", w, kind=int)
    elif kind == "pacs_product":
        out["alpha_a"] = parse_complex(sec.get("alpha_a", 0), f"{w}.alpha_a")
        out["alpha_b"] = parse_complex(sec.get("alpha_b", 0), f"{w}.alpha_b")
        out["m1"] = _number(sec, "m1", w, 0, int)
        out["m2"] = _number(sec, "m2", w, 0, int)
    elif kind == "binomial":
        out["n"] = _number(sec, "n", w, kind=int)
    else:
        out["zeta"] = parse_complex(sec.get("zeta", 0), f"{w}.zeta")
    for key in ("m", "m1", "m2", "n"):
        if key in out and out[key] < 0:
            raise ConfigError(f"{w}.{key} must be >= 0")
    return out


def apply_scale(data: dict, scale: str | None = None) -> dict:
    """Merge the selected ``scales`` entry into the top level and drop the table."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(data, _TOP_KEYS, "config")
    scales = data.get("scales") or {}
    if not isinstance(scales, dict):
        raise ConfigError("scales must be a mapping")
    scale = scale or data.get("scale")
    base = {k: v for k, v in data.items() if k != "scales"}
    if scale is None or (not scales and scale == data.get("scale")):
        return base
    if scale not in scales:
        raise ConfigError(f"scale {scale!r} not defined (have: {', '.join(sorted(scales)) or 'none'})")
    merged = deep_merge(base, scales[scale])
    merged["scale"] = scale
    return merged


def config_from_dict(data: dict, scale: str | None = None, base_dir: Path | None = None) -> ExperimentConfig:
    data = apply_scale(data, scale)

    model = data.get("model")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
    psec = data.get("params") or {}
    _check_keys(psec, _PARAM_KEYS[model], "params")
    try:
        if model == "atom_field":
            params = AtomFieldParams(**{k: _number(psec, k, "params") for k in sorted(_PARAM_KEYS[model])})
        else:
            params = BECParams(**{k: _number(psec, k, "params") for k in sorted(_PARAM_KEYS[model])})
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None

    state = _parse_state(data.get("initial_state"))

    csec = data.get("cutoffs") or {}
    _check_keys(csec, {"a", "b", "n_max"}, "cutoffs")
    ca = _number(csec, "a", "cutoffs", kind=int)
    cb = _number(csec, "b", "cutoffs", ca, int)
    n_max = _number(csec, "n_max", "cutoffs", min(ca, cb), int)
    if min(ca, cb) < 0 or n_max < 1:
        raise ConfigError("cutoffs must be >= 0 and n_max >= 1")
    if n_max > ca + cb:
        raise ConfigError(f"cutoffs.n_max={n_max} exceeds a + b = {ca + cb}")
    if state["kind"] == "binomial" and state["n"] > min(ca, cb, n_max):
        raise ConfigError(f"binomial N={state['n']} exceeds the cutoffs")

    tsec = data.get("time") or {}
    _check_keys(tsec, {"dt", "n_steps", "unit"}, "time")
    dt = _number(tsec, "dt", "time")
    n_steps = _number(tsec, "n_steps", "time", kind=int)
    unit = tsec.get("unit", "scaled")
    if dt <= 0:
        raise ConfigError("time.dt must be > 0")
    if n_steps < 1:
        raise ConfigError("time.n_steps must be >= 1")
    if unit not in TIME_UNITS:
        raise ConfigError(f"time.unit must be one of {TIME_UNITS}, got {unit!r}")
    rate = params.g if model == "atom_field" else params.u
    if rate == 0:
        raise ConfigError("scaled time axis needs a nonzero g (atom_field) or U (bec)")

    asec = data.get("angles") or {}
    _check_keys(asec, {"n_a", "n_b", "offset"}, "angles")
    n_a = _number(asec, "n_a", "angles", 5, int)
    try:
        angles = AngleGrid.uniform(n_a, _number(asec, "n_b", "angles", n_a, int),
                                   _number(asec, "offset", "angles", 0.0))
        gsec = data.get("grid") or {}
        _check_keys(gsec, {"x_max", "n_points"}, "grid")
        grid = QuadratureGrid(_number(gsec, "x_max", "grid", 8.0),
                              _number(gsec, "n_points", "grid", 257, int))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    method = data.get("method", "numeric")
    if method not in ("numeric", "analytic"):
        raise ConfigError(f"method must be 'numeric' or 'analytic', got {method!r}")
    if method == "analytic" and (model != "bec" or state["kind"] not in ("cs", "pacs", "pacs_product")):
        raise ConfigError("the analytic propagator covers BEC runs from product field states only")

    osec = data.get("output") or {}
    _check_keys(osec, {"directory", "figures"}, "output")
    out_dir = Path(osec.get("directory", "output"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir

    top_seed = _number(data, "seed", "config", 0, int)
    ssec = data.get("timeseries") or {}
    _check_keys(ssec, _TS_KEYS, "timeseries")
    ts = TimeseriesSettings(
        column=str(ssec.get("column", "d1")),
        n_init=_number(ssec, "n_init", "timeseries", 100, int),
        window_count=_number(ssec, "window_count", "timeseries", 14, int),
        max_dim=_number(ssec, "max_dim", "timeseries", 10, int),
        fnn_threshold=_number(ssec, "fnn_threshold", "timeseries", 0.01),
        seed=_number(ssec, "seed", "timeseries", top_seed, int),
    )

    name = str(data.get("name", "run"))
    return ExperimentConfig(
        name=name,
        model=model,
        params=params,
        initial_state=state,
        cutoff_a=ca,
        cutoff_b=cb,
        n_max=n_max,
        dt=dt,
        n_steps=n_steps,
        time_unit=unit,
        angles=angles,
        grid=grid,
        seed=top_seed,
        output_dir=out_dir,
        figures=bool(osec.get("figures", True)),
        method=method,
        timeseries=ts,
        raw=data,
    )


def set_override(data: dict, assignment: str) -> dict:
    """Apply ``dotted.key=value`` (value parsed as YAML) to a raw config mapping."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(f"bad override key {key!r}")
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {assignment!r}: {exc}") from None
    out = copy.deepcopy(data)
    node = out
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {key!r}: {p!r} is not a mapping")
        node = nxt
    node[parts[-1]] = value
    return out


def read_config_data(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return data


def load_config(path, scale: str | None = None, overrides=(), base_dir=None) -> ExperimentConfig:
    data = apply_scale(read_config_data(path), scale)
    for ov in overrides:
        data = set_override(data, ov)
    return config_from_dict(data, base_dir=base_dir)
