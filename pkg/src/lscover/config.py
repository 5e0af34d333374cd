"""Flat ``key = value`` experiment configuration with command-line overrides."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

EXPERIMENTS = ("torus_cover", "sphere_cover", "setcover_bench", "bound_table", "inequality_suite")

PRESETS = {
    "fano": {"experiment": "setcover_bench", "instance": "fano"},
    "disk-torus": {"experiment": "torus_cover", "body": "disk", "radius": "0.15", "side": "1",
                   "delta": "0.03", "seed": "3"},
    "bw-table": {"experiment": "inequality_suite", "table": "bw"},
    "sphere-caps": {"experiment": "sphere_cover", "phi": str(math.pi / 6), "delta": str(math.pi / 120),
                    "n_rot": "500", "seed": "11"},
}

# typed keys; anything else is rejected
_FLOAT = {"radius", "side", "delta", "stride", "grid_step", "phi", "density"}
_INT = {"seed", "threads", "n_rot", "dim", "elements", "sets", "cert_samples"}
_BOOL = {"lp", "points"}
_STR = {"experiment", "body", "body_file", "instance", "table", "out", "n_values", "center"}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    out: str = "out"
    threads: int = 1
    grid_step: float | None = None
    params: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.params.get(key, default)


def parse_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[k.replace("-", "_")] = v
    return out


def _convert(key, value):
    if value is None:
        return None
    try:
        if key in _FLOAT:
            return float(value)
        if key in _INT:
            return int(value)
        if key in _BOOL:
            v = str(value).lower()
            if v not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(value)
            return v in ("1", "true", "yes")
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    if key in _STR:
        return str(value)
    raise ConfigError(f"unknown configuration key {key!r}")


def build_config(raw: dict) -> ExperimentConfig:
    """Typed, validated configuration from string key/value pairs."""
    vals = {k: _convert(k, v) for k, v in raw.items() if v is not None}
    exp = vals.pop("experiment", None)
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {exp!r}")
    cfg = ExperimentConfig(exp, seed=vals.pop("seed", 0), out=vals.pop("out", "out"),
                           threads=vals.pop("threads", 1), grid_step=vals.pop("grid_step", None), params=vals)
    validate(cfg)
    return cfg


def load_config(path=None, overrides: dict | None = None, preset: str | None = None) -> ExperimentConfig:
    raw = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        raw.update(PRESETS[preset])
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} does not exist")
        raw.update(parse_text(p.read_text(), str(p)))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    return build_config(raw)


def _positive(cfg, key, required=True):
    v = cfg.get(key)
    if v is None:
        if required:
            raise ConfigError(f"{cfg.experiment} needs {key}")
        return
    if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
        raise ConfigError(f"{key} must be positive")


def validate(cfg: ExperimentConfig) -> None:
    """Check the parameters against the preconditions of the target pipeline."""
    if cfg.threads < 0:
        raise ConfigError("threads must be >= 0")
    if cfg.grid_step is not None and not cfg.grid_step > 0:
        raise ConfigError("grid_step must be positive")
    e = cfg.experiment
    if e == "torus_cover":
        _positive(cfg, "delta")
        cfg.params.setdefault("side", 1.0)
        _positive(cfg, "side")
        body = cfg.params.setdefault("body", "disk")
        if body == "disk":
            _positive(cfg, "radius")
            if cfg.get("radius") <= cfg.get("delta"):
                raise ConfigError("radius must exceed delta (the eroded disk would be empty)")
            if 2 * cfg.get("radius") > cfg.get("side"):
                raise ConfigError("disk does not fit in the torus")
        elif body == "file":
            f = cfg.get("body_file")
            if f is None or not Path(f).is_file():
                raise ConfigError(f"body_file {f!r} does not exist")
        else:
            raise ConfigError("body must be 'disk' or 'file'")
        if cfg.grid_step is not None and cfg.grid_step > cfg.get("delta") / 8 * (1 + 1e-12):
            raise ConfigError("grid_step must be <= delta/8")
    elif e == "sphere_cover":
        _positive(cfg, "phi")
        _positive(cfg, "delta")
        if cfg.get("phi") > math.pi / 2:
            raise ConfigError("phi must be <= pi/2")
        if cfg.get("delta") >= cfg.get("phi"):
            raise ConfigError("delta must be smaller than phi")
        cfg.params.setdefault("n_rot", 500)
        if cfg.get("n_rot") < 0:
            raise ConfigError("n_rot must be >= 0")
    elif e == "setcover_bench":
        inst = cfg.params.setdefault("instance", "fano")
        if inst not in ("fano", "random") and not Path(inst).is_file():
            raise ConfigError(f"instance file {inst!r} does not exist")
        if inst == "random":
            for k in ("elements", "sets", "density"):
                _positive(cfg, k)
    elif e == "bound_table":
        n_values(cfg)
    elif e == "inequality_suite":
        if cfg.params.setdefault("table", "bw") not in ("bw", "jordan", "lnnesszam"):
            raise ConfigError("table must be bw, jordan or lnnesszam")


def n_values(cfg) -> list[int]:
    text = cfg.get("n_values", "3,5,10,100,1000,10000")
    try:
        ns = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"n_values must be comma separated integers: {text!r}") from None
    if not ns or min(ns) < 3:
        raise ConfigError("n_values must be integers >= 3")
    return ns
