"""Config files: a [model] block of grammar expressions plus optional
[oracle] and [output] blocks.  Shipped presets live in extfock/presets."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .renormalize import ModelSpec
from .symgrammar import GrammarError

ORACLE_DEFAULTS = {"d": 1, "modes": 8, "n_max": 10, "sigma": 0.1, "lambda": 2.0,
                   "tol_identity": 1e-8, "tol_pullback": 1e-6, "tol_exact": 1e-12}
OUTPUT_DEFAULTS = {"format": "json", "path": ""}

PRESETS = ("nelson-massless", "nelson-massive", "frohlich", "pauli-fierz", "dipole",
           "pseudo-relativistic", "nelson-ibc", "nelson-cutoff")
TABLE_PRESETS = {
    "nonrelativistic": ("nelson-massless", "nelson-massive", "frohlich"),
    "p-dependent": ("pauli-fierz", "dipole"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    model: ModelSpec
    oracle: dict = field(default_factory=lambda: dict(ORACLE_DEFAULTS))
    output: dict = field(default_factory=lambda: dict(OUTPUT_DEFAULTS))
    meta: dict = field(default_factory=dict)
    source: str = ""
    oracle_keys: tuple = ()     # oracle settings given explicitly in the file


def parse_config(data: dict, source="") -> Config:
    if "model" not in data:
        raise ConfigError(f"{source}: missing [model] block")
    m = data["model"]
    missing = [k for k in ("name", "d", "theta", "omega", "v") if k not in m]
    if missing:
        raise ConfigError(f"{source}: [model] lacks {', '.join(missing)}")
    try:
        model = ModelSpec.from_strings(m["name"], m["d"], m["theta"], m["omega"], m["v"],
                                       m.get("theta1"))
    except (GrammarError, ValueError) as ex:
        raise ConfigError(f"{source}: {ex}") from ex
    oracle = dict(ORACLE_DEFAULTS)
    given = data.get("oracle", {})
    unknown = sorted(set(given) - set(ORACLE_DEFAULTS))
    if unknown:
        raise ConfigError(f"{source}: unknown [oracle] keys {', '.join(unknown)}")
    oracle.update(given)
    output = dict(OUTPUT_DEFAULTS)
    output.update(data.get("output", {}))
    if output["format"] not in ("json", "csv"):
        raise ConfigError(f"{source}: output format must be json or csv")
    return Config(model, oracle, output, dict(data.get("meta", {})), source, tuple(sorted(given)))


def load_config(path) -> Config:
    p = Path(path)
    if not p.exists():
        name = p.name[:-5] if p.name.endswith(".toml") else p.name
        if name in PRESETS:
            return load_preset(name)
        raise ConfigError(f"no such config file: {path}")
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as ex:
        raise ConfigError(f"{path}: {ex}") from ex
    return parse_config(data, str(path))


def load_preset(name: str) -> Config:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    text = resources.files("extfock.presets").joinpath(f"{name}.toml").read_text()
    return parse_config(tomllib.loads(text), name)


def preset_model(name: str) -> ModelSpec:
    return load_preset(name).model
