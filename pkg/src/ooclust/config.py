"""INI configuration files.

Each section maps onto one config dataclass and every key is converted to
the type of that field's default. Unknown sections or keys are errors::

    [engine]
    users = 8
    transactions_to_run = 10000

    [policy]
    name = cactis
    cluster_directives = Class0, Class1; Class2, Class3

    [mix]
    NameLookup = 0.2
    ...

    [experiment]
    db_sizes = 500, 1000, 2000
    policies = cactis, orion

A ``[mix]`` section replaces the whole default mix, so its weights must sum to 1.
"""

from __future__ import annotations

import configparser
from dataclasses import fields, replace

from .errors import ConfigError
from .experiment import ExperimentSpec
from .objectgraph import DatabaseSpec
from .policies import PolicyConfig
from .simengine import CostModel, EngineConfig, StorageConfig
from .workload import TransactionKind, WorkloadConfig

_ENGINE_KEYS = ("users", "think_time_mean", "transactions_to_run", "warmup_fraction", "seed", "check_invariants")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _name_list(text: str) -> list[str]:
    return [x for x in text.replace(",", " ").split()]


def _directives(text: str) -> list[list[str]]:
    groups = [[int(c) if c.isdigit() else c for c in _name_list(g)] for g in text.split(";")]
    if any(not g for g in groups):
        raise ValueError("empty class list in cluster directive")
    return groups


def _convert(section: str, key: str, text: str, default):
    try:
        if isinstance(default, bool):
            t = text.strip().lower()
            if t in _TRUE:
                return True
            if t in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, str):
            return text.strip()
    except ValueError as e:
        raise ConfigError(f"[{section}] {key}: {e}") from None
    raise ConfigError(f"[{section}] {key}: unsupported type")


def _overrides(cp, section: str, obj, allowed=None, special=None) -> dict:
    special = special or {}
    names = [f.name for f in fields(obj)] if allowed is None else list(allowed)
    out = {}
    for key, text in cp.items(section):
        if key in special:
            try:
                out[key] = special[key](text)
            except ValueError as e:
                raise ConfigError(f"[{section}] {key}: {e}") from None
        elif key in names:
            out[key] = _convert(section, key, text, getattr(obj, key))
        else:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
    return out


SECTIONS = ("engine", "cost", "database", "storage", "policy", "workload", "mix", "experiment")


def parse_config(text: str, source: str = "<string>") -> ExperimentSpec:
    """Parse INI text into an experiment spec whose template holds the engine config."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str  # keep mix kind names as written
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None
    for s in cp.sections():
        if s not in SECTIONS:
            raise ConfigError(f"unknown section [{s}] in {source}")

    cfg = EngineConfig()
    spec = ExperimentSpec()
    if cp.has_section("engine"):
        cfg = replace(cfg, **_overrides(cp, "engine", cfg, allowed=_ENGINE_KEYS))
    if cp.has_section("cost"):
        cfg = replace(cfg, cost=replace(cfg.cost, **_overrides(cp, "cost", CostModel())))
    if cp.has_section("database"):
        allowed = [f.name for f in fields(DatabaseSpec) if f.name != "seed"]
        cfg = replace(cfg, database=replace(cfg.database, **_overrides(cp, "database", cfg.database, allowed)))
    if cp.has_section("storage"):
        cfg = replace(cfg, storage=replace(cfg.storage, **_overrides(cp, "storage", StorageConfig())))
    if cp.has_section("policy"):
        ov = _overrides(cp, "policy", PolicyConfig(), special={"cluster_directives": _directives})
        cfg = replace(cfg, policy=replace(cfg.policy, **ov))
    if cp.has_section("workload"):
        allowed = ("closure_depth", "range_width")
        cfg = replace(cfg, workload=replace(cfg.workload, **_overrides(cp, "workload", WorkloadConfig(), allowed)))
    if cp.has_section("mix"):
        mix = {}
        for key, value in cp.items("mix"):
            try:
                kind = TransactionKind(key)
            except ValueError:
                raise ConfigError(f"unknown transaction kind {key!r} in section [mix]") from None
            mix[kind] = _convert("mix", key, value, 0.0)
        cfg = replace(cfg, workload=replace(cfg.workload, mix=mix))
    if cp.has_section("experiment"):
        ov = _overrides(
            cp,
            "experiment",
            spec,
            allowed=("replications", "base_seed", "out_dir", "workers"),
            special={"db_sizes": _int_list, "policies": _name_list},
        )
        spec = replace(spec, **ov)
    spec = replace(spec, template=cfg)
    spec.validate()
    return spec


def load_config(path) -> ExperimentSpec:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text, source=str(path))


def dump_config(spec: ExperimentSpec) -> str:
    """Render a spec back to INI text that parses to an equal spec."""
    cfg = spec.template
    lines = ["[engine]"]
    lines += [f"{k} = {getattr(cfg, k)}" for k in _ENGINE_KEYS]
    lines += ["", "[cost]"] + [f"{f.name} = {getattr(cfg.cost, f.name)!r}" for f in fields(cfg.cost)]
    lines += ["", "[database]"]
    lines += [f"{f.name} = {getattr(cfg.database, f.name)!r}" for f in fields(cfg.database) if f.name != "seed"]
    lines += ["", "[storage]"] + [f"{f.name} = {getattr(cfg.storage, f.name)}" for f in fields(cfg.storage)]
    lines += ["", "[policy]"]
    for f in fields(cfg.policy):
        v = getattr(cfg.policy, f.name)
        if f.name == "cluster_directives":
            if v:
                lines.append(f"{f.name} = " + "; ".join(", ".join(str(c) for c in g) for g in v))
        else:
            lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
    lines += ["", "[workload]", f"closure_depth = {cfg.workload.closure_depth}", f"range_width = {cfg.workload.range_width!r}"]
    lines += ["", "[mix]"] + [f"{TransactionKind(k).value} = {w!r}" for k, w in cfg.workload.mix.items()]
    lines += [
        "",
        "[experiment]",
        "db_sizes = " + ", ".join(str(n) for n in spec.db_sizes),
        "policies = " + ", ".join(spec.policies),
        f"replications = {spec.replications}",
        f"base_seed = {spec.base_seed}",
        f"out_dir = {spec.out_dir}",
        f"workers = {spec.workers}",
    ]
    return "\n".join(lines) + "\n"
