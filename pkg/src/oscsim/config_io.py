"""Scenario configuration files and industry presets.

Config files are flat INI-style sections of ``key = value`` pairs, chosen
for hand-editability and trivial cross-language parsing. The ``[meta]``
section records the PRNG algorithm and the config format version so that a
reimplementation can reproduce draw streams exactly. Three industry presets
(fast_fashion, electronics, perishables) ship with the package.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from importlib import resources
from pathlib import Path

from .core import RNG_ALGORITHM, ScenarioConfig, validate_config

FORMAT_VERSION = "1"

PRESET_NAMES = ("fast_fashion", "electronics", "perishables")

_SECTIONS = {
    "network": ["n_suppliers", "n_distributors", "n_consumers", "horizon_T"],
    "pricing": [
        "mu",
        "sigma",
        "initial_price_range",
        "perishable",
        "gamma",
        "quality_noise_amplitude",
    ],
    "lolog": [
        "theta_p",
        "theta_t",
        "theta_q",
        "structural_quality_weight",
        "structural_degree_weight",
        "risk_aversion",
    ],
    "trust": [
        "baseline_trust",
        "trust_rule",
        "bayes_p_reliable",
        "bayes_p_unreliable",
        "outcome_quality_weight",
        "agent_type_weights",
        "learning_rates_by_type",
    ],
    "shocks": [
        "shock_probability",
        "shock_trust_decay",
        "price_spike_factor",
        "trust_collapse_factor",
        "decay_on_all_shocks",
        "allow_node_exit",
    ],
    "economics": [
        "epsilon",
        "q_max_range",
        "rebate_delta_range",
        "demand_alpha",
        "demand_beta",
        "demand_indexation",
        "markup",
        "profit_scale",
        "consumer_reliability_range",
    ],
    "run": ["seed"],
}

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


class ConfigError(ValueError):
    pass


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(name: str, text: str):
    """Parse a config value according to the dataclass field's declared type."""
    ftype = _FIELD_TYPES.get(name)
    if ftype is None:
        raise ConfigError(f"unknown config key: {name}")
    text = text.strip()
    try:
        if ftype == "bool":
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if ftype == "int":
            return int(text)
        if ftype == "float":
            return float(text)
        if ftype == "str":
            return text
        # tuple types: element kind read off the annotation
        parts = [p.strip() for p in text.split(",") if p.strip()]
        elem = int if "tuple[int" in ftype.replace(" ", "") else float
        return tuple(elem(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from exc


def serialize_config(cfg: ScenarioConfig) -> str:
    lines = [
        "[meta]",
        f"rng_algorithm = {RNG_ALGORITHM}",
        f"format_version = {FORMAT_VERSION}",
        "",
    ]
    for section, names in _SECTIONS.items():
        lines.append(f"[{section}]")
        for name in names:
            lines.append(f"{name} = {_format_value(getattr(cfg, name))}")
        lines.append("")
    return "\n".join(lines)


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(serialize_config(cfg))


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive
    parser.read_string(text)
    values = {}
    for section in parser.sections():
        if section == "meta":
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section: [{section}]")
        for name, raw in parser.items(section):
            if name not in _SECTIONS[section]:
                raise ConfigError(f"unknown config key: {name} (section [{section}])")
            values[name] = _parse_value(name, raw)
    return ScenarioConfig(**values)


def apply_overrides(cfg: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Apply ``key=value`` override strings on top of a config."""
    updates = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        updates[key] = _parse_value(key, raw)
    return cfg.with_overrides(**updates)


def preset_path(name: str):
    if name not in PRESET_NAMES:
        raise ConfigError(
            f"unknown preset {name!r}; available presets: {', '.join(PRESET_NAMES)}"
        )
    return resources.files("oscsim").joinpath(f"presets/{name}.ini")


def load_config(source: str | Path, overrides: list[str] | None = None) -> ScenarioConfig:
    """Load a config from a preset name or a file path and validate it.

    Overrides (``key=value`` strings) are applied after parsing, before
    validation.
    """
    if isinstance(source, str) and source in PRESET_NAMES:
        text = preset_path(source).read_text()
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(
                f"no such config file or preset: {source!r}; "
                f"available presets: {', '.join(PRESET_NAMES)}"
            )
        text = path.read_text()
    cfg = parse_config(text)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    report = validate_config(cfg)
    if not report.ok:
        raise ConfigError("invalid config: " + "; ".join(report.violations))
    return cfg
