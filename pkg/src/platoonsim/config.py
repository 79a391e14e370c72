"""Flat key=value experiment configuration files (INI sections per module)."""

from __future__ import annotations

import configparser
from pathlib import Path


class ConfigError(Exception):
    """Invalid scenario configuration; the CLI maps this to exit code 2."""


def _to_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


# section -> key -> (target attribute path, parser)
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "scenario": {
        "vehicle_count": ("vehicle_count", int),
        "spawn_interval_ns": ("spawn_interval_ns", int),
        "area_length_m": ("area_length_m", float),
        "message_interval_ns": ("message_interval_ns", int),
        "payload_size_b": ("payload_size_b", int),
        "max_payload_b": ("max_payload_b", int),
        "mode": ("mode", str),
        "sim_duration_ns": ("sim_duration_ns", int),
        "seed": ("seed", int),
        "repetitions": ("repetitions", int),
    },
    "window": {
        "window_ns": ("window.window_ns", int),
        "slot_len_ns": ("window.slot_len_ns", int),
    },
    "radio": {
        "range_m": ("radio.range_m", float),
        "data_rate_bps": ("radio.data_rate_bps", int),
        "propagation_mps": ("radio.propagation_mps", float),
        "preamble_ns": ("radio.preamble_ns", int),
        "cca_detect_ns": ("radio.cca_detect_ns", int),
    },
    "csma": {
        "cw_slots": ("csma.cw_slots", int),
        "backoff_slot_ns": ("csma.backoff_slot_ns", int),
    },
    "metrics": {
        "count_control_frames": ("count_control_frames", _to_bool),
        "per_receiver_counting": ("per_receiver_counting", _to_bool),
    },
}


def load_config(path: str | Path):
    """Parse a config file into a validated ScenarioConfig. Unknown keys are errors."""
    from .scenario import ScenarioConfig

    parser = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from None

    cfg = ScenarioConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        schema = _SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            attr_path, parse = schema[key]
            try:
                value = parse(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key} = {raw!r}: {exc}"
                ) from None
            obj = cfg
            *heads, leaf = attr_path.split(".")
            for head in heads:
                obj = getattr(obj, head)
            setattr(obj, leaf, value)
    cfg.validate()
    return cfg
