"""JSON configuration loading.

One document configures everything: battery parameters as top-level keys
(or grouped under "battery"), with optional "expert", "train" and
"dagger" sections. Any field omitted falls back to its documented
default; unknown keys raise ConfigError.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .battery import BatteryParams
from .expert import Bounds, ExpertConfig

SECTIONS = ("battery", "expert", "train", "dagger")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration document."""


def _check_keys(given: dict, allowed: set[str], where: str) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _build(cls, data: dict, where: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    _check_keys(data, fields, where)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def load_document(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def battery_params_from(doc: dict) -> BatteryParams:
    """Battery parameters from a config document.

    Accepts either a "battery" section or battery fields at top level
    alongside the reserved section names. Polynomial coefficient lists
    may be any length up to 6 (ascending powers).
    """
    if "battery" in doc:
        data = dict(doc["battery"])
        where = '"battery" section'
    else:
        data = {k: v for k, v in doc.items() if k not in SECTIONS}
        where = "battery parameters"
    for key in ("ocv_p_coeffs", "ocv_n_coeffs"):
        if key in data:
            data[key] = tuple(data[key])
    return _build(BatteryParams, data, where)


def expert_config_from(doc: dict) -> ExpertConfig:
    data = dict(doc.get("expert", {}))
    if "bounds" in data:
        data["bounds"] = _build(Bounds, dict(data["bounds"]), '"expert.bounds" section')
    return _build(ExpertConfig, data, '"expert" section')


def train_config_from(doc: dict, seed: int | None = None):
    from .battery import NoiseSpec
    from .policy import TrainConfig

    data = dict(doc.get("train", {}))
    if "noise" in data:
        data["noise"] = _build(NoiseSpec, dict(data["noise"]), '"train.noise" section')
    if seed is not None:
        data["seed"] = seed
    return _build(TrainConfig, data, '"train" section')


def dagger_config_from(doc: dict, seed: int | None = None, jobs: int | None = None):
    from .battery import NoiseSpec
    from .dagger import DaggerConfig

    data = dict(doc.get("dagger", {}))
    if "obs_noise" in data:
        data["obs_noise"] = _build(NoiseSpec, dict(data["obs_noise"]), '"dagger.obs_noise" section')
    if seed is not None:
        data["seed"] = seed
    if jobs is not None:
        data["jobs"] = jobs
    return _build(DaggerConfig, data, '"dagger" section')


def validate_document(doc: dict) -> None:
    """Reject top-level keys that are neither battery fields nor sections."""
    battery_fields = {f.name for f in dataclasses.fields(BatteryParams)}
    _check_keys(doc, battery_fields | set(SECTIONS), "config document")


def load_battery_params(path: str | Path) -> BatteryParams:
    doc = load_document(path)
    validate_document(doc)
    return battery_params_from(doc)


def load_expert_config(path: str | Path) -> ExpertConfig:
    doc = load_document(path)
    validate_document(doc)
    return expert_config_from(doc)
