"""Scenario files: a strict JSON description of one study.

A scenario holds every model parameter, the QoS queries, the simulation
budget and exactly one sweep axis. Missing keys take the defaults below;
unknown keys are rejected by name.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any

import jsonschema

from . import channel, harq, interference
from .channel import SinrModel
from .errors import ConfigError

__all__ = [
    "DEFAULTS",
    "SWEEP_AXES",
    "SCENARIO_SCHEMA",
    "Scenario",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
]

# axis name -> (section, key)
SWEEP_AXES = {
    "theta_aoi": ("aoi", "theta_aoi"),
    "a_th": ("aoi", "a_th"),
    "blocklength": ("harq", "sub_block_len"),
    "gbs_count": ("interference", "gbs_count"),
    "d_th": ("delay", "d_th"),
    "theta_delay": ("delay", "theta_delay"),
    "rate": ("exponent", "rate"),
    "tx_power_dbm": ("channel", "tx_power_dbm"),
    "lambda_s": ("traffic", "lambda_s"),
}

DEFAULTS: dict[str, Any] = {
    "channel": {
        "carrier_hz": 2.0e9,
        "distance_m": 600e3,
        "sat_gain_dbi": 20.0,
        "rx_gain_dbi": 30.0,
        "tx_power_dbm": 30.0,
        "noise_dbm": -114.0,
        "shadowing": "average",
    },
    "interference": {
        "gbs_count": 20.0,
        "d_min": 500.0,
        "r_in": 2000.0,
        "r_out": 10000.0,
        "path_loss_exp": 2.5,
        "gbs_tx_snr_db": 94.6,
        "rayleigh_scale": math.sqrt(0.5),
    },
    "harq": {"sub_block_len": 200, "max_rounds": 4, "initial_rate": 2.0, "symbol_time": 0.005},
    "traffic": {"lambda_s": 0.5},
    "aoi": {"theta_aoi": 0.1, "a_th": 4000.0},
    "delay": {"theta_delay": None, "d_th": 6.0, "delta_s": 1.0},
    "exponent": {"rate": 0.5, "blocklength": 200, "avg_snr_db": 5.0, "interferer_mean": "amplitude"},
    "simulation": {"enabled": False, "n_packets": 20000, "n_samples": 100000, "warmup": None, "seed": 0},
    "sweep": {"axis": "theta_aoi", "grid": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4]},
    "output": {"path": None, "format": "csv"},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_pos_int = {"type": "integer", "minimum": 1}


def _section(props: dict) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False}


SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "channel": _section(
            {
                "carrier_hz": _pos,
                "distance_m": _pos,
                "sat_gain_dbi": _num,
                "rx_gain_dbi": _num,
                "tx_power_dbm": _num,
                "noise_dbm": _num,
                "shadowing": {
                    "oneOf": [
                        {"type": "string", "enum": sorted(channel.SHADOWING_PRESETS)},
                        {
                            "type": "object",
                            "properties": {"b": _pos, "m": {"type": "integer", "minimum": 0}, "omega": _pos},
                            "required": ["b", "m", "omega"],
                            "additionalProperties": False,
                        },
                    ]
                },
            }
        ),
        "interference": _section(
            {
                "gbs_count": _pos,
                "d_min": _nonneg,
                "r_in": _pos,
                "r_out": _pos,
                "path_loss_exp": {"type": "number", "exclusiveMinimum": 2},
                "gbs_tx_snr_db": _num,
                "rayleigh_scale": _pos,
            }
        ),
        "harq": _section(
            {"sub_block_len": _pos_int, "max_rounds": _pos_int, "initial_rate": _pos, "symbol_time": _pos}
        ),
        "traffic": _section({"lambda_s": _pos}),
        "aoi": _section({"theta_aoi": _pos, "a_th": _pos}),
        "delay": _section({"theta_delay": {"oneOf": [_pos, {"type": "null"}]}, "d_th": _nonneg, "delta_s": _pos}),
        "exponent": _section(
            {
                "rate": _pos,
                "blocklength": _pos_int,
                "avg_snr_db": {"oneOf": [_num, {"type": "null"}]},
                "interferer_mean": {"type": "string", "enum": ["amplitude", "power"]},
            }
        ),
        "simulation": _section(
            {
                "enabled": {"type": "boolean"},
                "n_packets": _pos_int,
                "n_samples": _pos_int,
                "warmup": {"oneOf": [{"type": "integer", "minimum": 0}, {"type": "null"}]},
                "seed": {"type": "integer", "minimum": 0},
            }
        ),
        "sweep": {
            "type": "object",
            "properties": {
                "axis": {"type": "string", "enum": sorted(SWEEP_AXES)},
                "grid": {"type": "array", "items": _num, "minItems": 1},
            },
            "required": ["axis", "grid"],
            "additionalProperties": False,
        },
        "output": _section(
            {"path": {"oneOf": [{"type": "string"}, {"type": "null"}]}, "format": {"type": "string", "enum": ["csv", "json"]}}
        ),
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **val}
        else:
            out[key] = copy.deepcopy(val)
    return out


def _error_path(err: jsonschema.ValidationError) -> str:
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        prefix = ".".join(str(p) for p in err.absolute_path)
        return ", ".join(f"{prefix}.{k}" if prefix else k for k in extra)
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


@dataclass(frozen=True)
class Scenario:
    """A validated scenario; ``data`` is the fully populated JSON object."""

    data: dict

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def with_value(self, axis: str, value: float) -> "Scenario":
        section, key = SWEEP_AXES[axis]
        new = self.to_dict()
        if key in ("sub_block_len",):
            value = int(round(value))
        new[section][key] = value
        return scenario_from_dict(new, partial=False)

    # -- model construction ------------------------------------------------

    def fade(self) -> channel.ShadowedRicianParams:
        sh = self["channel"]["shadowing"]
        if isinstance(sh, str):
            return channel.SHADOWING_PRESETS[sh]
        return channel.ShadowedRicianParams(sh["b"], sh["m"], sh["omega"])

    def geometry(self) -> channel.LinkGeometry:
        c = self["channel"]
        return channel.LinkGeometry(c["carrier_hz"], c["distance_m"], c["sat_gain_dbi"], c["rx_gain_dbi"])

    def interference_config(self) -> interference.InterferenceConfig:
        i = self["interference"]
        area = interference.annulus_area(i["r_in"], i["r_out"])
        return interference.InterferenceConfig(
            lambda_m=i["gbs_count"] / area,
            d_min=i["d_min"],
            r_in=i["r_in"],
            r_out=i["r_out"],
            path_loss_exp=i["path_loss_exp"],
            tx_snr_t=channel.db_to_linear(i["gbs_tx_snr_db"]),
            rayleigh_scale=i["rayleigh_scale"],
        )

    def tx_snr(self) -> float:
        c = self["channel"]
        return channel.db_to_linear(c["tx_power_dbm"] - c["noise_dbm"])

    def model(self) -> SinrModel:
        field = self.interference_config()
        fit = interference.gamma_fit_from_config(field)
        return SinrModel(self.geometry(), self.fade(), self.tx_snr(), fit, field)

    def exponent_model(self) -> SinrModel:
        """The link model for exponent studies.

        With ``avg_snr_db`` set, the satellite power is rescaled so that mean
        signal over mean interference-plus-noise equals that value.
        """
        base = self.model()
        target = self["exponent"]["avg_snr_db"]
        if target is None:
            return base
        mean_sig = channel.link_response(base.sat_link) * channel.shadowed_rician_mean(base.fade)
        tx = channel.db_to_linear(target) * (base.interference.mean + 1.0) / mean_sig
        return SinrModel(base.sat_link, base.fade, tx, base.interference, base.field)

    def harq_config(self) -> harq.HarqConfig:
        h = self["harq"]
        return harq.HarqConfig(h["sub_block_len"], h["max_rounds"], h["initial_rate"], h["symbol_time"])


def scenario_from_dict(obj: dict, partial: bool = True) -> Scenario:
    """Validate ``obj`` (merged onto the defaults when ``partial``) into a :class:`Scenario`."""
    if not isinstance(obj, dict):
        raise ConfigError("scenario must be a JSON object")
    try:
        jsonschema.validate(obj, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"invalid scenario key {_error_path(err)}: {err.message}") from None
    data = _merge(DEFAULTS, obj) if partial else copy.deepcopy(obj)
    grid = data["sweep"]["grid"]
    if list(grid) != sorted(grid) or len(set(grid)) != len(grid):
        raise ConfigError("invalid scenario key sweep.grid: must be strictly increasing")
    if not all(math.isfinite(g) for g in grid):
        raise ConfigError("invalid scenario key sweep.grid: values must be finite")
    i = data["interference"]
    if not i["r_in"] < i["r_out"]:
        raise ConfigError("invalid scenario key interference.r_in: must be below r_out")
    sim = data["simulation"]
    if sim["warmup"] is not None and sim["warmup"] >= sim["n_packets"]:
        raise ConfigError("invalid scenario key simulation.warmup: must be below n_packets")
    return Scenario(data)


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"scenario file {path} is not valid JSON: {err}") from None
    return scenario_from_dict(obj)


def save_scenario(s: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(s.to_dict(), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
