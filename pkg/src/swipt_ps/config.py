"""Experiment configuration: parsing, validation and the bundled channel presets.

Configs are YAML documents (JSON is accepted too, being a subset). Channels
are written as ``[magnitude, phase_radians]`` pairs.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any

import yaml

from .algorithm import AlgoConfig
from .model import ChannelRealization, InvalidParametersError, SystemParams

__all__ = ["ConfigError", "ExperimentConfig", "PRESETS", "parse_config", "config_from_dict",
           "preset_config", "default_oracle_delta"]


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


PRESETS = {
    "h1": [(0.41, 0.95), (0.29, 1.44)],
    "h2": [(0.37, 0.42), (0.42, 1.4), (0.16, 0.78)],
    "h3": [(0.26, 0.12), (0.29, 2.15), (0.34, 1.80), (0.24, 2.08)],
    "h4": [(0.37, 0.79), (0.33, 0.43), (0.38, 0.12), (0.40, 0.85), (0.39, 1.05)],
}

_ALGO_DEFAULTS = {
    "eta": 0.5,
    "n_samples": 1000,
    "conv_tol": 1e-5,
    "max_outer_iters": 30,
    "sdp_tol": 1e-7,
    "seed": 0,
    "eps_floor": 1e-3,
    "covariance": "schur",
}
_BASELINE_DEFAULTS = {"oracle": True, "oracle_delta": None, "as": True, "multichain": True}
_OUTPUT_DEFAULTS = {"dir": None, "format": "csv", "plot": None}
_TOP_DEFAULTS = {
    "transmit_power": 2.0,
    "antenna_noise_var": 0.1,
    "processing_noise_var": 0.1,
    "tau": 1.0,
    "psi_points": 21,
}
_FORMATS = ("csv", "json", "both")


@dataclass
class ExperimentConfig:
    channel: list
    transmit_power: float = 2.0
    antenna_noise_var: float = 0.1
    processing_noise_var: float = 0.1
    tau: float = 1.0
    psi_points: Any = 21
    algo: dict = field(default_factory=lambda: dict(_ALGO_DEFAULTS))
    baselines: dict = field(default_factory=lambda: dict(_BASELINE_DEFAULTS))
    output: dict = field(default_factory=lambda: dict(_OUTPUT_DEFAULTS))

    def channel_realization(self) -> ChannelRealization:
        mags, phases = zip(*self.channel)
        return ChannelRealization.from_polar(mags, phases)

    def system_params(self) -> SystemParams:
        return SystemParams(self.transmit_power, self.antenna_noise_var,
                            self.processing_noise_var, self.tau)

    def algo_config(self) -> AlgoConfig:
        algo = dict(self.algo)
        if isinstance(algo["eta"], list):
            algo["eta"] = tuple(algo["eta"])
        return AlgoConfig(**algo)

    def oracle_delta(self) -> float:
        delta = self.baselines["oracle_delta"]
        return default_oracle_delta(len(self.channel)) if delta is None else delta

    def to_dict(self) -> dict:
        return {
            "channel": [list(pair) for pair in self.channel],
            "transmit_power": self.transmit_power,
            "antenna_noise_var": self.antenna_noise_var,
            "processing_noise_var": self.processing_noise_var,
            "tau": self.tau,
            "psi_points": copy.deepcopy(self.psi_points),
            "algo": copy.deepcopy(self.algo),
            "baselines": copy.deepcopy(self.baselines),
            "output": copy.deepcopy(self.output),
        }


def default_oracle_delta(K: int, budget: float = 2e6) -> float:
    """Finest ``1/n`` grid step (``n <= 200``) keeping ``(n+1)^K`` under ``budget``."""
    n = int(math.floor(budget ** (1.0 / K))) - 1
    return 1.0 / max(2, min(n, 200))


def _number(path, value, *, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(path, f"must be <= {hi}, got {value}")
    return int(value) if integer else float(value)


def _section(path, raw, defaults):
    if raw is None:
        return dict(defaults)
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")
    out = dict(defaults)
    out.update(raw)
    return out


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a mapping")
    allowed = set(_TOP_DEFAULTS) | {"channel", "preset", "algo", "baselines", "output"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")

    channel = doc.get("channel")
    if channel is None and "preset" in doc:
        if doc["preset"] not in PRESETS:
            raise ConfigError("preset", f"unknown preset {doc['preset']!r}")
        channel = PRESETS[doc["preset"]]
    if channel is None:
        raise ConfigError("channel", "missing")
    if not isinstance(channel, (list, tuple)) or not channel:
        raise ConfigError("channel", "must be a non-empty list of [magnitude, phase] pairs")
    pairs = []
    for i, entry in enumerate(channel):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"channel[{i}]", "expected [magnitude, phase]")
        pairs.append((_number(f"channel[{i}][0]", entry[0], lo=0),
                      _number(f"channel[{i}][1]", entry[1])))

    top = {k: doc.get(k, v) for k, v in _TOP_DEFAULTS.items()}
    cfg = ExperimentConfig(
        channel=pairs,
        transmit_power=_number("transmit_power", top["transmit_power"], lo=0, lo_open=True),
        antenna_noise_var=_number("antenna_noise_var", top["antenna_noise_var"], lo=0),
        processing_noise_var=_number("processing_noise_var", top["processing_noise_var"],
                                     lo=0, lo_open=True),
        tau=_number("tau", top["tau"], lo=0, lo_open=True, hi=1),
    )

    psi = top["psi_points"]
    if isinstance(psi, list):
        cfg.psi_points = [_number(f"psi_points[{i}]", v, lo=0) for i, v in enumerate(psi)]
        if cfg.psi_points != sorted(cfg.psi_points):
            raise ConfigError("psi_points", "explicit demands must be sorted ascending")
    else:
        cfg.psi_points = _number("psi_points", psi, lo=0, integer=True)

    algo = _section("algo", doc.get("algo"), _ALGO_DEFAULTS)
    if isinstance(algo["eta"], (list, tuple)):
        algo["eta"] = [_number(f"algo.eta[{i}]", v, lo=0, lo_open=True)
                       for i, v in enumerate(algo["eta"])]
    else:
        algo["eta"] = _number("algo.eta", algo["eta"], lo=0, lo_open=True)
    algo["n_samples"] = _number("algo.n_samples", algo["n_samples"], lo=1, integer=True)
    algo["conv_tol"] = _number("algo.conv_tol", algo["conv_tol"], lo=0, lo_open=True)
    algo["max_outer_iters"] = _number("algo.max_outer_iters", algo["max_outer_iters"],
                                      lo=1, integer=True)
    algo["sdp_tol"] = _number("algo.sdp_tol", algo["sdp_tol"], lo=0, lo_open=True, hi=1e-4)
    algo["seed"] = _number("algo.seed", algo["seed"], lo=0, integer=True)
    algo["eps_floor"] = _number("algo.eps_floor", algo["eps_floor"], lo=0, lo_open=True)
    if algo["covariance"] not in ("schur", "literal"):
        raise ConfigError("algo.covariance", "must be 'schur' or 'literal'")
    cfg.algo = algo

    base = _section("baselines", doc.get("baselines"), _BASELINE_DEFAULTS)
    for key in ("oracle", "as", "multichain"):
        if not isinstance(base[key], bool):
            raise ConfigError(f"baselines.{key}", "expected true or false")
    if base["oracle_delta"] is not None:
        base["oracle_delta"] = _number("baselines.oracle_delta", base["oracle_delta"],
                                       lo=0, lo_open=True, hi=0.5)
    cfg.baselines = base

    out = _section("output", doc.get("output"), _OUTPUT_DEFAULTS)
    if out["format"] not in _FORMATS:
        raise ConfigError("output.format", f"must be one of {', '.join(_FORMATS)}")
    cfg.output = out

    # surface model-level violations under the config's own field names
    try:
        cfg.channel_realization()
        cfg.system_params()
        ac = cfg.algo_config()
        ac.eta_vector(len(pairs))
    except InvalidParametersError as exc:
        raise ConfigError("<config>", str(exc)) from None
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "<document>"
        raise ConfigError(where, f"malformed document ({exc.__class__.__name__})") from None
    return config_from_dict(doc if doc is not None else {})


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return config_from_dict({"channel": [list(p) for p in PRESETS[name]]})
