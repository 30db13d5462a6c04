"""Flat key/value configuration covering every tunable in the pipeline.

Values come from, in increasing precedence: built-in defaults, a config
file (LIPKEY_CONFIG env var or explicit path), then ``--set key=value``
overrides. Unknown keys are rejected. Defaults equal the published
parameter values where one exists.
"""

from __future__ import annotations

import os
from typing import Iterable, Mapping

from .errors import ConfigError
from .keypoints import BriskParams, HarrisParams
from .preprocess import EnhanceParams

DEFAULTS: dict[str, object] = {
    "enhance.alpha": 0.125,
    "enhance.beta": 0.25,
    "enhance.rho": 0.1,
    "enhance.gamma": 0.5,
    "harris.sigma": 1.5,
    "harris.k": 0.04,
    "harris.response_threshold": 50_000.0,
    "harris.nms_radius": 3,
    "brisk.octaves": 4,
    "brisk.threshold_rel": 0.01,
    "pca.keep_fraction": 0.5,
    "recognize.epsilon_y": 2.0,
    "recognize.v_max": 10_000.0,
    "recognize.d1": 2500.0,
    "recognize.d2": 3000.0,
    "recognize.d3": 2000.0,
    "recognize.d4_low": 5000.0,
    "recognize.d4_high": 7000.0,
    "recognize.state_map": "state1:smile,state2:smile,state3:laugh,state4:laugh",
    "recognize.algo1_true_label": "smile",
    "recognize.algo1_false_label": "neutral",
    "recognize.spline_count": 50,
    "eval.workers": 4,
    "eval.rotation_step": 1.0,
    "eval.rotation_max": 90.0,
}

ENV_CONFIG = "LIPKEY_CONFIG"

_VALID_LABELS = {"neutral", "smile", "laugh"}
_STATES = ("state1", "state2", "state3", "state4")


def _coerce(key: str, raw: object) -> object:
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(default, bool):
            return str(raw).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(str(raw))
        if isinstance(default, float):
            return float(str(raw))
        return str(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r} for key {key}") from exc


def parse_config_text(text: str) -> dict[str, object]:
    """Parse line-oriented ``key = value`` text with # comments."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, value)
    return values


class Config:
    """Immutable view over the merged key/value table."""

    def __init__(self, values: Mapping[str, object] | None = None):
        merged = dict(DEFAULTS)
        for key, value in (values or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, value)
        self._values = merged

    @classmethod
    def from_sources(
        cls,
        path: str | None = None,
        overrides: Iterable[str] | Mapping[str, object] | None = None,
        use_env: bool = True,
    ) -> "Config":
        values: dict[str, object] = {}
        if path is None and use_env:
            path = os.environ.get(ENV_CONFIG) or None
        if path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        if overrides is not None:
            if isinstance(overrides, Mapping):
                values.update(overrides)
            else:
                for item in overrides:
                    if "=" not in item:
                        raise ConfigError(f"--set expects key=value, got {item!r}")
                    key, _, value = item.partition("=")
                    values[key.strip()] = value
        return cls(values)

    def get(self, key: str) -> object:
        if key not in self._values:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def as_dict(self) -> dict[str, object]:
        return dict(self._values)

    # typed views over the groups the pipeline consumes

    def enhance_params(self) -> EnhanceParams:
        return EnhanceParams(
            alpha=float(self.get("enhance.alpha")),
            beta=float(self.get("enhance.beta")),
            rho=float(self.get("enhance.rho")),
            gamma=float(self.get("enhance.gamma")),
        )

    def harris_params(self) -> HarrisParams:
        return HarrisParams(
            sigma=float(self.get("harris.sigma")),
            k=float(self.get("harris.k")),
            response_threshold=float(self.get("harris.response_threshold")),
            nms_radius=int(self.get("harris.nms_radius")),
        )

    def brisk_params(self) -> BriskParams:
        return BriskParams(
            octaves=int(self.get("brisk.octaves")),
            threshold_rel=float(self.get("brisk.threshold_rel")),
        )

    def state_map(self) -> dict[str, str]:
        raw = str(self.get("recognize.state_map"))
        mapping: dict[str, str] = {}
        for part in raw.split(","):
            part = part.strip()
            if not part:
                continue
            state, _, label = part.partition(":")
            state, label = state.strip(), label.strip()
            if state not in _STATES:
                raise ConfigError(f"state_map names unknown state {state!r}")
            if label not in _VALID_LABELS:
                raise ConfigError(f"state_map names unknown label {label!r}")
            mapping[state] = label
        missing = [s for s in _STATES if s not in mapping]
        if missing:
            raise ConfigError(f"state_map must cover every state, missing {missing}")
        return mapping
