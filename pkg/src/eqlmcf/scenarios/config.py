"""Scenario configuration: a flat JSON document with an explicit generator block.

Example::

    {
      "name": "clifford",
      "generator": {"id": "ellipse", "params": {"a": 1, "b": 1, "n": 512}},
      "flow": {"gauge": "physical", "stop": {"max_time": 1, "sup_velocity_threshold": 1000}},
      "analysis": {"mode": "singularity"},
      "expected": [{"metric": "verdict", "equals": "I"}],
      "seed": null
    }
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..flow import FlowConfig, FlowError

OUTPUT_ROOT_ENV = "EQLMCF_OUTPUT_ROOT"
ANALYSIS_MODES = ("singularity", "stationary", "translator", "convergence")


class ConfigError(ValueError):
    pass


def output_root(default="runs"):
    """Root directory for scenario outputs (``$EQLMCF_OUTPUT_ROOT`` overrides)."""
    return Path(os.environ.get(OUTPUT_ROOT_ENV) or default)


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ScenarioConfig:
    name: str
    generator: dict
    flow: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=lambda: {"mode": "singularity"})
    expected: list = field(default_factory=list)
    description: str = ""
    output_dir: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ConfigError("name: must be a non-empty string")
        if "id" not in self.generator:
            raise ConfigError("generator.id: missing")
        self.generator.setdefault("params", {})
        mode = self.analysis.get("mode", "singularity")
        if mode not in ANALYSIS_MODES:
            raise ConfigError(f"analysis.mode: {mode!r} not in {ANALYSIS_MODES}")
        for i, chk in enumerate(self.expected):
            if "metric" not in chk:
                raise ConfigError(f"expected[{i}].metric: missing")
        if self.seed is not None and "perturbation" in self.generator["params"]:
            self.generator["params"].setdefault("seed", self.seed)
        # fail early on bad flow settings
        self.flow_config()

    def flow_config(self):
        try:
            return FlowConfig.from_dict(self.flow)
        except (TypeError, FlowError) as exc:
            raise ConfigError(f"flow: {exc}") from None

    def to_dict(self):
        return {
            "name": self.name,
            "description": self.description,
            "generator": self.generator,
            "flow": self.flow,
            "analysis": self.analysis,
            "expected": self.expected,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "scenario" in d:
            from .catalog import get_scenario

            base = get_scenario(d.pop("scenario")).to_dict()
            d = _merge(base, d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown fields: {sorted(unknown)}")
        missing = [k for k in ("name", "generator") if k not in d]
        if missing:
            raise ConfigError(f"missing fields: {missing}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_overrides(self, **over):
        return ScenarioConfig.from_dict(_merge(self.to_dict(), over))
