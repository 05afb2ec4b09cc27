"""Built-in scenarios, one per qualitative claim about the flow.

Each entry declares its expected outcome as metric checks (see
:mod:`eqlmcf.scenarios.runner` for the metric names).  Resolutions are the
ones used by the acceptance suite.
"""

from __future__ import annotations

import math

from .config import ConfigError, ScenarioConfig

_SINGULAR = {"sup_velocity_threshold": 1e4}

_CATALOG = [
    dict(
        name="clifford",
        description="Round circle about the origin: shrinks self-similarly, extinction at 1/4.",
        generator={"id": "ellipse", "params": {"a": 1.0, "b": 1.0, "n": 512}},
        flow={"resample_initial": False, "stop": dict(_SINGULAR, max_time=1.0)},
        analysis={"mode": "singularity"},
        expected=[
            {"metric": "verdict", "equals": "I"},
            {"metric": "T_hat", "min": 0.245, "max": 0.255},
            {"metric": "w_hat_norm", "max": 0.05},
        ],
    ),
    dict(
        name="shrinker-circle",
        description="Radius-2 circle is a fixed point of the shrinker gauge.",
        generator={"id": "circle", "params": {"radius": 2.0, "n": 256}},
        flow={"gauge": "shrinker_gauge", "resample_initial": False, "stop": {"max_time": 1.0}},
        analysis={"mode": "stationary"},
        expected=[{"metric": "drift_rate", "max": 1e-4}],
    ),
    dict(
        name="grim-reaper",
        description="Grim Reaper translates with unit speed under curve shortening.",
        generator={"id": "grim_reaper", "params": {"samples": 761, "y_margin": 1e-3}},
        flow={"gauge": "csf_only", "resample_initial": False, "stop": {"max_time": 1.0}},
        analysis={"mode": "translator", "y_max": math.pi / 2 - 0.2},
        expected=[{"metric": "translation_error", "max": 1e-3}],
    ),
    dict(
        name="lawlor",
        description="Lawlor neck is stationary under the physical flow.",
        generator={"id": "arc", "params": {"alpha": math.pi / 2, "c": 1 / 3, "window": 4.0,
                                           "spacing": 1 / 128}},
        flow={"resample_initial": False, "stop": {"max_time": 1.0}},
        analysis={"mode": "stationary", "window": 3.0},
        expected=[
            {"metric": "drift_rate", "max": 1e-3},
            {"metric": "lagrangian_angle_oscillation", "max": 1e-4},
        ],
    ),
    dict(
        name="ellipse",
        description="Ellipse (3,1): singularity at the origin, not modelled on the Clifford torus.",
        generator={"id": "ellipse", "params": {"a": 3.0, "b": 1.0, "n": 1024}},
        flow={"resample_initial": False, "stop": {"max_time": 5.0}},
        analysis={"mode": "singularity"},
        expected=[
            {"metric": "w_hat_norm", "max": 0.05},
            {"metric": "blowup_model", "equals": "line_pair"},
            {"metric": "blowup_distance", "max": 0.05},
            {"metric": "fit_circle_2", "min": 0.05},
        ],
    ),
    dict(
        name="figure-eight",
        description="Figure eight squashes vertically and collapses at the origin.",
        generator={"id": "figure_eight", "params": {"scale": 3.0, "n": 1024}},
        flow={"resample_initial": False,
              "stop": {"max_time": 2.0, "sup_velocity_threshold": 2e4}},
        analysis={"mode": "singularity", "force_type2": True},
        expected=[
            {"metric": "w_hat_norm", "max": 0.05},
            {"metric": "aspect_monotone", "equals": True},
            {"metric": "aspect_decrease", "min": 5.0},
            {"metric": "type2_fit_grim_reaper", "max": 0.05},
            {"metric": "blowup_model", "equals": "line_multiplicity_two"},
        ],
    ),
    dict(
        name="obtuse-arc",
        description="Arc with opening angle 2.2: Type II singularity at the origin.",
        generator={"id": "arc", "params": {"alpha": 2.2, "c": 1 / 3, "window": 4.0, "n": 4096}},
        flow={"resample_initial": False, "stop": {"max_time": 5.0}},
        analysis={"mode": "singularity"},
        expected=[
            {"metric": "w_hat_norm", "max": 0.05},
            {"metric": "verdict", "equals": "II"},
            {"metric": "blowup_model", "equals": "line_pair"},
            {"metric": "blowdown_distance", "max": 0.05},
        ],
    ),
    dict(
        name="lawlor-stability",
        description="Right-angle arc inside a Lawlor sandwich converges to a Lawlor neck.",
        generator={"id": "arc", "params": {"alpha": math.pi / 2, "c": 1 / 3, "window": 4.0,
                                           "spacing": 1 / 32, "perturbation": 0.3}},
        flow={"resample_initial": False,
              "stop": {"max_time": 400.0, "steady_state_residual": 1e-5}},
        analysis={"mode": "stationary", "window": 3.0, "fit_lawlor": True},
        expected=[
            {"metric": "termination_reason", "equals": "steady_state_residual"},
            {"metric": "lawlor_fit", "max": 0.01},
        ],
        seed=1,
    ),
    dict(
        name="acute-arc",
        description="Arc with opening angle pi/4 converges to a self-expander.",
        generator={"id": "arc", "params": {"alpha": math.pi / 4, "c": 1 / 3, "window": 4.0,
                                           "spacing": 1 / 32}},
        flow={"gauge": "expander_gauge", "resample_initial": False,
              "stop": {"max_time": 30.0, "steady_state_residual": 1e-6}},
        analysis={"mode": "convergence", "target": "expander", "alpha": math.pi / 4,
                  "window": 3.0},
        expected=[{"metric": "target_distance", "max": 0.02}],
    ),
    dict(
        name="chekanov",
        description="Loop not enclosing the origin (the plotted Chekanov curve).",
        generator={"id": "chekanov", "params": {"n": 1024}},
        flow={"resample_initial": False, "stop": dict(_SINGULAR, max_time=1.0)},
        analysis={"mode": "singularity"},
        expected=[
            {"metric": "w_hat_norm", "min": 0.5},
            {"metric": "blowup_model", "equals": "circle_sqrt2"},
            {"metric": "blowup_distance", "max": 0.05},
        ],
    ),
    dict(
        name="chekanov-small",
        description="The Chekanov loop shrunk by 1/4 about its centroid: collapses to a "
                    "round point away from the origin.",
        generator={"id": "chekanov", "params": {"n": 1024, "scale": 0.25}},
        flow={"resample_initial": False, "stop": dict(_SINGULAR, max_time=1.0)},
        analysis={"mode": "singularity"},
        expected=[
            {"metric": "w_hat_norm", "min": 0.5},
            {"metric": "blowup_model", "equals": "circle_sqrt2"},
            {"metric": "blowup_distance", "max": 0.05},
        ],
    ),
    dict(
        name="star",
        description="Three-fold star-shaped curve: contracts to the origin.",
        generator={"id": "star", "params": {"k": 3, "eps": 0.2, "n": 512}},
        flow={"resample_initial": False, "stop": dict(_SINGULAR, max_time=1.0)},
        analysis={"mode": "singularity"},
        expected=[
            {"metric": "verdict", "equals": "I"},
            {"metric": "w_hat_norm", "max": 0.05},
        ],
    ),
]

SCENARIOS = {d["name"]: d for d in _CATALOG}


def list_scenarios():
    """``[(name, description), ...]`` in catalog order."""
    return [(d["name"], d["description"]) for d in _CATALOG]


def get_scenario(name):
    """A fresh :class:`ScenarioConfig` for a catalog entry."""
    if name not in SCENARIOS:
        raise ConfigError(f"scenario: unknown name {name!r}; expected one of {sorted(SCENARIOS)}")
    return ScenarioConfig.from_dict(SCENARIOS[name])
