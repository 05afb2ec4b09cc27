import json
import math

import numpy as np
import pytest

from eqlmcf.flow import load_trajectory, run
from eqlmcf.geometry import winding_and_turning
from eqlmcf.scenarios.catalog import SCENARIOS, get_scenario, list_scenarios
from eqlmcf.scenarios.config import ConfigError, ScenarioConfig, output_root
from eqlmcf.scenarios.generators import (
    GeneratorError,
    arc,
    chekanov,
    ellipse,
    figure_eight,
    generate,
)
from eqlmcf.scenarios.plots import emit_plots
from eqlmcf.scenarios.runner import (
    EXIT_ERROR,
    EXIT_PASS,
    check_expected,
    evaluate,
    reevaluate,
    run_scenario,
    verify_outputs,
)
from eqlmcf.singularity import analyze

# ---------------------------------------------------------------- generators


@pytest.mark.parametrize("name, params, field", [
    ("ellipse", {"a": -1.0}, "a"),
    ("circle", {"radius": 0.0}, "radius"),
    ("figure_eight", {"n": 101}, "n"),
    ("star", {"eps": 1.5}, "eps"),
    ("arc", {"alpha": 4.0}, "alpha"),
    ("arc", {"perturbation": 1.0}, "perturbation"),
    ("chekanov", {"scale": 0.0}, "scale"),
    ("grim_reaper", {"y_margin": 2.0}, "y_margin"),
])
def test_generator_errors_name_the_field(name, params, field):
    with pytest.raises(GeneratorError, match=field):
        generate(name, **params)


def test_unknown_generator_and_parameter():
    with pytest.raises(GeneratorError, match="unknown id"):
        generate("torus")
    with pytest.raises(GeneratorError, match="ellipse"):
        generate("ellipse", c=1.0)


def test_ellipse_axes():
    pts = ellipse(3.0, 1.0, 1024).points
    assert np.abs(pts[:, 0]).max() == pytest.approx(3.0, abs=1e-4)
    assert np.abs(pts[:, 1]).max() == pytest.approx(1.0, abs=1e-4)
    np.testing.assert_allclose((pts[:, 0] / 3) ** 2 + pts[:, 1] ** 2, 1.0, atol=1e-3)


def test_figure_eight_crosses_at_origin():
    c = figure_eight(3.0, 256)
    np.testing.assert_array_equal(c.points[[0, 128]], 0.0)
    assert winding_and_turning(c)[1] == 0


def test_chekanov_avoids_origin():
    c = chekanov(512)
    assert np.hypot(*c.points.T).min() > 0.3
    assert winding_and_turning(c)[0] == 0


def test_perturbed_arc_lies_in_lawlor_sandwich():
    eps, c0 = 0.3, 1 / 3
    a = arc(math.pi / 2, c0, 4.0, spacing=1 / 32, perturbation=eps, seed=1)
    x, y = a.points.T
    cx = y**2 - x**2
    assert np.all(cx >= c0 * (1 - eps) - 1e-3)
    assert np.all(cx <= c0 * (1 + eps) + 1e-3)
    b = arc(math.pi / 2, c0, 4.0, spacing=1 / 32, perturbation=eps, seed=1)
    assert a.points.tobytes() == b.points.tobytes()


# ---------------------------------------------------------------- config & catalog

def test_catalog_entries_validate():
    names = [n for n, _ in list_scenarios()]
    assert names == list(SCENARIOS)
    for n in names:
        cfg = get_scenario(n)
        assert cfg.name == n and cfg.expected


def test_unknown_scenario():
    with pytest.raises(ConfigError, match="unknown name"):
        get_scenario("sphere")


def test_config_extends_catalog_entry():
    cfg = ScenarioConfig.from_dict({"scenario": "clifford", "name": "small",
                                    "generator": {"params": {"n": 64}}})
    assert cfg.name == "small"
    assert cfg.generator == {"id": "ellipse", "params": {"a": 1.0, "b": 1.0, "n": 64}}
    assert cfg.expected == get_scenario("clifford").expected


@pytest.mark.parametrize("d, match", [
    ({"name": "x", "generator": {"id": "circle"}, "colour": 1}, "unknown fields"),
    ({"name": "", "generator": {"id": "circle"}}, "name"),
    ({"name": "x", "generator": {}}, "generator.id"),
    ({"name": "x", "generator": {"id": "circle"}, "analysis": {"mode": "guess"}}, "analysis.mode"),
    ({"name": "x", "generator": {"id": "circle"}, "expected": [{"max": 1}]}, "metric"),
    ({"name": "x", "generator": {"id": "circle"}, "flow": {"gauge": "nope"}}, "flow"),
    ({"name": "x", "generator": {"id": "circle"}, "flow": {"speed": 2}}, "flow"),
])
def test_config_errors(d, match):
    with pytest.raises(ConfigError, match=match):
        ScenarioConfig.from_dict(d)


def test_seed_reaches_perturbation():
    cfg = get_scenario("lawlor-stability")
    assert cfg.generator["params"]["seed"] == 1


def test_output_root_env(monkeypatch, tmp_path):
    monkeypatch.setenv("EQLMCF_OUTPUT_ROOT", str(tmp_path))
    assert output_root() == tmp_path
    monkeypatch.delenv("EQLMCF_OUTPUT_ROOT")
    assert str(output_root()) == "runs"


@pytest.mark.parametrize("check, value, ok", [
    ({"metric": "m", "max": 1.0}, 0.5, True),
    ({"metric": "m", "max": 1.0}, 1.5, False),
    ({"metric": "m", "min": 1.0}, 0.5, False),
    ({"metric": "m", "equals": "I"}, "I", True),
    ({"metric": "m", "equals": "I"}, None, False),
])
def test_check_expected(check, value, ok):
    (res,) = check_expected([check], {"m": value})
    assert res["passed"] is ok and res["value"] == value


# ---------------------------------------------------------------- runner

@pytest.fixture(scope="module")
def shrinker_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    res = run_scenario(get_scenario("shrinker-circle"), root=root)
    return res


def test_runner_writes_outputs(shrinker_run):
    out = shrinker_run.out_dir
    assert shrinker_run.exit_code == EXIT_PASS
    for name in ("config.json", "trajectory.jsonl", "trajectory.manifest.json", "metrics.json",
                 "diagnostics.csv", "montage.svg", "run_manifest.json"):
        assert (out / name).exists(), name
    # no singularity report for a stationary run, so only the montage
    assert not (out / "overlay.svg").exists()
    m = json.loads((out / "run_manifest.json").read_text())
    assert m["exit_code"] == 0 and m["error"] is None
    assert m["termination"]["reason"] == "max_time"
    assert set(m["outputs"]) >= {"trajectory.jsonl", "metrics.json", "diagnostics.csv"}
    header = (out / "diagnostics.csv").read_text().splitlines()[0]
    assert header == "time,length,min_radius,sup_curvature,sup_velocity,curvature_proxy,aspect_ratio"
    assert verify_outputs(out) == []


def test_reevaluation_reproduces_verdict(shrinker_run):
    metrics, checks, passed = reevaluate(shrinker_run.out_dir)
    assert passed == shrinker_run.passed
    assert metrics == shrinker_run.metrics


def test_verify_outputs_detects_tampering(tmp_path):
    cfg = get_scenario("clifford").with_overrides(
        name="tamper", generator={"params": {"n": 64}}, flow={"stop": {"max_time": 0.05}})
    res = run_scenario(cfg, root=tmp_path, plots=False)
    p = res.out_dir / "metrics.json"
    p.write_text(p.read_text().replace("0", "1", 1))
    assert verify_outputs(res.out_dir) == ["metrics.json"]


def test_runner_records_module_errors(tmp_path):
    cfg = ScenarioConfig.from_dict({"name": "bad", "generator": {"id": "circle",
                                                                 "params": {"radius": -1}}})
    res = run_scenario(cfg, root=tmp_path)
    assert res.exit_code == EXIT_ERROR
    m = json.loads((tmp_path / "bad" / "run_manifest.json").read_text())
    assert "radius" in m["error"] and m["exit_code"] == EXIT_ERROR


def test_translator_metric_small_for_grim_reaper():
    cfg = get_scenario("grim-reaper").with_overrides(flow={"stop": {"max_time": 0.1}})
    traj = run(generate(cfg.generator["id"], **cfg.generator["params"]), cfg.flow_config())
    _, metrics, _ = evaluate(cfg, traj)
    assert metrics["translation_error"] < 1e-3


# ---------------------------------------------------------------- plots

def test_plots_are_byte_deterministic(shrinker_run, tmp_path):
    traj = load_trajectory(shrinker_run.out_dir / "trajectory.jsonl")
    a = emit_plots(traj, None, tmp_path / "a")
    b = emit_plots(traj, None, tmp_path / "b")
    assert [p.name for p in a] == ["montage.svg"]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_plots_with_singularity_report(tmp_path):
    cfg = get_scenario("clifford").with_overrides(generator={"params": {"n": 128}})
    traj = run(generate("ellipse", **cfg.generator["params"]), cfg.flow_config())
    report = analyze(traj)
    paths = emit_plots(traj, report, tmp_path)
    assert [p.name for p in paths] == ["montage.svg", "monitor.svg", "overlay.svg"]
    for p in paths:
        assert p.read_text().lstrip().startswith("<?xml")
