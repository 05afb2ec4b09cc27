"""Run a scenario end to end and check its declared outcome.

Output layout under ``<output root>/<name>/`` (or ``config.output_dir``)::

    trajectory.jsonl, trajectory.manifest.json   snapshots + sidecar manifest
    report.json                                  SingularityReport (singularity mode)
    metrics.json                                 scalar metrics + check results
    diagnostics.csv                              per-snapshot diagnostics
    montage.svg, monitor.svg, overlay.svg        figures
    run_manifest.json                            config echo, digests, verdict

Metrics depend only on the saved trajectory (and the report derived from
it), so re-evaluating saved files reproduces the exit status.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..flow import file_digest, load_trajectory, run, save_trajectory
from ..geometry import aspect_ratio, point_polyline_distance, windowed_polyline_hausdorff
from ..singularity import (
    CurvatureProxy,
    _finite,
    analyze,
    fit_model,
    report_to_json_dict,
)
from ..solitons import expander_for_angle
from .config import ScenarioConfig, output_root
from .generators import generate
from .plots import emit_plots

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass
class ScenarioResult:
    name: str
    out_dir: Path
    passed: bool
    metrics: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    error: str | None = None

    @property
    def exit_code(self):
        if self.error is not None:
            return EXIT_ERROR
        return EXIT_PASS if self.passed else EXIT_FAIL


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def _aspect_metrics(traj):
    if not traj[0].curve.closed:
        return {}
    a = np.array([aspect_ratio(s.curve) for s in traj.snapshots])
    return {
        "aspect_initial": float(a[0]),
        "aspect_final": float(a[-1]),
        "aspect_decrease": float(a[0] / a[-1]),
        "aspect_monotone": bool(np.all(np.diff(a) <= 1e-12 * a[:-1])),
    }


def _singularity_metrics(report):
    m = {"verdict": report.type_verdict, "T_hat": report.T_hat}
    if report.w_hat is not None:
        m["w_hat_x"], m["w_hat_y"] = report.w_hat
        m["w_hat_norm"] = float(math.hypot(*report.w_hat))
    if report.classification:
        m["growth_per_decade"] = report.classification["growth_per_decade"]
    if report.estimate:
        m["T_hat_disagreement"] = report.estimate["disagreement"]
    b = report.blowup_match
    if b:
        m.update(blowup_model=b["model"], blowup_distance=b["distance"], blowup_sigma=b["sigma"])
        for f in b["fits"]:
            m[f"fit_{f['model']}"] = f["distance"]
    b = report.type2_match
    if b:
        m.update(type2_model=b["model"], type2_distance=b["distance"])
        for f in b["fits"]:
            m[f"type2_fit_{f['model']}"] = f["distance"]
    b = report.blowdown_match
    if b:
        m.update(blowdown_distance=b["distance"], blowdown_lambda=b["lambda"])
    return m


def _drift(a, b, window):
    return windowed_polyline_hausdorff([(a.points, a.closed)], [(b.points, b.closed)], window)


def translation_error(traj, y_max, speed=1.0):
    """Distance between the final curve and the initial one shifted by
    ``speed * elapsed`` along ``e1``, restricted to ``|y| <= y_max``."""
    first, last = traj[0], traj.final
    moved = first.curve.points + np.array([speed * (last.time - first.time), 0.0])
    fin = last.curve.points
    a = fin[np.abs(fin[:, 1]) <= y_max]
    b = moved[np.abs(moved[:, 1]) <= y_max]
    return float(max(point_polyline_distance(a, moved).max(),
                     point_polyline_distance(b, fin).max()))


def scenario_metrics(config, traj, report=None):
    """Scalar metrics of a finished run for the config's analysis mode."""
    a = config.analysis
    mode = a.get("mode", "singularity")
    final = traj.final
    m = {
        "n_snapshots": len(traj),
        "final_time": final.time,
        "termination_reason": traj.termination.reason if traj.termination else None,
        "final_sup_velocity": final.diagnostics.sup_velocity,
        "lagrangian_angle_oscillation": final.diagnostics.lagrangian_angle_oscillation,
    }
    m.update(_aspect_metrics(traj))
    if mode == "singularity" and report is not None:
        m.update(_singularity_metrics(report))
    elif mode == "stationary":
        elapsed = final.time - traj[0].time
        d = _drift(traj[0].curve, final.curve, a.get("window"))
        m["drift"] = d
        m["drift_rate"] = d / elapsed if elapsed > 0 else math.inf
        if a.get("fit_lawlor"):
            f = fit_model(final.curve, "lawlor", a.get("window", 3.0))
            m["lawlor_fit"] = f.distance
            m["lawlor_c"] = f.params.get("c")
    elif mode == "translator":
        m["translation_error"] = translation_error(traj, a.get("y_max", math.pi / 2 - 0.2))
    elif mode == "convergence":
        target = a.get("target", "expander")
        if target != "expander":
            raise ValueError(f"analysis.target: unsupported {target!r}")
        prof = expander_for_angle(a["alpha"])
        m["target_vertex_distance"] = prof.info["vertex_distance"]
        m["target_distance"] = _drift(final.curve, prof.curve, a.get("window", 3.0))
    return _finite(m)


def check_expected(expected, metrics):
    """Evaluate ``[{metric, equals|min|max}, ...]``; returns per-check dicts."""
    out = []
    for chk in expected:
        name = chk["metric"]
        value = metrics.get(name)
        ok = value is not None
        if ok and "equals" in chk:
            ok = value == chk["equals"]
        if ok and "min" in chk:
            ok = value >= chk["min"]
        if ok and "max" in chk:
            ok = value <= chk["max"]
        out.append(dict(chk, value=value, passed=bool(ok)))
    return out


def evaluate(config, traj):
    """Report (singularity mode only), metrics and checks of a trajectory."""
    a = config.analysis
    report = None
    if a.get("mode", "singularity") == "singularity":
        report = analyze(traj, type1_window=a.get("type1_window", 3.0),
                         type2_window=a.get("type2_window", 5.0),
                         force_type2=a.get("force_type2", False))
    metrics = scenario_metrics(config, traj, report)
    checks = check_expected(config.expected, metrics)
    return report, metrics, checks


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

DIAGNOSTIC_COLUMNS = ("time", "length", "min_radius", "sup_curvature", "sup_velocity",
                      "curvature_proxy", "aspect_ratio")


def write_diagnostics_csv(traj, path):
    proxy = CurvatureProxy.from_trajectory(traj)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for snap, K in zip(traj.snapshots, proxy.values):
            d = snap.diagnostics
            w.writerow([repr(float(v)) for v in (snap.time, d.length, d.min_radius,
                                                 d.sup_curvature, d.sup_velocity, K,
                                                 aspect_ratio(snap.curve))])


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def scenario_dir(config, root=None):
    if config.output_dir:
        return Path(config.output_dir)
    return Path(root or output_root()) / config.name


def run_scenario(config, root=None, plots=True):
    """Generate, evolve, analyse and check one scenario.

    Module errors are caught and recorded in ``run_manifest.json``; the
    returned :class:`ScenarioResult` then carries ``error`` and exit code 2.
    """
    if not isinstance(config, ScenarioConfig):
        config = ScenarioConfig.from_dict(config)
    out = scenario_dir(config, root)
    out.mkdir(parents=True, exist_ok=True)
    config_path = out / "config.json"
    _write_json(config_path, config.to_dict())
    manifest = {
        "artifact_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": config.to_dict(),
        "seed": config.seed,
        "inputs": {"config.json": file_digest(config_path)},
    }
    result = ScenarioResult(config.name, out, False)
    t0 = time.perf_counter()
    try:
        curve = generate(config.generator["id"], **config.generator["params"])
        traj = run(curve, config.flow_config(),
                   provenance={"scenario": config.name, "generator": config.generator,
                               "seed": config.seed, "artifact_version": __version__})
        manifest["wall_clock_run"] = time.perf_counter() - t0
        save_trajectory(traj, out / "trajectory.jsonl")
        report, metrics, checks = evaluate(config, traj)
        if report is not None:
            _write_json(out / "report.json", report_to_json_dict(report))
        write_diagnostics_csv(traj, out / "diagnostics.csv")
        if plots:
            mirror = not curve.closed
            emit_plots(traj, report, out, mirror=mirror)
        result.metrics, result.checks = metrics, checks
        result.passed = all(c["passed"] for c in checks)
        _write_json(out / "metrics.json", {"metrics": metrics, "checks": checks,
                                           "passed": result.passed})
        manifest["termination"] = traj.termination.to_dict() if traj.termination else None
    except Exception as exc:  # recorded, not raised: the manifest is the record
        result.error = f"{type(exc).__name__}: {exc}"
        manifest["traceback"] = traceback.format_exc()
    manifest["wall_clock"] = time.perf_counter() - t0
    manifest["checks"] = result.checks
    manifest["passed"] = result.passed
    manifest["error"] = result.error
    manifest["exit_code"] = result.exit_code
    manifest["outputs"] = {p.name: file_digest(p) for p in sorted(out.iterdir())
                           if p.is_file() and p.name not in ("run_manifest.json", "config.json")}
    _write_json(out / "run_manifest.json", _finite(manifest))
    return result


def reevaluate(out_dir, config=None):
    """Recompute metrics and checks from a saved scenario directory."""
    out_dir = Path(out_dir)
    if config is None:
        config = ScenarioConfig.from_json(out_dir / "config.json")
    traj = load_trajectory(out_dir / "trajectory.jsonl")
    _, metrics, checks = evaluate(config, traj)
    return metrics, checks, all(c["passed"] for c in checks)


def verify_outputs(out_dir):
    """Names of outputs whose bytes no longer match the run manifest."""
    out_dir = Path(out_dir)
    m = json.loads((out_dir / "run_manifest.json").read_text())
    bad = []
    for name, digest in m["outputs"].items():
        p = out_dir / name
        if not p.exists() or file_digest(p) != digest:
            bad.append(name)
    return bad
