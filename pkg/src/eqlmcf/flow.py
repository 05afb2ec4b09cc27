"""Time evolution of profile curves.

The evolution law is ``d gamma / dt = kappa - gamma_perp / |gamma|^2`` in the
physical gauge.  Three related gauges share the same machinery:

``csf_only``
    plain curve shortening, ``kappa``;
``shrinker_gauge``
    the physical flow seen in parabolically rescaled coordinates,
    ``kappa - gamma_perp/|gamma|^2 + gamma_perp/2``; self-shrinkers are fixed;
``expander_gauge``
    ``kappa - gamma_perp/|gamma|^2 - gamma_perp/2``; self-expanders are fixed.

Only the normal component of the velocity is geometric.  The tangential
component is chosen to keep the nodes evenly spaced (see :mod:`._kernels`).
"""

from __future__ import annotations

import hashlib
import json
import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels as K
from .geometry import (
    DEFAULT_ORIGIN_EPSILON,
    CurveDiagnostics,
    CurveError,
    ProfileCurve,
    curve_from_dict,
    curve_to_dict,
    diagnostics,
    resample,
)

GAUGES = {
    "physical": K.GAUGE_PHYSICAL,
    "csf_only": K.GAUGE_CSF,
    "shrinker_gauge": K.GAUGE_SHRINKER,
    "expander_gauge": K.GAUGE_EXPANDER,
}
_GAUGE_ALIASES = {"csf": "csf_only", "shrinker": "shrinker_gauge", "expander": "expander_gauge"}

_REASONS = {
    K.ST_TIME: "max_time",
    K.ST_VELOCITY: "sup_velocity_threshold",
    K.ST_PROXY: "curvature_proxy_threshold",
    K.ST_STEADY: "steady_state_residual",
    K.ST_MIN_RADIUS: "min_radius_threshold",
    K.ST_RESOLUTION: "resolution_limit",
    K.ST_MAX_STEPS: "max_steps",
    K.ST_UNDERFLOW: "dt_underflow",
}


class FlowError(RuntimeError):
    """Raised for invalid flow configurations or a failed integration."""


def _gauge_name(g):
    g = _GAUGE_ALIASES.get(g, g)
    if g not in GAUGES:
        raise FlowError(f"unknown gauge {g!r}; expected one of {sorted(GAUGES)}")
    return g


@dataclass(frozen=True)
class StopConditions:
    """Termination thresholds.  Whichever fires first ends the run.

    ``resolution_limit`` bounds ``sup|kappa| * mean spacing``: past it the
    polyline no longer resolves the curvature and the run stops rather than
    produce garbage.  ``max_curvature_proxy`` bounds
    ``max(sup|kappa|, sup|<gamma,N>|/|gamma|^2)``.
    """

    max_time: float = 10.0
    sup_velocity_threshold: float = math.inf
    min_radius_threshold: float = 0.0
    steady_state_residual: float = 0.0
    max_curvature_proxy: float = math.inf
    resolution_limit: float = 0.3
    max_steps: int = 10**9

    def __post_init__(self):
        if not (self.max_time > 0 and math.isfinite(self.max_time)):
            raise FlowError("max_time must be positive and finite")
        for name in ("sup_velocity_threshold", "max_curvature_proxy", "resolution_limit"):
            if not getattr(self, name) > 0:
                raise FlowError(f"{name} must be positive")
        for name in ("min_radius_threshold", "steady_state_residual"):
            if getattr(self, name) < 0:
                raise FlowError(f"{name} must be non-negative")


@dataclass(frozen=True)
class BoundaryPolicy:
    """Treatment of open-curve ends.

    Ends are pinned at their initial positions.  With ``snap_to_rays`` they are
    first moved radially onto the nearer asymptotic ray.
    """

    mode: str = "pinned_to_asymptote"
    window_radius: float | None = None
    snap_to_rays: bool = False

    def __post_init__(self):
        if self.mode != "pinned_to_asymptote":
            raise FlowError(f"unsupported boundary mode {self.mode!r}")
        if self.window_radius is not None and not self.window_radius > 0:
            raise FlowError("window_radius must be positive")


@dataclass(frozen=True)
class FlowConfig:
    """Numerical parameters of a run.

    Parameters
    ----------
    gauge : str
        ``physical``, ``csf_only``, ``shrinker_gauge`` or ``expander_gauge``.
    cfl_factor : float
        ``dt = cfl_factor * h_min**2``.
    target_spacing : float, optional
        Absolute spacing for the initial resample.  Defaults to
        ``spacing_fraction * length``.
    spacing_fraction : float
        Initial spacing as a fraction of the initial length.  Remeshing keeps
        the node count, so the spacing stays this fraction of the current length.
    resample_initial : bool
        Resample the initial curve before evolving it.
    remesh_trigger : float
        Max/min spacing ratio that triggers a full remesh.
    origin_epsilon : float, optional
        Absolute radius of the origin regularization.  By default it is
        ``origin_epsilon_factor`` times the current diameter.
    tangential_relaxation : float
        Fraction of the spacing defect removed per step by the tangential
        redistribution.
    snapshot_interval : float, optional
        Time cadence of snapshots (default ``max_time / 50``).
    velocity_cadence, proxy_cadence : float
        Extra snapshots whenever sup velocity or the curvature proxy has grown
        by this factor since the last such snapshot.
    """

    gauge: str = "physical"
    cfl_factor: float = 0.2
    target_spacing: float | None = None
    spacing_fraction: float = 1 / 256
    resample_initial: bool = True
    remesh_trigger: float = 2.0
    origin_epsilon: float | None = None
    origin_epsilon_factor: float = DEFAULT_ORIGIN_EPSILON
    tangential_relaxation: float = 0.05
    snapshot_interval: float | None = None
    velocity_cadence: float = 2.0
    proxy_cadence: float = 1.05
    stop: StopConditions = field(default_factory=StopConditions)
    boundary: BoundaryPolicy = field(default_factory=BoundaryPolicy)

    def __post_init__(self):
        object.__setattr__(self, "gauge", _gauge_name(self.gauge))
        if not 0 < self.cfl_factor <= 0.5:
            raise FlowError("cfl_factor must lie in (0, 0.5]")
        if not 0 < self.spacing_fraction < 1 / 8:
            raise FlowError("spacing_fraction must lie in (0, 1/8)")
        if self.target_spacing is not None and not self.target_spacing > 0:
            raise FlowError("target_spacing must be positive")
        if not self.remesh_trigger > 1:
            raise FlowError("remesh_trigger must exceed 1")
        if self.origin_epsilon is not None and not self.origin_epsilon > 0:
            raise FlowError("origin_epsilon must be positive")
        if not self.origin_epsilon_factor > 0:
            raise FlowError("origin_epsilon_factor must be positive")
        if not 0 <= self.tangential_relaxation < 1:
            raise FlowError("tangential_relaxation must lie in [0, 1)")
        if self.snapshot_interval is not None and not self.snapshot_interval > 0:
            raise FlowError("snapshot_interval must be positive")
        if not (self.velocity_cadence > 1 and self.proxy_cadence > 1):
            raise FlowError("cadence factors must exceed 1")

    def epsilon_for(self, curve):
        if self.origin_epsilon is not None:
            return self.origin_epsilon
        return self.origin_epsilon_factor * curve.diameter()

    def _epsilon_points(self, X):
        if self.origin_epsilon is not None:
            return self.origin_epsilon
        return self.origin_epsilon_factor * float(np.hypot(*(X.max(axis=0) - X.min(axis=0))))

    def to_dict(self):
        """Plain dict; infinite thresholds become ``None`` to keep strict JSON."""
        d = asdict(self)
        for k, v in d["stop"].items():
            if isinstance(v, float) and math.isinf(v):
                d["stop"][k] = None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "stop" in d:
            d["stop"] = StopConditions(**{k: v for k, v in d["stop"].items() if v is not None})
        if "boundary" in d:
            d["boundary"] = BoundaryPolicy(**d["boundary"])
        return cls(**d)

    def with_stop(self, **kw):
        return replace(self, stop=replace(self.stop, **kw))


@dataclass(frozen=True)
class Snapshot:
    time: float
    curve: ProfileCurve
    diagnostics: CurveDiagnostics

    def to_dict(self):
        d = curve_to_dict(self.curve, self.time)
        d["diagnostics"] = self.diagnostics.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        curve = curve_from_dict(d, validate=False)
        diag = d.get("diagnostics")
        diag = CurveDiagnostics.from_dict(diag) if diag else diagnostics(curve)
        return cls(float(d["time"]), curve, diag)


@dataclass(frozen=True)
class TerminationRecord:
    reason: str
    time: float
    steps: int
    sup_velocity: float
    curvature_proxy: float
    remesh_count: int = 0
    error: str | None = None

    def to_dict(self):
        return asdict(self)


@dataclass
class Trajectory:
    snapshots: list
    termination: TerminationRecord | None = None
    config: FlowConfig | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self):
        return self.snapshots[-1]

    def append(self, snap):
        if self.snapshots and not snap.time > self.snapshots[-1].time:
            raise FlowError("snapshot times must be strictly increasing")
        self.snapshots.append(snap)

    def manifest(self):
        return {
            "config": self.config.to_dict() if self.config else None,
            "provenance": self.provenance,
            "termination": self.termination.to_dict() if self.termination else None,
            "n_snapshots": len(self.snapshots),
        }


# --------------------------------------------------------------------------
# Stepping
# --------------------------------------------------------------------------

def _prepare(initial, config):
    curve = initial
    if not curve.closed and config.boundary.snap_to_rays:
        pts = curve.points.copy()
        pts[0] = curve.asymptotics.project(pts[0])
        pts[-1] = curve.asymptotics.project(pts[-1])
        curve = curve.with_points(pts)
    if config.resample_initial:
        h = config.target_spacing or config.spacing_fraction * curve.length()
        curve = resample(curve, target_spacing=h)
    return curve


def _advance(X, closed, config, eps, t, t_stop, v_stop=math.inf, K_stop=math.inf,
             remesh=True, max_steps=None):
    stop = config.stop
    return K.advance(
        X, closed, GAUGES[config.gauge], eps, config.cfl_factor,
        config.tangential_relaxation, t, t_stop,
        min(v_stop, stop.sup_velocity_threshold),
        min(K_stop, stop.max_curvature_proxy),
        stop.steady_state_residual, stop.min_radius_threshold, stop.resolution_limit,
        config.remesh_trigger if remesh else math.inf,
        stop.max_steps if max_steps is None else max_steps,
        1e-14 * stop.max_time,
    )


def _remesh(curve):
    return resample(curve, n=curve.n)


def step(curve, config, t=0.0, dt=None):
    """One explicit step.

    The step size is ``cfl_factor * h_min**2``, halved while the largest
    displacement exceeds half the minimum spacing; ``dt`` caps it further.
    Remeshes afterwards if the spacing ratio exceeds the trigger.

    Returns
    -------
    Snapshot
        State after the step.

    Raises
    ------
    FlowError
        If the step size underflows.
    """
    X = np.ascontiguousarray(curve.points, dtype=float).copy()
    t_stop = t + dt if dt is not None else math.inf
    cfg = replace(config, stop=replace(config.stop, max_time=max(config.stop.max_time, 1.0)))
    eps = config.epsilon_for(curve)
    t_new, steps, status, _, _ = K.advance(
        X, curve.closed, GAUGES[config.gauge], eps, config.cfl_factor,
        config.tangential_relaxation, t, t_stop, math.inf, math.inf, 0.0, 0.0, math.inf,
        math.inf, 1, 1e-14 * cfg.stop.max_time)
    if status == K.ST_UNDERFLOW:
        raise FlowError("time step underflow")
    out = curve.with_points(X)
    if out.spacing_ratio() > config.remesh_trigger:
        out = _remesh(out)
    return Snapshot(t_new, out, diagnostics(out, config.epsilon_for(out)))


def _snapshot(t, X, template, config):
    curve = template.with_points(X.copy())
    return Snapshot(t, curve, diagnostics(curve, config.epsilon_for(curve)))


def run(initial, config=None, provenance=None):
    """Evolve ``initial`` until a stop condition fires.

    Snapshots are recorded at ``t = 0``, every ``snapshot_interval``, whenever
    the sup velocity has grown by ``velocity_cadence`` or the curvature proxy
    by ``proxy_cadence`` since the last such snapshot, and at termination.

    Returns
    -------
    Trajectory
        Terminated by exactly one stop condition.  A step-size underflow ends
        the run with reason ``dt_underflow`` and ``error`` set.
    """
    config = config or FlowConfig()
    stop = config.stop
    curve = _prepare(initial, config)
    closed = curve.closed
    X = np.ascontiguousarray(curve.points, dtype=float).copy()
    traj = Trajectory([], config=config, provenance=dict(provenance or {}))
    t = 0.0
    first = _snapshot(t, X, curve, config)
    traj.append(first)

    interval = config.snapshot_interval or stop.max_time / 50
    next_t = min(interval, stop.max_time)
    next_v = max(first.diagnostics.sup_velocity, 1e-300) * config.velocity_cadence
    eps = config.epsilon_for(curve)
    *_, K0 = _advance(X.copy(), closed, config, eps, t, next_t, max_steps=0)
    next_K = K0 * config.proxy_cadence
    steps_total = 0
    remeshes = 0
    last_remesh_steps = -1
    while True:
        eps = config._epsilon_points(X)
        t, steps, status, vmax, Kp = _advance(X, closed, config, eps, t, next_t, next_v, next_K)
        steps_total += steps
        # re-arm the proxy cadence when the proxy has decayed since the last snapshot
        next_K = min(next_K, Kp * config.proxy_cadence)
        record = False
        reason = None
        if status == K.ST_TIME:
            record = True
            if t >= stop.max_time:
                reason = "max_time"
            else:
                next_t = min(next_t + interval, stop.max_time)
        elif status == K.ST_VELOCITY:
            if vmax >= stop.sup_velocity_threshold:
                reason = _REASONS[status]
            else:
                record = True
                next_v = vmax * config.velocity_cadence
        elif status == K.ST_PROXY:
            if Kp >= stop.max_curvature_proxy:
                reason = _REASONS[status]
            else:
                record = True
                next_K = Kp * config.proxy_cadence
        elif status == K.ST_REMESH:
            if steps_total == last_remesh_steps:
                reason = "remesh_failed"
            else:
                curve = _remesh(curve.with_points(X))
                X = np.ascontiguousarray(curve.points).copy()
                remeshes += 1
                last_remesh_steps = steps_total
                continue
        else:
            reason = _REASONS[status]

        if record or reason is not None:
            if t > traj.final.time:
                traj.append(_snapshot(t, X, curve, config))
        if reason is not None:
            error = None
            if reason in ("dt_underflow", "remesh_failed"):
                error = f"integration stopped: {reason}"
            traj.termination = TerminationRecord(reason, t, steps_total, vmax, Kp, remeshes, error)
            return traj


def _run_one(args):
    initial, config = args
    try:
        return run(initial, config)
    except (FlowError, CurveError, ValueError) as exc:
        return RunFailure(type(exc).__name__, str(exc))


@dataclass(frozen=True)
class RunFailure:
    """Placeholder for an ensemble member that raised."""

    error_type: str
    message: str


def run_ensemble(jobs, max_workers=1):
    """Run independent ``(initial_curve, FlowConfig)`` jobs.

    Results come back in input order and equal the sequential results
    bit for bit.  A job that raises yields a :class:`RunFailure` in its slot
    instead of aborting the batch.
    """
    jobs = list(jobs)
    if not jobs:
        return []
    if max_workers <= 1 or len(jobs) == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=max_workers) as ex:
        return list(ex.map(_run_one, jobs))


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

def manifest_path_for(path):
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_trajectory(traj, path, extra_manifest=None):
    """Write snapshots as JSON lines plus a sidecar ``<stem>.manifest.json``.

    Returns the manifest path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for snap in traj.snapshots:
            fh.write(json.dumps(snap.to_dict()) + "\n")
    manifest = traj.manifest()
    manifest["trajectory_file"] = path.name
    manifest["trajectory_sha256"] = file_digest(path)
    if extra_manifest:
        manifest.update(extra_manifest)
    mpath = manifest_path_for(path)
    mpath.write_text(json.dumps(manifest, indent=2))
    return mpath


def load_trajectory(path):
    path = Path(path)
    snaps = []
    with path.open() as fh:
        for line in fh:
            if line.strip():
                snaps.append(Snapshot.from_dict(json.loads(line)))
    traj = Trajectory(snaps)
    mpath = manifest_path_for(path)
    if mpath.exists():
        m = json.loads(mpath.read_text())
        if m.get("config"):
            traj.config = FlowConfig.from_dict(m["config"])
        if m.get("termination"):
            traj.termination = TerminationRecord(**m["termination"])
        traj.provenance = m.get("provenance") or {}
    return traj


def run_timed(initial, config=None, provenance=None):
    """:func:`run` plus wall-clock seconds."""
    t0 = _time.perf_counter()
    traj = run(initial, config, provenance)
    return traj, _time.perf_counter() - t0
