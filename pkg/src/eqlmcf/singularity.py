"""Finite-time singularities: timing, Type I/II classification, rescaling,
blow-down and matching against model curves.

Curvature proxy
---------------
For an equivariant surface over ``gamma`` the principal curvatures are the
curve curvature and the curvature of the orbit circles,
``<gamma, N> / |gamma|^2``.  The proxy is the larger of the two sup-norms,
taken over samples outside the origin regularization:

    K = max(sup |k|, sup |<gamma, N>| / |gamma|^2).

The Type I monitor is ``K^2 (T - t)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .geometry import (
    CurveError,
    ProfileCurve,
    default_origin_epsilon,
    signed_curvature,
    tangents_normals,
    windowed_polyline_hausdorff,
)

SINGULAR_REASONS = (
    "sup_velocity_threshold",
    "min_radius_threshold",
    "curvature_proxy_threshold",
    "resolution_limit",
)
TYPE_I_GROWTH = 1.3
TYPE_II_GROWTH = 1.6
UNMATCHED_DISTANCE = 0.5
MIN_DECADE_FRAMES = 8


class SingularityError(ValueError):
    """Raised when a trajectory does not support the requested analysis."""


# --------------------------------------------------------------------------
# Proxy
# --------------------------------------------------------------------------

def curvature_proxy(curve, origin_epsilon=None):
    """Return ``(K, index)``: the proxy value and the sample attaining it."""
    if origin_epsilon is None:
        origin_epsilon = default_origin_epsilon(curve)
    k = np.abs(signed_curvature(curve))
    _, nrm = tangents_normals(curve)
    pts = curve.points
    r2 = np.einsum("ij,ij->i", pts, pts)
    far = r2 >= origin_epsilon**2
    orb = np.zeros(len(pts))
    orb[far] = np.abs(np.einsum("ij,ij->i", pts[far], nrm[far])) / r2[far]
    both = np.maximum(k, orb)
    if not curve.closed:
        both[[0, -1]] = 0.0
    i = int(np.argmax(both))
    return float(both[i]), i


@dataclass(frozen=True)
class CurvatureProxy:
    times: np.ndarray
    values: np.ndarray
    locations: np.ndarray
    spacings: np.ndarray

    @classmethod
    def from_trajectory(cls, traj):
        t, K, loc, h = [], [], [], []
        for snap in traj.snapshots:
            val, i = curvature_proxy(snap.curve)
            t.append(snap.time)
            K.append(val)
            loc.append(snap.curve.points[i])
            h.append(snap.curve.length() / snap.curve.n)
        return cls(np.array(t), np.array(K), np.array(loc), np.array(h))


def _canonical_signs(loc):
    """Flip ``gamma -> -gamma`` so consecutive locations stay on one branch."""
    out = loc.copy()
    for i in range(len(out) - 2, -1, -1):
        if out[i] @ out[i + 1] < 0:
            out[i] = -out[i]
    return out


# --------------------------------------------------------------------------
# Singular time and point
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SingularityEstimate:
    T_hat: float
    w_hat: tuple
    T_linear: float
    T_power: float | None
    power_exponent: float | None
    estimator: str
    disagreement: float
    disagreement_flag: bool
    n_decade_frames: int
    w_method: str

    def to_dict(self):
        return asdict(self)


def _final_decade(proxy):
    """Trailing run of frames with ``1/K^2`` within a factor 10 of the last."""
    inv = 1.0 / proxy.values**2
    outside = np.nonzero(inv > 10.0 * inv[-1])[0]
    start = outside[-1] + 1 if len(outside) else 0
    return np.arange(start, len(inv))


def _power_fit(t, inv):
    """Fit ``inv = a (T - t)^q``; returns ``(T, q)`` or ``None``."""
    span = t[-1] - t[0]
    if span <= 0:
        return None
    lo, hi = t[-1] + 1e-9 * max(span, 1e-300), t[-1] + 5.0 * span

    def resid(T):
        x = np.log(T - t)
        A = np.c_[x, np.ones_like(x)]
        coef, res, *_ = np.linalg.lstsq(A, np.log(inv), rcond=None)
        return float(np.sum((A @ coef - np.log(inv)) ** 2))

    # bracket on a log grid, then refine
    grid = t[-1] + span * np.logspace(-6, math.log10(5.0), 200)
    vals = [resid(T) for T in grid]
    j = int(np.argmin(vals))
    a = grid[max(j - 1, 0)] if j > 0 else lo
    b = grid[min(j + 1, len(grid) - 1)]
    if j == len(grid) - 1:
        return None
    opt = minimize_scalar(resid, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, abs(t[-1]))})
    T = float(opt.x)
    x = np.log(T - t)
    q = float(np.polyfit(x, np.log(inv), 1)[0])
    if not 0.3 < q < 3.0:
        return None
    return T, q


def estimate_singularity(traj, min_frames=MIN_DECADE_FRAMES, proxy=None):
    """Estimate the singular time ``T_hat`` and point ``w_hat``.

    ``T_hat`` extrapolates ``1/K^2`` over the final decade of the proxy (the
    frames with ``1/K^2`` within a factor 10 of its last value).  A linear fit
    is exact for Type I rates; a power law ``a (T - t)^q`` re-estimate is
    preferred when it fits with a sensible exponent, and a relative
    disagreement above 5% between the two is flagged.

    ``w_hat`` is the centroid of the final curve when a closed curve collapses
    as a whole (final diameter below 10% of the initial one).  Otherwise the
    proxy argmax locations, taken modulo ``gamma -> -gamma``, are extrapolated
    linearly in ``sqrt(T_hat - t)``.
    """
    term = traj.termination
    if term is not None and term.reason not in SINGULAR_REASONS:
        raise SingularityError(f"trajectory ended by {term.reason!r}; no singularity detected")
    proxy = proxy or CurvatureProxy.from_trajectory(traj)
    idx = _final_decade(proxy)
    if len(idx) < min_frames:
        raise SingularityError(f"only {len(idx)} frames in the final decade (need {min_frames})")
    t = proxy.times[idx]
    inv = 1.0 / proxy.values[idx] ** 2
    slope, icpt = np.polyfit(t, inv, 1)
    if slope >= 0:
        raise SingularityError("proxy is not growing over the final decade")
    T_lin = float(-icpt / slope)
    T_lin = max(T_lin, float(t[-1]))
    pw = _power_fit(t, inv)
    if pw is not None:
        T_pow, q = pw
        T_hat, how = T_pow, "power_law"
        disagreement = abs(T_lin - T_pow) / abs(T_pow)
    else:
        T_pow = q = None
        T_hat, how = T_lin, "linear"
        disagreement = 0.0

    first = traj.snapshots[0].curve
    last = traj.snapshots[-1].curve
    if last.closed and last.diameter() < 0.1 * first.diameter():
        w = last.points.mean(axis=0)
        w_method = "centroid"
    else:
        loc = _canonical_signs(proxy.locations[idx])
        x = np.sqrt(np.maximum(T_hat - t, 0.0))
        w = np.array([np.polyfit(x, loc[:, j], 1)[1] for j in range(2)])
        w_method = "argmax_extrapolation"
    return SingularityEstimate(
        T_hat=float(T_hat), w_hat=(float(w[0]), float(w[1])), T_linear=T_lin,
        T_power=T_pow, power_exponent=q, estimator=how, disagreement=float(disagreement),
        disagreement_flag=bool(disagreement > 0.05), n_decade_frames=int(len(idx)),
        w_method=w_method)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TypeVerdict:
    verdict: str
    growth_per_decade: float
    ratio_last_median: float
    growth_over_decade: float
    monitor_times: np.ndarray
    monitor_values: np.ndarray
    decade: tuple

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "growth_per_decade": self.growth_per_decade,
            "ratio_last_median": self.ratio_last_median,
            "growth_over_decade": self.growth_over_decade,
            "decade": list(self.decade),
            "monitor": [[float(a), float(b)] for a, b in
                        zip(self.monitor_times, self.monitor_values)],
        }


def classify_type(traj, T_hat, proxy=None, type1_growth=TYPE_I_GROWTH,
                  type2_growth=TYPE_II_GROWTH):
    """Type I/II verdict from the monitor ``M = K^2 (T_hat - t)``.

    Over the last decade of ``T_hat - t`` covered by the frames
    (``[delta, 10 delta]`` with ``delta = T_hat - t_last``) the log-log slope
    of ``M`` against ``T_hat - t`` gives the growth factor per decade of
    approach, ``g = 10**(-slope)``.  ``g < type1_growth`` is Type I,
    ``g > type2_growth`` Type II, anything between is inconclusive.
    """
    proxy = proxy or CurvatureProxy.from_trajectory(traj)
    mask = proxy.times < T_hat
    t = proxy.times[mask]
    M = proxy.values[mask] ** 2 * (T_hat - t)
    if len(t) < 3:
        raise SingularityError("too few frames before T_hat")
    tau = T_hat - t
    delta = tau[-1]
    sel = (tau >= delta) & (tau <= 10 * delta)
    if sel.sum() < 3:
        raise SingularityError("too few frames in the final decade of T_hat - t")
    slope = np.polyfit(np.log10(tau[sel]), np.log10(M[sel]), 1)[0]
    growth = float(10 ** (-slope))
    Md = M[sel]
    ratio = float(Md[-1] / np.median(Md))
    growth_dec = float(Md[-1] / Md[0])
    if growth < type1_growth:
        verdict = "I"
    elif growth > type2_growth:
        verdict = "II"
    else:
        verdict = "inconclusive"
    return TypeVerdict(verdict, growth, ratio, growth_dec, t, M,
                       (float(delta), float(10 * delta)))


# --------------------------------------------------------------------------
# Rescalings
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RescaledCurve:
    sigma: float
    time: float
    curve: ProfileCurve
    center: tuple
    interpolated: bool


def largest_resolvable_sigma(traj, T_hat):
    dt = T_hat - traj.snapshots[-1].time
    if dt <= 0:
        raise SingularityError("T_hat does not exceed the last snapshot time")
    return float(dt ** -0.5)


def _state_at(traj, t):
    times = np.array([s.time for s in traj.snapshots])
    j = int(np.searchsorted(times, t))
    if j < len(times) and times[j] == t:
        return traj.snapshots[j].curve.points, False, traj.snapshots[j].curve
    if j == 0:
        return traj.snapshots[0].curve.points, False, traj.snapshots[0].curve
    a, b = traj.snapshots[j - 1], traj.snapshots[j]
    if a.curve.n == b.curve.n:
        lam = (t - a.time) / (b.time - a.time)
        return (1 - lam) * a.curve.points + lam * b.curve.points, True, a.curve
    near = a if t - a.time <= b.time - t else b
    return near.curve.points, False, near.curve


def type1_rescale(traj, w, T_hat, sigma_list):
    """Parabolic rescalings ``sigma (gamma(T_hat - sigma^-2) - w)``.

    Between snapshots with equal sample counts the state is interpolated
    linearly in time, otherwise the nearest snapshot is used.

    Raises
    ------
    SingularityError
        If some ``sigma`` needs a time after the last snapshot.
    """
    w = np.asarray(w, dtype=float)
    t_last = traj.snapshots[-1].time
    out = []
    for sigma in sigma_list:
        t = T_hat - sigma**-2
        if t > t_last * (1 + 1e-12) + 1e-15:
            raise SingularityError(
                f"sigma={sigma:g} needs t={t:.6g} beyond the last snapshot "
                f"t={t_last:.6g} (largest resolvable sigma "
                f"{largest_resolvable_sigma(traj, T_hat):.4g})")
        t = min(t, t_last)
        if t < traj.snapshots[0].time:
            raise SingularityError(f"sigma={sigma:g} needs t={t:.6g} before the first snapshot")
        pts, interp, tmpl = _state_at(traj, t)
        curve = ProfileCurve(sigma * (pts - w), tmpl.topology, tmpl.asymptotics, validate=False)
        out.append(RescaledCurve(float(sigma), float(t), curve, (float(w[0]), float(w[1])), interp))
    return out


@dataclass(frozen=True)
class Type2Sequence:
    curves: list
    chatter: bool
    chatter_jumps: list = field(default_factory=list)


def type2_rescale(traj, verdict=None, frames=None, proxy=None, origin_factor=3.0):
    """Type II normalizations ``K_i (gamma(t_i) - w_i)`` with unit sup proxy.

    ``w_i`` is the proxy argmax point, except that the origin is used when
    ``K_i |w_i| < origin_factor``: the maximum then sits on a neck around
    the origin, and centering there keeps the ``gamma -> -gamma`` symmetry.
    ``frames`` defaults to the final decade.  Chatter (consecutive centres
    more than 10 spacings apart modulo the sign) is flagged, not smoothed.
    """
    if verdict is not None:
        v = verdict.verdict if isinstance(verdict, TypeVerdict) else verdict
        if v != "II":
            raise SingularityError(f"Type II rescaling needs a Type II verdict, got {v!r}")
    proxy = proxy or CurvatureProxy.from_trajectory(traj)
    if frames is None:
        frames = _final_decade(proxy)
    curves, jumps = [], []
    prev = None
    for i in frames:
        snap = traj.snapshots[int(i)]
        K = proxy.values[i]
        w = proxy.locations[i]
        if K * np.hypot(*w) < origin_factor:
            w = np.zeros(2)
        if prev is not None:
            d = min(np.hypot(*(w - prev)), np.hypot(*(w + prev)))
            if d > 10 * proxy.spacings[i]:
                jumps.append((float(snap.time), float(d / proxy.spacings[i])))
        prev = w
        c = snap.curve
        curve = ProfileCurve(K * (c.points - w), c.topology, c.asymptotics, validate=False)
        curves.append(RescaledCurve(float(K), float(snap.time), curve,
                                    (float(w[0]), float(w[1])), False))
    return Type2Sequence(curves, bool(jumps), jumps)


def blow_down(curves, lambda_list, window_radius=1.0):
    """Scale each curve down by each ``lam``: ``gamma / lam``.

    Returns ``[[curve / lam for lam in lambda_list] for curve in curves]``.

    Raises
    ------
    SingularityError
        If a scaled curve no longer reaches the window boundary (its data
        are exhausted before ``window_radius``).
    """
    out = []
    for c in curves:
        c = c.curve if isinstance(c, RescaledCurve) else c
        reach = float(np.hypot(*c.points.T).max())
        row = []
        for lam in lambda_list:
            if reach / lam < window_radius:
                raise SingularityError(
                    f"window exhausted: curve reaches {reach / lam:.3g} < {window_radius} "
                    f"after blow-down by {lam:g}")
            row.append(ProfileCurve(c.points / lam, c.topology, c.asymptotics, validate=False))
        out.append(row)
    return out


# --------------------------------------------------------------------------
# Model catalog
# --------------------------------------------------------------------------

def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _line(theta, R, n=801):
    s = np.linspace(-1.5 * R, 1.5 * R, n)
    return np.c_[s * math.cos(theta), s * math.sin(theta)]


def model_line_pair(theta, R):
    return [(_line(theta, R), False), (_line(theta + math.pi / 2, R), False)]


def model_line(theta, R):
    return [(_line(theta, R), False)]


def model_circle(radius, n=4096):
    u = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return [(radius * np.c_[np.cos(u), np.sin(u)], True)]


def model_grim_reaper(rotation, translation, R, n=2001):
    """Unit-curvature Grim Reaper with vertex at ``translation`` opening in
    direction ``rotation``."""
    smax = math.asinh(math.tan(0.5 * math.pi - 1e-6))
    smax = min(smax, 2.0 * R + 2.0)
    s = np.linspace(-smax, smax, n)
    y = np.arctan(np.sinh(s))
    pts = np.c_[-np.log(np.cos(y)), y] @ _rot(rotation).T + np.asarray(translation)
    return [(pts, False)]


def model_lawlor(c, theta, R, n=1501):
    """Both branches of ``Re(e^{-2 i theta} gamma^2) = -c``."""
    rc = math.sqrt(abs(c))
    umax = math.asinh(1.5 * R / max(rc, 1e-12))
    u = np.linspace(-umax, umax, n)
    pts = np.c_[rc * np.sinh(u), rc * np.cosh(u)] @ _rot(theta).T
    return [(pts, False), (-pts, False)]


def model_polylines(model, params, R):
    """Polylines of a fitted catalog model, as ``(points, closed)`` pairs."""
    if model in ("line_pair", "line", "line_multiplicity_two"):
        make = model_line_pair if model == "line_pair" else model_line
        return make(params["theta"], R)
    if model in ("circle_2", "circle_sqrt2"):
        return model_circle(params["radius"])
    if model == "grim_reaper":
        return model_grim_reaper(params["rotation"], params["translation"], R)
    if model == "lawlor":
        return model_lawlor(params["c"], params["theta"], R)
    raise SingularityError(f"no geometry for model {model!r}")


TYPE_I_MODELS = ("line_pair", "line", "circle_2", "circle_sqrt2")
ALL_MODELS = TYPE_I_MODELS + ("grim_reaper", "lawlor")


@dataclass(frozen=True)
class ModelFit:
    model: str
    distance: float
    params: dict

    def to_dict(self):
        return {"model": self.model, "distance": self.distance, "params": self.params}


@dataclass(frozen=True)
class ModelMatch:
    model: str
    distance: float
    params: dict
    runner_up: str | None
    margin: float
    fits: list

    @property
    def matched(self):
        return self.model != "unmatched"

    def to_dict(self):
        return {"model": self.model, "distance": self.distance, "params": self.params,
                "runner_up": self.runner_up, "margin": self.margin,
                "fits": [f.to_dict() for f in self.fits]}


def _crop(pts, closed, radius):
    """Runs of consecutive samples within ``radius`` (plus one sample on
    either side), as open polylines."""
    inside = np.hypot(*pts.T) <= radius
    if inside.all():
        return [(pts, closed)]
    if closed:
        # rotate so the sequence starts outside the ball
        j = int(np.argmin(inside))
        pts = np.roll(pts, -j, axis=0)
        inside = np.roll(inside, -j)
        pts = np.vstack([pts, pts[:1]])
        inside = np.r_[inside, inside[:1]]
    keep = inside.copy()
    keep[:-1] |= inside[1:]
    keep[1:] |= inside[:-1]
    runs = []
    idx = np.nonzero(keep)[0]
    if len(idx) == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    for seg in np.split(idx, breaks + 1):
        if len(seg) >= 2:
            runs.append((pts[seg], False))
    return runs


def _curve_sets(curve, symmetrize, radius=None):
    """Polylines of the curve (and of its mirror ``-gamma``), cropped to a ball."""
    branches = [curve.points] + ([-curve.points] if symmetrize else [])
    sets = []
    for pts in branches:
        if radius is None:
            sets.append((pts, curve.closed))
        else:
            sets.extend(_crop(pts, curve.closed, radius))
    return sets


def _in_window_points(sets, R):
    pts = np.vstack([p for p, _ in sets])
    return pts[np.hypot(*pts.T) <= R]


def _dist(sets, model, R):
    try:
        return windowed_polyline_hausdorff(sets, model, R)
    except CurveError:
        return math.inf


def _scan(f, lo, hi, n):
    grid = np.linspace(lo, hi, n, endpoint=False)
    vals = [f(x) for x in grid]
    return grid, vals


def line_multiplicity(curve, theta, R, probes=41):
    """Number of curve branches crossing the normal lines of the line at angle
    ``theta``, median over probe positions in ``[-0.8 R, 0.8 R]``."""
    d = np.array([math.cos(theta), math.sin(theta)])
    pts = curve.points
    if curve.closed:
        pts = np.vstack([pts, pts[:1]])
    inside = np.hypot(*pts.T) <= R
    s = pts @ d
    counts = []
    for p in np.linspace(-0.8 * R, 0.8 * R, probes):
        f = s - p
        cross = (f[:-1] * f[1:] <= 0) & (f[:-1] != f[1:]) & inside[:-1] & inside[1:]
        counts.append(int(cross.sum()))
    return int(np.median(counts))


def fit_model(curve, model, window_radius, symmetrize=True):
    """Best fit of one catalog model; returns a :class:`ModelFit`."""
    R = window_radius
    # geometry beyond 2R cannot change a fit distance below R
    sets = _curve_sets(curve, symmetrize, 2 * R)
    if not sets:
        return ModelFit(model, math.inf, {})
    if model in ("circle_2", "circle_sqrt2"):
        r = 2.0 if model == "circle_2" else math.sqrt(2.0)
        return ModelFit(model, _dist(sets, model_circle(r), R), {"radius": r})
    if model in ("line_pair", "line"):
        period = math.pi / 2 if model == "line_pair" else math.pi
        make = model_line_pair if model == "line_pair" else model_line
        f = lambda th: _dist(sets, make(th, R), R)  # noqa: E731
        grid, vals = _scan(f, 0.0, period, 60)
        j = int(np.argmin(vals))
        step = period / 60
        opt = minimize_scalar(f, bounds=(grid[j] - step, grid[j] + step), method="bounded",
                              options={"xatol": 1e-6})
        th = float(opt.x % period)
        dist = float(min(opt.fun, vals[j]))
        params = {"theta": th}
        if model == "line":
            params["multiplicity"] = line_multiplicity(curve, th, R)
        return ModelFit(model, dist, params)
    if model == "lawlor":
        f = lambda p: _dist(sets, model_lawlor(abs(p[0]) + 1e-12, p[1], R), R)  # noqa: E731
        best = None
        for c0 in (0.3, 1.0, 3.0):
            for th0 in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
                v = f((c0, th0))
                if best is None or v < best[0]:
                    best = (v, (c0, th0))
        opt = minimize(f, best[1], method="Nelder-Mead",
                       options={"xatol": 1e-5, "fatol": 1e-7, "maxiter": 400})
        c, th = abs(float(opt.x[0])), float(opt.x[1]) % math.pi
        return ModelFit(model, float(min(opt.fun, best[0])), {"c": c, "theta": th})
    if model == "grim_reaper":
        inside = _in_window_points(sets, R)
        if len(inside) == 0:
            return ModelFit(model, math.inf, {})
        tip = inside[np.argmin(np.hypot(*inside.T))]
        direction = inside.mean(axis=0) - tip
        rot0 = math.atan2(direction[1], direction[0])
        f = lambda p: _dist(sets, model_grim_reaper(p[0], p[1:3], R), R)  # noqa: E731
        starts = [(rot0 + dr, tip[0], tip[1]) for dr in (0.0, 0.3, -0.3, math.pi)]
        best = min(((f(s), s) for s in starts), key=lambda v: v[0])
        opt = minimize(f, best[1], method="Nelder-Mead",
                       options={"xatol": 1e-5, "fatol": 1e-7, "maxiter": 600})
        p = opt.x
        return ModelFit(model, float(min(opt.fun, best[0])),
                        {"rotation": float(p[0] % (2 * math.pi)),
                         "translation": [float(p[1]), float(p[2])]})
    raise SingularityError(f"unknown model {model!r}")


def match_model(curve, window_radius, models=ALL_MODELS, symmetrize=True):
    """Best catalog fit by windowed Hausdorff distance.

    ``symmetrize`` compares the union of ``gamma`` and ``-gamma`` (the same
    surface), which suits curves centred at the origin.  Returns model
    ``"unmatched"`` when every fit exceeds 0.5.
    """
    fits = [fit_model(curve, m, window_radius, symmetrize) for m in models]
    fits.sort(key=lambda f: f.distance)
    best = fits[0]
    runner = fits[1] if len(fits) > 1 else None
    margin = (runner.distance - best.distance) if runner else math.inf
    name = best.model
    if best.distance > UNMATCHED_DISTANCE:
        name = "unmatched"
    elif name == "line" and best.params.get("multiplicity") == 2:
        name = "line_multiplicity_two"
    return ModelMatch(name, best.distance, best.params,
                      runner.model if runner else None, margin, fits)


# --------------------------------------------------------------------------
# Report
# --------------------------------------------------------------------------

@dataclass
class SingularityReport:
    T_hat: float | None
    w_hat: tuple | None
    type_verdict: str
    estimate: dict | None = None
    classification: dict | None = None
    blowup_match: dict | None = None
    type2_match: dict | None = None
    blowdown_match: dict | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


def analyze(traj, type1_window=3.0, type2_window=5.0, blowdown_lambdas=None,
            n_type2=4, force_type2=False):
    """Full singularity analysis of a trajectory.

    Returns a :class:`SingularityReport`.  Trajectories that end without a
    singular stop condition get verdict ``"none"``.  The Type II rescaling
    and blow-down run only for a Type II verdict unless ``force_type2``.
    """
    notes = []
    try:
        proxy = CurvatureProxy.from_trajectory(traj)
        est = estimate_singularity(traj, proxy=proxy)
    except SingularityError as exc:
        return SingularityReport(None, None, "none", notes=[str(exc)])
    if est.disagreement_flag:
        notes.append(f"linear and power-law singular times disagree by "
                     f"{100 * est.disagreement:.1f}%")
    verdict = classify_type(traj, est.T_hat, proxy=proxy)

    sigma = largest_resolvable_sigma(traj, est.T_hat)
    (resc,) = type1_rescale(traj, est.w_hat, est.T_hat, [sigma])
    m1 = match_model(resc.curve, type1_window, TYPE_I_MODELS)
    blowup = dict(m1.to_dict(), sigma=sigma, window=type1_window)

    type2 = blowdown = None
    if verdict.verdict == "II" or force_type2:
        seq = type2_rescale(traj, verdict if verdict.verdict == "II" else None, proxy=proxy)
        if seq.chatter:
            notes.append(f"Type II centre chatter at {len(seq.chatter_jumps)} frames")
        tail = seq.curves[-n_type2:]
        fits = []
        for rc in tail:
            sym = rc.center == (0.0, 0.0)
            fits.append(match_model(rc.curve, type2_window, ("grim_reaper", "lawlor"),
                                    symmetrize=sym))
        last = fits[-1]
        type2 = dict(last.to_dict(), window=type2_window,
                     sequence=[{"time": rc.time, "sigma": rc.sigma, "model": f.model,
                                "distance": f.distance} for rc, f in zip(tail, fits)])
        final = tail[-1]
        if final.center == (0.0, 0.0):
            reach = float(np.hypot(*final.curve.points.T).max())
            lams = blowdown_lambdas or [x for x in (2, 4, 8, 16, 32, 64, 128) if x <= reach]
            rows = []
            theta = m1.params.get("theta")
            for lam, c in zip(lams, blow_down([final.curve], lams)[0]):
                free = fit_model(c, "line_pair", 1.0)
                fixed = None
                if m1.model == "line_pair":
                    fixed = _dist(_curve_sets(c, True, 2.0), model_line_pair(theta, 1.0), 1.0)
                rows.append({"lambda": lam, "line_pair_free": free.distance,
                             "theta_free": free.params["theta"],
                             "line_pair_type1_theta": fixed})
            key = "line_pair_type1_theta" if m1.model == "line_pair" else "line_pair_free"
            best = min(rows, key=lambda r: r[key])
            blowdown = {"model": "line_pair", "distance": best[key], "lambda": best["lambda"],
                        "rows": rows}
        else:
            notes.append("blow-down skipped: Type II centre is away from the origin")

    report = SingularityReport(
        T_hat=est.T_hat, w_hat=est.w_hat, type_verdict=verdict.verdict,
        estimate=est.to_dict(), classification=verdict.to_dict(),
        blowup_match=blowup, type2_match=type2, blowdown_match=blowdown, notes=notes)
    return report


def report_to_json_dict(report):
    return _finite(report.to_dict())


def report_from_json_dict(d):
    """Inverse of :func:`report_to_json_dict` (``None`` stays ``None``)."""
    d = dict(d)
    if d.get("w_hat") is not None:
        d["w_hat"] = tuple(d["w_hat"])
    d.setdefault("notes", [])
    return SingularityReport(**{k: d.get(k) for k in SingularityReport.__dataclass_fields__})
