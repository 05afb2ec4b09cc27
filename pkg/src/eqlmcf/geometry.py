"""Discrete differential geometry of planar profile curves.

A profile curve ``gamma`` in the plane describes the circle-invariant
Lagrangian ``{(gamma(s) cos(phi), gamma(s) sin(phi))}`` in C^2.  Only the curve
is ever stored.  Curves are polylines: closed curves keep their first point
once (no duplicated endpoint), open curves carry the two asymptotic rays they
approach far from the origin.

Conventions
-----------
* Points are an ``(n, 2)`` float array.
* The unit tangent at a node is the bisector of the two adjacent unit chords,
  the unit normal is the tangent rotated by +90 degrees.
* The curvature vector uses the three-point stencil
  ``2 (u_i - u_{i-1}) / (h_{i-1} + h_i)`` with unit chords ``u``.  It is
  exactly normal to the bisector tangent and exact on uniformly sampled circles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree


class CurveError(ValueError):
    """Raised when a curve violates a structural invariant."""


class UnderResolvedError(CurveError):
    """Raised when a discrete invariant cannot be trusted at this resolution."""


MIN_POINTS = 8
MAX_SPACING_RATIO = 4.0
DEFAULT_RAY_TOLERANCE = 0.05
DEFAULT_ORIGIN_EPSILON = 1e-4


@dataclass(frozen=True)
class AsymptoticData:
    """Asymptotic cone of an open profile curve.

    The two rays leave the origin at polar angles ``bisector +/- alpha / 2``.
    """

    alpha: float
    bisector: float = math.pi / 2

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi:
            raise CurveError(f"alpha must lie in (0, pi), got {self.alpha}")

    @property
    def ray_angles(self):
        return (self.bisector + self.alpha / 2, self.bisector - self.alpha / 2)

    def ray_directions(self):
        return np.array([[math.cos(a), math.sin(a)] for a in self.ray_angles])

    def distance_to_rays(self, p):
        """Distance from point ``p`` to the nearer of the two rays."""
        p = np.asarray(p, dtype=float)
        best = np.inf
        for d in self.ray_directions():
            s = max(float(p @ d), 0.0)
            best = min(best, float(np.hypot(*(p - s * d))))
        return best

    def project(self, p):
        """Nearest point to ``p`` on the nearer ray, at the same distance from 0."""
        p = np.asarray(p, dtype=float)
        dirs = self.ray_directions()
        j = int(np.argmax(dirs @ p))
        return np.hypot(*p) * dirs[j]


@dataclass(frozen=True)
class CurveDiagnostics:
    length: float
    min_radius: float
    sup_curvature: float
    sup_velocity: float
    winding_number_about_origin: int | None = None
    turning_number: int | None = None
    lagrangian_angle_oscillation: float = float("nan")

    def to_dict(self):
        return {
            "length": self.length,
            "min_radius": self.min_radius,
            "sup_curvature": self.sup_curvature,
            "sup_velocity": self.sup_velocity,
            "winding_number_about_origin": self.winding_number_about_origin,
            "turning_number": self.turning_number,
            "lagrangian_angle_oscillation": self.lagrangian_angle_oscillation,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Sampled planar profile curve.

    Parameters
    ----------
    points : array_like, shape (n, 2)
    topology : {"closed", "open"}
    asymptotics : AsymptoticData, optional
        Required for open curves.
    validate : bool
        Check the structural invariants on construction.  Rescaled and
        truncated curves produced during analysis skip the ray check.
    ray_tolerance : float
        Relative tolerance (fraction of |endpoint|) for open endpoints to sit
        on the asymptotic rays.
    """

    points: np.ndarray
    topology: str = "closed"
    asymptotics: AsymptoticData | None = None
    validate: bool = field(default=True, repr=False)
    ray_tolerance: float = field(default=DEFAULT_RAY_TOLERANCE, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveError("points must have shape (n, 2)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.topology not in ("closed", "open"):
            raise CurveError(f"unknown topology {self.topology!r}")
        if self.validate:
            self._check()

    def _check(self):
        pts = self.points
        if len(pts) < MIN_POINTS:
            raise CurveError(f"need at least {MIN_POINTS} points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise CurveError("non-finite coordinates")
        if self.closed and np.allclose(pts[0], pts[-1], rtol=0, atol=1e-14):
            raise CurveError("closed curves must not repeat their first point")
        if np.any(self.spacings() <= 0.0):
            raise CurveError("consecutive points must be distinct")
        if not self.closed:
            if self.asymptotics is None:
                raise CurveError("open curves need asymptotic data")
            for p in (pts[0], pts[-1]):
                tol = self.ray_tolerance * max(np.hypot(*p), 1.0)
                if self.asymptotics.distance_to_rays(p) > tol:
                    raise CurveError(
                        f"endpoint {p} is {self.asymptotics.distance_to_rays(p):.3g} "
                        f"from the asymptotic rays (tolerance {tol:.3g})")

    @property
    def closed(self):
        return self.topology == "closed"

    @property
    def n(self):
        return len(self.points)

    @property
    def orientation(self):
        """+1 for counter-clockwise closed curves or open curves run from the
        left ray to the right ray, -1 otherwise."""
        x, y = self.points.T
        if self.closed:
            area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
            return 1 if area >= 0 else -1
        a0 = math.atan2(y[0], x[0])
        a1 = math.atan2(y[-1], x[-1])
        return 1 if (a0 - a1) % (2 * math.pi) < math.pi else -1

    def edges(self):
        pts = self.points
        if self.closed:
            return np.roll(pts, -1, axis=0) - pts
        return np.diff(pts, axis=0)

    def spacings(self):
        return np.hypot(*self.edges().T)

    def length(self):
        return float(self.spacings().sum())

    def diameter(self):
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def spacing_ratio(self):
        h = self.spacings()
        return float(h.max() / h.min())

    def with_points(self, points, validate=False):
        return ProfileCurve(points, self.topology, self.asymptotics, validate=validate,
                            ray_tolerance=self.ray_tolerance)

    def transformed(self, scale=1.0, center=(0.0, 0.0), rotation=0.0):
        """``scale * R(rotation) (gamma - center)`` as an unvalidated curve."""
        c, s = math.cos(rotation), math.sin(rotation)
        R = np.array([[c, -s], [s, c]])
        pts = scale * (self.points - np.asarray(center, dtype=float)) @ R.T
        asym = self.asymptotics
        if asym is not None and rotation:
            asym = AsymptoticData(asym.alpha, asym.bisector + rotation)
        return ProfileCurve(pts, self.topology, asym, validate=False)

    def endpoint_mask(self):
        """True at samples whose curvature comes from a one-sided stencil."""
        m = np.zeros(self.n, dtype=bool)
        if not self.closed:
            m[[0, -1]] = True
        return m

    def __len__(self):
        return self.n


def default_origin_epsilon(curve):
    return DEFAULT_ORIGIN_EPSILON * curve.diameter()


def _neighbours(curve):
    pts = curve.points
    if curve.closed:
        return np.roll(pts, 1, axis=0), pts, np.roll(pts, -1, axis=0)
    prev = np.vstack([pts[:1], pts[:-1]])
    nxt = np.vstack([pts[1:], pts[-1:]])
    return prev, pts, nxt


def tangents_normals(curve):
    """Unit tangents (chord bisectors) and normals (tangent rotated +90 deg).

    Open-curve endpoints use the single adjacent chord.
    """
    prev, pts, nxt = _neighbours(curve)
    a = pts - prev
    b = nxt - pts
    with np.errstate(invalid="ignore", divide="ignore"):
        ua = a / np.hypot(*a.T)[:, None]
        ub = b / np.hypot(*b.T)[:, None]
    if not curve.closed:
        ua[0] = ub[0]
        ub[-1] = ua[-1]
    t = ua + ub
    t /= np.hypot(*t.T)[:, None]
    nrm = np.column_stack([-t[:, 1], t[:, 0]])
    return t, nrm


def _circumcurvature(p0, p1, p2):
    """Signed curvature of the circle through three points (sign: left turn > 0)."""
    a = p1 - p0
    b = p2 - p1
    c = p2 - p0
    cross = a[0] * b[1] - a[1] * b[0]
    return 2.0 * cross / (np.hypot(*a) * np.hypot(*b) * np.hypot(*c))


def curvature(curve):
    """Curvature vectors at every sample.

    Interior (or periodic) samples use the three-point stencil.  Endpoints of
    open curves get the circumcircle curvature of the first/last three
    samples, which is only first-order accurate there; see
    :meth:`ProfileCurve.endpoint_mask`.
    """
    prev, pts, nxt = _neighbours(curve)
    a = pts - prev
    b = nxt - pts
    ha = np.hypot(*a.T)
    hb = np.hypot(*b.T)
    kappa = np.zeros_like(pts)
    inner = slice(None) if curve.closed else slice(1, -1)
    ua = a[inner] / ha[inner, None]
    ub = b[inner] / hb[inner, None]
    kappa[inner] = 2.0 * (ub - ua) / (ha[inner] + hb[inner])[:, None]
    if not curve.closed:
        _, nrm = tangents_normals(curve)
        p = curve.points
        kappa[0] = _circumcurvature(p[0], p[1], p[2]) * nrm[0]
        kappa[-1] = _circumcurvature(p[-3], p[-2], p[-1]) * nrm[-1]
    return kappa


def signed_curvature(curve):
    _, nrm = tangents_normals(curve)
    return np.einsum("ij,ij->i", curvature(curve), nrm)


def radial_term(curve, origin_epsilon=None):
    """Normal projection of the position divided by |gamma|^2.

    Samples closer than ``origin_epsilon`` to the origin get ``kappa / 2``, the
    limit of the term along a curve crossing the origin transversally.
    """
    if origin_epsilon is None:
        origin_epsilon = default_origin_epsilon(curve)
    pts = curve.points
    _, nrm = tangents_normals(curve)
    r2 = np.einsum("ij,ij->i", pts, pts)
    xn = np.einsum("ij,ij->i", pts, nrm)
    near = r2 < origin_epsilon**2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (xn / r2)[:, None] * nrm
    if near.any():
        out[near] = 0.5 * curvature(curve)[near]
    return out


def flow_velocity(curve, origin_epsilon=None):
    """Right-hand side ``kappa - gamma_perp / |gamma|^2`` of the profile flow."""
    return curvature(curve) - radial_term(curve, origin_epsilon)


def orbit_curvature(curve, origin_epsilon=None):
    """|<gamma, N>| / |gamma|^2: curvature of the orbit circles in the normal
    direction (``|kappa| / 2`` at regularized origin samples)."""
    return np.hypot(*radial_term(curve, origin_epsilon).T)


def _turning_angles(curve):
    e = curve.edges()
    ang = np.arctan2(e[:, 1], e[:, 0])
    d = np.diff(np.r_[ang, ang[0]]) if curve.closed else np.diff(ang)
    return (d + np.pi) % (2 * np.pi) - np.pi


def _segment_distance_to_origin(curve):
    pts = curve.points
    e = curve.edges()
    a = pts if curve.closed else pts[:-1]
    t = np.clip(-np.einsum("ij,ij->i", a, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
    return float(np.hypot(*(a + t[:, None] * e).T).min())


def winding_and_turning(curve, origin_epsilon=None, tolerance=0.01):
    """Winding number about the origin and turning number of a closed curve.

    Returns ``(winding, turning)``.  ``winding`` is ``None`` when the curve
    passes within ``origin_epsilon`` of the origin.  A non-integer residual
    above ``tolerance`` raises :class:`UnderResolvedError`.
    """
    if not curve.closed:
        raise CurveError("winding and turning numbers need a closed curve")
    if origin_epsilon is None:
        origin_epsilon = default_origin_epsilon(curve)

    def _round(total, what):
        v = total / (2 * np.pi)
        r = round(v)
        if abs(v - r) > tolerance:
            raise UnderResolvedError(f"{what} residual {abs(v - r):.3g} exceeds {tolerance}")
        return int(r)

    turning = _round(_turning_angles(curve).sum(), "turning number")
    if _segment_distance_to_origin(curve) < origin_epsilon:
        return None, turning
    phi = np.arctan2(curve.points[:, 1], curve.points[:, 0])
    d = np.diff(np.r_[phi, phi[0]])
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return _round(d.sum(), "winding number"), turning


def lagrangian_angle(curve, origin_epsilon=None):
    """Unwrapped ``arg(gamma') + arg(gamma)`` along the curve.

    Samples within ``origin_epsilon`` of the origin are NaN.  The angle is
    constant exactly when the profile is minimal.
    """
    if origin_epsilon is None:
        origin_epsilon = default_origin_epsilon(curve)
    t, _ = tangents_normals(curve)
    pts = curve.points
    theta = np.arctan2(t[:, 1], t[:, 0]) + np.arctan2(pts[:, 1], pts[:, 0])
    ok = np.hypot(*pts.T) >= origin_epsilon
    out = np.full(len(pts), np.nan)
    out[ok] = np.unwrap(theta[ok])
    return out


def lagrangian_angle_oscillation(curve, origin_epsilon=None):
    theta = lagrangian_angle(curve, origin_epsilon)
    return float(np.nanmax(theta) - np.nanmin(theta))


def aspect_ratio(curve):
    """Bounding-box height over width."""
    ext = curve.points.max(axis=0) - curve.points.min(axis=0)
    return float(ext[1] / ext[0])


def diagnostics(curve, origin_epsilon=None):
    if origin_epsilon is None:
        origin_epsilon = default_origin_epsilon(curve)
    r = np.hypot(*curve.points.T)
    kap = np.hypot(*curvature(curve).T)
    vel = np.hypot(*flow_velocity(curve, origin_epsilon).T)
    if not curve.closed:
        kap = kap[1:-1]
        vel = vel[1:-1]
    winding = turning = None
    if curve.closed:
        try:
            winding, turning = winding_and_turning(curve, origin_epsilon)
        except UnderResolvedError:
            pass
    return CurveDiagnostics(
        length=curve.length(),
        min_radius=float(r.min()),
        sup_curvature=float(kap.max()),
        sup_velocity=float(vel.max()),
        winding_number_about_origin=winding,
        turning_number=turning,
        lagrangian_angle_oscillation=lagrangian_angle_oscillation(curve, origin_epsilon),
    )


def resample(curve, target_spacing=None, n=None):
    """Resample to near-uniform arclength spacing.

    A cubic spline through the samples (periodic for closed curves,
    parametrized by cumulative chord length) is re-parametrized by its own
    arclength and sampled evenly.  Open curves keep their endpoints.

    Exactly one of ``target_spacing`` and ``n`` is needed.
    """
    pts = curve.points
    closed = curve.closed
    if closed:
        knots = np.vstack([pts, pts[:1]])
    else:
        knots = pts
    chord = np.r_[0.0, np.cumsum(np.hypot(*np.diff(knots, axis=0).T))]
    spline = CubicSpline(chord, knots, bc_type="periodic" if closed else "not-a-knot")

    # arclength of the spline itself, by composite Gauss-Legendre on each knot interval
    gx, gw = np.polynomial.legendre.leggauss(5)
    lo, hi = chord[:-1], chord[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * gx[None, :]
    speed = np.hypot(*spline(nodes, 1).reshape(-1, 2).T).reshape(nodes.shape)
    seg_len = (speed * gw[None, :]).sum(axis=1) * half
    arc = np.r_[0.0, np.cumsum(seg_len)]
    total = arc[-1]

    if n is None:
        if target_spacing is None or target_spacing <= 0:
            raise CurveError("target_spacing must be positive")
        if total < MIN_POINTS * target_spacing:
            raise CurveError(
                f"curve of length {total:.4g} is degenerate for spacing {target_spacing:.4g}")
        n = max(int(round(total / target_spacing)), MIN_POINTS)
        if not closed:
            n += 1
    m = n if closed else n - 1
    s_new = np.linspace(0.0, total, m + 1)
    if closed:
        s_new = s_new[:-1]

    # invert s(chord) with monotone interpolation, then one Newton correction
    u = np.interp(s_new, arc, chord)
    for _ in range(2):
        idx = np.clip(np.searchsorted(chord, u, side="right") - 1, 0, len(chord) - 2)
        base = arc[idx]
        a_lo = chord[idx]
        # arclength from knot a_lo to u by 5-point Gauss
        midp = 0.5 * (a_lo + u)
        halfp = 0.5 * (u - a_lo)
        q = midp[:, None] + halfp[:, None] * gx[None, :]
        sp = np.hypot(*spline(q, 1).reshape(-1, 2).T).reshape(q.shape)
        s_cur = base + (sp * gw[None, :]).sum(axis=1) * halfp
        u = u - (s_cur - s_new) / np.hypot(*spline(u, 1).T)
    new = spline(u)
    if not closed:
        new[0] = pts[0]
        new[-1] = pts[-1]
    return ProfileCurve(new, curve.topology, curve.asymptotics, validate=curve.validate,
                        ray_tolerance=curve.ray_tolerance)


# --------------------------------------------------------------------------
# Set distances
# --------------------------------------------------------------------------

def _in_window(points, window):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if window is None:
        return points
    return points[np.hypot(*points.T) <= window]


def hausdorff_distance(a, b, window=None):
    """Symmetric Hausdorff distance between two finite point sets.

    With ``window`` both sets are first restricted to the closed ball of that
    radius about the origin.
    """
    a = _in_window(a, window)
    b = _in_window(b, window)
    if len(a) == 0 or len(b) == 0:
        raise CurveError("empty point set inside the comparison window")
    dab = cKDTree(b).query(a)[0].max()
    dba = cKDTree(a).query(b)[0].max()
    return float(max(dab, dba))


def _segments(polylines):
    """Start points and direction vectors of all segments of
    ``[(points, closed), ...]``."""
    starts, dirs = [], []
    for pts, closed in polylines:
        q = np.asarray(pts, dtype=float)
        if closed:
            q = np.vstack([q, q[:1]])
        if len(q) == 1:
            q = np.vstack([q, q])
        starts.append(q[:-1])
        dirs.append(q[1:] - q[:-1])
    return np.vstack(starts), np.vstack(dirs)


def _segment_distance(points, a, d):
    """Exact distance from each point to the nearest of the segments
    ``a + t d``, ``t in [0, 1]``.

    Candidates come from a k-d tree on segment midpoints; a segment outside
    the candidate set is at least ``(k-th midpoint distance) - (max length)/2``
    away, and points where that bound is not conclusive get a ball query.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mid = a + 0.5 * d
    seglen = np.hypot(*d.T)
    half = 0.5 * seglen.max()
    dd2 = np.einsum("ij,ij->i", d, d)
    dd2 = np.where(dd2 > 0, dd2, 1.0)
    tree = cKDTree(mid)
    k = min(len(mid), 8)
    dist_mid, idx = tree.query(points, k=k)
    idx = idx.reshape(len(points), k)
    dist_mid = dist_mid.reshape(len(points), k)
    rel = points[:, None, :] - a[idx]
    dc = d[idx]
    t = np.clip(np.einsum("ijk,ijk->ij", rel, dc) / dd2[idx], 0.0, 1.0)
    diff = rel - t[..., None] * dc
    best = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1)
    if k == len(mid):
        return best
    bad = np.nonzero(best > dist_mid[:, -1] - half)[0]
    if len(bad):
        lists = tree.query_ball_point(points[bad], best[bad] + half)
        owner = np.repeat(np.arange(len(bad)), [len(c) for c in lists])
        cand = np.concatenate([np.asarray(c, dtype=int) for c in lists])
        rel = points[bad][owner] - a[cand]
        dc = d[cand]
        t = np.clip(np.einsum("ij,ij->i", rel, dc) / dd2[cand], 0.0, 1.0)
        diff = rel - t[:, None] * dc
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        sub = best[bad]
        np.minimum.at(sub, owner, dist)
        best[bad] = sub
    return best


def point_polyline_distance(points, polyline, closed=False):
    """Exact Euclidean distance from each point to a polyline."""
    return _segment_distance(points, *_segments([(polyline, closed)]))


def polyline_set_distance(points, polylines):
    """Distance from points to the union of ``[(polyline, closed), ...]``."""
    return _segment_distance(points, *_segments(polylines))


def windowed_polyline_hausdorff(set_a, set_b, window):
    """Hausdorff distance between unions of polylines, restricted to a ball.

    Each side is ``[(points, closed), ...]``.  Vertices inside the ball of
    radius ``window`` are measured against the full opposite set, so the cut
    at the window boundary does not create spurious distance.
    """
    def one_side(src, dst):
        inside = _in_window(np.vstack([p for p, _ in src]), window)
        if len(inside) == 0:
            return -1.0
        return float(polyline_set_distance(inside, dst).max())

    dab = one_side(set_a, set_b)
    dba = one_side(set_b, set_a)
    if dab < 0 or dba < 0:
        raise CurveError("empty point set inside the comparison window")
    return max(dab, dba)


# --------------------------------------------------------------------------
# Snapshot format
# --------------------------------------------------------------------------

def curve_to_dict(curve, time=None):
    asym = None
    if curve.asymptotics is not None:
        asym = {"alpha": curve.asymptotics.alpha, "bisector": curve.asymptotics.bisector}
    d = {
        "points": curve.points.tolist(),
        "topology": curve.topology,
        "asymptotics": asym,
    }
    if time is not None:
        d["time"] = float(time)
    return d


def curve_from_dict(d, validate=True):
    asym = d.get("asymptotics")
    if asym is not None:
        asym = AsymptoticData(asym["alpha"], asym.get("bisector", math.pi / 2))
    return ProfileCurve(np.asarray(d["points"], dtype=float), d["topology"], asym,
                        validate=validate)


def curve_to_json(curve, time=None):
    return json.dumps(curve_to_dict(curve, time))


def curve_from_json(text, validate=True):
    return curve_from_dict(json.loads(text), validate=validate)
