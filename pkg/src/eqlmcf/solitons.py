"""Special solutions of the profile flow.

A profile is a *soliton* with constant ``lam`` when

    kappa - gamma_perp / |gamma|^2 = lam * gamma_perp,

i.e. the flow moves it by pure dilation.  ``lam = -1/2`` gives shrinkers
(the circle of radius 2), ``lam = +1/2`` expanders and ``lam = 0`` minimal
profiles (Lawlor necks, hyperbolas ``Re(gamma^2) = const``).  The Grim Reaper
``x = -log cos y`` is different: it translates with unit speed under plain
curve shortening.

Symmetric profiles are shot from a vertex ``(0, d)`` with horizontal tangent
by integrating the arclength ODE

    x' = cos psi,  y' = sin psi,  psi' = <gamma, N> (1/|gamma|^2 + lam),

and mirroring the right half across the y-axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from .geometry import (
    AsymptoticData,
    CurveError,
    ProfileCurve,
    curvature,
    flow_velocity,
    tangents_normals,
)

LAMBDA = {"shrinker": -0.5, "expander": 0.5, "minimal": 0.0}
SHOT_TOLERANCE = 1e-6
CLOSED_FORM_TOLERANCE = 1e-8
ANGLE_TOLERANCE = 1e-4


class SolitonError(ValueError):
    """Raised for inconsistent soliton parameters or failed shooting."""


@dataclass(frozen=True)
class SolitonSpec:
    kind: str
    lam: float | None = None
    alpha: float | None = None
    scale: float = 1.0
    translator_speed: float = 1.0

    def __post_init__(self):
        if self.kind not in ("minimal", "shrinker", "expander", "translator"):
            raise SolitonError(f"unknown soliton kind {self.kind!r}")
        if self.kind == "translator":
            if self.translator_speed != 1.0:
                raise SolitonError("translator speed is fixed at 1")
            return
        lam = LAMBDA[self.kind] if self.lam is None else float(self.lam)
        sign = {"minimal": 0, "shrinker": -1, "expander": 1}[self.kind]
        if (sign == 0 and lam != 0) or (sign != 0 and np.sign(lam) != sign):
            raise SolitonError(f"lambda={lam} is inconsistent with kind {self.kind!r}")
        object.__setattr__(self, "lam", lam)
        if self.alpha is not None and not 0 < self.alpha < math.pi:
            raise SolitonError("alpha must lie in (0, pi)")

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lam, "alpha": self.alpha,
                "scale": self.scale, "translator_speed": self.translator_speed}


@dataclass(frozen=True)
class SolitonProfile:
    """A sampled soliton.

    ``residual`` is the soliton identity defect at the samples.  For
    closed-form profiles it uses the exact curvature of the formula; for shot
    profiles it is the discrete :func:`soliton_residual` of the samples.
    """

    spec: SolitonSpec
    curve: ProfileCurve
    residual: float
    info: dict = field(default_factory=dict)

    def report(self):
        d = {"spec": self.spec.to_dict(), "residual": self.residual,
             "n_points": self.curve.n, "topology": self.curve.topology}
        d.update(self.info)
        return d


# --------------------------------------------------------------------------
# Residuals
# --------------------------------------------------------------------------

def _normal_projection(curve):
    _, nrm = tangents_normals(curve)
    xn = np.einsum("ij,ij->i", curve.points, nrm)
    return xn[:, None] * nrm


def soliton_residual(curve, spec, interior_only=True):
    """Sup-norm defect of the soliton identity over the samples.

    Self-similar kinds: ``|flow_velocity - lam * gamma_perp|``; translators:
    ``|kappa - e1_perp|``.  Open-curve endpoints are skipped when
    ``interior_only`` (their one-sided curvature is first-order only).
    """
    if spec.kind == "translator":
        t, _ = tangents_normals(curve)
        e1 = np.array([spec.translator_speed, 0.0])
        e1_perp = e1 - (t @ e1)[:, None] * t
        res = curvature(curve) - e1_perp
    else:
        res = flow_velocity(curve) - spec.lam * _normal_projection(curve)
    res = np.hypot(*res.T)
    if interior_only and not curve.closed:
        res = res[1:-1]
    return float(res.max())


# --------------------------------------------------------------------------
# Closed-form profiles
# --------------------------------------------------------------------------

def _arclength_nodes(speed, u0, u1, n, grid=4096):
    """Parameters ``u_k`` of ``n`` points equally spaced in arclength.

    ``speed(u)`` is |d gamma / du|.  Arclength is integrated by 8-point
    Gauss-Legendre on a fine grid and inverted with Newton steps.
    """
    gx, gw = np.polynomial.legendre.leggauss(8)
    knots = np.linspace(u0, u1, grid + 1)

    def seg(a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        q = mid[..., None] + half[..., None] * gx
        return (speed(q) * gw).sum(axis=-1) * half

    cum = np.r_[0.0, np.cumsum(seg(knots[:-1], knots[1:]))]
    target = np.linspace(0.0, cum[-1], n)
    u = np.interp(target, cum, knots)
    for _ in range(3):
        idx = np.clip(np.searchsorted(knots, u, side="right") - 1, 0, grid - 1)
        s = cum[idx] + seg(knots[idx], u)
        u = u - (s - target) / speed(u)
    u[0], u[-1] = u0, u1
    return u


def circle_shrinker(lam=-0.5, n=256):
    """Circle of radius ``sqrt(-2/lam)`` about the origin."""
    if not lam < 0:
        raise SolitonError("no minimal circle about the origin" if lam == 0
                           else "no circle soliton for lam > 0")
    r = math.sqrt(-2.0 / lam)
    u = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    curve = ProfileCurve(r * np.c_[np.cos(u), np.sin(u)], "closed")
    # exact: kappa and the radial term both point inward with size 1/r
    residual = abs(-2.0 / r - lam * r)
    return SolitonProfile(SolitonSpec("shrinker", lam), curve, residual, {"radius": r})


def grim_reaper(samples=401, y_margin=0.2):
    """Grim Reaper ``x = -log cos y`` on ``|y| <= pi/2 - y_margin``.

    Samples are equally spaced in arclength ``s = asinh(tan y)``.  The
    residual uses the exact curvature ``cos y``.
    """
    if samples < 16:
        raise SolitonError("need at least 16 samples")
    if not 0 < y_margin < math.pi / 2:
        raise SolitonError("y_margin must lie in (0, pi/2)")
    ymax = math.pi / 2 - y_margin
    smax = math.asinh(math.tan(ymax))
    s = np.linspace(-smax, smax, samples)
    y = np.arctan(np.sinh(s))
    pts = np.c_[-np.log(np.cos(y)), y]
    h = 2 * smax / (samples - 1)
    # curvature peaks at 1 on the vertex
    if h > 0.5:
        raise SolitonError("y_margin too small: the tail is unresolvable with this many samples")
    # exact frame: tangent (sin y, cos y), curvature vector cos y * (cos y, -sin y)
    t = np.c_[np.sin(y), np.cos(y)]
    kappa = np.cos(y)[:, None] * np.c_[np.cos(y), -np.sin(y)]
    e1_perp = np.array([1.0, 0.0]) - t[:, :1] * t
    residual = float(np.hypot(*(kappa - e1_perp).T).max())
    half_angle = 0.5 * math.pi - 1e-9
    curve = ProfileCurve(pts, "open", AsymptoticData(2 * half_angle, 0.0), validate=False)
    return SolitonProfile(SolitonSpec("translator"), curve, residual,
                          {"y_margin": y_margin, "spacing": h})


def lawlor_points(c, window, n):
    """``n`` points of ``y = sqrt(x^2 + c)``, ``|x| <= window``, equal arclength."""
    rc = math.sqrt(c)
    umax = math.asinh(window / rc)
    u = _arclength_nodes(lambda u: rc * np.sqrt(np.cosh(2 * u)), -umax, umax, n)
    return np.c_[rc * np.sinh(u), rc * np.cosh(u)]


def lawlor_profile(c=1 / 3, window=4.0, spacing=2e-3, n=None):
    """Minimal profile ``y = sqrt(x^2 + c)``: the hyperbola ``Re(gamma^2) = -c``.

    Its asymptotes are the rays at polar angles pi/4 and 3pi/4.  ``spacing``
    sets the arclength step unless ``n`` is given.
    """
    if not c > 0:
        raise SolitonError("c must be positive")
    if not window > 2 * math.sqrt(c):
        raise SolitonError("window must exceed 2 sqrt(c)")
    if n is None:
        rc = math.sqrt(c)
        umax = math.asinh(window / rc)
        length = quad(lambda u: rc * math.sqrt(math.cosh(2 * u)), -umax, umax)[0]
        n = int(math.ceil(length / spacing)) + 1
    pts = lawlor_points(c, window, n)
    x, y = pts.T
    # exact: kappa = c / (x^2 + y^2)^{3/2} along the upward normal, radial term equal
    r2 = x * x + y * y
    nrm = np.c_[-x, y] / np.sqrt(r2)[:, None]
    kappa = (c / r2**1.5)[:, None] * nrm
    radial = (np.einsum("ij,ij->i", pts, nrm) / r2)[:, None] * nrm
    residual = float(np.hypot(*(kappa - radial).T).max())
    curve = ProfileCurve(pts, "open", AsymptoticData(math.pi / 2))
    return SolitonProfile(SolitonSpec("minimal", 0.0, math.pi / 2), curve, residual,
                          {"c": c, "window": window, "vertex_distance": math.sqrt(c)})


# --------------------------------------------------------------------------
# Shooting
# --------------------------------------------------------------------------

def _rhs(s, z, lam):
    x, y, psi = z
    r2 = x * x + y * y
    xn = -x * math.sin(psi) + y * math.cos(psi)
    return [math.cos(psi), math.sin(psi), xn * (1.0 / r2 + lam)]


def asymptotic_opening_angle(right_half, fraction=0.1):
    """Opening angle ``pi - 2 phi`` from the mean polar angle ``phi`` over the
    last ``fraction`` of the samples (equally spaced in arclength)."""
    m = max(int(len(right_half) * fraction), 2)
    tail = right_half[-m:]
    phi = np.arctan2(tail[:, 1], tail[:, 0])
    return float(math.pi - 2 * phi.mean()), float(phi.std())


def shoot_profile(kind, vertex_distance, max_arclength=20.0, lam=None, spacing=None,
                  rtol=1e-12, atol=1e-12):
    """Integrate a symmetric soliton profile from the vertex ``(0, d)``.

    The right half is integrated in arclength and mirrored.  Shrinker
    profiles that return to the y-axis are closed up and report a
    ``closure_defect`` (distance of the tangent angle there to a multiple of
    pi, zero for a smooth closed curve).  Open profiles report the limiting
    opening angle of their asymptotic cone.

    ``spacing`` defaults to ``1e-3 * min(1, k0**-1.5)`` (floored at ``2e-5``)
    with ``k0`` the vertex curvature: the discrete residual scales like
    ``h^2 k0^3``.

    Raises
    ------
    SolitonError
        If the profile runs into the origin or the tangent angle blows up.
    """
    spec = SolitonSpec(kind, lam)
    d = float(vertex_distance)
    if not d > 0:
        raise SolitonError("vertex_distance must be positive")

    def hit_origin(s, z, lam):
        return z[0] ** 2 + z[1] ** 2 - 1e-12
    hit_origin.terminal = True

    def back_to_axis(s, z, lam):
        return z[0]
    back_to_axis.terminal = True
    back_to_axis.direction = -1

    events = [hit_origin]
    if kind == "shrinker":
        events.append(back_to_axis)
    sol = solve_ivp(_rhs, (0.0, max_arclength), [0.0, d, 0.0], args=(spec.lam,),
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True, events=events)
    if sol.status == -1:
        raise SolitonError(f"integration failed: {sol.message}")
    if sol.t_events[0].size:
        raise SolitonError("profile runs into the origin (tangent angle blows up)")
    if spacing is None:
        k0 = abs(1.0 / d + spec.lam * d)
        spacing = max(1e-3 * min(1.0, k0**-1.5), 2e-5)
    s_end = float(sol.t[-1])
    closed = kind == "shrinker" and sol.t_events[1].size > 0
    n_half = max(int(math.ceil(s_end / spacing)), 8)
    s = np.linspace(0.0, s_end, n_half + 1)
    x, y, psi = sol.sol(s)
    right = np.c_[x, y]
    left = np.c_[-x[::-1], y[::-1]]
    info = {"vertex_distance": d, "arclength": s_end}
    if closed:
        psi_end = float(psi[-1])
        info["closure_defect"] = float(abs(psi_end - math.pi * round(psi_end / math.pi)))
        # right half runs clockwise from the top to the bottom crossing
        pts = np.vstack([right[:-1], left[:-1]])
        curve = ProfileCurve(pts, "closed")
    else:
        alpha, spread = asymptotic_opening_angle(right)
        info["asymptotic_angle"] = alpha
        info["asymptotic_angle_spread"] = spread
        info["final_tangent_angle"] = float(psi[-1])
        pts = np.vstack([left[:-1], right])
        curve = ProfileCurve(pts, "open", AsymptoticData(alpha), validate=False)
        spec = SolitonSpec(kind, spec.lam, alpha)
    residual = soliton_residual(curve, spec)
    return SolitonProfile(spec, curve, residual, info)


def expander_for_angle(alpha, d_bracket=(1e-3, 50.0), max_arclength=20.0, tol=ANGLE_TOLERANCE,
                       spacing=None, window=None):
    """Self-expander (``lam = 1/2``) whose asymptotic opening angle is ``alpha``.

    Bisection in the vertex distance; the opening angle must differ in sign
    from ``alpha`` at the two bracket ends.  With ``window`` the returned
    profile is truncated to ``|gamma| <= window``.
    """
    if not 0 < alpha < math.pi / 2:
        raise SolitonError("alpha must lie strictly inside (0, pi/2)")

    def angle(d):
        return shoot_profile("expander", d, max_arclength, spacing=0.05).info["asymptotic_angle"]

    lo, hi = d_bracket
    f_lo, f_hi = angle(lo) - alpha, angle(hi) - alpha
    if f_lo * f_hi > 0:
        raise SolitonError(f"no bracket for alpha={alpha} in vertex distance {d_bracket}")
    history = []
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = angle(mid) - alpha
        history.append((mid, f_mid + alpha))
        if abs(f_mid) < 0.1 * tol or hi - lo < 1e-14 * hi:
            break
        if f_lo * f_mid <= 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    prof = shoot_profile("expander", mid, max_arclength, spacing=spacing)
    measured = prof.info["asymptotic_angle"]
    if abs(measured - alpha) > tol:
        raise SolitonError(f"bisection ended at angle {measured}, target {alpha}")
    info = dict(prof.info, target_alpha=alpha, bisection_steps=len(history))
    curve = prof.curve
    if window is not None:
        curve = truncate(curve, window)
    return SolitonProfile(SolitonSpec("expander", 0.5, alpha), curve, prof.residual, info)


def truncate(curve, radius):
    """Keep the contiguous run of samples around the point nearest the origin
    that stays inside ``|gamma| <= radius``."""
    r = np.hypot(*curve.points.T)
    i0 = int(np.argmin(r))
    if r[i0] > radius:
        raise CurveError("curve lies outside the truncation radius")
    lo = i0
    while lo > 0 and r[lo - 1] <= radius:
        lo -= 1
    hi = i0
    while hi < len(r) - 1 and r[hi + 1] <= radius:
        hi += 1
    return ProfileCurve(curve.points[lo:hi + 1], curve.topology if not curve.closed else "open",
                        curve.asymptotics, validate=False)


def minimal_first_integral(curve):
    """``gamma^2`` of each sample as complex numbers.  For a minimal profile
    ``Re(exp(-i c) gamma^2)`` is constant for some phase ``c``."""
    z = curve.points[:, 0] + 1j * curve.points[:, 1]
    return z * z
