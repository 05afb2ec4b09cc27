"""Initial profile curves for the experiment catalog.

Every generator returns a validated :class:`~eqlmcf.geometry.ProfileCurve`
sampled equally in arclength.  Parameter errors name the offending field.
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry import AsymptoticData, ProfileCurve, resample
from ..solitons import _arclength_nodes, grim_reaper, lawlor_points


class GeneratorError(ValueError):
    pass


def _require(cond, name, msg):
    if not cond:
        raise GeneratorError(f"{name}: {msg}")


def _closed_from_param(fn, n, oversample=16):
    u = np.linspace(0.0, 2 * np.pi, oversample * n, endpoint=False)
    dense = ProfileCurve(fn(u), "closed", validate=False)
    return resample(dense, n=n)


def ellipse(a=3.0, b=1.0, n=512):
    """``(a cos u, b sin u)``."""
    _require(a > 0, "a", "must be positive")
    _require(b > 0, "b", "must be positive")
    _require(n >= 8, "n", "must be at least 8")
    return _closed_from_param(lambda u: np.c_[a * np.cos(u), b * np.sin(u)], n)


def circle(radius=1.0, n=512, center=(0.0, 0.0)):
    _require(radius > 0, "radius", "must be positive")
    _require(n >= 8, "n", "must be at least 8")
    u = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return ProfileCurve(np.asarray(center) + radius * np.c_[np.cos(u), np.sin(u)], "closed")


def chekanov(n=512, scale=1.0):
    """``(e^{cos u}, sin u e^{-cos u})``, a loop in the right half-plane that
    does not enclose the origin.  ``scale`` dilates it about its centroid."""
    _require(scale > 0, "scale", "must be positive")
    _require(n >= 8, "n", "must be at least 8")

    def fn(u):
        return np.c_[np.exp(np.cos(u)), np.sin(u) * np.exp(-np.cos(u))]

    curve = _closed_from_param(fn, n)
    if scale != 1.0:
        c = curve.points.mean(axis=0)
        curve = ProfileCurve(c + scale * (curve.points - c), "closed")
    return curve


def figure_eight(scale=3.0, n=512):
    """``scale (-sin u, sin u cos u) / (1 + cos^2 u)``: a lemniscate crossing
    itself transversally at the origin (at ``u = 0`` and ``u = pi``)."""
    _require(scale > 0, "scale", "must be positive")
    _require(n >= 8 and n % 2 == 0, "n", "must be an even integer >= 8")

    def fn(u):
        d = 1.0 + np.cos(u) ** 2
        return scale * np.c_[-np.sin(u) / d, np.sin(u) * np.cos(u) / d]

    curve = _closed_from_param(fn, n)
    # equal-arclength resampling starting at u = 0 puts nodes 0 and n/2 at the crossing
    pts = curve.points.copy()
    pts[0] = 0.0
    pts[n // 2] = 0.0
    return ProfileCurve(pts, "closed")


def star(k=3, eps=0.2, n=512):
    """``(1 + eps cos(k u)) e^{iu}``, star-shaped about the origin."""
    _require(int(k) == k and k >= 1, "k", "must be a positive integer")
    _require(0 <= eps < 1, "eps", "must lie in [0, 1)")
    return _closed_from_param(
        lambda u: (1 + eps * np.cos(k * u))[:, None] * np.c_[np.cos(u), np.sin(u)], n)


def _smooth_profile(x, window, seed, modes=4):
    """Random smooth function on ``[-W, W]`` with sup 1, vanishing at the ends,
    even in ``x`` so the symmetry axis survives."""
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1.0, 1.0, modes)
    g = sum(a * np.cos((2 * j + 1) * np.pi * x / (2 * window)) for j, a in enumerate(coef))
    g = g * np.exp(-((x / (0.5 * window)) ** 2))
    return g / np.abs(g).max()


def arc(alpha=math.pi / 2, c=1 / 3, window=4.0, n=None, spacing=1 / 64,
        perturbation=0.0, seed=0):
    """One branch ``y = sqrt(x^2 cot^2(alpha/2) + c)``, ``|x| <= window``.

    Its asymptotic rays leave the origin at polar angles ``pi/2 +- alpha/2``.
    ``alpha = pi/2`` is the Lawlor profile.  ``perturbation = eps`` replaces
    ``c`` by ``c (1 + eps g(x))`` for a random smooth even ``g`` with
    ``|g| <= 1`` (seeded), so the curve lies between the profiles with
    constants ``c (1 - eps)`` and ``c (1 + eps)``.
    """
    _require(0 < alpha < math.pi, "alpha", "must lie in (0, pi)")
    _require(c > 0, "c", "must be positive")
    _require(window > 0, "window", "must be positive")
    _require(0 <= perturbation < 1, "perturbation", "must lie in [0, 1)")
    m = math.tan(alpha / 2)
    rc = math.sqrt(c)
    umax = math.asinh(window / (rc * m))
    asym = AsymptoticData(alpha)
    if n is None:
        _require(spacing > 0, "spacing", "must be positive")
        u = np.linspace(-umax, umax, 20001)
        sp = rc * np.sqrt(m**2 * np.cosh(u) ** 2 + np.sinh(u) ** 2)
        length = float(np.sum(0.5 * (sp[1:] + sp[:-1]) * np.diff(u)))
        n = int(math.ceil(length / spacing)) + 1
    _require(n >= 8, "n", "must be at least 8")
    if alpha == math.pi / 2:
        pts = lawlor_points(c, window, n)
    else:
        u = _arclength_nodes(lambda u: rc * np.sqrt(m**2 * np.cosh(u) ** 2 + np.sinh(u) ** 2),
                             -umax, umax, n)
        pts = np.c_[rc * m * np.sinh(u), rc * np.cosh(u)]
    if perturbation:
        x = np.linspace(-window, window, 16 * n)
        cx = c * (1 + perturbation * _smooth_profile(x, window, seed))
        dense = ProfileCurve(np.c_[x, np.sqrt(x**2 / m**2 + cx)], "open", asym, validate=False)
        return resample(ProfileCurve(dense.points, "open", asym), n=n)
    return ProfileCurve(pts, "open", asym)


def grim_reaper_curve(samples=761, y_margin=1e-3):
    """The Grim Reaper ``x = -log cos y`` on ``|y| <= pi/2 - y_margin``."""
    _require(samples >= 16, "samples", "must be at least 16")
    _require(0 < y_margin < math.pi / 2, "y_margin", "must lie in (0, pi/2)")
    return grim_reaper(samples, y_margin).curve


GENERATORS = {
    "ellipse": ellipse,
    "circle": circle,
    "chekanov": chekanov,
    "figure_eight": figure_eight,
    "star": star,
    "arc": arc,
    "grim_reaper": grim_reaper_curve,
}


def generate(name, **params):
    if name not in GENERATORS:
        raise GeneratorError(f"generator: unknown id {name!r}; expected one of {sorted(GENERATORS)}")
    try:
        return GENERATORS[name](**params)
    except TypeError as exc:
        raise GeneratorError(f"{name}: {exc}") from None
