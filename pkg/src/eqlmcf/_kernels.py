"""Compiled inner loops for the curve flow.

Everything here works on raw ``(n, 2)`` float arrays so numba can compile it
in nopython mode.  The public, readable versions of the same formulas live in
:mod:`eqlmcf.geometry`; ``tests/test_flow.py`` checks the two agree.
"""

import numpy as np
from numba import njit

GAUGE_PHYSICAL = 0
GAUGE_CSF = 1
GAUGE_SHRINKER = 2
GAUGE_EXPANDER = 3

# advance() exit codes
ST_TIME = 0
ST_VELOCITY = 1
ST_PROXY = 2
ST_STEADY = 3
ST_MIN_RADIUS = 4
ST_RESOLUTION = 5
ST_REMESH = 6
ST_MAX_STEPS = 7
ST_UNDERFLOW = 8


@njit(cache=True)
def node_frame(X, closed, gauge, eps, beta, T, N, k, orb):
    """Fill unit tangents, normals, signed curvature, orbit term and normal speed.

    ``orb`` receives <gamma, N>/|gamma|^2 (the regularized radial term, signed).
    Endpoints of open curves are pinned: all outputs there are zero.
    """
    n = X.shape[0]
    for i in range(n):
        if closed:
            im = (i - 1) % n
            ip = (i + 1) % n
        else:
            if i == 0 or i == n - 1:
                beta[i] = 0.0
                T[i, 0] = 0.0
                T[i, 1] = 0.0
                N[i, 0] = 0.0
                N[i, 1] = 0.0
                k[i] = 0.0
                orb[i] = 0.0
                continue
            im = i - 1
            ip = i + 1
        ax = X[i, 0] - X[im, 0]
        ay = X[i, 1] - X[im, 1]
        bx = X[ip, 0] - X[i, 0]
        by = X[ip, 1] - X[i, 1]
        ha = np.sqrt(ax * ax + ay * ay)
        hb = np.sqrt(bx * bx + by * by)
        ax /= ha
        ay /= ha
        bx /= hb
        by /= hb
        tx = ax + bx
        ty = ay + by
        tn = np.sqrt(tx * tx + ty * ty)
        tx /= tn
        ty /= tn
        nx = -ty
        ny = tx
        kk = 2.0 * ((bx - ax) * nx + (by - ay) * ny) / (ha + hb)
        T[i, 0] = tx
        T[i, 1] = ty
        N[i, 0] = nx
        N[i, 1] = ny
        k[i] = kk
        r2 = X[i, 0] * X[i, 0] + X[i, 1] * X[i, 1]
        xn = X[i, 0] * nx + X[i, 1] * ny
        if r2 < eps * eps:
            rho = 0.5 * kk
        else:
            rho = xn / r2
        orb[i] = rho
        if gauge == GAUGE_CSF:
            beta[i] = kk
        elif gauge == GAUGE_SHRINKER:
            beta[i] = kk - rho + 0.5 * xn
        elif gauge == GAUGE_EXPANDER:
            beta[i] = kk - rho - 0.5 * xn
        else:
            beta[i] = kk - rho


@njit(cache=True)
def advance(X, closed, gauge, eps, cfl, relax, t, t_stop, v_stop, K_stop,
            steady_tol, rmin_stop, res_limit, remesh_ratio, max_steps, dt_floor):
    """Explicit steps in place until an event fires.

    Returns ``(t, steps, status, sup_speed, K)`` where ``status`` is one of the
    ``ST_*`` codes.  Events are checked before each step, so on return ``X`` is
    the state the event refers to.
    """
    n = X.shape[0]
    beta = np.zeros(n)
    T = np.zeros((n, 2))
    N = np.zeros((n, 2))
    k = np.zeros(n)
    orb = np.zeros(n)
    ne = n if closed else n - 1
    h = np.zeros(ne)
    a = np.zeros(ne)
    alpha = np.zeros(n)
    steps = 0
    vmax = 0.0
    Kp = 0.0
    while True:
        node_frame(X, closed, gauge, eps, beta, T, N, k, orb)
        vmax = 0.0
        Kp = 0.0
        kmax = 0.0
        rmin = 1e300
        for i in range(n):
            b = abs(beta[i])
            if b > vmax:
                vmax = b
            kk = abs(k[i])
            if kk > kmax:
                kmax = kk
            o = abs(orb[i])
            if o > Kp:
                Kp = o
            r2 = X[i, 0] * X[i, 0] + X[i, 1] * X[i, 1]
            if r2 >= eps * eps and r2 < rmin:
                rmin = r2
        if kmax > Kp:
            Kp = kmax
        rmin = np.sqrt(rmin)

        L = 0.0
        hmin = 1e300
        hmax = 0.0
        for j in range(ne):
            jp = (j + 1) % n
            ex = X[jp, 0] - X[j, 0]
            ey = X[jp, 1] - X[j, 1]
            hj = np.sqrt(ex * ex + ey * ey)
            h[j] = hj
            L += hj
            if hj < hmin:
                hmin = hj
            if hj > hmax:
                hmax = hj
            a[j] = ((beta[jp] * N[jp, 0] - beta[j] * N[j, 0]) * ex
                    + (beta[jp] * N[jp, 1] - beta[j] * N[j, 1]) * ey) / hj

        if t >= t_stop:
            return t, steps, ST_TIME, vmax, Kp
        if vmax >= v_stop:
            return t, steps, ST_VELOCITY, vmax, Kp
        if Kp >= K_stop:
            return t, steps, ST_PROXY, vmax, Kp
        if vmax < steady_tol:
            return t, steps, ST_STEADY, vmax, Kp
        if rmin < rmin_stop:
            return t, steps, ST_MIN_RADIUS, vmax, Kp
        if kmax * L / ne > res_limit:
            return t, steps, ST_RESOLUTION, vmax, Kp
        if hmax > remesh_ratio * hmin:
            return t, steps, ST_REMESH, vmax, Kp
        if steps >= max_steps:
            return t, steps, ST_MAX_STEPS, vmax, Kp

        dt = cfl * hmin * hmin
        # near-origin forcing behaves like 1/r: keep dt below the local r^2 scale
        if rmin < 1e299 and cfl * rmin * rmin < dt:
            dt = cfl * rmin * rmin
        # rejection: halve until the largest displacement is under half a spacing
        while dt * vmax > 0.5 * hmin:
            dt *= 0.5
        if dt < dt_floor:
            return t, steps, ST_UNDERFLOW, vmax, Kp
        # relaxation rate uses the unclipped step so a short final step stays gentle
        w = relax / dt
        if t + dt > t_stop:
            dt = t_stop - t

        asum = 0.0
        for j in range(ne):
            asum += a[j]
        hbar = L / ne
        alpha[0] = 0.0
        for j in range(ne):
            if j + 1 < n:
                alpha[j + 1] = alpha[j] + h[j] * asum / L + w * (hbar - h[j]) - a[j]
        if closed:
            m = 0.0
            for i in range(n):
                m += alpha[i]
            m /= n
            for i in range(n):
                alpha[i] -= m
        else:
            alpha[n - 1] = 0.0
        for i in range(n):
            X[i, 0] += dt * (beta[i] * N[i, 0] + alpha[i] * T[i, 0])
            X[i, 1] += dt * (beta[i] * N[i, 1] + alpha[i] * T[i, 1])
        t += dt
        steps += 1
