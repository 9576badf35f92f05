"""Pure-Python reference kernels (fallback when the extension is not built)."""

import numpy as np


def _ad_star(c, u, lam):
    return -np.einsum("i,ijk,k->j", u, c, lam)


def _bracket(c, x, y):
    return np.einsum("i,j,ijk->k", x, y, c)


def rkmk4_flow(c, sharp_matrix, g0, lam0, dt, steps, controls=None):
    """Integrate ``g' = g u``, ``lam' = ad*(u) lam`` on a step-2 group.

    ``u = sharp(lam)`` when ``controls`` is None; otherwise ``controls`` has
    shape ``(steps, 3, d)`` holding ``u`` at ``t_n``, ``t_n + dt/2``, ``t_n + dt``.
    The algebra increment ``Omega`` solves ``Omega' = u + 1/2 [Omega, u]``
    (``dexp^{-1}`` truncates at step 2) alongside ``lam`` with classical RK4,
    and the position advances by ``g . exp(Omega)``.
    """
    c = np.ascontiguousarray(c, dtype=float)
    S = np.ascontiguousarray(sharp_matrix, dtype=float)
    d = c.shape[0]
    G = np.empty((steps + 1, d))
    L = np.empty((steps + 1, d))
    g = np.array(g0, dtype=float)
    lam = np.array(lam0, dtype=float)
    G[0] = g
    L[0] = lam
    half = 0.5 * dt
    for n in range(steps):
        if controls is None:
            u1 = lam @ S
        else:
            u1 = controls[n, 0]
        k1o = u1
        k1l = _ad_star(c, u1, lam)

        om = half * k1o
        l2 = lam + half * k1l
        u2 = l2 @ S if controls is None else controls[n, 1]
        k2o = u2 + 0.5 * _bracket(c, om, u2)
        k2l = _ad_star(c, u2, l2)

        om = half * k2o
        l3 = lam + half * k2l
        u3 = l3 @ S if controls is None else controls[n, 1]
        k3o = u3 + 0.5 * _bracket(c, om, u3)
        k3l = _ad_star(c, u3, l3)

        om = dt * k3o
        l4 = lam + dt * k3l
        u4 = l4 @ S if controls is None else controls[n, 2]
        k4o = u4 + 0.5 * _bracket(c, om, u4)
        k4l = _ad_star(c, u4, l4)

        omega = (dt / 6.0) * (k1o + 2 * k2o + 2 * k3o + k4o)
        lam = lam + (dt / 6.0) * (k1l + 2 * k2l + 2 * k3l + k4l)
        g = g + omega + 0.5 * _bracket(c, g, omega)
        G[n + 1] = g
        L[n + 1] = lam
    return G, L
