"""Normal and abnormal extremals on step-2 groups, left-trivialized.

The state is a group point ``g`` and a covector ``lam`` in ``g*``. Normal
extremals use the control ``u = sharp(lam)``; abnormal ones take an external
horizontal control and track the defect ``|sharp(eta)|``. Both propagate the
covector by ``lam' = ad*(u) lam``.

For ``H^n`` with ``lam = (lam_a, lam_b, y)`` one has ``zeta' = lam_a + i lam_b``
and ``zeta'' + i y zeta' = 0``, so ``zeta'(t) = exp(-i y t) zeta'(0)``; see
:func:`heisenberg_geodesic_closed_form`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .algebra import LeftInvariantStructure, sharp
from .errors import DivergenceError, InputError, UnsupportedGroupError
from .kernels import rkmk4_flow


@dataclass
class Trajectory:
    t: np.ndarray
    g: np.ndarray
    lam: np.ndarray
    kind: str = "normal"
    report: dict = field(default_factory=dict)

    @property
    def endpoint(self) -> np.ndarray:
        return self.g[-1]


def hamiltonian(structure: LeftInvariantStructure, lam) -> np.ndarray:
    """``1/2 <sharp lam, sharp lam>``."""
    u = sharp(structure, lam)
    return 0.5 * structure.inner(u, u)


def _prepare(structure, g0, lam0, T, steps):
    if not structure.algebra.is_step_two():
        raise UnsupportedGroupError("extremal flows are implemented for step <= 2 groups")
    if int(steps) != steps or steps < 1:
        raise InputError(f"steps must be a positive integer, got {steps!r}")
    d = structure.dim
    g0 = np.zeros(d) if g0 is None else np.asarray(g0, dtype=float)
    lam0 = np.asarray(lam0, dtype=float)
    if g0.shape != (d,) or lam0.shape != (d,):
        raise InputError(f"g0 and lam0 must have length {d}")
    return g0, lam0, float(T), int(steps)


def _check_finite(G, L, kind):
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(L))):
        bad = int(np.argmin(np.all(np.isfinite(G), axis=1) & np.all(np.isfinite(L), axis=1)))
        raise DivergenceError("trajectory became non-finite", {"kind": kind, "first_bad_step": bad})


def shoot_normal(structure: LeftInvariantStructure, g0, lam0, T: float = 1.0,
                 steps: int = 1000, backend: Optional[str] = None) -> Trajectory:
    """Integrate the normal extremal from ``(g0, lam0)`` over ``[0, T]``."""
    g0, lam0, T, steps = _prepare(structure, g0, lam0, T, steps)
    dt = T / steps
    G, L = rkmk4_flow(structure.algebra.structure_constants, structure.sharp_matrix,
                      g0, lam0, dt, steps, None, backend=backend)
    _check_finite(G, L, "normal")
    t = np.linspace(0.0, T, steps + 1)
    H = hamiltonian(structure, L)
    report = {"hamiltonian_initial": float(H[0]),
              "hamiltonian_drift": float(np.max(np.abs(H - H[0]))),
              "steps": steps, "T": T}
    return Trajectory(t, G, L, "normal", report)


def shoot_abnormal(structure: LeftInvariantStructure, g0, eta0, u: Callable, T: float = 1.0,
                   steps: int = 1000, backend: Optional[str] = None, tol: float = 1e-12) -> Trajectory:
    """Integrate ``g' = g u(t)``, ``eta' = ad*(u) eta`` for a horizontal control ``u``.

    ``report["abnormality_defect"]`` is ``max_t |sharp eta(t)|``; a genuine
    abnormal extremal keeps it at integrator tolerance.
    """
    g0, eta0, T, steps = _prepare(structure, g0, eta0, T, steps)
    initial = float(np.max(np.abs(sharp(structure, eta0))))
    if initial > tol:
        raise InputError(f"eta0 must satisfy sharp(eta0) = 0 (got {initial:.3e})")
    dt = T / steps
    t = np.linspace(0.0, T, steps + 1)
    nodes = np.stack([t[:-1], t[:-1] + 0.5 * dt, t[1:]], axis=1)
    controls = np.asarray(np.vectorize(u, signature="()->(n)")(nodes), dtype=float)
    if controls.shape != (steps, 3, structure.dim):
        raise InputError(f"control must return vectors of length {structure.dim}")
    quotient = np.max(np.abs(structure.quotient(controls)), initial=0.0)
    G, L = rkmk4_flow(structure.algebra.structure_constants, structure.sharp_matrix,
                      g0, eta0, dt, steps, controls, backend=backend)
    _check_finite(G, L, "abnormal")
    defect = np.linalg.norm(sharp(structure, L), axis=-1)
    report = {"abnormality_defect": float(np.max(defect)),
              "control_horizontality": float(quotient),
              "steps": steps, "T": T}
    return Trajectory(t, G, L, "abnormal", report)


def _K(y: float, t):
    """``(1 - exp(-i y t)) / (i y)`` with its series near ``y = 0``."""
    t = np.asarray(t, dtype=float)
    z = y * t
    if abs(y) * np.max(np.abs(t), initial=0.0) < 1e-4:
        return t * (1 - 0.5j * z - z * z / 6 + 1j * z ** 3 / 24)
    return (1 - np.exp(-1j * z)) / (1j * y)


def _J(y: float, t):
    """``int_0^t K(s) ds = (t - K(t)) / (i y)``."""
    t = np.asarray(t, dtype=float)
    z = y * t
    if abs(y) * np.max(np.abs(t), initial=0.0) < 1e-4:
        return t * t * (0.5 - 1j * z / 6 - z * z / 24 + 1j * z ** 3 / 120)
    return (t - _K(y, t)) / (1j * y)


def heisenberg_geodesic_closed_form(zeta0, zdot0, y: float, t, w0: float = 0.0):
    """Normal geodesic of ``H^n`` in complex coordinates.

    ``zeta(t) = zeta0 + K(t) zdot0`` with ``K(t) = (1 - exp(-i y t)) / (i y)``, and
    ``w`` integrates the horizontality relation ``w' = 1/2 sum_j Im(conj(zeta_j) zeta_j')``.
    Returns ``zeta`` with shape ``(len(t), n)`` (or ``(n,)`` for scalar ``t``) and ``w``.
    """
    zeta0 = np.atleast_1d(np.asarray(zeta0, dtype=complex))
    zdot0 = np.atleast_1d(np.asarray(zdot0, dtype=complex))
    if zeta0.shape != zdot0.shape or zeta0.ndim != 1:
        raise InputError("zeta0 and zdot0 must be complex n-vectors of equal length")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    K = _K(float(y), t)[:, None]
    J = _J(float(y), t)[:, None]
    zeta = zeta0[None, :] + K * zdot0[None, :]
    integrand = np.conj(zeta0)[None, :] * zdot0[None, :] * K + (np.abs(zdot0) ** 2)[None, :] * J
    w = w0 + 0.5 * np.imag(integrand).sum(axis=1)
    if scalar:
        return zeta[0], float(w[0])
    return zeta, w


def heisenberg_state_to_complex(n: int, g, lam):
    """Split ``H^n`` coordinates/covector into ``(zeta, w, zdot, y)``."""
    g = np.asarray(g, dtype=float)
    lam = np.asarray(lam, dtype=float)
    zeta = g[..., :n] + 1j * g[..., n:2 * n]
    zdot = lam[..., :n] + 1j * lam[..., n:2 * n]
    return zeta, g[..., 2 * n], zdot, lam[..., 2 * n]


def closed_form_gap(n: int, traj: Trajectory) -> float:
    """Max distance between a shot ``H^n`` normal trajectory and the closed form."""
    zeta0, w0, zdot0, y = heisenberg_state_to_complex(n, traj.g[0], traj.lam[0])
    zeta, w = heisenberg_geodesic_closed_form(zeta0, zdot0, float(y), traj.t, float(w0))
    zeta_num, w_num, _, _ = heisenberg_state_to_complex(n, traj.g, traj.lam)
    return float(max(np.max(np.abs(zeta - zeta_num)), np.max(np.abs(w - w_num))))
