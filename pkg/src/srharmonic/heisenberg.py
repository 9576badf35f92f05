"""Maps into ``H^n``: contact-form pullback and the complex harmonic-map test.

A horizontal map ``f = (u, v, w)`` with ``zeta = u + i v`` is normal harmonic
exactly when some horizontal, divergence-free ``Y`` solves
``(Delta - i Y) zeta = 0``. :func:`harmonic_residual` evaluates the three
conditions for a given ``Y``; :func:`recover_Y` reads ``Y`` off a normal
certificate (its ``theta``-component) so both characterizations can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import LeftInvariantStructure, heisenberg_algebra, heisenberg_index
from .domain import (
    GridDomain,
    apply_vector_field,
    axis_derivative,
    l2_norm,
    sub_laplacian,
    vector_field_divergence,
)
from .errors import InputError
from .forms import restrict
from .variational import Certificate


@dataclass(frozen=True)
class HeisenbergMap:
    """``u, v`` have shape ``(n, *grid)``; ``w`` has shape ``grid``."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if u.ndim == w.ndim:
            u, v = u[None], v[None]
        if u.shape != v.shape or u.shape[1:] != w.shape:
            raise InputError("u and v must have shape (n, *grid) matching w")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def zeta(self) -> np.ndarray:
        return self.u + 1j * self.v

    def to_map_field(self) -> np.ndarray:
        """Group coordinates ``(a, b, c)`` per node, shape ``(*grid, 2n + 1)``."""
        return np.concatenate([np.moveaxis(self.u, 0, -1), np.moveaxis(self.v, 0, -1), self.w[..., None]], axis=-1)

    @classmethod
    def from_map_field(cls, f) -> "HeisenbergMap":
        f = np.asarray(f, dtype=float)
        d = f.shape[-1]
        if d < 3 or d % 2 == 0:
            raise InputError(f"H^n map fields need an odd coordinate count >= 3, got {d}")
        n = (d - 1) // 2
        return cls(np.moveaxis(f[..., :n], -1, 0), np.moveaxis(f[..., n:2 * n], -1, 0), f[..., 2 * n])

    @classmethod
    def from_complex(cls, zeta, w) -> "HeisenbergMap":
        zeta = np.asarray(zeta)
        return cls(zeta.real, zeta.imag, w)


def theta_pullback(dom: GridDomain, f: HeisenbergMap) -> np.ndarray:
    """``f^* theta = dw + 1/2 sum_j (v_j du_j - u_j dv_j)`` as a full real 1-form ``(*grid, m)``."""
    _check_grid(dom, f)
    comps = []
    for j in range(dom.dim_m):
        du = np.stack([axis_derivative(dom, uj, j) for uj in f.u])
        dv = np.stack([axis_derivative(dom, vj, j) for vj in f.v])
        comps.append(axis_derivative(dom, f.w, j) + 0.5 * np.sum(f.v * du - f.u * dv, axis=0))
    return np.stack(comps, axis=-1)


def _check_grid(dom: GridDomain, f: HeisenbergMap):
    if f.w.shape != dom.shape:
        raise InputError(f"map grid {f.w.shape} does not match domain {dom.shape}")


@dataclass
class HarmonicResidual:
    pde_residual: np.ndarray  # complex, (n, *grid)
    divY: np.ndarray
    horiz_residual: np.ndarray  # (*grid, k)
    mask: np.ndarray

    def norms(self) -> dict:
        m = self.mask
        return {
            "pde_residual_max": float(np.max(np.abs(self.pde_residual[:, m]), initial=0.0)),
            "divY_max": float(np.max(np.abs(self.divY[m]), initial=0.0)),
            "horiz_residual_max": float(np.max(np.abs(self.horiz_residual[m]), initial=0.0)),
        }


def harmonic_residual(dom: GridDomain, f: HeisenbergMap, Y=None) -> HarmonicResidual:
    """Residuals of ``(Delta - iY) zeta = 0``, ``div Y = 0`` and horizontality.

    ``Y`` is given by frame components, shape ``(*grid, k)`` (None means 0).
    Norms are taken over interior nodes on non-periodic domains.
    """
    _check_grid(dom, f)
    if Y is None:
        Y = np.zeros(dom.shape + (dom.rank_k,))
    Y = np.asarray(Y, dtype=float)
    if Y.shape != dom.shape + (dom.rank_k,):
        raise InputError(f"Y must be given by frame components of shape {dom.shape + (dom.rank_k,)}; "
                         "use domain.vector_to_frame for coordinate fields")
    zeta = f.zeta
    pde = np.empty(zeta.shape, dtype=complex)
    for j in range(f.n):
        lap = sub_laplacian(dom, zeta[j].real) + 1j * sub_laplacian(dom, zeta[j].imag)
        Yz = apply_vector_field(dom, Y, zeta[j].real) + 1j * apply_vector_field(dom, Y, zeta[j].imag)
        pde[j] = lap - 1j * Yz
    divY = vector_field_divergence(dom, Y)
    horiz = restrict(dom, theta_pullback(dom, f))
    return HarmonicResidual(pde, divY, horiz, dom.interior_mask)


def recover_Y(dom: GridDomain, structure: LeftInvariantStructure, certificate: Certificate,
              f: HeisenbergMap = None):
    """Frame components of ``Y = sharp_g(lambda_0)`` from a normal certificate.

    ``lambda_0(X_i)`` is the ``theta`` (last) coordinate of ``lambda(X_i)``. With
    ``f`` given, the report compares :func:`harmonic_residual` against the
    certificate residual.
    """
    n = heisenberg_index(structure)
    if n is None:
        raise InputError("recover_Y needs the standard structure on a Heisenberg algebra")
    if certificate.kind != "normal":
        raise InputError("recover_Y needs a normal certificate")
    lam = np.asarray(certificate.field)
    if lam.shape != dom.shape + (dom.rank_k, 2 * n + 1):
        raise InputError("certificate field does not match the domain")
    Y = lam[..., 2 * n].copy()
    report = {"certificate_residual": certificate.residual_norm}
    if f is not None:
        res = harmonic_residual(dom, f, Y)
        report.update(res.norms())
        mask = dom.interior_mask
        # the A*/B* part of L_alpha^* lambda is -(Delta - iY) zeta split into real pieces
        pde_l2 = l2_norm(dom, np.moveaxis(np.concatenate([res.pde_residual.real, res.pde_residual.imag]), 0, -1), mask)
        report["pde_residual_l2"] = pde_l2
        report["divY_l2"] = l2_norm(dom, res.divY, mask)
    return Y, report


def heisenberg_structure(n: int) -> LeftInvariantStructure:
    return heisenberg_algebra(n)[1]
