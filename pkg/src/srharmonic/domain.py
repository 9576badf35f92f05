"""Discretized sub-Riemannian measure spaces on uniform grids.

A :class:`GridDomain` carries a uniform grid, an orthonormal frame
``X_1, ..., X_k`` of the distribution given by coordinate coefficients at each
node, and a positive density ``rho`` with ``dmu = rho dx``.

Coordinate derivatives use central differences, with second-order one-sided
stencils on the ends of non-periodic axes. The codifferential and the frame
divergences are *defined* as exact adjoints of the frame derivatives with
respect to the weighted inner product, so discrete integration by parts holds
to round-off on every grid kind. Non-periodic axes use trapezoid quadrature.

Frame indices are zero-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .algebra import SPD_TOL
from .errors import InputError

KINDS = ("interval", "box", "torus")
# one-sided stencils touch three nodes; the adjoint is consistent from the fourth on
BOUNDARY_LAYER = 3

FrameSpec = Union[None, np.ndarray, Callable]


def _axis_derivative(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    if periodic:
        if n < 3:
            raise InputError("periodic axes need at least 3 nodes")
        rows = np.repeat(np.arange(n), 2)
        cols = np.stack([(np.arange(n) + 1) % n, (np.arange(n) - 1) % n], axis=1).ravel()
        vals = np.tile([0.5 / h, -0.5 / h], n)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if n < 3:
        raise InputError("non-periodic axes need at least 3 nodes")
    D = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        D[i, i - 1] = -0.5 / h
        D[i, i + 1] = 0.5 / h
    D[0, 0:3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D[n - 1, n - 3:n] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    return D.tocsr()


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Uniform grid with an orthonormal frame of ``D`` and a density.

    ``frames`` has shape ``(k, *shape, m)``: ``frames[i, ..., j]`` is the
    ``x_j``-coefficient of ``X_i``. ``density`` has shape ``shape``.
    """

    kind: str
    shape: tuple
    spacing: tuple
    frames: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        shape = tuple(int(s) for s in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        if len(shape) != len(spacing) or not shape:
            raise InputError("shape and spacing must have the same nonzero length")
        if self.kind == "interval" and len(shape) != 1:
            raise InputError("interval domains are one-dimensional")
        if any(h <= 0 for h in spacing):
            raise InputError("spacing must be positive")
        m = len(shape)
        frames = np.array(self.frames, dtype=float)
        if frames.ndim != m + 2 or frames.shape[1:-1] != shape or frames.shape[-1] != m:
            raise InputError(f"frames must have shape (k, *{shape}, {m}), got {frames.shape}")
        k = frames.shape[0]
        if not 1 <= k <= m:
            raise InputError(f"frame count k must satisfy 1 <= k <= m = {m}")
        stacked = np.moveaxis(frames, 0, -1).reshape(-1, m, k)
        smin = np.linalg.svd(stacked, compute_uv=False)[:, -1]
        if np.min(smin) <= 1e-12:
            raise InputError("frame vectors are linearly dependent at some node")
        density = np.broadcast_to(np.array(self.density, dtype=float), shape).copy()
        if not np.all(density > 0) or not np.all(np.isfinite(density)):
            raise InputError("density must be positive and finite")
        frames.setflags(write=False)
        density.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "density", density)

    # construction -------------------------------------------------------

    @classmethod
    def build(cls, kind: str, shape: Sequence[int], lengths=1.0,
              frames: FrameSpec = None, density=None) -> "GridDomain":
        """Grid on ``[0, L_j)`` (torus) or ``[0, L_j]`` (interval/box).

        ``frames`` may be None (coordinate frame), an array of shape ``(k, m)``
        (constant), ``(k, *shape, m)``, or a callable taking the coordinate
        arrays and returning either of those. ``density`` may be None (1),
        a scalar, an array, or a callable of the coordinates.
        """
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        m = len(shape)
        lengths = np.broadcast_to(np.asarray(lengths, dtype=float), (m,))
        if kind == "torus":
            spacing = tuple(L / n for L, n in zip(lengths, shape))
        else:
            spacing = tuple(L / (n - 1) for L, n in zip(lengths, shape))
        axes = [np.arange(n) * h for n, h in zip(shape, spacing)]
        coords = np.meshgrid(*axes, indexing="ij")

        if callable(frames):
            frames = frames(*coords)
        if frames is None:
            frames = np.eye(m)
        frames = np.asarray(frames, dtype=float)
        if frames.ndim == 2:
            frames = np.broadcast_to(frames[(slice(None),) + (None,) * m], (frames.shape[0],) + shape + (m,))
        if callable(density):
            density = density(*coords)
        if density is None:
            density = 1.0
        return cls(kind, shape, spacing, frames, density)

    @classmethod
    def torus(cls, shape, lengths=1.0, frames: FrameSpec = None, density=None) -> "GridDomain":
        return cls.build("torus", shape, lengths, frames, density)

    @classmethod
    def box(cls, shape, lengths=1.0, frames: FrameSpec = None, density=None) -> "GridDomain":
        return cls.build("box", shape, lengths, frames, density)

    @classmethod
    def interval(cls, n: int, length: float = 1.0, frames: FrameSpec = None, density=None) -> "GridDomain":
        return cls.build("interval", (n,), length, frames, density)

    # geometry -----------------------------------------------------------

    @property
    def dim_m(self) -> int:
        return len(self.shape)

    @property
    def rank_k(self) -> int:
        return self.frames.shape[0]

    @property
    def periodic(self) -> bool:
        return self.kind == "torus"

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def coordinates(self) -> tuple:
        axes = [np.arange(n) * h for n, h in zip(self.shape, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def quadrature(self) -> np.ndarray:
        """Coordinate quadrature weights (product of per-axis rules)."""
        w = np.ones(self.shape)
        for axis, (n, h) in enumerate(zip(self.shape, self.spacing)):
            rule = np.full(n, h)
            if not self.periodic:
                rule[0] = rule[-1] = 0.5 * h
            w = w * rule.reshape((1,) * axis + (n,) + (1,) * (self.dim_m - axis - 1))
        return w

    @cached_property
    def weights(self) -> np.ndarray:
        """Nodal weights of ``dmu``: density times quadrature."""
        w = self.density * self.quadrature
        w.setflags(write=False)
        return w

    @cached_property
    def interior_mask(self) -> np.ndarray:
        """Nodes where every discrete operator is consistent (all nodes on a torus)."""
        mask = np.ones(self.shape, dtype=bool)
        if self.periodic:
            return mask
        for axis, n in enumerate(self.shape):
            keep = np.zeros(n, dtype=bool)
            keep[BOUNDARY_LAYER:n - BOUNDARY_LAYER] = True
            mask &= keep.reshape((1,) * axis + (n,) + (1,) * (self.dim_m - axis - 1))
        return mask

    @cached_property
    def axis_derivatives(self) -> tuple:
        """Sparse ``N x N`` matrices of the coordinate derivatives on flattened fields."""
        mats = []
        for axis, (n, h) in enumerate(zip(self.shape, self.spacing)):
            D1 = _axis_derivative(n, h, self.periodic)
            left = sp.identity(int(np.prod(self.shape[:axis], dtype=int)), format="csr")
            right = sp.identity(int(np.prod(self.shape[axis + 1:], dtype=int)), format="csr")
            mats.append(sp.kron(sp.kron(left, D1), right, format="csr"))
        return tuple(mats)

    @cached_property
    def frame_operators(self) -> tuple:
        """Sparse matrices of ``X_i`` acting on flattened scalar fields."""
        ops = []
        for i in range(self.rank_k):
            X = sp.csr_matrix((self.num_nodes, self.num_nodes))
            for j, Dj in enumerate(self.axis_derivatives):
                coeff = self.frames[i, ..., j].ravel()
                if np.any(coeff):
                    X = X + sp.diags(coeff) @ Dj
            ops.append(X.tocsr())
        return tuple(ops)

    @cached_property
    def frame_adjoints(self) -> tuple:
        """Weighted adjoints ``W^{-1} X_i^T W`` of the frame operators."""
        w = self.weights.ravel()
        return tuple((sp.diags(1.0 / w) @ X.T @ sp.diags(w)).tocsr() for X in self.frame_operators)

    # field helpers -------------------------------------------------------

    def _flatten(self, field, extra: int):
        field = np.asarray(field, dtype=float)
        lead = field.shape[: field.ndim - extra]
        if lead != self.shape:
            raise InputError(f"field shape {field.shape} does not match grid {self.shape}")
        return field.reshape((self.num_nodes,) + field.shape[field.ndim - extra:])

    def apply(self, op: sp.spmatrix, field, extra: int = 0) -> np.ndarray:
        """Apply a nodal sparse operator to a field with ``extra`` trailing axes."""
        flat = self._flatten(field, extra)
        out = op @ flat.reshape(self.num_nodes, -1)
        return out.reshape(self.shape + flat.shape[1:])

    def trailing_axes(self, field) -> int:
        return np.ndim(field) - self.dim_m


def frame_derivative(dom: GridDomain, phi, i: int) -> np.ndarray:
    """``X_i phi``; ``phi`` may carry trailing (e.g. Lie algebra) axes."""
    if not 0 <= i < dom.rank_k:
        raise InputError(f"frame index {i} out of range 0..{dom.rank_k - 1}")
    return dom.apply(dom.frame_operators[i], phi, dom.trailing_axes(phi))


def axis_derivative(dom: GridDomain, phi, j: int) -> np.ndarray:
    """Coordinate derivative along axis ``j``."""
    if not 0 <= j < dom.dim_m:
        raise InputError(f"axis {j} out of range 0..{dom.dim_m - 1}")
    return dom.apply(dom.axis_derivatives[j], phi, dom.trailing_axes(phi))


def frame_adjoint(dom: GridDomain, psi, i: int) -> np.ndarray:
    """Weighted adjoint ``X_i^*`` (so ``<X_i a, b> = <a, X_i^* b>``)."""
    return dom.apply(dom.frame_adjoints[i], psi, dom.trailing_axes(psi))


def divergence(dom: GridDomain, i: int) -> np.ndarray:
    """``div_mu X_i``: the field with ``<X_i phi, 1> = -<phi, div X_i>`` for all ``phi``."""
    if not 0 <= i < dom.rank_k:
        raise InputError(f"frame index {i} out of range 0..{dom.rank_k - 1}")
    return -frame_adjoint(dom, np.ones(dom.shape), i)


def vector_field_divergence(dom: GridDomain, Y) -> np.ndarray:
    """Divergence of ``sum_i Y_i X_i`` given frame components ``Y`` of shape ``(*shape, k)``."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape != dom.shape + (dom.rank_k,):
        raise InputError(f"frame components must have shape {dom.shape + (dom.rank_k,)}")
    return -delta_D(dom, Y)


def apply_vector_field(dom: GridDomain, Y, phi) -> np.ndarray:
    """``Y phi`` for ``Y = sum_i Y_i X_i``; ``phi`` may carry trailing axes."""
    Y = np.asarray(Y)
    extra = dom.trailing_axes(phi)
    out = 0.0
    for i in range(dom.rank_k):
        coeff = Y[..., i].reshape(dom.shape + (1,) * extra)
        out = out + coeff * frame_derivative(dom, phi, i)
    return np.asarray(out)


def sub_laplacian(dom: GridDomain, phi) -> np.ndarray:
    """``Delta phi = -sum_i X_i^* X_i phi``.

    Equals ``sum_i X_i^2 phi + (X_i phi) div X_i`` up to discretization error
    and is self-adjoint and nonpositive in the weighted inner product.
    """
    out = 0.0
    for i in range(dom.rank_k):
        out = out - frame_adjoint(dom, frame_derivative(dom, phi, i), i)
    return np.asarray(out)


def delta_D(dom: GridDomain, eta) -> np.ndarray:
    """Codifferential of a D-restricted 1-form.

    ``eta`` has shape ``(*shape, k)`` or ``(*shape, k, d)``; the result is the
    exact weighted adjoint of ``F -> (X_i F)_i``.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape[: dom.dim_m + 1] != dom.shape + (dom.rank_k,):
        raise InputError(f"restricted 1-form must have leading shape {dom.shape + (dom.rank_k,)}, got {eta.shape}")
    out = 0.0
    for i in range(dom.rank_k):
        out = out + frame_adjoint(dom, np.take(eta, i, axis=dom.dim_m), i)
    return np.asarray(out)


def l2_inner(dom: GridDomain, a, b) -> float:
    """Weighted inner product ``sum_nodes <a, b> rho dx``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.shape[: dom.dim_m] != dom.shape:
        raise InputError(f"field shape {a.shape} does not match grid {dom.shape}")
    prod = (a * b).reshape(dom.shape + (-1,)).sum(axis=-1)
    return float(np.sum(prod * dom.weights))


def l2_norm(dom: GridDomain, a, mask: Optional[np.ndarray] = None) -> float:
    a = np.asarray(a, dtype=float)
    sq = (a * a).reshape(dom.shape + (-1,)).sum(axis=-1) * dom.weights
    if mask is not None:
        sq = sq[mask]
    return float(np.sqrt(np.sum(sq)))


def vector_to_frame(dom: GridDomain, V, tol: float = 1e-8) -> np.ndarray:
    """Frame components of a coordinate vector field ``V`` of shape ``(*shape, m)``."""
    V = np.asarray(V, dtype=float)
    if V.shape != dom.shape + (dom.dim_m,):
        raise InputError(f"vector field must have shape {dom.shape + (dom.dim_m,)}")
    frames = np.moveaxis(dom.frames, 0, -1)  # (*shape, m, k)
    pinv = np.linalg.pinv(frames)
    Y = np.einsum("...km,...m->...k", pinv, V)
    residual = np.max(np.abs(np.einsum("...mk,...k->...m", frames, Y) - V), initial=0.0)
    if residual > tol * max(1.0, float(np.max(np.abs(V), initial=0.0))):
        raise InputError(f"vector field is not tangent to D (residual {residual:.3e})")
    return Y


def taming_metric(g0, d_basis, g, rho: float, reference_density: float = 1.0) -> np.ndarray:
    """Riemannian metric restricting to ``g`` on ``D`` with volume density ``rho``.

    ``D`` is spanned by the columns of ``d_basis``; its complement is taken
    ``g0``-orthogonal. The complement block is rescaled so that
    ``sqrt(det) == rho * reference_density``.
    """
    g0 = np.asarray(g0, dtype=float)
    d_basis = np.asarray(d_basis, dtype=float)
    g = np.asarray(g, dtype=float)
    m = g0.shape[0] if g0.ndim == 2 else -1
    if g0.shape != (m, m) or d_basis.ndim != 2 or d_basis.shape[0] != m:
        raise InputError("g0 must be m x m and d_basis m x k")
    k = d_basis.shape[1]
    if g.shape != (k, k):
        raise InputError("g must be k x k")
    if not (rho > 0 and reference_density > 0):
        raise InputError("densities must be positive")
    for name, mat in (("g0", g0), ("g", g)):
        if not np.allclose(mat, mat.T, atol=SPD_TOL) or np.linalg.eigvalsh(mat)[0] <= SPD_TOL:
            raise InputError(f"{name} must be symmetric positive-definite")
    if np.linalg.matrix_rank(d_basis) != k or k > m:
        raise InputError("d_basis must have full column rank k <= m")

    if k == m:
        Tinv = np.linalg.inv(d_basis)
        return Tinv.T @ g @ Tinv

    # complement basis P with d_basis^T g0 P = 0
    P = scipy.linalg.null_space(d_basis.T @ g0)
    T = np.hstack([d_basis, P])
    Tinv = np.linalg.inv(T)
    g1 = Tinv.T @ scipy.linalg.block_diag(g, P.T @ g0 @ P) @ Tinv
    ratio = np.sqrt(np.linalg.det(g1)) / (rho * reference_density)
    scale = ratio ** (-2.0 / (m - k))
    return Tinv.T @ scipy.linalg.block_diag(g, scale * (P.T @ g0 @ P)) @ Tinv
