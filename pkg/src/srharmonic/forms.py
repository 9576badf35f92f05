"""Lie-algebra-valued discrete differential forms on a :class:`GridDomain`.

Array layouts (``d`` = algebra dimension, ``m`` = base dimension, ``k`` = rank):

* 0-form / map field: ``(*shape, d)``
* full 1-form: ``(*shape, m, d)``, component ``j`` is the value on ``d/dx_j``
* D-restricted 1-form: ``(*shape, k, d)``, component ``i`` is the value on ``X_i``
* 2-form: ``(*shape, m(m-1)/2, d)`` over coordinate pairs ``(j, l)``, ``j < l``,
  in :func:`itertools.combinations` order.

The operations accept plain arrays. :class:`AlgebraValuedForm` bundles the
same arrays with their degree and restriction for I/O and validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .algebra import (
    LeftInvariantStructure,
    LieAlgebra,
    ad_star,
    bracket,
    group_log_of_quotient,
    group_multiply,
)
from .domain import GridDomain, axis_derivative, delta_D, frame_derivative
from .errors import HorizontalityError, InputError, UnsupportedGroupError

HORIZONTALITY_TOL = 1e-8


@dataclass(frozen=True)
class AlgebraValuedForm:
    degree: int
    values: np.ndarray
    restricted: bool = False
    dual: bool = False

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise InputError(f"degree must be 0, 1 or 2, got {self.degree}")
        if self.restricted and self.degree == 2:
            raise InputError("D-restricted forms exist only in degree 0 and 1")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def _unwrap(form, *, allow_restricted=True):
    if isinstance(form, AlgebraValuedForm):
        if form.restricted and not allow_restricted:
            raise InputError("operation requires a full (coordinate) form, got a D-restricted one")
        return form.values
    return np.asarray(form, dtype=float)


def coordinate_pairs(m: int):
    return list(combinations(range(m), 2))


def form_bracket(alg: LieAlgebra, alpha, beta, p: int, q: int) -> np.ndarray:
    """Wedge-bracket of a ``p``-form and a ``q``-form, ``p + q <= 2``.

    For two 1-forms ``[a, b](v, w) = [a(v), b(w)] + [b(v), a(w)]``; for a
    1-form and a function ``[a, F](v) = [a(v), F]``. Graded symmetry
    ``[a, b] = (-1)^(pq+1) [b, a]`` holds exactly.
    """
    a = _unwrap(alpha)
    b = _unwrap(beta)
    if p + q > 2 or min(p, q) < 0:
        raise InputError(f"unsupported degree pair ({p}, {q})")
    if p == 1 and q == 1:
        m = a.shape[-2]
        if b.shape != a.shape:
            raise InputError("1-forms must share a shape")
        pairs = coordinate_pairs(m)
        out = np.zeros(a.shape[:-2] + (len(pairs), alg.dim))
        for n, (j, l) in enumerate(pairs):
            out[..., n, :] = bracket(alg, a[..., j, :], b[..., l, :]) + bracket(alg, b[..., j, :], a[..., l, :])
        return out
    if q == 0 and p > 0:
        return bracket(alg, a, b[..., None, :])
    if p == 0 and q > 0:
        return bracket(alg, a[..., None, :], b)
    return bracket(alg, a, b)


def exterior_derivative(dom: GridDomain, alpha, degree: int) -> np.ndarray:
    """Coordinate exterior derivative of a full 0- or 1-form.

    Uses the grid's axis stencils, which commute, so ``d(dF) = 0`` to round-off.
    """
    a = _unwrap(alpha, allow_restricted=False)
    m = dom.dim_m
    if degree == 0:
        return np.stack([axis_derivative(dom, a, j) for j in range(m)], axis=m)
    if degree == 1:
        if a.shape[m] != m:
            raise InputError(f"full 1-form must have {m} coordinate components")
        pairs = coordinate_pairs(m)
        out = np.zeros(dom.shape + (len(pairs),) + a.shape[m + 1:])
        for n, (j, l) in enumerate(pairs):
            out[(Ellipsis, n) + (slice(None),) * (a.ndim - m - 1)] = (
                axis_derivative(dom, np.take(a, l, axis=m), j) - axis_derivative(dom, np.take(a, j, axis=m), l)
            )
        return out
    raise InputError(f"exterior derivative supports degrees 0 and 1, got {degree}")


def _check_map(alg: LieAlgebra, dom: GridDomain, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != dom.shape + (alg.dim,):
        raise InputError(f"map field must have shape {dom.shape + (alg.dim,)}, got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise InputError("map field contains non-finite coordinates")
    if not alg.is_step_two():
        raise UnsupportedGroupError("map fields need a nilpotent algebra of step <= 2")
    return f


def darboux_derivative(dom: GridDomain, alg: LieAlgebra, f) -> np.ndarray:
    """Left Darboux derivative ``f^{-1} df`` as a full 1-form.

    Central quotient ``log(f(x - h e_j)^{-1} f(x + h e_j)) / 2h`` in the interior
    (and everywhere on a torus); second-order one-sided group quotients on the
    ends of non-periodic axes.
    """
    f = _check_map(alg, dom, f)
    m = dom.dim_m
    out = np.empty(dom.shape + (m, alg.dim))
    for j, h in enumerate(dom.spacing):
        fwd = np.roll(f, -1, axis=j)
        bwd = np.roll(f, 1, axis=j)
        comp = group_log_of_quotient(alg, bwd, fwd) / (2 * h)
        if not dom.periodic:
            take = lambda idx: np.take(f, idx, axis=j)  # noqa: E731
            first = (4 * group_log_of_quotient(alg, take(0), take(1))
                     - group_log_of_quotient(alg, take(0), take(2))) / (2 * h)
            last = -(4 * group_log_of_quotient(alg, take(-1), take(-2))
                     - group_log_of_quotient(alg, take(-1), take(-3))) / (2 * h)
            index = [slice(None)] * (m + 1)
            index[j] = 0
            comp[tuple(index)] = first
            index[j] = -1
            comp[tuple(index)] = last
        out[..., j, :] = comp
    return out


def restrict(dom: GridDomain, alpha) -> np.ndarray:
    """Evaluate a full 1-form on the frame: ``alpha(X_i) = sum_j a_ij alpha_j``."""
    a = _unwrap(alpha, allow_restricted=False)
    m = dom.dim_m
    if a.shape[: m + 1] != dom.shape + (m,):
        raise InputError(f"full 1-form must have leading shape {dom.shape + (m,)}")
    frames = np.moveaxis(dom.frames, 0, m)  # (*shape, k, m)
    return np.einsum("...ij,...j->...i" if a.ndim == m + 1 else "...ij,...jd->...id", frames, a)


def maurer_cartan_residual(dom: GridDomain, alg: LieAlgebra, alpha) -> np.ndarray:
    """``d alpha + 1/2 [alpha, alpha]`` as a 2-form."""
    a = _unwrap(alpha, allow_restricted=False)
    return exterior_derivative(dom, a, 1) + 0.5 * form_bracket(alg, a, a, 1, 1)


def _check_restricted(dom: GridDomain, alg: LieAlgebra, form, name: str) -> np.ndarray:
    a = _unwrap(form)
    expected = dom.shape + (dom.rank_k, alg.dim)
    if a.shape != expected:
        raise InputError(f"{name} must have shape {expected}, got {a.shape}")
    return a


def L_alpha(dom: GridDomain, alg: LieAlgebra, alpha_D, F) -> np.ndarray:
    """``(L_alpha F)(X_i) = X_i F + [alpha(X_i), F]``."""
    a = _check_restricted(dom, alg, alpha_D, "alpha_D")
    F = np.asarray(F, dtype=float)
    if F.shape != dom.shape + (alg.dim,):
        raise InputError(f"F must have shape {dom.shape + (alg.dim,)}, got {F.shape}")
    dF = np.stack([frame_derivative(dom, F, i) for i in range(dom.rank_k)], axis=dom.dim_m)
    return dF + bracket(alg, a, F[..., None, :])


def L_alpha_star(dom: GridDomain, alg: LieAlgebra, alpha_D, eta_D) -> np.ndarray:
    """Weighted adjoint of :func:`L_alpha`: ``delta_D eta - sum_i ad*(alpha(X_i)) eta(X_i)``."""
    a = _check_restricted(dom, alg, alpha_D, "alpha_D")
    eta = _check_restricted(dom, alg, eta_D, "eta_D")
    return delta_D(dom, eta) - ad_star(alg, a, eta).sum(axis=dom.dim_m)


def variation(alg: LieAlgebra, f, F, s: float) -> np.ndarray:
    """``f . exp(s F)`` node-wise (exponential coordinates)."""
    f = np.asarray(f, dtype=float)
    F = np.asarray(F, dtype=float)
    if f.shape != F.shape:
        raise InputError(f"map and variation field shapes differ: {f.shape} vs {F.shape}")
    return group_multiply(alg, f, s * F)


def horizontality_residual(dom: GridDomain, structure: LeftInvariantStructure, alpha,
                           restricted: bool = True) -> np.ndarray:
    """Quotient coordinates of ``alpha(X_i) mod e``; shape ``(*shape, k, dim - k_E)``.

    Pass ``restricted=False`` (or a full :class:`AlgebraValuedForm`) to
    restrict a coordinate 1-form first.
    """
    if isinstance(alpha, AlgebraValuedForm):
        restricted = alpha.restricted
        alpha = alpha.values
    a = np.asarray(alpha, dtype=float)
    if not restricted:
        a = restrict(dom, a)
    a = _check_restricted(dom, structure.algebra, a, "alpha")
    return structure.quotient(a)


def energy_density(structure: LeftInvariantStructure, alpha_D) -> np.ndarray:
    """``1/2 sum_i |alpha(X_i)|^2`` per node, with the auxiliary extension."""
    a = np.asarray(alpha_D, dtype=float)
    return 0.5 * structure.inner(a, a).sum(axis=-1)


def energy(dom: GridDomain, structure: LeftInvariantStructure, alpha_D,
           tol: float = HORIZONTALITY_TOL) -> float:
    """Sub-Riemannian energy ``1/2 int sum_i |alpha(X_i)|_h^2 dmu`` of a horizontal form."""
    a = _check_restricted(dom, structure.algebra, alpha_D, "alpha_D")
    residual = np.max(np.abs(structure.quotient(a)), initial=0.0)
    if residual > tol:
        raise HorizontalityError(f"form is not horizontal (max quotient component {residual:.3e})", residual)
    return float(np.sum(energy_density(structure, a) * dom.weights))
