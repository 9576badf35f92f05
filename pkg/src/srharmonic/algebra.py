"""Lie algebras from structure constants and step-2 group arithmetic.

Basis convention: ``[e_i, e_j] = sum_k c[i, j, k] e_k``. Covectors are stored
in the dual basis, so pairing a covector with a vector is a plain dot product.

Group elements of nilpotent step <= 2 groups are stored in exponential
coordinates of the first kind. In that case the BCH series terminates and

    x . y = x + y + 1/2 [x, y],

which makes products, inverses and logarithms of quotients exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import InputError, UnsupportedGroupError

STEP_TOL = 1e-12
SPD_TOL = 1e-10
SUBSPACE_TOL = 1e-10


@dataclass(frozen=True)
class LieAlgebra:
    structure_constants: np.ndarray
    basis_labels: Optional[tuple] = None

    def __post_init__(self):
        c = np.array(self.structure_constants, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise InputError(f"structure constants must have shape (d, d, d), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("structure constants must be finite")
        asym = np.max(np.abs(c + c.transpose(1, 0, 2)))
        if asym > STEP_TOL * max(1.0, np.max(np.abs(c))):
            raise InputError(f"structure constants are not antisymmetric (defect {asym:.3e})")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        if self.basis_labels is not None:
            labels = tuple(str(s) for s in self.basis_labels)
            if len(labels) != c.shape[0]:
                raise InputError("basis_labels length does not match dimension")
            object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    @property
    def labels(self) -> tuple:
        if self.basis_labels is not None:
            return self.basis_labels
        return tuple(f"e{i + 1}" for i in range(self.dim))

    def is_abelian(self) -> bool:
        return not np.any(self.structure_constants)

    def is_step_two(self, tol: float = STEP_TOL) -> bool:
        """True when every double bracket ``[[e_i, e_j], e_l]`` vanishes."""
        c = self.structure_constants
        double = np.einsum("ijm,mlk->ijlk", c, c)
        return bool(np.max(np.abs(double), initial=0.0) <= tol)

    @classmethod
    def from_entries(cls, dim: int, entries, basis_labels=None) -> "LieAlgebra":
        """Build from ``(i, j, k, value)`` entries, completing antisymmetrically.

        An entry whose mirror ``(j, i, k)`` is absent gets the mirror filled in
        with the opposite sign; explicitly given mirrors must agree.
        """
        c = np.zeros((dim, dim, dim))
        given = {}
        for entry in entries:
            if len(entry) != 4:
                raise InputError(f"structure-constant entry must be (i, j, k, value): {entry!r}")
            i, j, k = (int(v) for v in entry[:3])
            value = float(entry[3])
            if not all(0 <= v < dim for v in (i, j, k)):
                raise InputError(f"entry index out of range for dim {dim}: {entry!r}")
            given[(i, j, k)] = value
        for (i, j, k), value in given.items():
            mirror = given.get((j, i, k))
            if mirror is not None and abs(mirror + value) > STEP_TOL * max(1.0, abs(value)):
                raise InputError(f"entries ({i},{j},{k}) and ({j},{i},{k}) are not antisymmetric")
            c[i, j, k] = value
            c[j, i, k] = -value
        return cls(c, basis_labels)

    def entries(self):
        """Nonzero ``(i, j, k, value)`` entries with ``i < j``."""
        c = self.structure_constants
        out = []
        for i, j, k in zip(*np.nonzero(c)):
            if i < j:
                out.append((int(i), int(j), int(k), float(c[i, j, k])))
        return out


def _check_vector(alg: LieAlgebra, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] != alg.dim:
        raise InputError(f"{name} must have trailing dimension {alg.dim}, got shape {v.shape}")
    return v


def bracket(alg: LieAlgebra, A, B) -> np.ndarray:
    """Lie bracket ``[A, B]``; broadcasts over leading axes."""
    A = _check_vector(alg, A, "A")
    B = _check_vector(alg, B, "B")
    return np.einsum("...i,...j,ijk->...k", A, B, alg.structure_constants)


def ad_matrix(alg: LieAlgebra, A) -> np.ndarray:
    """Matrix of ``ad(A)`` acting on column vectors: ``ad(A) @ B == [A, B]``."""
    A = _check_vector(alg, A, "A")
    return np.einsum("...i,ijk->...kj", A, alg.structure_constants)


def ad_star(alg: LieAlgebra, A, beta) -> np.ndarray:
    """Coadjoint action ``(ad*(A) beta)(B) = -beta([A, B])``."""
    A = _check_vector(alg, A, "A")
    beta = _check_vector(alg, beta, "beta")
    return -np.einsum("...i,ijk,...k->...j", A, alg.structure_constants, beta)


def jacobi_defect(alg: LieAlgebra) -> float:
    """Max-norm of the cyclic Jacobi sum over all index quadruples."""
    c = alg.structure_constants
    term = np.einsum("ijm,mlk->ijlk", c, c)
    cyclic = term + term.transpose(1, 2, 0, 3) + term.transpose(2, 0, 1, 3)
    return float(np.max(np.abs(cyclic), initial=0.0))


def _require_step_two(alg: LieAlgebra):
    if not alg.is_step_two():
        raise UnsupportedGroupError("group arithmetic needs a nilpotent algebra of step <= 2")


def group_multiply(alg: LieAlgebra, x, y) -> np.ndarray:
    _require_step_two(alg)
    x = _check_vector(alg, x, "x")
    y = _check_vector(alg, y, "y")
    return x + y + 0.5 * bracket(alg, x, y)


def group_inverse(alg: LieAlgebra, x) -> np.ndarray:
    _require_step_two(alg)
    return -_check_vector(alg, x, "x")


def group_log_of_quotient(alg: LieAlgebra, x, y) -> np.ndarray:
    """``log(x^{-1} y) = y - x - 1/2 [x, y]``."""
    _require_step_two(alg)
    x = _check_vector(alg, x, "x")
    y = _check_vector(alg, y, "y")
    return y - x - 0.5 * bracket(alg, x, y)


def _is_spd(m: np.ndarray) -> bool:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if not np.allclose(m, m.T, atol=SPD_TOL, rtol=0):
        return False
    return bool(np.linalg.eigvalsh(0.5 * (m + m.T))[0] > SPD_TOL)


def _orient_columns(basis: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of every column positive
    for j in range(basis.shape[1]):
        col = basis[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            basis[:, j] = -col
    return basis


@dataclass(frozen=True)
class LeftInvariantStructure:
    """Horizontal subspace ``e`` of ``g`` with an inner product.

    ``horizontal_basis`` is ``dim x k_E`` (columns span ``e``), ``metric`` is the
    Gram matrix of those columns. ``auxiliary_extension`` extends the metric to
    all of ``g``; if omitted it is taken block-diagonal with the identity on the
    Euclidean complement of ``e``.
    """

    algebra: LieAlgebra
    horizontal_basis: np.ndarray
    metric: Optional[np.ndarray] = None
    auxiliary_extension: Optional[np.ndarray] = None
    name: str = ""
    sharp_matrix: np.ndarray = field(init=False, repr=False, compare=False)
    quotient_basis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.algebra.dim
        E = np.array(self.horizontal_basis, dtype=float)
        if E.ndim == 1:
            E = E[:, None]
        if E.shape[0] != d:
            raise InputError(f"horizontal_basis must have {d} rows, got shape {E.shape}")
        k = E.shape[1]
        if k == 0 or np.linalg.matrix_rank(E, tol=SUBSPACE_TOL) != k:
            raise InputError("horizontal_basis must have full column rank")
        metric = np.eye(k) if self.metric is None else np.array(self.metric, dtype=float)
        if metric.shape != (k, k) or not _is_spd(metric):
            raise InputError("metric must be a symmetric positive-definite k_E x k_E matrix")
        metric = 0.5 * (metric + metric.T)

        # quotient_basis: orthonormal basis of Ann(e), viewed in g*
        if k < d:
            N = _orient_columns(scipy.linalg.null_space(E.T))
        else:
            N = np.zeros((d, 0))

        if self.auxiliary_extension is None:
            T = np.hstack([E, N])
            block = scipy.linalg.block_diag(metric, np.eye(d - k))
            Tinv = np.linalg.inv(T)
            aux = Tinv.T @ block @ Tinv
            aux = 0.5 * (aux + aux.T)
        else:
            aux = np.array(self.auxiliary_extension, dtype=float)
            if aux.shape != (d, d) or not _is_spd(aux):
                raise InputError("auxiliary_extension must be a symmetric positive-definite dim x dim matrix")
            if not np.allclose(E.T @ aux @ E, metric, atol=1e-10, rtol=1e-10):
                raise InputError("auxiliary_extension restricted to e must equal metric")
            aux = 0.5 * (aux + aux.T)

        sharp = E @ np.linalg.solve(metric, E.T)
        for name, value in (("horizontal_basis", E), ("metric", metric),
                            ("auxiliary_extension", aux), ("sharp_matrix", sharp),
                            ("quotient_basis", N)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def rank(self) -> int:
        return self.horizontal_basis.shape[1]

    @property
    def corank(self) -> int:
        return self.dim - self.rank

    def quotient(self, v) -> np.ndarray:
        """Coordinates of ``v mod e``; zero iff ``v`` is horizontal."""
        v = _check_vector(self.algebra, v, "v")
        return v @ self.quotient_basis

    def horizontal_coordinates(self, v) -> np.ndarray:
        """Coefficients of the ``e``-component of ``v`` along ``horizontal_basis``.

        The split ``g = e + e^perp`` uses the auxiliary-extension complement.
        """
        v = _check_vector(self.algebra, v, "v")
        E, G = self.horizontal_basis, self.auxiliary_extension
        return np.linalg.solve(E.T @ G @ E, (v @ G @ E)[..., None])[..., 0]

    def inner(self, v, w) -> np.ndarray:
        """Auxiliary-extension inner product; equals the metric on ``e``."""
        return np.einsum("...i,ij,...j->...", v, self.auxiliary_extension, w)


def sharp(structure: LeftInvariantStructure, beta) -> np.ndarray:
    """The unique ``u`` in ``e`` with ``beta(w) = <u, w>`` for all ``w`` in ``e``."""
    beta = _check_vector(structure.algebra, beta, "beta")
    return beta @ structure.sharp_matrix


def flat(structure: LeftInvariantStructure, v, tol: float = 1e-8) -> np.ndarray:
    """Lower a horizontal vector with the auxiliary extension.

    The result annihilates the auxiliary-orthogonal complement of ``e`` and
    satisfies ``sharp(flat(v)) == v``.
    """
    v = _check_vector(structure.algebra, v, "v")
    residual = np.max(np.abs(structure.quotient(v)), initial=0.0)
    if residual > tol * max(1.0, float(np.max(np.abs(v), initial=0.0))):
        raise InputError(f"vector is not horizontal (quotient residual {residual:.3e})")
    return v @ structure.auxiliary_extension


def heisenberg_algebra(n: int):
    """``h_n`` with basis ``A_1..A_n, B_1..B_n, C`` and ``[A_i, B_i] = C``.

    Returns ``(algebra, structure)`` where ``A_i, B_i`` are orthonormal and span
    the horizontal subspace.
    """
    if int(n) != n or n < 1:
        raise InputError(f"Heisenberg index must be a positive integer, got {n!r}")
    n = int(n)
    d = 2 * n + 1
    c = np.zeros((d, d, d))
    for i in range(n):
        c[i, n + i, 2 * n] = 1.0
        c[n + i, i, 2 * n] = -1.0
    if n == 1:
        labels = ("A", "B", "C")
    else:
        labels = tuple(f"A{i + 1}" for i in range(n)) + tuple(f"B{i + 1}" for i in range(n)) + ("C",)
    alg = LieAlgebra(c, labels)
    structure = LeftInvariantStructure(alg, np.eye(d)[:, : 2 * n], np.eye(2 * n),
                                       np.eye(d), name=f"heisenberg:{n}")
    return alg, structure


def heisenberg_index(structure: LeftInvariantStructure) -> Optional[int]:
    """``n`` if ``structure`` is the standard structure on ``h_n``, else None."""
    d = structure.dim
    if d < 3 or d % 2 == 0:
        return None
    n = (d - 1) // 2
    alg, ref = heisenberg_algebra(n)
    if not np.allclose(structure.algebra.structure_constants, alg.structure_constants):
        return None
    if not np.allclose(structure.sharp_matrix, ref.sharp_matrix):
        return None
    return n


def abelian_structure(dim: int, horizontal: Sequence[int]) -> LeftInvariantStructure:
    """Abelian ``R^dim`` with the coordinate axes ``horizontal`` orthonormal."""
    alg = LieAlgebra(np.zeros((dim, dim, dim)))
    E = np.eye(dim)[:, list(horizontal)]
    return LeftInvariantStructure(alg, E, name=f"abelian:{dim}")


def so3_algebra() -> LieAlgebra:
    """``[e1, e2] = e3`` and cyclic permutations."""
    return LieAlgebra.from_entries(3, [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
