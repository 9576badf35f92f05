"""Regular/singular classification, abnormal and normal certificates.

The linearized horizontality constraint at a horizontal form ``alpha`` is

    F  ->  (L_alpha F)(X_i) mod e,

mapping ``g``-valued functions to ``D``-restricted ``g/e``-valued 1-forms. It
is assembled as a sparse matrix and studied in the weighted inner products of
the domain: rows are rescaled by ``sqrt(w)`` and columns by ``1/sqrt(w)`` so
that singular values are operator quantities. A form is singular when this
map fails to be onto; the left singular vector for the smallest codomain
singular value is then an abnormal covector ``eta`` with ``eta(X_i)`` in
``Ann(e)`` and ``L_alpha^* eta = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import LeftInvariantStructure, ad_matrix, bracket
from .domain import GridDomain, l2_inner, l2_norm
from .errors import AssemblyTooLargeError, InputError, NoCertificateSpaceError, NumericalError
from .forms import (
    L_alpha,
    L_alpha_star,
    darboux_derivative,
    energy_density,
    horizontality_residual,
    restrict,
    variation,
)

SINGULAR_TOL = 1e-8
DENSE_LIMIT = 20_000
# relative cutoff treating tiny singular values of the certificate system as null directions
LSTSQ_RCOND = 1e-10
MAX_UNKNOWNS = 400_000
BRACKET_TOL = 1e-10


@dataclass
class LinearOperatorAssembly:
    """Sparse matrix of ``F -> L_alpha F mod e``.

    Row ``(node * k + i) * r + a`` holds quotient coordinate ``a`` of frame
    component ``i``; column ``node * d + b`` holds algebra coordinate ``b`` of ``F``.
    """

    matrix: sp.csr_matrix
    row_weights: np.ndarray
    col_weights: np.ndarray
    grid_shape: tuple
    rank_k: int
    corank: int
    dim: int

    @property
    def scaled(self) -> sp.csr_matrix:
        """Matrix in weighted-orthonormal coordinates."""
        return (sp.diags(np.sqrt(self.row_weights)) @ self.matrix
                @ sp.diags(1.0 / np.sqrt(self.col_weights))).tocsr()

    def apply(self, F) -> np.ndarray:
        F = np.asarray(F, dtype=float)
        out = self.matrix @ F.reshape(-1)
        return out.reshape(self.grid_shape + (self.rank_k, self.corank))

    def covector_field(self, structure: LeftInvariantStructure, scaled_vector) -> np.ndarray:
        """``eta`` with ``eta(X_i) = N c_i`` from a vector in scaled row coordinates."""
        c = np.asarray(scaled_vector) / np.sqrt(self.row_weights)
        c = c.reshape(self.grid_shape + (self.rank_k, self.corank))
        return c @ structure.quotient_basis.T


def assemble_P_differential(dom: GridDomain, structure: LeftInvariantStructure, alpha_D,
                            max_unknowns: int = MAX_UNKNOWNS) -> LinearOperatorAssembly:
    """Assemble the differential of ``alpha -> alpha|D mod e`` along ``L_alpha F``."""
    alg = structure.algebra
    d, k, r = structure.dim, dom.rank_k, structure.corank
    N = dom.num_nodes
    a = np.asarray(alpha_D, dtype=float)
    if a.shape != dom.shape + (k, d):
        raise InputError(f"alpha_D must have shape {dom.shape + (k, d)}, got {a.shape}")
    if N * d > max_unknowns or N * k * r > max_unknowns:
        raise AssemblyTooLargeError(
            f"assembly with {N * d} unknowns and {N * k * r} equations exceeds the guard of {max_unknowns}")
    if r == 0:
        raise NoCertificateSpaceError("horizontal subspace is all of g; the constraint is vacuous")
    Nq = structure.quotient_basis  # (d, r)

    blocks = [sp.kron(X, sp.csr_matrix(Nq.T)) for X in dom.frame_operators]  # rows (node, a)
    stacked = sp.vstack(blocks, format="csr")  # rows (i, node, a)
    node, i, q = np.meshgrid(np.arange(N), np.arange(k), np.arange(r), indexing="ij")
    order = (i * N * r + node * r + q).ravel()  # target row (node, i, a) <- source (i, node, a)
    derivative_part = stacked[order]

    ads = ad_matrix(alg, a.reshape(N, k, d))  # (N, k, d, d)
    local = np.einsum("ba,nibc->niac", Nq, ads).reshape(N, k * r, d)
    bracket_part = sp.bsr_matrix((local, np.arange(N), np.arange(N + 1)), shape=(N * k * r, N * d))

    w = dom.weights.ravel()
    return LinearOperatorAssembly(
        matrix=(derivative_part + bracket_part).tocsr(),
        row_weights=np.repeat(w, k * r),
        col_weights=np.repeat(w, d),
        grid_shape=dom.shape, rank_k=k, corank=r, dim=d,
    )


@dataclass
class Certificate:
    kind: str
    field: np.ndarray
    residual_norm: float
    constraint_defect: float
    nontriviality: Optional[float] = None
    details: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {"kind": self.kind, "residual_norm": self.residual_norm,
               "constraint_defect": self.constraint_defect}
        if self.nontriviality is not None:
            out["nontriviality"] = self.nontriviality
        out.update(self.details)
        return out


@dataclass
class Regularity:
    verdict: str
    sigma_min: float
    sigma_max: float
    tail: np.ndarray
    tol_rel: float
    method: str
    certificate: Optional[Certificate] = None

    @property
    def ratio(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0

    def summary(self) -> dict:
        return {"verdict": self.verdict, "sigma_min": self.sigma_min, "sigma_max": self.sigma_max,
                "ratio": self.ratio, "tol_rel": self.tol_rel, "method": self.method,
                "sigma_tail": [float(s) for s in self.tail]}


def _smallest_codomain_singular(A: sp.csr_matrix, tail: int, method: str):
    """Codomain singular values of ``A`` (zero-padded) and the smallest left vector."""
    R, C = A.shape
    if method == "auto":
        method = "dense" if C <= DENSE_LIMIT and R <= DENSE_LIMIT else "iterative"
    if method == "dense":
        try:
            U, s, _ = scipy.linalg.svd(A.toarray(), full_matrices=True, lapack_driver="gesdd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError("dense SVD failed", {"shape": [R, C], "error": str(exc)}) from exc
        full = np.concatenate([s, np.zeros(max(R - C, 0))])
        return full[0], full[-tail:], U[:, -1], method
    if method != "iterative":
        raise InputError(f"unknown singular-value method {method!r}")
    try:
        smax = spla.svds(A, k=1, which="LM", return_singular_vectors=False, random_state=0)[0]
        kk = min(tail, min(R, C) - 1)
        # smallest eigenpairs of A A^T are the codomain singular values
        G = (A @ A.T).tocsc()
        v0 = np.random.default_rng(0).standard_normal(R)
        vals, vecs = spla.eigsh(G, k=kk, sigma=-1e-6 * smax ** 2, which="LM", v0=v0)
    except Exception as exc:  # ARPACK / factorization failures
        raise NumericalError("iterative singular-value computation failed",
                             {"shape": [R, C], "error": str(exc)}) from exc
    order = np.argsort(vals)[::-1]
    vals = np.sqrt(np.clip(vals[order], 0.0, None))
    return float(smax), vals, vecs[:, order[-1]], method


def classify_regularity(dom: GridDomain, structure: LeftInvariantStructure, alpha_D,
                        tol_rel: float = SINGULAR_TOL, tail: int = 8, method: str = "auto",
                        max_unknowns: int = MAX_UNKNOWNS) -> Regularity:
    """Numerical-rank verdict on the surjectivity of the constraint differential.

    ``singular`` iff ``sigma_min < tol_rel * sigma_max``; a singular verdict
    carries the corresponding abnormal certificate.
    """
    if tol_rel <= 0:
        raise InputError("tol_rel must be positive")
    asm = assemble_P_differential(dom, structure, alpha_D, max_unknowns)
    smax, tail_vals, u, used = _smallest_codomain_singular(asm.scaled, tail, method)
    smin = float(tail_vals[-1])
    verdict = "singular" if smin < tol_rel * smax else "regular"
    cert = None
    if verdict == "singular":
        cert = _abnormal_from_vector(dom, structure, alpha_D, asm, u, smin)
    return Regularity(verdict, smin, float(smax), np.asarray(tail_vals), tol_rel, used, cert)


def _abnormal_from_vector(dom, structure, alpha_D, asm, u, smin) -> Certificate:
    eta = asm.covector_field(structure, u)
    residual = l2_norm(dom, L_alpha_star(dom, structure.algebra, alpha_D, eta))
    constraint = float(np.max(np.abs(eta @ structure.sharp_matrix), initial=0.0))
    return Certificate("abnormal", eta, residual, constraint, l2_norm(dom, eta),
                       {"sigma_min": float(smin)})


def abnormal_certificate(dom: GridDomain, structure: LeftInvariantStructure, alpha_D,
                         method: str = "auto", max_unknowns: int = MAX_UNKNOWNS) -> Certificate:
    """Unit-norm ``eta`` with values in ``Ann(e)`` minimizing ``|L_alpha^* eta|``."""
    if structure.corank == 0:
        raise NoCertificateSpaceError("Ann(e) is trivial: no abnormal covectors exist")
    asm = assemble_P_differential(dom, structure, alpha_D, max_unknowns)
    smax, tail_vals, u, used = _smallest_codomain_singular(asm.scaled, 2, method)
    cert = _abnormal_from_vector(dom, structure, alpha_D, asm, u, tail_vals[-1])
    cert.details.update({"sigma_max": float(smax), "method": used})
    return cert


def normal_certificate(dom: GridDomain, structure: LeftInvariantStructure, alpha_D,
                       max_unknowns: int = MAX_UNKNOWNS) -> Certificate:
    """Least-squares ``lambda = flat(alpha) + eta``, ``eta(X_i)`` in ``Ann(e)``.

    Minimizes ``|L_alpha^* lambda|`` over the interior nodes of the domain
    (all nodes on a torus). A residual near zero certifies a normal harmonic map.
    """
    alg = structure.algebra
    a = np.asarray(alpha_D, dtype=float)
    lam0 = a @ structure.auxiliary_extension
    b = L_alpha_star(dom, alg, a, lam0)
    mask = dom.interior_mask
    if structure.corank == 0:
        lam = lam0
    else:
        asm = assemble_P_differential(dom, structure, a, max_unknowns)
        d = structure.dim
        rows = np.repeat(mask.ravel(), d)
        M = asm.scaled.T.tocsr()[rows]  # scaled adjoint, interior rows only
        rhs = -(np.sqrt(asm.col_weights) * b.reshape(-1))[rows]
        if M.shape[1] <= DENSE_LIMIT and M.shape[0] <= 4 * DENSE_LIMIT:
            try:
                sol = scipy.linalg.lstsq(M.toarray(), rhs, cond=LSTSQ_RCOND, lapack_driver="gelsd")[0]
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise NumericalError("least-squares solve failed", {"error": str(exc)}) from exc
        else:
            out = spla.lsqr(M, rhs, atol=1e-14, btol=1e-14, iter_lim=20 * M.shape[1])
            if out[1] not in (1, 2, 4, 5):
                raise NumericalError("LSQR did not converge", {"istop": int(out[1]), "iterations": int(out[2])})
            sol = out[0]
        lam = lam0 + asm.covector_field(structure, sol)
    residual = l2_norm(dom, L_alpha_star(dom, alg, a, lam), mask)
    constraint = float(np.max(np.abs(lam @ structure.sharp_matrix - a), initial=0.0))
    horiz = float(np.max(np.abs(horizontality_residual(dom, structure, a)), initial=0.0))
    return Certificate("normal", lam, residual, constraint, None,
                       {"horizontality_residual": horiz, "interior_nodes": int(mask.sum())})


@dataclass
class GradientReport:
    analytic: float
    s_list: list
    finite_differences: list
    extrapolated: float
    extrapolated_defect: float
    horizontality_defect: float

    def summary(self) -> dict:
        return {"analytic": self.analytic, "s_list": list(self.s_list),
                "finite_differences": list(self.finite_differences),
                "extrapolated": self.extrapolated, "extrapolated_defect": self.extrapolated_defect,
                "horizontality_defect": self.horizontality_defect}


def energy_gradient_check(dom: GridDomain, structure: LeftInvariantStructure, f, F,
                          s_list: Sequence[float] = (1e-2, 5e-3)) -> GradientReport:
    """Compare ``<flat alpha, L_alpha F>`` with centered differences of the energy.

    The energy is evaluated on ``darboux(f . exp(sF))`` with the auxiliary
    extension, so variations that leave the horizontal class are still
    measured; their first-order vertical part is reported as
    ``horizontality_defect``. The two smallest ``s`` are Richardson-combined.
    """
    alg = structure.algebra
    s_list = sorted((float(s) for s in s_list), reverse=True)
    if not s_list or min(s_list) <= 0:
        raise InputError("s_list must contain positive step sizes")
    alpha_D = restrict(dom, darboux_derivative(dom, alg, f))
    LF = L_alpha(dom, alg, alpha_D, F)
    analytic = l2_inner(dom, alpha_D @ structure.auxiliary_extension, LF)

    def E(s):
        a = restrict(dom, darboux_derivative(dom, alg, variation(alg, f, F, s)))
        return float(np.sum(energy_density(structure, a) * dom.weights))

    fds = [(E(s) - E(-s)) / (2 * s) for s in s_list]
    if len(s_list) >= 2:
        s1, s2 = s_list[-2], s_list[-1]
        extrap = (s1 ** 2 * fds[-1] - s2 ** 2 * fds[-2]) / (s1 ** 2 - s2 ** 2)
    else:
        extrap = fds[-1]
    horiz = float(np.max(np.abs(structure.quotient(LF)), initial=0.0))
    return GradientReport(float(analytic), s_list, fds, float(extrap), float(abs(extrap - analytic)), horiz)


@dataclass
class BracketSolution:
    B: np.ndarray
    residual: float
    feasible: bool


def strong_bracket_solve(structure: LeftInvariantStructure, A_list, Z_list,
                         tol: float = BRACKET_TOL) -> BracketSolution:
    """Find ``B`` in ``e`` with ``Z_j - [A_j, B]`` in ``e`` for every ``j``.

    Least squares over the coefficients of ``B``; infeasible systems come back
    with ``feasible=False`` and the attained residual.
    """
    alg = structure.algebra
    A = np.atleast_2d(np.asarray(A_list, dtype=float))
    Z = np.atleast_2d(np.asarray(Z_list, dtype=float))
    if A.size == 0:
        return BracketSolution(np.zeros(structure.dim), 0.0, True)
    if A.shape != Z.shape or A.shape[1] != structure.dim:
        raise InputError("A_list and Z_list must be equal-length lists of algebra vectors")
    if A.shape[0] > structure.rank:
        raise InputError(f"at most k_E = {structure.rank} vectors allowed, got {A.shape[0]}")
    if np.max(np.abs(structure.quotient(A)), initial=0.0) > tol * max(1.0, np.max(np.abs(A))):
        raise InputError("A_list vectors must lie in the horizontal subspace")
    if np.linalg.matrix_rank(A) != A.shape[0]:
        raise InputError("A_list vectors must be linearly independent")
    E = structure.horizontal_basis
    Nq = structure.quotient_basis
    # [A_j, E b] mod e = N^T ad(A_j) E b
    system = np.concatenate([Nq.T @ ad_matrix(alg, Aj) @ E for Aj in A], axis=0)
    rhs = (Z @ Nq).reshape(-1)
    coeffs = np.linalg.lstsq(system, rhs, rcond=None)[0] if system.size else np.zeros(structure.rank)
    B = E @ coeffs
    residual = float(np.max(np.abs(structure.quotient(Z - bracket(alg, A, B[None, :]))), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(Z))))
    return BracketSolution(B, residual, residual <= tol * scale)


@dataclass
class BracketCheck:
    verdict: str
    trials: int
    q: int
    counterexample: Optional[dict] = None

    def summary(self) -> dict:
        out = {"verdict": self.verdict, "trials": self.trials, "q": self.q}
        if self.counterexample is not None:
            out["counterexample"] = {key: np.asarray(val).tolist() for key, val in self.counterexample.items()}
        return out


def strong_bracket_check(structure: LeftInvariantStructure, q: int, trials: int = 1000,
                         seed: int = 0) -> BracketCheck:
    """Randomized search for a counterexample to strong ``q``-bracket generation.

    Each trial draws ``l`` uniformly from ``1..q``, independent horizontal
    ``A_1..A_l`` and arbitrary ``Z_1..Z_l``. A clean run is evidence, not proof.
    """
    if q < 0 or q > structure.rank:
        raise InputError(f"q must satisfy 0 <= q <= k_E = {structure.rank}")
    if q == 0:
        return BracketCheck("no counterexample", 0, q)
    rng = np.random.default_rng(seed)
    E = structure.horizontal_basis
    for trial in range(1, trials + 1):
        l = int(rng.integers(1, q + 1))
        while True:
            A = (E @ rng.standard_normal((structure.rank, l))).T
            if np.linalg.matrix_rank(A) == l:
                break
        Z = rng.standard_normal((l, structure.dim))
        sol = strong_bracket_solve(structure, A, Z)
        if not sol.feasible:
            return BracketCheck("counterexample", trial, q,
                                {"A_list": A, "Z_list": Z, "B": sol.B, "residual": sol.residual})
    return BracketCheck("no counterexample", trials, q)
