"""Pure-state decompositions of density operators.

Every decomposition of a rank-``r`` state into ``m`` pure members comes
from an ``m x r`` isometry acting on the subnormalized eigenvectors, which
is how :func:`from_mixing` builds them. :func:`rank2_family` spells out the
two-dimensional case member by member.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, DegeneracyError, ParameterError

RANK_TOL = 1e-12
WEIGHT_FLOOR = 1e-12
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class PureDecomposition:
    """Weights ``alpha_i`` and unit kets ``psi_i`` (rows of ``kets``)."""

    weights: np.ndarray
    kets: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        k = np.array(self.kets, dtype=complex)
        if k.ndim == 1:
            k = k[None, :]
        if w.size != k.shape[0]:
            raise ParameterError(f"{w.size} weights for {k.shape[0]} kets")
        w.flags.writeable = False
        k.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kets", k)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.kets.shape[1]

    def state(self) -> np.ndarray:
        return np.einsum("i,ia,ib->ab", self.weights, self.kets, self.kets.conj())

    def transformed(self, u: np.ndarray) -> "PureDecomposition":
        """Apply ``u`` to every member: ``psi_i -> u psi_i``."""
        return PureDecomposition(self.weights, self.kets @ np.asarray(u).T)

    def to_dict(self) -> dict:
        return {
            "weights": [float(x) for x in self.weights],
            "kets": [[[float(z.real), float(z.imag)] for z in row] for row in self.kets],
        }


def from_vectors(vectors: np.ndarray, floor: float = WEIGHT_FLOOR) -> PureDecomposition:
    """Decomposition from subnormalized vectors ``v_i`` (rows).

    Weights are the squared norms; members with weight ``<= floor`` are
    dropped.
    """
    v = np.asarray(vectors, dtype=complex)
    w = np.einsum("ia,ia->i", v.conj(), v).real
    keep = w > floor
    if not keep.any():
        raise ParameterError("decomposition has no member above the weight floor")
    v, w = v[keep], w[keep]
    return PureDecomposition(w, v / np.sqrt(w)[:, None])


def eigen_ensemble(rho, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Columns ``sqrt(lambda_k) e_k`` for eigenvalues above ``rank_tol * lambda_max``.

    Ordered by decreasing eigenvalue.
    """
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w, v = w[::-1], v[:, ::-1]
    sel = w > rank_tol * max(w[0], 0.0)
    if not sel.any():
        raise ParameterError("operator has no positive eigenvalue")
    return v[:, sel] * np.sqrt(w[sel])


def rank(rho, rank_tol: float = RANK_TOL) -> int:
    return eigen_ensemble(rho, rank_tol).shape[1]


def from_mixing(rho, w, rank_tol: float = RANK_TOL) -> PureDecomposition:
    """Decomposition ``v_i = sum_k w_ik sqrt(lambda_k) e_k`` for an isometry ``w``.

    Parameters
    ----------
    rho : (d, d) array
        Density operator.
    w : (m, r) array
        Isometry, ``w^H w = 1_r``, with ``r`` the rank of ``rho``.
    """
    a = eigen_ensemble(rho, rank_tol)
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2 or w.shape[1] != a.shape[1]:
        raise ParameterError(f"mixing matrix has shape {w.shape}, state rank is {a.shape[1]}")
    iso_err = np.max(np.abs(w.conj().T @ w - np.eye(w.shape[1])))
    if iso_err > 1e-10:
        raise ParameterError(f"mixing matrix is not an isometry (error {iso_err:.2e})")
    return from_vectors(w @ a.T)


def to_mixing(d: PureDecomposition, rho, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Recover the isometry that produces ``d`` from the eigen-ensemble of ``rho``."""
    a = eigen_ensemble(rho, rank_tol)
    v = np.sqrt(d.weights)[:, None] * d.kets
    return v @ (a.conj() / np.sum(np.abs(a) ** 2, axis=0))


def rank2_family(psi1, psi2, gammas, alphas, lam: float, swap: bool = False,
                 tol: float = 1e-10) -> PureDecomposition:
    """Decomposition of ``lam |psi1><psi1| + (1 - lam) |psi2><psi2|``.

    Members are ``psi1 + g_i psi2`` with weights ``a_i`` satisfying
    ``sum a_i = lam``, ``sum a_i |g_i|^2 = 1 - lam`` and ``sum a_i g_i = 0``.
    With ``swap=True`` the roles are exchanged: members are
    ``psi2 + g_i psi1`` with ``sum a_i |g_i|^2 = lam`` and ``sum a_i = 1 - lam``.

    An infinite ``g_i`` stands for the bare ``psi2`` member (``psi1`` when
    swapped) carrying weight ``a_i``.
    Member norms are folded into the returned weights.
    """
    psi1 = np.asarray(psi1, dtype=complex).reshape(-1)
    psi2 = np.asarray(psi2, dtype=complex).reshape(-1)
    check_independent(psi1, psi2)
    gammas = np.asarray(gammas, dtype=complex).reshape(-1)
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if gammas.size != alphas.size or gammas.size == 0:
        raise ParameterError("gammas and alphas must be nonempty and of equal length")
    if np.any(alphas < 0):
        raise ConstraintError("weights must be nonnegative")
    base, other = (psi2, psi1) if swap else (psi1, psi2)
    lead, coef = (1 - lam, lam) if swap else (lam, 1 - lam)

    inf = ~np.isfinite(gammas)
    g = np.where(inf, 0, gammas)
    s_base = alphas[~inf].sum()
    s_other = np.sum(alphas[~inf] * np.abs(g[~inf]) ** 2) + alphas[inf].sum()
    s_cross = np.sum(alphas[~inf] * g[~inf])
    for name, got, want in (("sum a_i", s_base, lead), ("sum a_i|g_i|^2", s_other, coef),
                            ("|sum a_i g_i|", abs(s_cross), 0.0)):
        if abs(got - want) > tol:
            raise ConstraintError(f"{name} = {got:.12g}, expected {want:.12g}")

    vecs = np.where(inf[:, None], other[None, :], base[None, :] + g[:, None] * other[None, :])
    return from_vectors(np.sqrt(alphas)[:, None] * vecs)


def check_independent(psi1, psi2, tol: float = DEGENERACY_TOL) -> None:
    n1, n2 = np.linalg.norm(psi1), np.linalg.norm(psi2)
    ov = abs(np.vdot(psi1, psi2)) / (n1 * n2)
    if ov > 1 - tol:
        raise DegeneracyError(f"kets are linearly dependent (|overlap| = {ov:.12f})")


@dataclass
class ValidationReport:
    reconstruction_error: float
    weight_sum_error: float
    ok: bool
    messages: list[str] = field(default_factory=list)


def validate(d: PureDecomposition, rho, tol: float = 1e-9) -> ValidationReport:
    """Report reconstruction and weight-sum errors of ``d`` against ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    if len(d) == 0:
        return ValidationReport(np.inf, np.inf, False, ["empty decomposition"])
    if d.dim != rho.shape[0]:
        return ValidationReport(np.inf, np.inf, False, [f"dimension {d.dim} != {rho.shape[0]}"])
    rec = float(np.max(np.abs(d.state() - rho)))
    wsum = float(abs(d.weights.sum() - np.trace(rho).real))
    msgs = []
    if np.any(d.weights <= WEIGHT_FLOOR):
        msgs.append("member weight below floor")
    norms = np.linalg.norm(d.kets, axis=1)
    if np.max(np.abs(norms - 1)) > 1e-8:
        msgs.append("member kets not normalized")
    if rec > tol:
        msgs.append(f"reconstruction error {rec:.2e}")
    if wsum > tol:
        msgs.append(f"weight sum error {wsum:.2e}")
    return ValidationReport(rec, wsum, not msgs, msgs)


def eigen_decomposition(rho, rank_tol: float = RANK_TOL) -> PureDecomposition:
    return from_vectors(eigen_ensemble(rho, rank_tol).T)


def product_decomposition(d1: PureDecomposition, d2: PureDecomposition) -> PureDecomposition:
    """Members ``psi_i (x) phi_j`` with weights ``p_i q_j``."""
    w = np.outer(d1.weights, d2.weights).reshape(-1)
    k = np.einsum("ia,jb->ijab", d1.kets, d2.kets).reshape(w.size, -1)
    return PureDecomposition(w, k)

