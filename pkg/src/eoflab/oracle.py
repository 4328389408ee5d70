"""Independent ground truth: closed-form two-qubit E_f and a grid minimizer.

The two-qubit results are Wootters' concurrence formula and his
constructive optimal decomposition (Phys. Rev. Lett. 80, 2245 (1998)).
Nothing here calls the optimizer in :mod:`eoflab.solver`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FactorLayout, entanglement_entropy
from .decompositions import PureDecomposition, eigen_decomposition, from_vectors
from .errors import LayoutError, SizeError
from .solver import average_entanglement, layout_terms

_YY = np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0])).astype(complex)  # sigma_y (x) sigma_y


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str
    concurrence: float | None = None

    def to_dict(self) -> dict:
        out = {"value": float(self.value), "method": self.method}
        if self.concurrence is not None:
            out["concurrence"] = float(self.concurrence)
        return out


def binary_entropy(x: float) -> float:
    if x <= 0 or x >= 1:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def eof_from_concurrence(c: float) -> float:
    c = min(max(c, 0.0), 1.0)
    return binary_entropy(0.5 * (1 + np.sqrt(1 - c * c)))


def _check_two_qubit(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise LayoutError(f"two-qubit oracle needs a 4x4 matrix, got {rho.shape}")
    return rho


def concurrence_spectrum(rho) -> np.ndarray:
    """Decreasing square roots of the eigenvalues of ``rho (YY) rho* (YY)``.

    Computed as the singular values of ``sqrt(rho) (YY) sqrt(rho)*``, which
    avoids square-rooting eigenvalues near zero.
    """
    rho = _check_two_qubit(rho)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    half = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    return np.linalg.svd(half @ _YY @ half.conj(), compute_uv=False)


def concurrence(rho) -> float:
    lam = concurrence_spectrum(rho)
    return float(max(0.0, lam[0] - lam[1:].sum()))


def two_qubit_eof(rho) -> OracleResult:
    """Closed-form entanglement of formation of a two-qubit state (bits)."""
    c = concurrence(rho)
    return OracleResult(eof_from_concurrence(c), "closed-form", c)


def takagi(a: np.ndarray, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """Takagi factorization ``a = q diag(s) q^T`` of a complex symmetric matrix.

    Uses the real symmetric embedding ``[[Re a, Im a], [Im a, -Re a]]`` whose
    positive eigenpairs ``s, (x, y)`` give Takagi vectors ``x + i y``; this
    stays well defined for degenerate ``s``.
    """
    n = a.shape[0]
    b, c = a.real, a.imag
    big = np.block([[b, c], [c, -b]])
    w, v = np.linalg.eigh(0.5 * (big + big.T))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    scale = max(abs(w[0]), 1.0)
    pos = w[:n] > tol * scale
    k = int(pos.sum())
    q = v[:n, :k] + 1j * v[n:, :k]
    s = w[:k]
    if k < n:
        q = np.hstack([q, _orth_complement(q, n - k)])
        s = np.concatenate([s, np.zeros(n - k)])
    return q, s


def _orth_complement(q: np.ndarray, k: int) -> np.ndarray:
    n = q.shape[0]
    if q.shape[1] == 0:
        return np.eye(n, dtype=complex)[:, :k]
    u, _, _ = np.linalg.svd(q, full_matrices=True)
    return u[:, q.shape[1]:q.shape[1] + k]


def _zero_diagonal_rotation(m: np.ndarray) -> np.ndarray:
    """Real orthogonal ``o`` with ``diag(o m o^T) = 0`` for traceless symmetric ``m``."""
    n = m.shape[0]
    o = np.eye(n)
    cur = m.copy()
    for _ in range(n):
        d = np.diagonal(cur)
        if np.max(np.abs(d)) < 1e-15:
            break
        i = int(np.argmax(d))
        j = int(np.argmin(d))
        if d[i] <= 0 or d[j] >= 0:
            break
        a, b, c = cur[i, i], cur[i, j], cur[j, j]
        # a cos^2 + 2 b cos sin + c sin^2 = 0, with a > 0 > c
        t = (-b + np.sqrt(b * b - a * c)) / c
        cs = 1 / np.sqrt(1 + t * t)
        sn = t * cs
        g = np.eye(n)
        g[i, i], g[i, j], g[j, i], g[j, j] = cs, sn, -sn, cs
        cur = g @ cur @ g.T
        o = g @ o
    return o


def _polygon_phases(lam: np.ndarray) -> np.ndarray:
    """Unit ``z`` with ``z_0 = 1`` and ``sum_j z_j lam_j = 0``.

    Requires ``lam`` decreasing with ``lam_0 <= lam_1 + lam_2 + lam_3``.
    """
    l1, l2, l3, l4 = lam
    if l1 <= 0:
        return np.ones(4, dtype=complex)
    t = max(l1 - l2, l3 - l4, 0.0)
    t = min(t, l1 + l2, l3 + l4)

    def corner(x, y, z):
        # angle between sides x and y of a triangle with third side z
        if x == 0 or y == 0:
            return 0.0
        cosang = (x * x + y * y - z * z) / (2 * x * y)
        return float(np.arccos(np.clip(cosang, -1, 1)))

    # w = l1 + l2 e^{i a}, |w| = t
    a = np.pi - corner(l1, l2, t)
    w = l1 + l2 * np.exp(1j * a)
    # l3 e^{i b} + l4 e^{i c} = -w
    base = np.angle(-w) if abs(w) > 0 else 0.0
    b = base + corner(l3, t, l4)
    rest = -w - l3 * np.exp(1j * b)
    c = np.angle(rest) if abs(rest) > 0 else 0.0
    return np.exp(1j * np.array([0.0, a, b, c]))


def two_qubit_optimal_decomposition(rho) -> PureDecomposition:
    """Wootters' optimal decomposition; every member has concurrence ``C(rho)``."""
    rho = _check_two_qubit(rho)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0, None)
    sel = w > 1e-14 * max(w.max(), 1e-300)
    if sel.sum() == 1:
        return eigen_decomposition(rho)
    vs = np.zeros((4, 4), dtype=complex)
    vs[:, : sel.sum()] = v[:, sel] * np.sqrt(w[sel])
    # tau_ij = <v_i | YY | v_j*>, complex symmetric
    tau = vs.conj().T @ _YY @ vs.conj()
    q, lam = takagi(0.5 * (tau + tau.T))
    # x_i = sum_j q_ji v_j has <x_i | x~_j> = lam_i delta_ij
    x = (vs @ q).T
    c = lam[0] - lam[1:].sum()
    if c > 0:
        y = x * np.array([1, 1j, 1j, 1j])[:, None]
        pre = np.diag([lam[0], -lam[1], -lam[2], -lam[3]])
        gram = (y.conj() @ y.T).real
        o = _zero_diagonal_rotation(pre - c * gram)
    else:
        # phases make the preconcurrences sum to zero; the Hadamard rotation
        # then gives every member zero concurrence
        z = _polygon_phases(lam)
        y = x * np.exp(-0.5j * np.angle(z))[:, None]
        o = 0.5 * np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]])
    return from_vectors(o @ y, floor=1e-14)


def grid_eof(rho, layout: FactorLayout, density: int = 64) -> OracleResult:
    """Brute-force minimum over two-member decompositions of a rank-2 state.

    Members are ``psi1 + g psi2`` and ``psi1 - t/(1-t) g psi2`` for the
    eigenvectors ``psi1, psi2``, with the weight split ``t`` forced by the
    constraints. ``|g|`` runs over ``density + 1`` log-spaced values in
    ``[s/16, 16 s]`` (``s = sqrt(lambda_2/lambda_1)``), the phase over
    ``density`` uniform values; the eigen-decomposition is always included.
    Grids nest when the density is multiplied, so refining never worsens
    the value.
    """
    rho = np.asarray(rho, dtype=complex)
    layout.check(rho.shape[0])
    if rho.shape[0] > 8:
        raise SizeError(f"grid oracle limited to total dimension 8, got {rho.shape[0]}")
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w, v = w[::-1], v[:, ::-1]
    if w[2:].size and w[2] > 1e-12 * w[0]:
        raise SizeError("grid oracle requires rank <= 2")
    if w[1] <= 1e-12 * w[0]:
        return OracleResult(entanglement_entropy(v[:, 0], layout), "grid")
    l1, l2 = w[0], w[1]
    psi1, psi2 = v[:, 0], v[:, 1]
    best = average_entanglement(eigen_decomposition(rho), layout)

    s = np.sqrt(l2 / l1)
    mods = s * np.exp(np.linspace(np.log(1 / 16), np.log(16), density + 1))
    phases = np.exp(2j * np.pi * np.arange(density) / density)
    g = (mods[:, None] * phases[None, :]).reshape(-1)
    # t/(1-t) = (1-lam)/(lam |g|^2) with lam = l1 on psi1
    ratio = l2 / (l1 * np.abs(g) ** 2)
    t = ratio / (1 + ratio)
    a1, a2 = t * l1, (1 - t) * l1
    g2 = -(t / (1 - t)) * g
    v1 = np.sqrt(a1)[:, None] * (psi1[None, :] + g[:, None] * psi2[None, :])
    v2 = np.sqrt(a2)[:, None] * (psi1[None, :] + g2[:, None] * psi2[None, :])
    e1, _ = layout_terms(v1, layout, grad=False)
    e2, _ = layout_terms(v2, layout, grad=False)
    best = min(best, float(np.min(e1 + e2)))
    return OracleResult(max(best, 0.0), "grid")
