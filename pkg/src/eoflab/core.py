"""Dense linear-algebra substrate: states, restrictions, entropies, Schmidt.

States are plain numpy arrays. Kets are 1-D complex vectors, density
operators are 2-D complex matrices. The validating constructors
:func:`ket` and :func:`density` check the invariants once and hand back
read-only arrays, so validated values can be shared freely.

Entropies are in bits throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    HermiticityError,
    LayoutError,
    NormalizationError,
    PositivityError,
    SizeError,
    TraceError,
)

MAX_DIM = 64

HERMITIAN_TOL = 1e-12
EIG_CLIP = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def ket(amplitudes, normalize: bool = False) -> np.ndarray:
    """Validate a state vector.

    With ``normalize=True`` the vector is rescaled to unit norm, otherwise
    it must already have unit norm within ``NORM_TOL``.
    """
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if v.size == 0:
        raise NormalizationError("empty ket")
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm <= 0:
        raise NormalizationError("ket has zero or non-finite norm")
    if normalize:
        v = v / nrm
    elif abs(nrm - 1.0) > NORM_TOL:
        raise NormalizationError(f"ket norm {nrm:.3e} differs from 1")
    return _frozen(v)


def density(matrix, check_trace: bool = True) -> np.ndarray:
    """Validate a density operator and return a read-only Hermitian copy.

    Eigenvalues in ``[-1e-10, 0)`` are tolerated; anything more negative is
    a :class:`PositivityError`.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise LayoutError(f"density operator must be square, got shape {m.shape}")
    herm_err = np.max(np.abs(m - m.conj().T))
    if herm_err > HERMITIAN_TOL:
        raise HermiticityError(f"not Hermitian: max |rho - rho^H| = {herm_err:.3e}")
    m = 0.5 * (m + m.conj().T)
    if check_trace:
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise TraceError(f"trace {tr:.12g} differs from 1 by {abs(tr - 1.0):.3e}")
    lo = np.linalg.eigvalsh(m)[0]
    if lo < -EIG_CLIP:
        raise PositivityError(f"negative eigenvalue {lo:.3e}")
    return _frozen(m)


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class FactorLayout:
    """Tensor factor dimensions plus the factors kept by a restriction.

    Factor indices are 0-based; ``FactorLayout((2, 2, 2, 2), (0, 2))`` is
    the restriction of a four-factor state onto the first and third
    factors.
    """

    dims: tuple[int, ...]
    keep: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        keep = tuple(sorted(set(int(k) for k in self.keep)))
        if not dims or any(d < 1 for d in dims):
            raise LayoutError(f"invalid factor dimensions {self.dims}")
        if not keep:
            raise LayoutError("restriction must keep at least one factor")
        if keep[0] < 0 or keep[-1] >= len(dims):
            raise LayoutError(f"restriction {self.keep} out of range for {len(dims)} factors")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "keep", keep)

    @classmethod
    def bipartite(cls, d1: int, d2: int) -> "FactorLayout":
        return cls((d1, d2), (0,))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    @property
    def rest(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.dims)) if i not in self.keep)

    @property
    def kept_dim(self) -> int:
        return int(np.prod([self.dims[i] for i in self.keep]))

    @property
    def rest_dim(self) -> int:
        return int(np.prod([self.dims[i] for i in self.rest])) if self.rest else 1

    @property
    def perm(self) -> tuple[int, ...]:
        return self.keep + self.rest

    def check(self, dim: int) -> None:
        if dim != self.total:
            raise LayoutError(f"layout {self.dims} has total dimension {self.total}, operand has {dim}")

    def with_keep(self, keep: Sequence[int]) -> "FactorLayout":
        return FactorLayout(self.dims, tuple(keep))


def split_ket(psi: np.ndarray, layout: FactorLayout) -> np.ndarray:
    """Reshape kets into (kept, rest) matrices.

    Accepts a single ket of shape ``(D,)`` or a stack ``(m, D)`` and returns
    ``(kept_dim, rest_dim)`` or ``(m, kept_dim, rest_dim)``.
    """
    psi = np.asarray(psi)
    layout.check(psi.shape[-1])
    lead = psi.shape[:-1]
    t = psi.reshape(lead + layout.dims)
    n = len(lead)
    t = t.transpose(tuple(range(n)) + tuple(n + p for p in layout.perm))
    return t.reshape(lead + (layout.kept_dim, layout.rest_dim))


def merge_ket(mat: np.ndarray, layout: FactorLayout) -> np.ndarray:
    """Inverse of :func:`split_ket`."""
    mat = np.asarray(mat)
    lead = mat.shape[:-2]
    n = len(lead)
    t = mat.reshape(lead + tuple(layout.dims[p] for p in layout.perm))
    inv = np.argsort(layout.perm)
    t = t.transpose(tuple(range(n)) + tuple(n + int(p) for p in inv))
    return t.reshape(lead + (layout.total,))


def partial_trace(op: np.ndarray, layout: FactorLayout) -> np.ndarray:
    """Trace out the factors not in ``layout.keep``.

    Works for any square operator, Hermitian or not, normalized or not.
    """
    op = np.asarray(op, dtype=complex)
    layout.check(op.shape[0])
    nf = len(layout.dims)
    t = op.reshape(layout.dims + layout.dims)
    t = t.transpose(layout.perm + tuple(nf + p for p in layout.perm))
    dk, dr = layout.kept_dim, layout.rest_dim
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ajbj->ab", t)


def restrict(rho, layout: FactorLayout) -> np.ndarray:
    """Reduced density operator on the kept factors."""
    rho = density(rho)
    return density(partial_trace(rho, layout))


def restrict_ket(psi, layout: FactorLayout) -> np.ndarray:
    """Reduced operator of ``|psi><psi|`` without forming the projector."""
    m = split_ket(np.asarray(psi, dtype=complex), layout)
    return m @ m.conj().T


def entropy_from_eigvals(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -EIG_CLIP:
        raise PositivityError(f"negative eigenvalue {w.min():.3e}")
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy in bits, with ``0 log 0 = 0``.

    >>> von_neumann_entropy(np.eye(2) / 2)
    1.0
    """
    rho = np.asarray(rho, dtype=complex)
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return entropy_from_eigvals(w)


def entanglement_entropy(psi, layout: FactorLayout) -> float:
    """Entropy of the restriction of a pure state (bits)."""
    psi = np.asarray(psi, dtype=complex)
    s = np.linalg.svd(split_ket(psi / np.linalg.norm(psi), layout), compute_uv=False)
    return entropy_from_eigvals(s**2)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def tensor(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product of two density operators."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise SizeError(f"tensor product dimension {dim} exceeds cap {max_dim}")
    return _frozen(np.kron(a, b))


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Rows of ``left``/``right`` are the Schmidt kets, paired by index."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self, layout: FactorLayout) -> np.ndarray:
        mat = np.einsum("j,ja,jb->ab", self.coefficients, self.left, self.right)
        return merge_ket(mat, layout)

    @property
    def rank(self) -> int:
        return int(self.coefficients.size)


def schmidt(psi, layout: FactorLayout, cutoff: float = 0.0) -> SchmidtDecomposition:
    """Schmidt decomposition across the cut ``layout.keep | layout.rest``.

    The kept factors form the left block. Coefficients are returned in
    descending order; those ``<= cutoff`` are dropped.
    """
    psi = ket(psi)
    u, s, vh = np.linalg.svd(split_ket(psi, layout), full_matrices=False)
    sel = s > cutoff
    if not sel.any():
        sel[0] = True
    return SchmidtDecomposition(s[sel], u[:, sel].T.copy(), vh[sel, :].copy())


def purify(rho) -> np.ndarray:
    """Purification on ``dim x dim`` whose first-factor restriction is ``rho``."""
    rho = density(rho)
    w, v = np.linalg.eigh(rho)
    # round-off eigenvalues would otherwise show up as spurious Schmidt terms
    w = np.where(w > 1e-12 * w.max(), w, 0.0)
    d = rho.shape[0]
    return ket(np.einsum("k,ik,kj->ij", np.sqrt(w), v, np.eye(d)).reshape(-1))


# state constructors -------------------------------------------------------


def basis(d: int, k: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[k] = 1.0
    return v


def bell_state() -> np.ndarray:
    """|Phi+> = (|00> + |11>)/sqrt(2)."""
    return np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def werner(p: float) -> np.ndarray:
    """p |Phi+><Phi+| + (1 - p) I/4."""
    return p * projector(bell_state()) + (1 - p) * np.eye(4) / 4


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Hilbert-Schmidt when full rank) measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return m / np.trace(m).real


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)
