"""Ensembles, POVMs and accessible information.

An ensemble ``rho = sum_l q_l rho_l`` fixes positive operators ``a_l`` with
``q_l rho_l = sqrt(rho) a_l sqrt(rho)``. Evaluating a state on them gives a
probability vector over the labels, which is a restriction to an abelian
subalgebra. With it, the information a measurement ``{b_i}`` gains about
the label becomes an entropy difference over the pure-state decomposition
that the measurement induces on ``rho``. Maximizing over decompositions then
goes through the same engine as the entanglement of formation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EIG_CLIP, shannon_entropy
from .decompositions import RANK_TOL, PureDecomposition
from .errors import ParameterError, PositivityError, SupportError
from .solver import SolverConfig, minimize_average_entropy

COMPLETENESS_TOL = 1e-10


def _psd_power(rho: np.ndarray, power: float, rank_tol: float = RANK_TOL):
    """``rho**power`` on the support, and the projector onto the kernel."""
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    sup = w > rank_tol * max(w.max(), 0.0)
    wp = np.zeros_like(w)
    wp[sup] = w[sup] ** power
    kernel = v[:, ~sup] @ v[:, ~sup].conj().T
    return (v * wp) @ v.conj().T, kernel


@dataclass(frozen=True)
class Ensemble:
    probs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.probs, dtype=float).reshape(-1)
        s = np.asarray(self.states, dtype=complex)
        if s.ndim != 3 or s.shape[0] != q.size:
            raise ParameterError("ensemble needs one square state per probability")
        if np.any(q <= 0) or abs(q.sum() - 1) > 1e-10:
            raise ParameterError("ensemble probabilities must be positive and sum to 1")
        object.__setattr__(self, "probs", q)
        object.__setattr__(self, "states", s)

    @classmethod
    def from_kets(cls, probs, kets) -> "Ensemble":
        k = np.asarray(kets, dtype=complex)
        k = k / np.linalg.norm(k, axis=1, keepdims=True)
        return cls(probs, np.einsum("la,lb->lab", k, k.conj()))

    @property
    def mixture(self) -> np.ndarray:
        return np.einsum("l,lab->ab", self.probs, self.states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class Povm:
    elements: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.elements, dtype=complex)
        if b.ndim == 2:
            b = b[None]
        lo = min(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[0] for x in b)
        if lo < -EIG_CLIP:
            raise PositivityError(f"POVM element with eigenvalue {lo:.3e}")
        err = np.max(np.abs(b.sum(axis=0) - np.eye(b.shape[1])))
        if err > COMPLETENESS_TOL:
            raise ParameterError(f"POVM elements do not sum to identity (error {err:.2e})")
        object.__setattr__(self, "elements", b)

    def probabilities(self, rho) -> np.ndarray:
        return np.einsum("iab,ba->i", self.elements, rho).real

    def induced_decomposition(self, rho) -> tuple[np.ndarray, np.ndarray]:
        """Weights ``Tr(rho b_i)`` and states ``sqrt(rho) b_i sqrt(rho) / Tr(rho b_i)``."""
        root, _ = _psd_power(np.asarray(rho, dtype=complex), 0.5)
        p = self.probabilities(rho)
        sig = np.einsum("ab,ibc,cd->iad", root, self.elements, root)
        with np.errstate(divide="ignore", invalid="ignore"):
            sig = sig / np.where(p > 0, p, 1.0)[:, None, None]
        return p, sig


@dataclass(frozen=True)
class SubalgebraMap:
    """Positive unital map sending the label projectors ``A_l`` to ``a_l``.

    A state ``sigma`` is carried to the label distribution
    ``Tr(sigma a_l)``; entropies of that distribution play the role of
    restricted entropies.
    """

    generators: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        a = np.asarray(self.generators, dtype=complex)
        for x in a:
            lo = np.linalg.eigvalsh(0.5 * (x + x.conj().T))[0]
            if lo < -EIG_CLIP:
                raise PositivityError(f"subalgebra generator with eigenvalue {lo:.3e}")
        err = np.max(np.abs(a.sum(axis=0) - np.eye(a.shape[1])))
        if err > COMPLETENESS_TOL:
            raise ParameterError(f"generators do not sum to identity (error {err:.2e})")
        object.__setattr__(self, "generators", a)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(a.shape[0])))

    def apply(self, sigma) -> np.ndarray:
        """Label distribution ``Tr(sigma a_l)`` (unnormalized if ``sigma`` is)."""
        return np.einsum("lab,ba->l", self.generators, np.asarray(sigma)).real

    def restricted_entropy(self, sigma) -> float:
        return shannon_entropy(np.clip(self.apply(sigma), 0, None))

    def member_terms(self, vectors: np.ndarray, grad: bool = True):
        v = np.asarray(vectors, dtype=complex)
        av = np.einsum("lab,ib->ila", self.generators, v)
        t = np.clip(np.einsum("ia,ila->il", v.conj(), av).real, 0.0, None)
        p = t.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            tlt = np.where(t > 0, t * np.log2(np.where(t > 0, t, 1.0)), 0.0)
            logp = np.log2(np.where(p > 0, p, 1.0))
        vals = -tlt.sum(axis=1) + p * logp
        if not grad:
            return vals, None
        coef = logp[:, None] - np.log2(np.maximum(t, 1e-18))
        return vals, 2 * np.einsum("il,ila->ia", coef, av)


def subalgebra_map_from_ensemble(e: Ensemble, rank_tol: float = RANK_TOL,
                                 support_tol: float = 1e-10) -> SubalgebraMap:
    """``a_l = rho^{-1/2} q_l rho_l rho^{-1/2}`` on the support of the mixture.

    When the mixture is singular the kernel projector is shared equally
    among the ``a_l`` so they still sum to the identity; this does not
    change ``Tr(sigma a_l)`` for any ``sigma`` supported on the mixture.
    """
    rho = e.mixture
    inv_root, kernel = _psd_power(rho, -0.5, rank_tol)
    leak = max(abs(np.trace(kernel @ s)) for s in e.states)
    if leak > support_tol:
        raise SupportError(f"ensemble member has weight {leak:.2e} outside the mixture support")
    a = np.einsum("ab,l,lbc,cd->lad", inv_root, e.probs, e.states, inv_root)
    a = a + kernel[None] / len(e.probs)
    a = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
    return SubalgebraMap(a)


def povm_information(e: Ensemble, b: Povm) -> float:
    """Mutual information between label and outcome, as the double sum over ``(l, i)``."""
    p_i = b.probabilities(e.mixture)
    cond = np.einsum("iab,lba->li", b.elements, e.states).real
    cond = np.clip(cond, 0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p_i > 0, p_i * np.log2(np.where(p_i > 0, p_i, 1)), 0.0)
        clogc = np.where(cond > 0, cond * np.log2(np.where(cond > 0, cond, 1)), 0.0)
    return float(-plogp.sum() + np.sum(e.probs[:, None] * clogc))


def povm_information_decomposed(e: Ensemble, b: Povm, gamma: SubalgebraMap | None = None) -> float:
    """Same quantity as :func:`povm_information`, via ``S(rho o gamma) - sum p_i S(sigma_i o gamma)``."""
    gamma = gamma or subalgebra_map_from_ensemble(e)
    rho = e.mixture
    p, sig = b.induced_decomposition(rho)
    terms = sum(pi * gamma.restricted_entropy(s) for pi, s in zip(p, sig) if pi > 0)
    return gamma.restricted_entropy(rho) - terms


def povm_from_decomposition(d: PureDecomposition, rho, rank_tol: float = RANK_TOL) -> Povm:
    """Rank-one POVM ``b_i = rho^{-1/2} p_i |psi_i><psi_i| rho^{-1/2}``.

    The kernel projector of ``rho`` is appended as an extra element when
    ``rho`` is singular.
    """
    inv_root, kernel = _psd_power(np.asarray(rho, dtype=complex), -0.5, rank_tol)
    v = (np.sqrt(d.weights)[:, None] * d.kets) @ inv_root.T
    b = np.einsum("ia,ib->iab", v, v.conj())
    if np.trace(kernel).real > 0.5:
        b = np.concatenate([b, kernel[None]])
    return Povm(b)


@dataclass
class AccessibleInformation:
    value: float
    label_entropy: float
    decomposition: PureDecomposition
    povm: Povm
    povm_value: float
    solver: object

    @property
    def gap(self) -> float:
        """Decomposition-side value minus the double-sum value of the induced POVM."""
        return self.value - self.povm_value

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "label_entropy": float(self.label_entropy),
            "povm_value": float(self.povm_value),
            "gap": float(self.gap),
            "solver": self.solver.to_dict(),
        }


def accessible_information(e: Ensemble, cfg: SolverConfig | None = None) -> AccessibleInformation:
    """``S(rho o gamma) - min sum p_i S(sigma_i o gamma)`` over decompositions of the mixture."""
    gamma = subalgebra_map_from_ensemble(e)
    rho = e.mixture
    res = minimize_average_entropy(rho, gamma, cfg)
    h = gamma.restricted_entropy(rho)
    povm = povm_from_decomposition(res.decomposition, rho)
    return AccessibleInformation(
        value=max(h - res.value, 0.0),
        label_entropy=h,
        decomposition=res.decomposition,
        povm=povm,
        povm_value=povm_information(e, povm),
        solver=res,
    )
