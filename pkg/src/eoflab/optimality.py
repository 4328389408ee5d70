"""Optimality certificates for pairs of decomposition members.

For unit kets ``psi1, psi2`` and a restriction, let ``s1, s2`` be the
restricted states, ``s12`` the restriction of ``|psi1><psi2|`` and, for a
complex ``g``,

    ov(g)    = g s21 + conj(g) s12
    sigma(g) = |g|^2 s1 + s2 - ov(g)       (restriction of conj(g) psi1 - psi2)

If both kets are members of an optimal decomposition then for every ``g``

    (|g|^2 S(s1) + S(s2) + Tr(ov(g) log s1)) / Tr sigma(g)  <=  S(sigma(g) / Tr sigma(g))

and conversely, if this holds for every ``g``, every mixture of the two
kets has the obvious two-member decomposition as an optimal one. The
checks below sample ``g`` on a finite set, so a pass is evidence, not
proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    FactorLayout,
    SchmidtDecomposition,
    entanglement_entropy,
    entropy_from_eigvals,
    ket,
    restrict_ket,
    schmidt,
    split_ket,
)
from .decompositions import check_independent
from .errors import CertificateError, DegeneracyError, LayoutError

MARGIN_TOL = 1e-9
SUPPORT_TOL = 1e-13
DEFAULT_MODULI = (1 / 8, 1 / 4, 1 / 2, 1.0, 2.0, 4.0, 8.0)


@dataclass(frozen=True)
class GammaSampling:
    """Grid of ``phases`` x ``moduli`` plus ``n_random`` seeded random values.

    Random moduli are log-uniform in ``[1/16, 16]``.
    """

    phases: int = 16
    moduli: tuple[float, ...] = DEFAULT_MODULI
    n_random: int = 64
    seed: int = 0

    def gammas(self) -> np.ndarray:
        ph = np.exp(2j * np.pi * np.arange(self.phases) / self.phases)
        grid = (np.asarray(self.moduli)[:, None] * ph[None, :]).reshape(-1)
        rng = np.random.default_rng(self.seed)
        mod = np.exp(rng.uniform(np.log(1 / 16), np.log(16), self.n_random))
        rnd = mod * np.exp(2j * np.pi * rng.uniform(size=self.n_random))
        return np.concatenate([grid, rnd])


@dataclass(frozen=True)
class PairOperators:
    s1: np.ndarray
    s2: np.ndarray
    s12: np.ndarray

    @classmethod
    def build(cls, psi1, psi2, layout: FactorLayout) -> "PairOperators":
        m1 = split_ket(psi1, layout)
        m2 = split_ket(psi2, layout)
        return cls(m1 @ m1.conj().T, m2 @ m2.conj().T, m1 @ m2.conj().T)

    @property
    def s21(self) -> np.ndarray:
        return self.s12.conj().T

    def overlap(self, g: complex) -> np.ndarray:
        return g * self.s21 + np.conj(g) * self.s12

    def sigma(self, g: complex) -> np.ndarray:
        return abs(g) ** 2 * self.s1 + self.s2 - self.overlap(g)


@dataclass(frozen=True)
class SigmaOfGamma:
    sigma: np.ndarray
    trace: float
    normalized: np.ndarray


def _prepare(psi1, psi2):
    psi1, psi2 = ket(psi1), ket(psi2)
    check_independent(psi1, psi2)
    return psi1, psi2


def sigma_of_gamma(psi1, psi2, layout: FactorLayout, gamma: complex) -> SigmaOfGamma:
    """``sigma(g)``, its trace and ``sigma(g) / Tr sigma(g)``."""
    psi1, psi2 = _prepare(psi1, psi2)
    ops = PairOperators.build(psi1, psi2, layout)
    return _sigma_of_gamma(ops, gamma)


def _sigma_of_gamma(ops: PairOperators, gamma: complex) -> SigmaOfGamma:
    sig = ops.sigma(gamma)
    sig = 0.5 * (sig + sig.conj().T)
    tr = float(np.trace(sig).real)
    if tr <= 1e-12:
        raise DegeneracyError(f"sigma(gamma) vanishes at gamma={gamma}")
    return SigmaOfGamma(sig, tr, sig / tr)


def _log_pairing(s1: np.ndarray, x: np.ndarray, support_tol: float = SUPPORT_TOL) -> float:
    """``Tr(x log2 s1)`` with the log taken on the support of ``s1``.

    Returns ``-inf`` when ``x`` has diagonal weight on the kernel.
    """
    w, v = np.linalg.eigh(s1)
    diag = np.einsum("ak,ab,bk->k", v.conj(), x, v).real
    sup = w > support_tol
    if np.any(np.abs(diag[~sup]) > 1e-10):
        return -np.inf
    return float(np.sum(diag[sup] * np.log2(w[sup])))


def _entropy(op: np.ndarray) -> float:
    return entropy_from_eigvals(np.clip(np.linalg.eigvalsh(op), 0, None))


def _num(x: float):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    return x if np.isfinite(x) else str(x)


@dataclass
class PairCertificate:
    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma12: np.ndarray
    entropy1: float
    entropy2: float
    gamma_samples: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    tolerance: float = MARGIN_TOL
    note: str = field(default="verdict from a finite gamma sample; a pass is not a proof")

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))

    @property
    def worst_gamma(self) -> complex:
        return complex(self.gamma_samples[int(np.argmin(self.margins))])

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "verdict": self.verdict,
            "min_margin": self.min_margin,
            "worst_gamma": c(self.worst_gamma),
            "tolerance": self.tolerance,
            "entropy1": self.entropy1,
            "entropy2": self.entropy2,
            "note": self.note,
            "samples": [
                {"gamma": c(g), "lhs": _num(lo), "rhs": _num(hi), "margin": _num(mg)}
                for g, lo, hi, mg in zip(self.gamma_samples, self.lhs, self.rhs, self.margins)
            ],
        }


def _evaluate(ops: PairOperators, gammas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e1, e2 = _entropy(ops.s1), _entropy(ops.s2)
    lhs = np.empty(gammas.size)
    rhs = np.empty(gammas.size)
    for k, g in enumerate(gammas):
        sg = _sigma_of_gamma(ops, g)
        pairing = _log_pairing(ops.s1, ops.overlap(g))
        lhs[k] = (abs(g) ** 2 * e1 + e2 + pairing) / sg.trace
        rhs[k] = _entropy(sg.normalized)
    return lhs, rhs


def check_pair(psi1, psi2, layout: FactorLayout, sampling: GammaSampling | None = None,
               tolerance: float = MARGIN_TOL) -> PairCertificate:
    """Evaluate the pair inequality at every sampled ``gamma``.

    Margins are ``RHS - LHS``; the pair passes when no margin is below
    ``-tolerance``. A sample whose overlap term reaches the kernel of
    ``s1`` has ``LHS = -inf`` and passes trivially.
    """
    sampling = sampling or GammaSampling()
    psi1, psi2 = _prepare(psi1, psi2)
    ops = PairOperators.build(psi1, psi2, layout)
    gammas = sampling.gammas()
    lhs, rhs = _evaluate(ops, gammas)
    return PairCertificate(ops.s1, ops.s2, ops.s12, _entropy(ops.s1), _entropy(ops.s2),
                           gammas, lhs, rhs, rhs - lhs, tolerance)


def pair_margin(psi1, psi2, layout: FactorLayout, gamma: complex) -> float:
    """Margin ``RHS - LHS`` at a single ``gamma``."""
    psi1, psi2 = _prepare(psi1, psi2)
    ops = PairOperators.build(psi1, psi2, layout)
    lhs, rhs = _evaluate(ops, np.array([gamma], dtype=complex))
    return float(rhs[0] - lhs[0])


@dataclass
class FirstOrderReport:
    gamma: complex
    eps: np.ndarray
    excess: np.ndarray
    slopes: np.ndarray
    coefficient: float
    predicted: float
    trivial: bool
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "gamma": [float(np.real(self.gamma)), float(np.imag(self.gamma))],
            "eps": [float(x) for x in self.eps],
            "excess": [float(x) for x in self.excess],
            "slopes": [float(x) for x in self.slopes],
            "coefficient": float(self.coefficient),
            "predicted": float(self.predicted),
            "trivial": self.trivial,
            "consistent": self.consistent,
        }


def first_order_necessity(psi1, psi2, layout: FactorLayout, gamma: complex,
                          eps=(1e-2, 1e-3, 1e-4), slope_tol: float = 1e-6) -> FirstOrderReport:
    """Compare the perturbed pair ``phi1, phi2`` against the unperturbed one.

    For ``e`` in ``eps`` the state
    ``(1 + e|g|^2) |psi1><psi1| + e (1 + e|g|^2) |psi2><psi2|`` is also
    ``|phi1><phi1| + e |g|^2 |phi2><phi2|`` with ``phi1 = psi1 + e g psi2``
    and ``phi2 = psi1 - psi2 / conj(g)``. The excess of the second
    decomposition's average entropy over the first, divided by ``e``,
    tends to ``Tr sigma(g)`` times the pair margin at ``g``.
    """
    psi1, psi2 = _prepare(psi1, psi2)
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0) or np.any(eps > 0.1):
        raise ValueError("eps values must lie in (0, 0.1]")
    g = complex(gamma)
    if abs(g) < 1e-14:
        z = np.zeros_like(eps)
        return FirstOrderReport(g, eps, z, z, 0.0, 0.0, True, True)

    s1 = entanglement_entropy(psi1, layout)
    s2 = entanglement_entropy(psi2, layout)
    phi2 = psi1 - psi2 / np.conj(g)
    n2 = float(np.vdot(phi2, phi2).real)
    ent2 = entanglement_entropy(phi2, layout)
    excess = np.empty(eps.size)
    for k, e in enumerate(eps):
        base = (1 + e * abs(g) ** 2) * s1 + e * (1 + e * abs(g) ** 2) * s2
        phi1 = psi1 + e * g * psi2
        n1 = float(np.vdot(phi1, phi1).real)
        f = n1 * entanglement_entropy(phi1, layout) + e * abs(g) ** 2 * n2 * ent2
        excess[k] = f - base
    slopes = excess / eps
    order = np.argsort(eps)
    if eps.size >= 2:
        e0, e1 = eps[order[0]], eps[order[1]]
        s0, s1_ = slopes[order[0]], slopes[order[1]]
        coef = s0 - (s1_ - s0) * e0 / (e1 - e0)
    else:
        coef = slopes[0]
    margin = pair_margin(psi1, psi2, layout, g)
    ops = PairOperators.build(psi1, psi2, layout)
    predicted = _sigma_of_gamma(ops, g).trace * margin
    consistent = bool(
        (coef >= -slope_tol) == (predicted >= -slope_tol)
        or abs(coef - predicted) <= max(slope_tol, 10 * eps.min())
    )
    return FirstOrderReport(g, eps, excess, slopes, float(coef), float(predicted), False, consistent)


def exact_rank2_eof(psi1, psi2, layout: FactorLayout, lam: float,
                    sampling: GammaSampling | None = None,
                    certificate: PairCertificate | None = None) -> float:
    """``lam S(s1) + (1 - lam) S(s2)``, valid once the pair is certified.

    Raises :class:`CertificateError` when the pair fails the check.
    """
    if not 0 <= lam <= 1:
        raise ValueError("lam must lie in [0, 1]")
    cert = certificate or check_pair(psi1, psi2, layout, sampling)
    if not cert.passed:
        raise CertificateError(
            f"pair fails the optimality check (min margin {cert.min_margin:.3e} "
            f"at gamma={cert.worst_gamma:.4g})")
    return lam * cert.entropy1 + (1 - lam) * cert.entropy2


@dataclass
class Inequality12Report:
    lhs: float
    rhs: float
    schmidt: SchmidtDecomposition
    tolerance: float = 1e-10

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.gap >= -self.tolerance

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "gap": self.gap, "holds": self.holds,
                "schmidt_coefficients": [float(c) for c in self.schmidt.coefficients]}


def check_inequality_12(psi, layout: FactorLayout, cutoff: float = 1e-14) -> Inequality12Report:
    """Compare ``S(psi on 1,3)`` with the Schmidt-weighted sum of block entropies.

    ``psi`` lives on four factors ``1 (x) 2 (x) 3 (x) 4``. It is Schmidt
    decomposed across ``(12)|(34)``; each left ket contributes its entropy
    on factor 1 and each right ket its entropy on factor 3, weighted by the
    squared Schmidt coefficient.
    """
    if len(layout.dims) != 4:
        raise LayoutError("expected a four-factor layout")
    psi = ket(psi)
    d1, d2, d3, d4 = layout.dims
    sd = schmidt(psi, FactorLayout(layout.dims, (0, 1)), cutoff=cutoff)
    left = FactorLayout((d1, d2), (0,))
    right = FactorLayout((d3, d4), (0,))
    rhs = sum(c * c * (entanglement_entropy(l, left) + entanglement_entropy(r, right))
              for c, l, r in zip(sd.coefficients, sd.left, sd.right))
    lhs = _entropy(restrict_ket(psi, FactorLayout(layout.dims, (0, 2))))
    return Inequality12Report(float(lhs), float(rhs), sd)
