"""Minimization of average restricted entropy over pure-state decompositions.

The search space is the set of ``m x r`` isometries ``W`` acting on the
eigen-ensemble of the state (see :mod:`eoflab.decompositions`). Points are
reached as ``W = (U0 exp(K))[:, :r]`` with ``U0`` a fixed unitary and ``K``
anti-Hermitian; only the generator entries that move the first ``r``
columns are free. The objective and its exact gradient are both obtained
from Hermitian eigendecompositions, and each local search is an L-BFGS run
in generator coordinates, re-centred on convergence.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from .core import FactorLayout, entropy_from_eigvals, merge_ket, partial_trace, split_ket
from .decompositions import (
    RANK_TOL,
    PureDecomposition,
    eigen_ensemble,
    from_vectors,
    to_mixing,
)
from .errors import ParameterError

log = logging.getLogger(__name__)

_LOG_FLOOR = 1e-18


@dataclass(frozen=True)
class SolverConfig:
    """Optimizer settings.

    ``member_counts`` lists the decomposition sizes to search; ``None``
    means the default sweep ``{r, r + 1, r**2}`` capped at ``max_members``
    (itself defaulting to ``r**2``). ``restarts`` is per size.
    """

    restarts: int = 16
    max_iter: int = 3000
    tol: float = 1e-7
    seed: int = 0
    max_members: int | None = None
    member_counts: tuple[int, ...] | None = None
    max_cycles: int = 4
    rank_tol: float = RANK_TOL
    n_jobs: int = 1

    def replace(self, **kw) -> "SolverConfig":
        d = asdict(self)
        d.update(kw)
        return SolverConfig(**d)


@dataclass
class RestartRecord:
    members: int
    restart: int
    value: float
    iterations: int
    converged: bool
    start: str = "random"


@dataclass
class EofResult:
    value: float
    decomposition: PureDecomposition
    members: int
    seed: int
    restarts: int
    iterations: int
    converged: bool
    hit_member_cap: bool
    trace: list[RestartRecord] = field(default_factory=list)

    @property
    def best_per_restart(self) -> list[float]:
        return [r.value for r in self.trace]

    def to_dict(self, with_decomposition: bool = True) -> dict:
        out = {
            "value": float(self.value),
            "members": int(self.members),
            "seed": int(self.seed),
            "restarts": int(self.restarts),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "hit_member_cap": bool(self.hit_member_cap),
            "best_per_restart": [
                {"members": r.members, "restart": r.restart, "start": r.start,
                 "value": float(r.value), "iterations": r.iterations, "converged": r.converged}
                for r in self.trace
            ],
        }
        if with_decomposition:
            out["argmin"] = self.decomposition.to_dict()
        return out


# objective kernels ----------------------------------------------------------


def _unnormalized_entropy(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``-sum w log w + p log p`` row-wise, plus ``log p`` and clipped ``log w`` (bits)."""
    w = np.clip(w, 0.0, None)
    p = w.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        wlw = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
        logp = np.log2(np.where(p > 0, p, 1.0))
    vals = -wlw.sum(axis=-1) + p * logp
    return vals, logp, np.log2(np.maximum(w, _LOG_FLOOR))


def layout_terms(vectors: np.ndarray, layout: FactorLayout, grad: bool = True):
    """Per-member ``||v|| ^ 2 S(v/||v|| restricted)`` and its gradient in ``conj(v)``."""
    m = split_ket(vectors, layout)
    left = m.shape[-2] <= m.shape[-1]
    mh = np.conj(np.swapaxes(m, -1, -2))
    sig = m @ mh if left else mh @ m
    w, q = np.linalg.eigh(sig)
    vals, logp, logw = _unnormalized_entropy(w)
    if not grad:
        return vals, None
    g = np.einsum("iab,ib,icb->iac", q, logp[:, None] - logw, q.conj())
    gm = 2 * (g @ m if left else m @ g)
    return vals, merge_ket(gm, layout)


def member_terms(vectors: np.ndarray, restriction, grad: bool = True):
    if isinstance(restriction, FactorLayout):
        return layout_terms(vectors, restriction, grad)
    return restriction.member_terms(vectors, grad)


def restricted_entropy(rho, restriction) -> float:
    """Entropy of ``rho`` restricted to a factor layout or subalgebra map."""
    if isinstance(restriction, FactorLayout):
        return entropy_from_eigvals(np.linalg.eigvalsh(partial_trace(rho, restriction)))
    return restriction.restricted_entropy(rho)


def average_entanglement(d: PureDecomposition, restriction) -> float:
    """``sum_i alpha_i S(psi_i restricted)`` in bits."""
    v = np.sqrt(d.weights)[:, None] * d.kets
    vals, _ = member_terms(v, restriction, grad=False)
    return float(max(vals.sum(), 0.0))


# Stiefel search ------------------------------------------------------------


class _Generator:
    """Real coordinates for anti-Hermitian ``K`` that move the first ``r`` columns."""

    def __init__(self, m: int, r: int):
        self.m, self.r = m, r
        jj, kk = np.triu_indices(m, k=1)
        sel = jj < r
        self.j, self.k = jj[sel], kk[sel]
        self.diag = np.arange(r)
        self.size = r + 2 * self.j.size

    def matrix(self, theta: np.ndarray) -> np.ndarray:
        n = self.j.size
        a, b, c = theta[:n], theta[n:2 * n], theta[2 * n:]
        kmat = np.zeros((self.m, self.m), dtype=complex)
        kmat[self.j, self.k] = a + 1j * b
        kmat[self.k, self.j] = -a + 1j * b
        kmat[self.diag, self.diag] = 1j * c
        return kmat

    def project(self, z: np.ndarray) -> np.ndarray:
        ga = z[self.j, self.k].real - z[self.k, self.j].real
        gb = z[self.j, self.k].imag + z[self.k, self.j].imag
        gc = z[self.diag, self.diag].imag
        return np.concatenate([ga, gb, gc])


def _expm_skew(kmat: np.ndarray):
    """``exp(K)`` for anti-Hermitian ``K`` together with its eigenbasis data."""
    mu, q = np.linalg.eigh(-1j * kmat)
    ph = np.exp(1j * mu)
    e = (q * ph) @ q.conj().T
    half = 0.5 * (mu[:, None] - mu[None, :])
    phi = np.exp(0.5j * (mu[:, None] + mu[None, :])) * np.sinc(half / np.pi)
    return e, q, phi


class _Problem:
    def __init__(self, a: np.ndarray, restriction, m: int):
        self.a = a
        self.r = a.shape[1]
        self.m = m
        self.restriction = restriction
        self.gen = _Generator(m, self.r)
        self.nfev = 0

    def vectors(self, w: np.ndarray) -> np.ndarray:
        return w @ self.a.T

    def value(self, w: np.ndarray) -> float:
        vals, _ = member_terms(self.vectors(w), self.restriction, grad=False)
        return float(vals.sum())

    def fun(self, theta: np.ndarray, u0: np.ndarray):
        self.nfev += 1
        e, q, phi = _expm_skew(self.gen.matrix(theta))
        w = (u0 @ e)[:, : self.r]
        vals, h = member_terms(self.vectors(w), self.restriction)
        gw = h @ self.a.conj()
        ze = u0.conj().T @ np.pad(gw, ((0, 0), (0, self.m - self.r)))
        z = q @ (np.conj(phi) * (q.conj().T @ ze @ q)) @ q.conj().T
        return float(vals.sum()), self.gen.project(z)

    def local_search(self, u0: np.ndarray, cfg: SolverConfig):
        f0 = self.value(u0[:, : self.r])
        best, iters, converged = f0, 0, True
        for _ in range(max(cfg.max_cycles, 1)):
            res = minimize(self.fun, np.zeros(self.gen.size), args=(u0,), jac=True,
                           method="L-BFGS-B",
                           options={"maxiter": cfg.max_iter, "ftol": cfg.tol * 1e-3,
                                    "gtol": 1e-10, "maxcor": 30})
            iters += int(res.nit)
            converged = res.status != 1
            if res.fun < best:
                e, _, _ = _expm_skew(self.gen.matrix(res.x))
                u0 = u0 @ e
                improvement = best - res.fun
                best = self.value(u0[:, : self.r])
                if improvement > cfg.tol:
                    continue
            break
        return best, u0[:, : self.r], iters, converged


def _haar(m: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def _complete(w: np.ndarray) -> np.ndarray:
    if w.shape[0] == w.shape[1]:
        return w
    return np.hstack([w, null_space(w.conj().T)])


def _sizes(r: int, cfg: SolverConfig) -> tuple[list[int], int]:
    cap = cfg.max_members if cfg.max_members is not None else r * r
    cap = max(cap, r)
    if cfg.member_counts is not None:
        sizes = sorted({int(s) for s in cfg.member_counts if r <= s <= cap})
        if not sizes:
            raise ParameterError(f"no member count in {cfg.member_counts} lies in [{r}, {cap}]")
    else:
        sizes = sorted({r, min(r + 1, cap), cap})
    return sizes, cap


def minimize_average_entropy(rho, restriction, cfg: SolverConfig | None = None,
                             candidates: Sequence[PureDecomposition] = ()) -> EofResult:
    """Best decomposition found for ``min sum p_i S(sigma_i restricted)``.

    Every supplied candidate decomposition of ``rho`` seeds one extra local
    search, so the returned value never exceeds a candidate's average.
    """
    cfg = cfg or SolverConfig()
    rho = np.asarray(rho, dtype=complex)
    a = eigen_ensemble(rho, cfg.rank_tol)
    r = a.shape[1]
    sizes, cap = _sizes(r, cfg)

    if r == 1:
        d = from_vectors(a.T)
        rec = RestartRecord(1, 0, average_entanglement(d, restriction), 0, True, "eigen")
        return EofResult(rec.value, d, 1, cfg.seed, 1, 0, True, False, [rec])

    starts = []
    ss = np.random.SeedSequence(cfg.seed)
    children = ss.spawn(len(sizes))
    for m, child in zip(sizes, children):
        rng = np.random.default_rng(child)
        for k in range(cfg.restarts):
            starts.append((m, k, "random", _haar(m, rng)))
    for k, cand in enumerate(candidates):
        w = to_mixing(cand, rho, cfg.rank_tol)
        err = np.max(np.abs(w.conj().T @ w - np.eye(r)))
        if err > 1e-8:
            raise ParameterError(f"candidate {k} is not a decomposition of the state (error {err:.2e})")
        # polar factor: exact isometry, same members up to round-off
        w = w @ np.linalg.inv(_sqrtm_psd(w.conj().T @ w))
        starts.append((w.shape[0], k, "candidate", _complete(w)))

    def run(start):
        m, k, kind, u0 = start
        prob = _Problem(a, restriction, m)
        val, w, iters, conv = prob.local_search(u0, cfg)
        return val, w, RestartRecord(m, k, val, iters, conv, kind)

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(cfg.n_jobs) as ex:
            runs = list(ex.map(run, starts))
    else:
        runs = [run(s) for s in starts]

    best_i = min(range(len(runs)), key=lambda i: (runs[i][0], i))
    _, w, rec = runs[best_i]
    d = from_vectors(w @ a.T)
    value = average_entanglement(d, restriction)
    trace = [x[2] for x in runs]
    hit_cap = rec.members == cap and cap > r and rec.start == "random"
    if hit_cap:
        log.info("best decomposition uses the member cap m=%d", cap)
    return EofResult(
        value=value,
        decomposition=d,
        members=rec.members,
        seed=cfg.seed,
        restarts=len(runs),
        iterations=sum(t.iterations for t in trace),
        converged=rec.converged,
        hit_member_cap=hit_cap,
        trace=trace,
    )


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def eof(rho, layout: FactorLayout, cfg: SolverConfig | None = None,
        candidates: Sequence[PureDecomposition] = ()) -> EofResult:
    """Entanglement of formation of ``rho`` relative to the kept factors of ``layout``.

    The value is the smallest average restricted entropy found, so it is an
    upper bound on the true minimum; for pure ``rho`` it is exact.
    """
    rho = np.asarray(rho, dtype=complex)
    layout.check(rho.shape[0])
    return minimize_average_entropy(rho, layout, cfg, candidates)


def entropy_of_subalgebra(rho, restriction, cfg: SolverConfig | None = None,
                          candidates: Sequence[PureDecomposition] = ()) -> float:
    """``S(rho restricted) - min sum p_i S(sigma_i restricted)``.

    ``restriction`` is a :class:`FactorLayout` or an object with the
    subalgebra-map interface (``member_terms``, ``restricted_entropy``).
    """
    res = minimize_average_entropy(rho, restriction, cfg, candidates)
    return restricted_entropy(rho, restriction) - res.value
