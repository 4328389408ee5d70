import numpy as np
import pytest

from eoflab.core import (
    FactorLayout,
    basis,
    bell_state,
    entanglement_entropy,
    projector,
    random_density,
    random_ket,
    restrict_ket,
    von_neumann_entropy,
    werner,
)
from eoflab.decompositions import PureDecomposition, eigen_decomposition, from_mixing, validate
from eoflab.errors import ParameterError
from eoflab.oracle import two_qubit_eof
from eoflab.solver import (
    SolverConfig,
    _expm_skew,
    _Generator,
    _Problem,
    average_entanglement,
    entropy_of_subalgebra,
    eof,
    layout_terms,
    minimize_average_entropy,
    restricted_entropy,
)
from eoflab.decompositions import eigen_ensemble


def test_average_entanglement_examples(rng, qubits):
    assert average_entanglement(PureDecomposition([1.0], [bell_state()]), qubits) == pytest.approx(1.0)
    prods = [np.kron(random_ket(2, rng), random_ket(2, rng)) for _ in range(3)]
    d = PureDecomposition([0.2, 0.3, 0.5], prods)
    assert average_entanglement(d, qubits) == pytest.approx(0.0, abs=1e-12)


def test_average_entanglement_eigen(rng, qubits):
    rho = random_density(4, rng)
    w, v = np.linalg.eigh(rho)
    direct = sum(w[k] * von_neumann_entropy(restrict_ket(v[:, k], qubits)) for k in range(4))
    assert average_entanglement(eigen_decomposition(rho), qubits) == pytest.approx(direct, abs=1e-12)


def test_layout_terms_gradient(rng):
    """Analytic gradient of the unnormalized member entropy against finite differences."""
    layout = FactorLayout((2, 3), (1,))
    v = (rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))) * 0.4
    vals, grad = layout_terms(v, layout)
    dv = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
    h = 1e-6
    num = (layout_terms(v + h * dv, layout, grad=False)[0].sum()
           - layout_terms(v - h * dv, layout, grad=False)[0].sum()) / (2 * h)
    # grad is d/d conj(v); the real directional derivative is Re <grad, dv>
    ana = np.real(np.sum(grad.conj() * dv))
    assert num == pytest.approx(ana, rel=1e-6, abs=1e-8)


def test_objective_gradient_matches_finite_difference(rng, qubits):
    rho = random_density(4, rng, rank=3)
    prob = _Problem(eigen_ensemble(rho), qubits, 5)
    u0 = np.linalg.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))[0]
    gen = _Generator(5, 3)
    theta = rng.standard_normal(gen.size) * 0.3
    f0, g0 = prob.fun(theta, u0)
    d = rng.standard_normal(theta.size)
    h = 1e-6
    num = (prob.fun(theta + h * d, u0)[0] - prob.fun(theta - h * d, u0)[0]) / (2 * h)
    assert num == pytest.approx(g0 @ d, rel=1e-5, abs=1e-8)


def test_expm_skew_is_unitary(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    k = a - a.conj().T
    u = _expm_skew(k)[0]
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_bell_state(qubits):
    res = eof(projector(bell_state()), qubits)
    assert res.value == pytest.approx(1.0, abs=1e-6)
    assert res.members == 1


def test_product_state(rng, qubits, fast_cfg):
    rho = np.kron(random_density(2, rng), random_density(2, rng))
    assert eof(rho, qubits, fast_cfg).value == pytest.approx(0.0, abs=1e-6)


def test_werner(qubits):
    res = eof(werner(0.9), qubits)
    assert res.value == pytest.approx(two_qubit_eof(werner(0.9)).value, abs=5e-3)
    assert res.converged


def test_pure_state_is_exact(rng):
    layout = FactorLayout.bipartite(3, 3)
    psi = random_ket(9, rng)
    res = eof(projector(psi), layout)
    assert abs(res.value - entanglement_entropy(psi, layout)) <= 1e-9
    assert len(res.decomposition) == 1


def test_result_consistency(rng, qubits, fast_cfg):
    rho = random_density(4, rng)
    res = eof(rho, qubits, fast_cfg)
    assert res.value == pytest.approx(average_entanglement(res.decomposition, qubits), abs=1e-9)
    assert validate(res.decomposition, rho).reconstruction_error <= 1e-9
    assert res.seed == fast_cfg.seed
    assert len(res.best_per_restart) == res.restarts
    assert min(res.best_per_restart) == pytest.approx(res.value, abs=1e-9)


def test_upper_bound_over_candidates(rng, qubits, fast_cfg):
    rho = random_density(4, rng, rank=2)
    cands = [eigen_decomposition(rho),
             from_mixing(rho, np.linalg.qr(rng.standard_normal((3, 3)) + 0j)[0][:, :2])]
    res = eof(rho, qubits, fast_cfg, candidates=cands)
    for c in cands:
        assert res.value <= average_entanglement(c, qubits) + 1e-9


def test_candidate_must_decompose_state(rng, qubits):
    rho = random_density(4, rng, rank=2)
    other = eigen_decomposition(random_density(4, rng, rank=2))
    with pytest.raises(ParameterError):
        eof(rho, qubits, SolverConfig(restarts=1), candidates=[other])


def test_seed_determinism_and_parallel_agreement(rng, qubits):
    rho = random_density(4, rng)
    cfg = SolverConfig(restarts=3, seed=11)
    a = eof(rho, qubits, cfg)
    b = eof(rho, qubits, cfg)
    c = eof(rho, qubits, cfg.replace(n_jobs=3))
    assert a.value == b.value == c.value
    assert a.to_dict() == c.to_dict()


def test_member_count_sweep(rng, qubits):
    rho = random_density(4, rng, rank=2)
    res = eof(rho, qubits, SolverConfig(restarts=2, member_counts=(2, 3)))
    assert {t.members for t in res.trace} == {2, 3}


def test_convexity(rng, qubits, fast_cfg):
    r1, r2 = random_density(4, rng), random_density(4, rng)
    e1, e2 = eof(r1, qubits, fast_cfg).value, eof(r2, qubits, fast_cfg).value
    for lam in (0.25, 0.5, 0.75):
        mix = eof(lam * r1 + (1 - lam) * r2, qubits, fast_cfg).value
        assert mix <= lam * e1 + (1 - lam) * e2 + 2e-3


def test_subalgebra_entropy_pure(rng, qubits):
    assert entropy_of_subalgebra(projector(random_ket(4, rng)), qubits) == pytest.approx(0.0, abs=1e-12)


def test_subalgebra_entropy_identity(rng, qubits):
    cfg = SolverConfig(seed=3)
    rho = random_density(4, rng)
    h = entropy_of_subalgebra(rho, qubits, cfg)
    e = eof(rho, qubits, cfg).value
    assert 0 <= h <= restricted_entropy(rho, qubits) + 1e-12
    assert abs(e - (restricted_entropy(rho, qubits) - h)) <= 1e-9


def test_subalgebra_entropy_maximally_mixed(qubits, fast_cfg):
    # I/4 is a mixture of product basis states, so the minimum is 0 and H = 1
    assert entropy_of_subalgebra(np.eye(4) / 4, qubits, fast_cfg) == pytest.approx(1.0, abs=1e-6)


def test_qutrit_pair(rng):
    layout = FactorLayout.bipartite(2, 3)
    a = basis(6, 0)
    b = (basis(6, 1) + basis(6, 3)) / np.sqrt(2)
    rho = 0.5 * projector(a) + 0.5 * projector(b)
    res = eof(rho, layout, SolverConfig(restarts=4))
    assert 0 <= res.value <= 0.5 + 1e-9
