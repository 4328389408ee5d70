import json

import numpy as np
import pytest

from eoflab.core import FactorLayout, basis, bell_state, projector, random_density, random_ket, restrict_ket
from eoflab.decompositions import eigen_decomposition
from eoflab.errors import CertificateError, DegeneracyError, LayoutError
from eoflab.optimality import (
    GammaSampling,
    _log_pairing,
    check_inequality_12,
    check_pair,
    exact_rank2_eof,
    first_order_necessity,
    pair_margin,
    sigma_of_gamma,
)
from eoflab.oracle import two_qubit_eof, two_qubit_optimal_decomposition
from eoflab.solver import SolverConfig, average_entanglement, eof


@pytest.fixture
def optimal_pair(rng):
    rho = random_density(4, rng)
    d = two_qubit_optimal_decomposition(rho)
    return rho, d


def test_sampling_default_size():
    g = GammaSampling().gammas()
    assert g.size == 16 * 7 + 64
    assert np.array_equal(g, GammaSampling().gammas())


def test_sigma_at_zero(rng, qubits):
    p1, p2 = random_ket(4, rng), random_ket(4, rng)
    s = sigma_of_gamma(p1, p2, qubits, 0)
    s2 = restrict_ket(p2, qubits)
    assert np.allclose(s.sigma, s2) and np.allclose(s.normalized, s2)


def test_sigma_trace_orthogonal(qubits):
    p1, p2 = basis(4, 0), basis(4, 3)
    full = FactorLayout((2, 2), (0, 1))
    for g in (0.5, 1 + 2j, -3j):
        assert sigma_of_gamma(p1, p2, full, g).trace == pytest.approx(1 + abs(g) ** 2)


def test_sigma_matches_combined_ket(rng, qubits):
    p1, p2 = random_ket(4, rng), random_ket(4, rng)
    g = 0.3 + 0.4j
    s = sigma_of_gamma(p1, p2, qubits, g)
    k = np.conj(g) * p1 - p2
    assert s.trace == pytest.approx(abs(g) ** 2 + 1 - 2 * np.real(g * np.vdot(p1, p2)), abs=1e-12)
    assert np.allclose(s.normalized, restrict_ket(k / np.linalg.norm(k), qubits), atol=1e-12)
    assert np.allclose(s.trace * s.normalized, s.sigma, atol=1e-12)


def test_degenerate_pair(rng, qubits):
    p = random_ket(4, rng)
    with pytest.raises(DegeneracyError):
        check_pair(p, np.exp(0.7j) * p, qubits)


def test_optimal_pairs_pass(optimal_pair, qubits):
    rho, d = optimal_pair
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            cert = check_pair(d.kets[i], d.kets[j], qubits)
            assert cert.passed, cert.min_margin
            assert abs(np.trace(cert.sigma12) - np.vdot(d.kets[j], d.kets[i])) <= 1e-10


def test_eigen_pair_fails(optimal_pair, qubits):
    rho, _ = optimal_pair
    e = eigen_decomposition(rho)
    assert average_entanglement(e, qubits) > two_qubit_eof(rho).value + 1e-3
    worst = min(check_pair(e.kets[i], e.kets[j], qubits).min_margin
                for i in range(4) for j in range(i + 1, 4))
    assert worst < -1e-6


def test_certificate_serializes(optimal_pair, qubits):
    _, d = optimal_pair
    cert = check_pair(d.kets[0], d.kets[1], qubits)
    data = json.loads(json.dumps(cert.to_dict()))
    assert len(data["samples"]) == 176
    assert data["verdict"] == "pass"
    assert "not a proof" in data["note"]


def test_singular_sigma1_stays_finite(qubits):
    # a product psi1 makes s1 rank one; the overlap term never has diagonal
    # weight on its kernel, so the log pairing stays finite
    cert = check_pair(basis(4, 0), bell_state(), qubits)
    assert np.all(np.isfinite(cert.margins))
    assert json.dumps(cert.to_dict())


def test_kernel_weight_guard():
    s1 = np.diag([1.0, 0.0])
    assert _log_pairing(s1, np.diag([0.0, 0.5])) == -np.inf
    assert _log_pairing(np.diag([0.5, 0.5]), np.eye(2)) == pytest.approx(-2.0)


def test_first_order_positive(optimal_pair, qubits):
    _, d = optimal_pair
    rep = first_order_necessity(d.kets[0], d.kets[1], qubits, 0.3 + 0.4j)
    assert rep.coefficient >= -1e-6
    assert rep.consistent
    assert rep.coefficient == pytest.approx(rep.predicted, abs=1e-4)


def test_first_order_trivial(optimal_pair, qubits):
    _, d = optimal_pair
    assert first_order_necessity(d.kets[0], d.kets[1], qubits, 0).trivial


def test_first_order_negative(optimal_pair, qubits):
    rho, _ = optimal_pair
    e = eigen_decomposition(rho)
    cert = check_pair(e.kets[0], e.kets[1], qubits)
    rep = first_order_necessity(e.kets[0], e.kets[1], qubits, cert.worst_gamma)
    assert rep.coefficient < 0
    assert rep.consistent
    assert pair_margin(e.kets[0], e.kets[1], qubits, cert.worst_gamma) == pytest.approx(cert.min_margin)


def test_first_order_eps_range(optimal_pair, qubits):
    _, d = optimal_pair
    with pytest.raises(ValueError):
        first_order_necessity(d.kets[0], d.kets[1], qubits, 1.0, eps=(0.5,))


def test_exact_rank2_endpoints(optimal_pair, qubits):
    _, d = optimal_pair
    p1, p2 = d.kets[0], d.kets[1]
    cert = check_pair(p1, p2, qubits)
    assert exact_rank2_eof(p1, p2, qubits, 1.0, certificate=cert) == cert.entropy1
    assert exact_rank2_eof(p1, p2, qubits, 0.0, certificate=cert) == cert.entropy2


def test_exact_rank2_matches_solver(optimal_pair, qubits):
    _, d = optimal_pair
    p1, p2 = d.kets[0], d.kets[1]
    rho = 0.5 * projector(p1) + 0.5 * projector(p2)
    assert abs(exact_rank2_eof(p1, p2, qubits, 0.5) - eof(rho, qubits, SolverConfig(restarts=4)).value) <= 5e-3


def test_exact_rank2_refuses_failed_pair(optimal_pair, qubits):
    rho, _ = optimal_pair
    e = eigen_decomposition(rho)
    bad = min(((i, j) for i in range(4) for j in range(i + 1, 4)),
              key=lambda ij: check_pair(e.kets[ij[0]], e.kets[ij[1]], qubits).min_margin)
    with pytest.raises(CertificateError):
        exact_rank2_eof(e.kets[bad[0]], e.kets[bad[1]], qubits, 0.5)


FOUR = FactorLayout((2, 2, 2, 2), (0, 2))


def test_inequality_12_product(rng):
    psi = np.kron(random_ket(4, rng), random_ket(4, rng))
    rep = check_inequality_12(psi, FOUR)
    assert abs(rep.gap) <= 1e-10 and rep.holds


def test_inequality_12_block_product():
    psi = np.kron(bell_state(), bell_state())
    rep = check_inequality_12(psi, FOUR)
    assert rep.schmidt.rank == 1
    assert rep.gap == pytest.approx(0.0, abs=1e-10)
    assert rep.lhs == pytest.approx(2.0)


def test_inequality_12_random(rng):
    rep = check_inequality_12(random_ket(16, rng), FOUR)
    assert np.isfinite(rep.gap)
    assert set(rep.to_dict()) >= {"lhs", "rhs", "gap", "holds"}


def test_inequality_12_layout():
    with pytest.raises(LayoutError):
        check_inequality_12(bell_state(), FactorLayout.bipartite(2, 2))
