import numpy as np
import pytest

from eoflab.core import FactorLayout, basis, bell_state, projector, random_density, random_ket, random_unitary, werner
from eoflab.decompositions import validate
from eoflab.errors import LayoutError, SizeError
from eoflab.oracle import (
    binary_entropy,
    concurrence,
    grid_eof,
    takagi,
    two_qubit_eof,
    two_qubit_optimal_decomposition,
)
from eoflab.solver import average_entanglement


def test_bell():
    res = two_qubit_eof(projector(bell_state()))
    assert res.concurrence == pytest.approx(1.0, abs=1e-12)
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_product(rng):
    rho = np.kron(random_density(2, rng), random_density(2, rng))
    res = two_qubit_eof(rho)
    assert res.concurrence == pytest.approx(0.0, abs=1e-12)
    assert res.value == 0.0


@pytest.mark.parametrize("p", [0.0, 1 / 3, 0.5, 0.8, 1.0])
def test_werner_closed_form(p):
    c = max(0.0, (3 * p - 1) / 2)
    assert concurrence(werner(p)) == pytest.approx(c, abs=1e-12)
    assert two_qubit_eof(werner(p)).value == pytest.approx(binary_entropy((1 + np.sqrt(1 - c * c)) / 2), abs=1e-12)
    assert 0 <= two_qubit_eof(werner(p)).value <= 1


def test_wrong_dimension():
    with pytest.raises(LayoutError):
        two_qubit_eof(np.eye(6) / 6)


def test_local_unitary_invariance(rng):
    for _ in range(10):
        rho = random_density(4, rng)
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        assert abs(two_qubit_eof(u @ rho @ u.conj().T).value - two_qubit_eof(rho).value) <= 1e-10


def test_takagi(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = a + a.T
    q, s = takagi(a)
    assert np.allclose(q @ np.diag(s) @ q.T, a, atol=1e-12)
    assert np.allclose(q.conj().T @ q, np.eye(4), atol=1e-12)


def test_optimal_decomposition_pure(rng):
    psi = random_ket(4, rng)
    d = two_qubit_optimal_decomposition(projector(psi))
    assert len(d) == 1


def test_optimal_decomposition_flat_entropy(qubits):
    b2 = np.array([0, 1, 1, 0]) / np.sqrt(2)
    rho = 0.7 * projector(bell_state()) + 0.3 * projector(b2)
    d = two_qubit_optimal_decomposition(rho)
    ents = [average_entanglement(type(d)([1.0], [k]), qubits) for k in d.kets]
    assert np.ptp(ents) <= 1e-9
    assert average_entanglement(d, qubits) == pytest.approx(two_qubit_eof(rho).value, abs=1e-9)


def test_optimal_decomposition_werner(qubits):
    rho = werner(0.9)
    d = two_qubit_optimal_decomposition(rho)
    assert average_entanglement(d, qubits) == pytest.approx(two_qubit_eof(rho).value, abs=1e-9)
    assert validate(d, rho).reconstruction_error <= 1e-9


def test_optimal_decomposition_random(rng, qubits):
    for rank in (2, 3, 4, 4, 4):
        rho = random_density(4, rng, rank=rank)
        d = two_qubit_optimal_decomposition(rho)
        assert validate(d, rho).reconstruction_error <= 1e-9
        assert abs(average_entanglement(d, qubits) - two_qubit_eof(rho).value) <= 1e-9


def test_optimal_decomposition_separable(qubits):
    rho = werner(0.2)
    d = two_qubit_optimal_decomposition(rho)
    assert validate(d, rho).reconstruction_error <= 1e-9
    assert average_entanglement(d, qubits) <= 1e-9


def test_grid_pure(rng, qubits):
    psi = random_ket(4, rng)
    from eoflab.core import entanglement_entropy

    for density in (4, 16):
        assert grid_eof(projector(psi), qubits, density).value == pytest.approx(
            entanglement_entropy(psi, qubits), abs=1e-12)


def test_grid_matches_closed_form(rng, qubits):
    for _ in range(5):
        rho = random_density(4, rng, rank=2)
        assert abs(grid_eof(rho, qubits).value - two_qubit_eof(rho).value) <= 5e-3


def test_grid_refinement_monotone(rng, qubits):
    rho = random_density(4, rng, rank=2)
    assert grid_eof(rho, qubits, 64).value <= grid_eof(rho, qubits, 16).value + 1e-12


def test_grid_cost_guard(rng, qubits):
    with pytest.raises(SizeError):
        grid_eof(random_density(4, rng), qubits)
    with pytest.raises(SizeError):
        grid_eof(np.eye(16) / 16, FactorLayout((4, 4), (0,)))


def test_grid_three_qubits(rng):
    layout = FactorLayout((2, 2, 2), (0,))
    rho = random_density(8, rng, rank=2)
    v = grid_eof(rho, layout, 16).value
    assert 0 <= v <= 1
