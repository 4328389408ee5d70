import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eoflab.core import FactorLayout, bell_state, entanglement_entropy, projector, random_density, random_ket, random_unitary
from eoflab.decompositions import (
    PureDecomposition,
    eigen_decomposition,
    from_mixing,
    rank,
    rank2_family,
    to_mixing,
    validate,
)
from eoflab.errors import ConstraintError, DegeneracyError, ParameterError
from eoflab.solver import average_entanglement


def random_isometry(m, r, rng):
    return random_unitary(m, rng)[:, :r]


def test_identity_mixing_gives_eigen_decomposition(rng):
    rho = random_density(4, rng, rank=3)
    d = from_mixing(rho, np.eye(3))
    e = eigen_decomposition(rho)
    assert np.allclose(d.weights, e.weights)
    assert np.allclose(d.weights, np.sort(np.linalg.eigvalsh(rho))[::-1][:3])
    assert validate(d, rho).reconstruction_error <= 1e-12


def test_pure_state_mixing_members_coincide(rng):
    v = random_ket(4, rng)
    d = from_mixing(projector(v), random_isometry(3, 1, rng))
    for k in d.kets:
        assert abs(abs(np.vdot(k, v)) - 1) <= 1e-12


def test_random_isometry_reconstructs(rng):
    rho = random_density(4, rng, rank=2)
    assert rank(rho) == 2
    d = from_mixing(rho, random_isometry(3, 2, rng))
    assert validate(d, rho).reconstruction_error <= 1e-9


def test_mixing_rank_mismatch(rng):
    rho = random_density(4, rng, rank=2)
    with pytest.raises(ParameterError):
        from_mixing(rho, random_isometry(4, 3, rng))
    with pytest.raises(ParameterError):
        from_mixing(rho, np.ones((3, 2)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 4))
def test_mixing_closure(seed, r, extra):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng, rank=r)
    w = random_isometry(r + extra, r, rng)
    d = from_mixing(rho, w)
    assert validate(d, rho).reconstruction_error <= 1e-9
    # a second decomposition reached through the recovered isometry
    w2 = random_unitary(len(d), rng) @ to_mixing(d, rho)
    assert validate(from_mixing(rho, w2), rho).reconstruction_error <= 1e-9


def test_eigen_average_entanglement(rng, qubits):
    rho = random_density(4, rng)
    w, v = np.linalg.eigh(rho)
    direct = sum(w[k] * entanglement_entropy(v[:, k], qubits) for k in range(4))
    assert average_entanglement(from_mixing(rho, np.eye(4)), qubits) == pytest.approx(direct, abs=1e-12)


def bell_pair():
    b1 = bell_state()
    b2 = np.array([1, 0, 0, -1]) / np.sqrt(2)
    return b1, b2


def rho_lambda(psi1, psi2, lam):
    return lam * projector(psi1) + (1 - lam) * projector(psi2)


def test_rank2_two_member_decomposition():
    psi1, psi2 = bell_pair()
    lam = 0.3
    d = rank2_family(psi1, psi2, [0, np.inf], [lam, 1 - lam], lam)
    assert len(d) == 2
    assert validate(d, rho_lambda(psi1, psi2, lam)).ok


def test_rank2_symmetric_pair():
    psi1, psi2 = bell_pair()
    lam, g = 0.4, 0.7 + 0.2j
    # sum a |g|^2 = 1 - lam with sum a = lam
    a = lam / 2
    scale = np.sqrt((1 - lam) / lam) / abs(g)
    gs = np.array([g, -g]) * scale
    d = rank2_family(psi1, psi2, gs, [a, a], lam)
    assert validate(d, rho_lambda(psi1, psi2, lam)).reconstruction_error <= 1e-9


def test_rank2_random_admissible_triple(rng):
    psi1, psi2 = bell_pair()
    lam = 0.35
    # two free gammas, third fixed by sum a g = 0
    g = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a = np.array([0.2, 0.3, 0.5])
    g[2] = -(a[0] * g[0] + a[1] * g[1]) / a[2]
    g *= np.sqrt((1 - lam) / (lam * np.sum(a * abs(g) ** 2)))
    d = rank2_family(psi1, psi2, g, lam * a, lam)
    assert validate(d, rho_lambda(psi1, psi2, lam)).reconstruction_error <= 1e-9


def test_rank2_swapped_convention(rng):
    psi1, psi2 = random_ket(4, rng), random_ket(4, rng)
    lam = 0.6
    # members psi2 + g psi1, sum a = 1 - lam, sum a |g|^2 = lam
    a = (1 - lam) / 2
    g = np.sqrt(lam / (1 - lam))
    d = rank2_family(psi1, psi2, [g, -g], [a, a], lam, swap=True)
    assert validate(d, rho_lambda(psi1, psi2, lam)).reconstruction_error <= 1e-9
    with pytest.raises(ConstraintError):
        rank2_family(psi1, psi2, [g, -g], [a, a], lam, swap=False)


def test_rank2_constraint_violation():
    psi1, psi2 = bell_pair()
    with pytest.raises(ConstraintError):
        rank2_family(psi1, psi2, [1.0, 1.0], [0.25, 0.25], 0.5)


def test_rank2_dependent_kets():
    psi1, _ = bell_pair()
    with pytest.raises(DegeneracyError):
        rank2_family(psi1, 1j * psi1, [0, np.inf], [0.5, 0.5], 0.5)


def test_validate_eigen_decomposition(rng):
    rho = random_density(5, rng)
    rep = validate(eigen_decomposition(rho), rho)
    assert rep.ok
    assert rep.reconstruction_error <= 1e-12 and rep.weight_sum_error <= 1e-12


def test_validate_reports_perturbation(rng):
    rho = random_density(2, rng)
    e = eigen_decomposition(rho)
    w = np.array(e.weights)
    w[0] += 1e-3
    rep = validate(PureDecomposition(w, e.kets), rho)
    assert not rep.ok
    assert rep.weight_sum_error == pytest.approx(1e-3, rel=1e-6)
    assert 1e-4 <= rep.reconstruction_error <= 1e-3 + 1e-12


def test_validate_empty():
    rep = validate(PureDecomposition(np.zeros(0), np.zeros((0, 2))), np.eye(2) / 2)
    assert not rep.ok


def test_decomposition_is_immutable(rng):
    d = eigen_decomposition(random_density(3, rng))
    with pytest.raises(ValueError):
        d.weights[0] = 0.0
