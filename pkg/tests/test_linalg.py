import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collres.errors import DimensionError, DomainError
from collres.linalg import (
    Superoperator,
    apply_superop,
    as_density_matrix,
    as_hermitian,
    choi_matrix,
    choi_min_eigenvalue,
    compose,
    eig_hermitian,
    full_dephasing,
    matrix_function,
    unitary_superop,
)
from collres.scattering import PAULI_X, PAULI_Y, PAULI_Z

from conftest import random_density, random_hermitian


def test_eig_identity_and_sigma_z():
    w, u = eig_hermitian(np.eye(2))
    assert np.allclose(w, [1, 1])
    assert np.allclose(u.conj().T @ u, np.eye(2))
    w, _ = eig_hermitian(PAULI_Z)
    assert np.array_equal(w, [-1.0, 1.0])


def test_eig_qubit_total_hamiltonian():
    # roots of the characteristic polynomial: +-sqrt(0.3^2 + 2)
    w, _ = eig_hermitian(0.3 * PAULI_Z + PAULI_X + PAULI_Y)
    assert w == pytest.approx([-1.445683229480096, 1.445683229480096], abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_eig_reconstruction(d, seed, scale):
    h = random_hermitian(np.random.default_rng(seed), d, scale)
    w, u = eig_hermitian(h)
    assert np.all(np.diff(w) >= 0)
    err = np.max(np.abs((u * w) @ u.conj().T - h))
    assert err <= 1e-12 * max(1.0, np.max(np.abs(h)))


def test_hermitian_symmetrization_and_rejection():
    h = as_hermitian(np.array([[1, 2 + 1e-13], [2, 3]]))
    assert h[0, 1] == h[1, 0].conjugate()
    with pytest.raises(DomainError):
        as_hermitian(np.array([[1, 2], [0, 1]]))
    with pytest.raises(DimensionError):
        as_hermitian(np.ones((2, 3)))
    with pytest.raises(ValueError):
        h[0, 0] = 5


def test_density_matrix_validation():
    as_density_matrix(np.diag([0.25, 0.75]))
    with pytest.raises(DomainError):
        as_density_matrix(np.diag([0.5, 0.6]))
    with pytest.raises(DomainError):
        as_density_matrix(np.diag([1.5, -0.5]))


def test_matrix_function_examples():
    h = 0.3 * PAULI_Z + PAULI_X + PAULI_Y
    assert np.allclose(matrix_function(h, lambda x: x), h, atol=1e-14)
    f = matrix_function(PAULI_Z, lambda x: np.exp(1j * x))
    assert np.allclose(f, np.diag([np.exp(1j), np.exp(-1j)]), atol=1e-15)
    # K for E = 2, m = 0.1: scalar sqrt(0.2 (2 -+ 1.445683)) on each eigenvalue
    k = matrix_function(h, lambda lam: np.sqrt(2 * 0.1 * (2.0 - lam)))
    assert np.allclose(k, k.conj().T)
    assert np.linalg.eigvalsh(k) == pytest.approx([0.3329614904219117, 0.8301425455281878], abs=1e-13)


def test_matrix_function_rejects_non_finite():
    with pytest.raises(DomainError):
        matrix_function(PAULI_Z, lambda x: np.where(x > 0, 1.0, np.inf))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_matrix_function_multiplicative(seed, a, b):
    h = random_hermitian(np.random.default_rng(seed), 4)
    lhs = matrix_function(h, lambda x: np.exp(1j * (a + b) * x))
    rhs = matrix_function(h, lambda x: np.exp(1j * a * x)) @ matrix_function(h, lambda x: np.exp(1j * b * x))
    assert np.max(np.abs(lhs - rhs)) <= 1e-11


def test_apply_identity_and_dephasing():
    rho = random_density(np.random.default_rng(1), 3)
    assert np.allclose(apply_superop(Superoperator.identity(3), rho), rho)
    assert np.allclose(apply_superop(full_dephasing(3), rho), np.diag(np.diag(rho)))
    with pytest.raises(DimensionError):
        apply_superop(Superoperator.identity(2), rho)


def test_unitary_superop_half_period_flips_coherence():
    # phase exp(-i 0.6 pi/0.6) = -1
    u = unitary_superop(np.diag([0.3, -0.3]), np.pi / 0.6)
    rho = np.array([[0.5, 0.2 + 0.1j], [0.2 - 0.1j, 0.5]])
    out = apply_superop(u, rho)
    assert out[0, 1] == pytest.approx(-rho[0, 1], abs=1e-15)
    assert np.array_equal(np.diag(out), np.diag(rho))


def test_unitary_superop_zero_time_and_compose():
    e = np.array([-0.3, 0.3])
    assert np.array_equal(unitary_superop(e, 0.0).tensor, Superoperator.identity(2).tensor)
    s = unitary_superop(e, 1.3)
    assert np.allclose(compose(s, Superoperator.identity(2)).tensor, s.tensor)
    # applies right operand first
    twice = compose(unitary_superop(e, 0.4), unitary_superop(e, 0.9))
    assert np.allclose(twice.tensor, unitary_superop(e, 1.3).tensor)
    with pytest.raises(DomainError):
        unitary_superop(e, -1.0)


@settings(max_examples=30, deadline=None)
@given(tau=st.floats(0, 100))
def test_unitary_superop_keeps_populations(tau):
    rho = random_density(np.random.default_rng(3), 3)
    out = unitary_superop(np.array([-1.0, 0.2, 0.7]), tau)(rho)
    assert np.array_equal(np.diag(out), np.diag(rho))


def test_superop_linearity_and_views_agree():
    rng = np.random.default_rng(7)
    d = 3
    t = rng.normal(size=(d,) * 4) + 1j * rng.normal(size=(d,) * 4)
    s = Superoperator(t)
    r1, r2 = random_density(rng, d), random_density(rng, d)
    a, b = 0.3 - 0.2j, 1.7
    assert np.allclose(s(a * r1 + b * r2), a * s(r1) + b * s(r2), atol=1e-13)
    via_matrix = (s.matrix @ r1.reshape(-1)).reshape(d, d)
    assert np.allclose(via_matrix, s(r1), atol=1e-14)
    assert np.array_equal(Superoperator.from_matrix(s.matrix).tensor, s.tensor)


def _choi_direct(s):
    # sum_{jk} |j><k| (x) S(|j><k|), built from the action on matrix units
    d = s.dim
    c = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            unit = np.zeros((d, d))
            unit[j, k] = 1
            c += np.kron(unit, s(unit))
    return c


def test_choi_examples():
    c = choi_matrix(Superoperator.identity(2))
    assert np.allclose(np.linalg.eigvalsh(c), [0, 0, 0, 2])
    c = choi_matrix(full_dephasing(2))
    assert np.allclose(c, np.diag([1, 0, 0, 1]))
    assert np.allclose(choi_matrix(full_dephasing(3)), _choi_direct(full_dephasing(3)))
    u = unitary_superop(np.array([-0.4, 0.1, 0.9]), 2.1)
    assert np.allclose(np.linalg.eigvalsh(choi_matrix(u)), [0] * 8 + [3], atol=1e-12)
    assert np.allclose(choi_matrix(u), _choi_direct(u))


def test_choi_positivity_of_free_evolution_and_dephasing():
    for tau in (0.0, 0.3, 7.0):
        assert choi_min_eigenvalue(unitary_superop(np.array([-0.3, 0.3]), tau)) >= -1e-12
    assert choi_min_eigenvalue(full_dephasing(4)) >= -1e-12


def test_full_dephasing_properties():
    dph = full_dephasing(3)
    rho = random_density(np.random.default_rng(5), 3)
    once = dph(rho)
    assert np.array_equal(dph(once), once)
    assert np.trace(once) == pytest.approx(np.trace(rho), abs=0)
    diag = np.diag([0.2, 0.3, 0.5]).astype(complex)
    assert np.array_equal(dph(diag), diag)
