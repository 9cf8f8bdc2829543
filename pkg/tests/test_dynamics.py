from types import SimpleNamespace

import numpy as np
import pytest
from scipy import linalg as sla

from collres.dynamics import (
    Liouvillian,
    coherence_estimate,
    dephased,
    ensemble,
    evolve_master,
    gibbs_state,
    iterate_dephased,
    liouvillian,
    perturbative_steady,
    sample_trajectory,
    steady_state,
    trajectory_rng,
)
from collres.errors import DegenerateSpectrumError, DomainError
from collres.linalg import Superoperator, full_dephasing
from collres.scattering import ScatteringModel

from conftest import BETA, GIBBS_GROUND, random_density

EXCITED = np.diag([0.0, 1.0]).astype(complex)


def test_gibbs_state_examples():
    g = gibbs_state([-0.3, 0.3], BETA)
    assert g[0, 0].real == pytest.approx(0.51499550161941, abs=1e-13)
    assert g[0, 0] == pytest.approx(GIBBS_GROUND, abs=1e-15)
    assert np.trace(g) == pytest.approx(1)
    assert np.allclose(gibbs_state([0, 0, 0], 3.0), np.eye(3) / 3)
    # shift invariance, and no overflow for large beta * e
    assert np.allclose(gibbs_state([1000.0, 1000.6], BETA), g)
    with pytest.raises(DomainError):
        gibbs_state([0, 1], 0.0)


def test_dephased_composite_fixes_gibbs(approx_map, model):
    ds = dephased(approx_map)
    g = gibbs_state(model.energies, BETA)
    assert np.max(np.abs(ds(g) - g)) < 1e-12
    out = ds(np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]]))
    assert out[0, 1] == 0 and out[1, 0] == 0


def test_iterate_dephased_reference_maps():
    rho = random_density(np.random.default_rng(0), 2)
    states = iterate_dephased(Superoperator.identity(2), rho, 3)
    assert len(states) == 3
    for s in states:
        assert np.allclose(s, np.diag(np.diag(rho)))
    g = gibbs_state([-0.3, 0.3], BETA)
    p = 0.1
    chain = np.zeros((2, 2, 2, 2), dtype=complex)
    chain[0, 0, 0, 0], chain[0, 0, 1, 1] = 1 - p * np.exp(-0.06), p * np.exp(-0.06)
    chain[1, 1, 0, 0], chain[1, 1, 1, 1] = p, 1 - p
    out = iterate_dephased(Superoperator(chain), g, 50)[-1]
    assert np.max(np.abs(out - g)) < 1e-15


def test_iterate_dephased_converges_with_exact_backend(exact_map, model):
    g = gibbs_state(model.energies, BETA)
    rng = np.random.default_rng(7)
    for _ in range(3):
        out = iterate_dephased(exact_map, random_density(rng, 2), 200)[-1]
        assert np.max(np.abs(out - g)) < 1e-8


def test_liouvillian_without_collisions(approx_map, model):
    lv = liouvillian(approx_map, model, 0.0)
    ev = np.sort_complex(np.linalg.eigvals(lv.generator))
    assert np.allclose(ev, [-0.6j, 0, 0, 0.6j], atol=1e-14)
    rho = np.array([[0.4, 0.1j], [-0.1j, 0.6]])
    assert np.allclose(lv.apply(rho), -1j * (np.diag(model.energies) @ rho - rho @ np.diag(model.energies)))
    with pytest.raises(DomainError):
        liouvillian(approx_map, model, -1.0)


@pytest.mark.parametrize("gamma", [0.1, 1.0, 5.0, 10.0])
def test_steady_state_residual(approx_map, model, gamma):
    sol = steady_state(liouvillian(approx_map, model, gamma))
    assert sol.residual <= 1e-10
    assert np.trace(sol.state) == pytest.approx(1, abs=1e-14)
    assert np.allclose(sol.state, sol.state.conj().T)
    assert sol.min_eigenvalue > 0 and sol.method == "bordered"


def test_steady_state_of_dephased_map_is_gibbs(approx_map, model):
    sol = steady_state(liouvillian(dephased(approx_map), model, 10.0))
    assert np.max(np.abs(sol.state - gibbs_state(model.energies, BETA))) < 1e-12
    with pytest.raises(DomainError):
        steady_state(liouvillian(approx_map, model, 0.0))


def test_steady_state_svd_fallback_and_degeneracy():
    # two decoupled absorbing levels: null space is two-dimensional
    e = np.array([0.0, 1.0])
    lv = Liouvillian(np.diag([0, -1j, 1j, 0]).astype(complex), 1.0, 1.0, e)
    with pytest.raises(DegenerateSpectrumError):
        steady_state(lv)


def test_evolve_master_basics(approx_map, model):
    lv = liouvillian(approx_map, model, 2.0)
    rho = random_density(np.random.default_rng(3), 2)
    out = evolve_master(lv, rho, [0.0, 0.5, 1000.0])
    assert np.array_equal(out[0], rho)
    assert np.allclose(out[1], (sla.expm(0.5 * lv.generator) @ rho.reshape(-1)).reshape(2, 2))
    sol = steady_state(lv)
    assert np.max(np.abs(out[2] - sol.state)) < 1e-10
    free = evolve_master(liouvillian(approx_map, model, 0.0), rho, [1.3])[0]
    assert np.allclose(np.diag(free), np.diag(rho))
    assert free[0, 1] == pytest.approx(rho[0, 1] * np.exp(0.6j * 1.3))
    with pytest.raises(DomainError):
        evolve_master(lv, rho, [1.0, 0.5])


def test_trajectory_without_collisions(approx_map, model):
    rec = sample_trajectory(approx_map, model, 0.0, 2.0, 0.5, seed=1, rho0=np.full((2, 2), 0.5))
    assert rec.collision_times.size == 0
    assert np.allclose(rec.states[:, 0, 0], 0.5) and np.allclose(rec.states[:, 1, 1], 0.5)
    assert np.allclose(rec.sample_times, [0, 0.5, 1, 1.5, 2])
    assert np.allclose(rec.states[:, 0, 1], 0.5 * np.exp(0.6j * rec.sample_times))


def test_trajectory_is_seed_deterministic(approx_map, model):
    a = sample_trajectory(approx_map, model, 5.0, 3.0, 0.1, seed=11)
    b = sample_trajectory(approx_map, model, 5.0, 3.0, 0.1, seed=11)
    c = sample_trajectory(approx_map, model, 5.0, 3.0, 0.1, seed=12)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.collision_times, b.collision_times)
    assert not np.array_equal(a.collision_times, c.collision_times)
    assert trajectory_rng(3, 0).random() != trajectory_rng(3, 1).random()
    # post-collision entries interleave with the grid, in time order
    assert np.all(np.diff(a.sample_times) >= 0)
    assert a.on_grid.sum() == 31


def test_mean_collision_count_is_poisson(approx_map, model):
    t_max, gamma, n = 2.0, 3.0, 10000
    counts = np.array(
        [sample_trajectory(approx_map, model, gamma, t_max, 1.0, 5, index=i).collision_times.size for i in range(n)]
    )
    se = counts.std(ddof=1) / np.sqrt(n)
    assert abs(counts.mean() - gamma * t_max) < 3 * se
    assert counts.var(ddof=1) == pytest.approx(gamma * t_max, rel=0.05)


def test_ensemble_matches_master_equation(approx_map, model):
    gamma, dt = 5.0, 0.1
    res = ensemble(approx_map, model, gamma, 5.0, dt, seed=0, trajectories=400)
    lv = liouvillian(approx_map, model, gamma)
    for t in (0.5, 2.0, 5.0):
        i = int(round(t / dt))
        ref = evolve_master(lv, EXCITED, [t])[0]
        diff = res.mean[i] - ref
        assert np.all(np.abs(diff.real) <= 3 * res.stderr[i].real + 1e-12)
        assert np.all(np.abs(diff.imag) <= 3 * res.stderr[i].imag + 1e-12)
    assert res.mean_collisions[-1] == pytest.approx(gamma * 5.0, rel=0.05)


def test_ensemble_independent_of_workers(approx_map, model):
    a = ensemble(approx_map, model, 5.0, 1.0, 0.1, seed=2, trajectories=20)
    b = ensemble(approx_map, model, 5.0, 1.0, 0.1, seed=2, trajectories=20, workers=2)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)


def test_perturbative_zero_without_coherence_feed(model):
    # population-only map: nothing feeds the coherences at first order
    t = full_dephasing(2).tensor.copy()
    p = 0.1
    t[0, 0, 0, 0], t[0, 0, 1, 1] = 1 - p * np.exp(-0.06), p * np.exp(-0.06)
    t[1, 1, 0, 0], t[1, 1, 1, 1] = p, 1 - p
    sol = perturbative_steady(Superoperator(t), model, BETA)
    assert np.allclose(sol.rho0, gibbs_state(model.energies, BETA))
    assert np.max(np.abs(sol.rho1)) < 1e-15


def test_perturbative_first_order_term(approx_map, model):
    sol = perturbative_steady(approx_map, model, BETA)
    assert np.allclose(sol.rho0, gibbs_state(model.energies, BETA), atol=1e-15)
    assert abs(np.trace(sol.rho1)) < 1e-15
    assert np.allclose(sol.rho1, sol.rho1.conj().T)
    # central difference of the exact steady state at small gamma
    h = 1e-3
    rp = steady_state(liouvillian(approx_map, model, 2 * h)).state
    rm = steady_state(liouvillian(approx_map, model, h)).state
    slope = (rp - rm) / h
    assert np.max(np.abs(slope - sol.rho1)) / np.max(np.abs(sol.rho1)) < 0.01


def test_perturbative_rejects_bad_maps(approx_map):
    degenerate = SimpleNamespace(energies=np.array([0.0, 0.0]), hbar=1.0)
    with pytest.raises(DegenerateSpectrumError):
        perturbative_steady(approx_map, degenerate, BETA)
    chain = Superoperator.identity(2).tensor.copy()
    chain[0, 0, 0, 0], chain[0, 0, 1, 1] = 0.5, 0.5
    with pytest.raises(DomainError):
        perturbative_steady(Superoperator(chain), ScatteringModel(np.array([-0.3, 0.3]), np.eye(2), 1, 0.1, 1), BETA)


def test_coherence_estimate():
    val = coherence_estimate(5.0, 0.6, 0.1, 0.1, 1.0)
    assert val == pytest.approx(8.318346825236978e-4, rel=1e-14)
    assert coherence_estimate(10.0, 0.6, 0.1, 0.1, 1.0) == pytest.approx(2 * val, rel=1e-15)
    ratio = coherence_estimate(5.0, 0.6, 0.1, 0.1, 10.0) / val
    assert ratio == pytest.approx(0.8367750517418029, rel=1e-13)
    assert coherence_estimate(5.0, 0.6, 0.1, 0.1, 1e3) < 1e-100
    with pytest.raises(DomainError):
        coherence_estimate(5.0, 0.0, 0.1, 0.1, 1.0)
