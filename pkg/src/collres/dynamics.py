"""Evolution under Poissonian collisions: trajectories, master equation, steady states."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from .errors import DegenerateSpectrumError, DomainError
from .linalg import as_density_matrix, compose, full_dephasing

# condition number above which the bordered steady-state solve falls back to SVD
COND_FALLBACK = 1e12


def _superop(s):
    return getattr(s, "superop", s)


def gibbs_state(energies, beta):
    """Diagonal thermal state exp(-beta e_j)/Z."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min()))
    return np.diag(w / w.sum()).astype(complex)


def dephased(s):
    """Collision followed by full dephasing."""
    s = _superop(s)
    return compose(full_dephasing(s.dim), s)


def iterate_dephased(s, rho0, n):
    """States (D S)^k rho0 for k = 1..n."""
    diag = getattr(s, "diagnostics", None)
    if diag is not None and diag.trace_defect > 1e-6:
        raise DomainError(f"map trace defect {diag.trace_defect:.3e} exceeds 1e-6")
    for note in getattr(s, "warnings", ()):
        warnings.warn(note, stacklevel=2)
    ds = dephased(s)
    d = ds.dim
    ds = ds.matrix
    v = np.asarray(rho0, dtype=complex).reshape(-1)
    out = []
    for _ in range(n):
        v = ds @ v
        out.append(v.reshape(d, d))
    return out


@dataclass(frozen=True)
class Liouvillian:
    """Generator -(i/hbar)[H_S, .] + gamma (S - 1) as a d^2 x d^2 matrix."""

    generator: np.ndarray
    gamma: float
    hbar: float
    energies: np.ndarray

    @property
    def dim(self):
        return self.energies.size

    def apply(self, rho):
        d = self.dim
        return (self.generator @ np.asarray(rho, dtype=complex).reshape(d * d)).reshape(d, d)


def commutator_generator(energies, hbar=1.0):
    e = np.asarray(energies, dtype=float)
    return np.diag((-1j / hbar) * np.subtract.outer(e, e).reshape(-1))


def liouvillian(s, model, gamma):
    if gamma < 0:
        raise DomainError("gamma must be non-negative")
    m = _superop(s).matrix
    gen = commutator_generator(model.energies, model.hbar) + gamma * (m - np.eye(m.shape[0]))
    return Liouvillian(gen, float(gamma), model.hbar, np.asarray(model.energies))


@dataclass(frozen=True)
class SteadyStateSolution:
    state: np.ndarray
    residual: float
    condition: float
    method: str
    min_eigenvalue: float


def steady_state(lv, tol=1e-10):
    """Null vector of the generator normalized to unit trace.

    The last row of the (singular) generator, a population row, is replaced by
    the trace functional. If the bordered system is ill-conditioned the
    smallest right singular vector of the generator is used instead.
    """
    if not lv.gamma > 0:
        raise DomainError("steady state requires gamma > 0")
    d = lv.dim
    n = d * d
    trace_row = np.eye(d).reshape(-1)
    a = lv.generator.copy()
    a[-1, :] = trace_row
    rhs = np.zeros(n, dtype=complex)
    rhs[-1] = 1.0
    cond = np.linalg.cond(a)
    if np.isfinite(cond) and cond < COND_FALLBACK:
        v = np.linalg.solve(a, rhs)
        method = "bordered"
    else:
        _, sv, vh = np.linalg.svd(lv.generator)
        if n > 1 and sv[-2] <= 1e-12 * sv[0]:
            raise DegenerateSpectrumError("generator has more than one stationary direction")
        v = vh[-1].conj()
        v = v / (trace_row @ v)
        method = "svd"
    rho = v.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.max(np.abs(lv.generator @ rho.reshape(-1))))
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -1e-8:
        warnings.warn(f"steady state has negative eigenvalue {lo:.3e}", stacklevel=2)
    if residual > tol:
        warnings.warn(f"steady-state residual {residual:.3e} exceeds {tol:.1e}", stacklevel=2)
    return SteadyStateSolution(rho, residual, float(cond), method, lo)


def evolve_master(lv, rho0, t_grid):
    """rho(t) = exp(t L) rho0 on an ascending time grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and (t_grid[0] < 0 or np.any(np.diff(t_grid) < 0)):
        raise DomainError("t_grid must be ascending and start at t >= 0")
    d = lv.dim
    v0 = np.asarray(rho0, dtype=complex).reshape(-1)
    out = []
    for t in t_grid:
        v = v0 if t == 0 else linalg.expm(t * lv.generator) @ v0
        if not np.all(np.isfinite(v)):
            v = _integrate(lv.generator, v0, t)
        out.append(v.reshape(d, d))
    return out


def _integrate(gen, v0, t):
    sol = integrate.solve_ivp(lambda _, y: gen @ y, (0.0, t), v0, method="RK45", rtol=1e-10, atol=1e-12)
    return sol.y[:, -1]


@dataclass(frozen=True)
class TrajectoryRecord:
    sample_times: np.ndarray
    states: np.ndarray
    collision_times: np.ndarray
    on_grid: np.ndarray
    seed: int
    index: int

    @property
    def grid_states(self):
        return self.states[self.on_grid]

    def collisions_before(self, times):
        return np.searchsorted(self.collision_times, times, side="right")


def trajectory_rng(seed, index=0):
    """Counter-based generator for trajectory ``index`` of base ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def sample_trajectory(s, model, gamma, t_max, sample_dt, seed, rho0=None, renormalize=False, index=0):
    """One Poissonian realization: free evolution between collisions, ``s`` at each collision.

    States are recorded on the grid k*sample_dt (k = 0..floor(t_max/sample_dt))
    and right after every collision.
    """
    if gamma < 0 or not t_max > 0 or not sample_dt > 0:
        raise DomainError("need gamma >= 0, t_max > 0, sample_dt > 0")
    m = _superop(s).matrix
    e = np.asarray(model.energies, dtype=float)
    d = e.size
    freq = (-1j / model.hbar) * np.subtract.outer(e, e).reshape(-1)
    if rho0 is None:
        rho0 = np.zeros((d, d), dtype=complex)
        rho0[-1, -1] = 1.0
    v = np.asarray(as_density_matrix(rho0)).reshape(-1).copy()

    rng = trajectory_rng(seed, index)
    n_grid = int(np.floor(t_max / sample_dt + 1e-9))
    grid = sample_dt * np.arange(n_grid + 1)

    times, states, flags, hits = [], [], [], []
    t = 0.0
    gi = 0
    next_hit = t + (-np.log1p(-rng.random()) / gamma if gamma > 0 else np.inf)
    while True:
        # record grid points reached before the next collision
        while gi <= n_grid and grid[gi] <= next_hit:
            states.append((np.exp(freq * (grid[gi] - t)) * v).reshape(d, d))
            times.append(grid[gi])
            flags.append(True)
            gi += 1
        if next_hit > t_max:
            break
        v = m @ (np.exp(freq * (next_hit - t)) * v)
        if renormalize:
            v = v / np.trace(v.reshape(d, d))
        t = next_hit
        hits.append(t)
        states.append(v.reshape(d, d))
        times.append(t)
        flags.append(False)
        next_hit = t - np.log1p(-rng.random()) / gamma
    return TrajectoryRecord(
        np.array(times), np.array(states), np.array(hits), np.array(flags), seed, index
    )


def _grid_run(args):
    s, model, gamma, t_max, sample_dt, seed, rho0, renormalize, index = args
    rec = sample_trajectory(s, model, gamma, t_max, sample_dt, seed, rho0, renormalize, index)
    grid_t = rec.sample_times[rec.on_grid]
    return rec.grid_states, rec.collisions_before(grid_t)


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    mean_collisions: np.ndarray
    trajectories: int


def ensemble(s, model, gamma, t_max, sample_dt, seed, trajectories, rho0=None, renormalize=False, workers=1):
    """Mean and standard error of grid states over ``trajectories`` seeded runs.

    Trajectory i uses stream (seed, i); the reduction is a sum in index order,
    so the result does not depend on ``workers``.
    """
    s = _superop(s)
    jobs = [(s, model, gamma, t_max, sample_dt, seed, rho0, renormalize, i) for i in range(trajectories)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_grid_run, jobs, chunksize=max(1, trajectories // (4 * workers))))
    else:
        runs = [_grid_run(job) for job in jobs]
    states = np.stack([r[0] for r in runs])
    counts = np.stack([r[1] for r in runs]).astype(float)
    n = states.shape[0]
    mean = states.sum(axis=0) / n
    # entrywise standard error, real and imaginary parts separately
    dev = states - mean
    ddof = max(n - 1, 1)
    stderr = np.sqrt((dev.real**2).sum(axis=0) / ddof / n) + 1j * np.sqrt((dev.imag**2).sum(axis=0) / ddof / n)
    n_grid = states.shape[1]
    return EnsembleResult(sample_dt * np.arange(n_grid), mean, stderr, counts.sum(axis=0) / n, n)


@dataclass(frozen=True)
class PerturbativeSolution:
    rho0: np.ndarray
    rho1: np.ndarray
    order: int = 1


def perturbative_steady(s, model, beta, db_tol=1e-6):
    """Zeroth- and first-order terms of the small-gamma expansion of the steady state.

    Coherences: rho1[j, k] = -(i hbar / D_jk) sum_j' T[j', j', j, k] rho0[j', j'].
    Populations of rho1 solve the population balance driven by the
    coherences, closed by trace(rho1) = 0.
    """
    t = _superop(s).tensor
    e = np.asarray(model.energies, dtype=float)
    d = e.size
    gaps = np.subtract.outer(e, e)
    off = ~np.eye(d, dtype=bool)
    if np.any(np.abs(gaps[off]) == 0):
        raise DegenerateSpectrumError("perturbative solution needs a non-degenerate spectrum")
    idx = np.arange(d)
    pops = t[idx[:, None], idx[:, None], idx[None, :], idx[None, :]].real
    w = np.exp(-beta * (e - e.min()))
    flow = w[:, None] * pops
    if np.max(np.abs(flow - flow.T)) > db_tol:
        raise DomainError("map population block violates detailed balance")

    rho0 = gibbs_state(e, beta)
    p0 = np.diag(rho0).real
    rho1 = np.zeros((d, d), dtype=complex)
    feed = np.einsum("aajk,a->jk", t, p0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho1[off] = (-1j * model.hbar / gaps[off]) * feed[off]

    # sum_{j'k'} T[j',k',j,j] rho1[j',k'] = rho1[j,j]
    drive = np.einsum("abjj,ab->j", t * off[:, :, None, None], rho1)
    a = pops.T - np.eye(d)
    rhs = -drive
    a[-1, :] = 1.0
    rhs[-1] = 0.0
    rho1[idx, idx] = np.linalg.solve(a, rhs)
    return PerturbativeSolution(rho0, rho1)


def coherence_estimate(gamma, omega, beta, m, dx, s_const=0.01):
    """Order-of-magnitude |rho_01|: s^2 (gamma/omega) exp(-beta m dx^2 omega^2 / 2)."""
    for name, val in (("gamma", gamma), ("omega", omega), ("beta", beta), ("m", m), ("dx", dx), ("s_const", s_const)):
        if not np.all(np.asarray(val) > 0):
            raise DomainError(f"{name} must be positive")
    return s_const**2 * gamma / omega * np.exp(-beta * m * dx**2 * omega**2 / 2)
