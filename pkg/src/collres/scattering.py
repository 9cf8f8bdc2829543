"""Energy-dependent scattering amplitudes of a particle crossing a square barrier.

The particle moves in one dimension and couples to the system through
``V f(x)`` with ``f`` the indicator of a barrier of length ``L`` centred at
the origin. Channels are the eigenstates |j> of the system Hamiltonian.
``transmission[..., jp, j]`` is the amplitude for entering in channel ``j``
and leaving forward in channel ``jp``; ``reflection`` likewise for leaving
backward. Both are flux-normalized and use plane waves ``exp(+-i k x)``
referenced to the barrier centre, so a vanishing coupling gives the identity.

Two backends share this interface:

* ``approx_amplitudes``: high-energy form without reflection,
  ``s+ = diag(exp(-i L k/2)) exp(i L K(E)) diag(exp(-i L k/2))`` with
  ``K(E) = sqrt(2m(E - H_tot))/hbar``, and the identity below ``e_max``.
* ``exact_amplitudes``: wavefunction and derivative matching at both barrier
  edges, closed channels included as evanescent waves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ScatteringSolverError
from .linalg import as_hermitian, eig_hermitian

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# matching systems whose condition number exceeds this are treated as singular
SINGULAR_COND = 1e13


@dataclass(frozen=True)
class ScatteringModel:
    """System energies (ascending), coupling V in that eigenbasis, barrier and particle."""

    energies: np.ndarray
    coupling: np.ndarray
    barrier_length: float = 1.0
    mass: float = 0.1
    hbar: float = 1.0
    h_tot_eigvals: np.ndarray = field(init=False, repr=False, compare=False)
    h_tot_eigvecs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.ndim != 1 or e.size < 1:
            raise DomainError("energies must be a non-empty 1-D array")
        if np.any(np.diff(e) <= 0):
            raise DomainError("energies must be strictly ascending (non-degenerate spectrum)")
        v = np.asarray(as_hermitian(self.coupling))
        if v.shape != (e.size, e.size):
            raise DomainError(f"coupling shape {v.shape} does not match {e.size} energies")
        for name in ("barrier_length", "mass", "hbar"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "coupling", v)
        w, u = eig_hermitian(np.diag(e) + v)
        object.__setattr__(self, "h_tot_eigvals", w)
        object.__setattr__(self, "h_tot_eigvecs", u)

    @property
    def dim(self):
        return self.energies.size

    @property
    def h_tot(self):
        return np.diag(self.energies) + self.coupling

    @property
    def gaps(self):
        """Matrix of Bohr energies Delta[j, k] = e_j - e_k."""
        return np.subtract.outer(self.energies, self.energies)

    @property
    def e_max(self):
        return float(max(self.energies[-1], self.h_tot_eigvals[-1]))


def qubit_model(delta=0.6, lam=1.0, barrier_length=1.0, mass=0.1, hbar=1.0):
    """Qubit with H_S = (delta/2) sigma_z and V = lam (sigma_x + sigma_y).

    The returned model uses the ascending eigenbasis (ground state first), in
    which sigma_z -> -sigma_z and sigma_y -> -sigma_y.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    swap = np.array([[0, 1], [1, 0]])
    v = lam * swap @ (PAULI_X + PAULI_Y) @ swap
    return ScatteringModel(np.array([-delta / 2, delta / 2]), v, barrier_length, mass, hbar)


@dataclass(frozen=True)
class AmplitudeSet:
    """Amplitudes at one energy or a batch of energies (leading axes of ``energy``)."""

    energy: np.ndarray
    transmission: np.ndarray
    reflection: np.ndarray
    open_channels: np.ndarray


def channel_wavevector(model, energy, j):
    """k_j = sqrt(2 m (E - e_j))/hbar for an open channel."""
    ke = energy - model.energies[j]
    if np.any(ke < 0):
        raise DomainError(f"channel {j} is closed at E = {energy!r}")
    return np.sqrt(2 * model.mass * ke) / model.hbar


def _wavevectors(model, energy):
    ke = np.asarray(energy, dtype=float)[..., None] - model.energies
    return np.sqrt(2 * model.mass * np.abs(ke)) / model.hbar, ke > 0


def approx_amplitudes(model, energy):
    """High-energy amplitudes: no reflection, identity below ``e_max``."""
    energy = np.asarray(energy, dtype=float)
    d = model.dim
    L = model.barrier_length
    above = energy >= model.e_max
    # clip so that closed branches stay finite; they are replaced by identity
    e_eff = np.where(above, energy, model.e_max)
    k, _ = _wavevectors(model, e_eff)
    q = np.sqrt(2 * model.mass * np.clip(e_eff[..., None] - model.h_tot_eigvals, 0, None)) / model.hbar
    u = model.h_tot_eigvecs
    prop = np.einsum("ab,...b,cb->...ac", u, np.exp(1j * L * q), u.conj())
    half = np.exp(-0.5j * L * k)
    s = half[..., :, None] * prop * half[..., None, :]
    s = np.where(above[..., None, None], s, np.eye(d))
    return AmplitudeSet(energy, s, np.zeros_like(s), np.ones(energy.shape + (d,), dtype=bool))


def _inside_basis(q2, x, half_length):
    """Even/odd interior solutions and derivatives at position ``x``.

    For q2 = q^2 >= 0: C = cos(q x), S = sin(q x)/q. For q2 < 0 the hyperbolic
    forms are divided by cosh(kappa L/2) so nothing overflows.
    """
    pos = q2 >= 0
    q = np.sqrt(np.abs(q2))
    qr = np.where(pos, q, 0.0)
    kap = np.where(pos, 0.0, q)
    c_pos = np.cos(qr * x)
    s_pos = x * np.sinc(qr * x / np.pi)
    dc_pos = -qr * np.sin(qr * x)
    ds_pos = c_pos
    scale = np.cosh(kap * half_length)
    c_neg = np.cosh(kap * x) / scale
    # sinh(kx)/k with the k -> 0 limit
    with np.errstate(invalid="ignore", divide="ignore"):
        s_neg = np.where(kap > 0, np.sinh(kap * x) / np.where(kap > 0, kap, 1.0), x) / scale
    dc_neg = kap * np.sinh(kap * x) / scale
    ds_neg = c_neg
    return (
        np.where(pos, c_pos, c_neg),
        np.where(pos, s_pos, s_neg),
        np.where(pos, dc_pos, dc_neg),
        np.where(pos, ds_pos, ds_neg),
    )


def exact_amplitudes(model, energy):
    """Amplitudes from exact matching at the barrier edges x = -L/2 and x = +L/2.

    Unknowns per incident channel: d reflected and d transmitted boundary
    values plus 2d interior coefficients. Closed outer channels decay away
    from the barrier and carry no amplitude in the result.
    """
    energy = np.asarray(energy, dtype=float)
    if np.any(energy < model.energies[0]):
        raise DomainError("energy lies below every channel threshold")
    batch = energy.shape
    ev = energy.reshape(-1)
    n = ev.size
    d = model.dim
    L = model.barrier_length
    h = L / 2
    m, hbar = model.mass, model.hbar
    phi = model.h_tot_eigvecs

    k, is_open = _wavevectors(model, ev)
    # derivative factor of the outgoing waves at the left/right boundary
    g_left = np.where(is_open, -1j * k, k)
    g_right = np.where(is_open, 1j * k, -k)
    q2 = 2 * m * (ev[:, None] - model.h_tot_eigvals) / hbar**2

    cl, sl, dcl, dsl = _inside_basis(q2, -h, h)
    cr, sr, dcr, dsr = _inside_basis(q2, h, h)

    a = np.zeros((n, 4 * d, 4 * d), dtype=complex)
    eye = np.eye(d)
    # columns: [r (d), t (d), a (d), b (d)]; rows: psi(-h), psi'(-h), psi(h), psi'(h)
    a[:, 0:d, 0:d] = -eye
    a[:, d:2 * d, 0:d] = -eye * g_left[:, None, :]
    a[:, 2 * d:3 * d, d:2 * d] = -eye
    a[:, 3 * d:, d:2 * d] = -eye * g_right[:, None, :]
    a[:, 0:d, 2 * d:3 * d] = phi * cl[:, None, :]
    a[:, 0:d, 3 * d:] = phi * sl[:, None, :]
    a[:, d:2 * d, 2 * d:3 * d] = phi * dcl[:, None, :]
    a[:, d:2 * d, 3 * d:] = phi * dsl[:, None, :]
    a[:, 2 * d:3 * d, 2 * d:3 * d] = phi * cr[:, None, :]
    a[:, 2 * d:3 * d, 3 * d:] = phi * sr[:, None, :]
    a[:, 3 * d:, 2 * d:3 * d] = phi * dcr[:, None, :]
    a[:, 3 * d:, 3 * d:] = phi * dsr[:, None, :]

    # one right-hand side per incident channel; incident wave exp(i k x) at x = -h
    inc = np.exp(-1j * k * h)
    rhs = np.zeros((n, 4 * d, d), dtype=complex)
    idx = np.arange(d)
    rhs[:, idx, idx] = inc
    rhs[:, d + idx, idx] = 1j * k * inc

    cond = np.linalg.cond(a)
    bad = ~np.isfinite(cond) | (cond > SINGULAR_COND)
    if np.any(bad):
        raise ScatteringSolverError(float(ev[np.argmax(bad)]))
    sol = np.linalg.solve(a, rhs)

    back = np.exp(-1j * k * h)  # boundary value -> amplitude of exp(+-i k x)
    r = sol[:, 0:d, :] * back[:, :, None]
    t = sol[:, d:2 * d, :] * back[:, :, None]
    both = is_open[:, :, None] & is_open[:, None, :]
    kk = np.where(is_open, k.real, 1.0)
    flux = np.sqrt(kk[:, :, None] / kk[:, None, :])
    r = np.where(both, r * flux, 0)
    t = np.where(both, t * flux, 0)
    return AmplitudeSet(
        energy,
        t.reshape(batch + (d, d)),
        r.reshape(batch + (d, d)),
        is_open.reshape(batch + (d,)),
    )


BACKENDS = {"approx": approx_amplitudes, "exact": exact_amplitudes}


def get_backend(name):
    try:
        return BACKENDS[name]
    except KeyError:
        raise DomainError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None


def breakpoints(model, backend):
    """Total energies at which a backend's amplitudes are not smooth."""
    if backend == "approx":
        return np.array([model.e_max])
    return np.array(model.energies)


def unitarity_defect(amps):
    """max | sum_alpha s^dagger s - 1 | restricted to open channels."""
    s_p, s_m = amps.transmission, amps.reflection
    g = np.conj(np.swapaxes(s_p, -1, -2)) @ s_p + np.conj(np.swapaxes(s_m, -1, -2)) @ s_m
    d = g.shape[-1]
    mask = amps.open_channels[..., :, None] & amps.open_channels[..., None, :]
    return float(np.max(np.abs(np.where(mask, g - np.eye(d), 0))))


def microrev_defect(amps):
    """max over channels and both directions of | |s_{j'j}|^2 - |s_{jj'}|^2 |."""
    out = 0.0
    for s in (amps.transmission, amps.reflection):
        p = np.abs(s) ** 2
        out = max(out, float(np.max(np.abs(p - np.swapaxes(p, -1, -2)))))
    return out


def phase_microrev_defect(amps):
    """max | s_{j'j} - s_{jj'} | (reported only; not zero for complex couplings)."""
    out = 0.0
    for s in (amps.transmission, amps.reflection):
        out = max(out, float(np.max(np.abs(s - np.swapaxes(s, -1, -2)))))
    return out


def energy_grid(model, beta, count=100):
    """Log-spaced energies from e_max to e_max + 20/beta."""
    lo, hi = model.e_max, model.e_max + 20.0 / beta
    if lo > 0:
        return np.geomspace(lo, hi, count)
    return lo + np.concatenate([[0.0], np.geomspace(1e-3 / beta, 20.0 / beta, count - 1)])
