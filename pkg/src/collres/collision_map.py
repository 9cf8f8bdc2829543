"""Collision superoperator built from scattering amplitudes and the incident particle state.

Entry (j, k) -> (jp, kp) of the map is the momentum integral

    sum_alpha int dp rho_U(p, pi(p)) sqrt(p/pi(p))
        s^a_{jp j}(p^2/2m + e_j) conj(s^a_{kp k}(p^2/2m - D_{jp j} + e_kp))

with pi(p) = sqrt(p^2 - 2m(D_{jp j} - D_{kp k})) and D_{ab} = e_a - e_b.
The integration range is split at every momentum where an amplitude is not
smooth, and each panel is mapped through p = mid - half*cos(theta) before
Gauss-Legendre, which removes square-root endpoint singularities (channel
thresholds, pi(p) -> 0, p -> 0).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError, PositivityWarning, QuadratureWarning
from .linalg import Superoperator, choi_min_eigenvalue
from .scattering import breakpoints, get_backend

CONVERGENCE_WARN = 1e-6
CHOI_WARN = -1e-6


@dataclass(frozen=True)
class ParticleDensity:
    """Incident particle: effusion momenta, Gaussian position profile."""

    beta: float = 0.1
    mass: float = 0.1
    dx: float = 1.0
    x0: float = -10.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("beta", "mass", "dx", "hbar"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not wigner_valid(self.beta, self.mass, self.dx, self.hbar):
            raise DomainError(
                "Wigner function invalid: need 4*pi*dx*sqrt(m/beta) >= hbar, got "
                f"{4 * np.pi * self.dx * np.sqrt(self.mass / self.beta):.6g} < {self.hbar}"
            )


def wigner_valid(beta, mass, dx, hbar):
    return 4 * np.pi * dx * np.sqrt(mass / beta) >= hbar


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 400
    p_cut_tolerance: float = 1e-14

    def __post_init__(self):
        if self.nodes < 16:
            raise DomainError("quadrature needs at least 16 nodes")
        if not 0 < self.p_cut_tolerance < 1:
            raise DomainError("p_cut_tolerance must lie in (0, 1)")


@dataclass(frozen=True)
class MapDiagnostics:
    trace_defect: float
    population_trace_defect: float
    hermiticity_defect: float
    choi_min_eigenvalue: float
    detailed_balance_defect: float
    convergence: float = float("nan")


@dataclass(frozen=True)
class CollisionMap:
    superop: Superoperator
    diagnostics: MapDiagnostics
    energies: np.ndarray
    beta: float
    warnings: tuple = field(default=())

    @property
    def populations(self):
        """Transition matrix P[j, jp] = probability of j -> jp."""
        idx = np.arange(self.superop.dim)
        return self.superop.tensor[idx[:, None], idx[:, None], idx[None, :], idx[None, :]].real


def effusion_pdf(particle, p):
    """Effusion momentum density (beta p/m) exp(-beta p^2 / 2m)."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("effusion density is defined for p >= 0")
    b, m = particle.beta, particle.mass
    return b * p / m * np.exp(-b * p * p / (2 * m))


def rho_u(particle, p, pp):
    """Momentum-representation density matrix <p|rho_U|p'>."""
    p = np.asarray(p, dtype=float)
    pp = np.asarray(pp, dtype=float)
    mean = 0.5 * (p + pp)
    if np.any(mean < 0):
        raise DomainError("mean momentum must be non-negative")
    diff = p - pp
    hb = particle.hbar
    return effusion_pdf(particle, mean) * np.exp(
        -(particle.dx * diff) ** 2 / (2 * hb * hb) - 1j * diff * particle.x0 / hb
    )


def p_cut(particle, tol):
    return float(np.sqrt(2 * particle.mass * np.log(1 / tol) / particle.beta))


@lru_cache(maxsize=32)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _panel_nodes(edges, n):
    """Nodes and weights on consecutive panels, cosine-mapped per panel."""
    x, w = _gauss_legendre(n)
    theta = 0.5 * np.pi * (x + 1)
    ps, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        ps.append(mid - half * np.cos(theta))
        ws.append(w * 0.5 * np.pi * half * np.sin(theta))
    return np.concatenate(ps), np.concatenate(ws)


def integration_limits(model, j, k, jp, kp, pc):
    """(p_inf, p_hi, c) for entry (j, k) -> (jp, kp), where pi(p)^2 = p^2 - c.

    p_hi is shifted above the cutoff ``pc`` so that pi(p_hi) >= pc as well.
    """
    gaps = model.gaps
    m = model.mass
    c = 2 * m * (gaps[jp, j] - gaps[kp, k])
    p_inf = np.sqrt(2 * m * max(0.0, gaps[jp, j], gaps[jp, j] - gaps[kp, k]))
    p_hi = np.sqrt(pc * pc + max(0.0, c))
    return p_inf, p_hi, c


def _entry_grid(model, backend, j, k, jp, kp, pc, n):
    gaps = model.gaps
    m = model.mass
    p_inf, p_hi, c = integration_limits(model, j, k, jp, kp, pc)
    if p_hi <= p_inf:
        return None
    # momenta where either energy argument crosses a non-smooth point
    cuts = []
    for eb in breakpoints(model, backend):
        for shift in (eb - model.energies[j], eb + gaps[jp, j] - model.energies[kp]):
            if shift > 0:
                cuts.append(np.sqrt(2 * m * shift))
    inner = sorted({x for x in cuts if p_inf < x < p_hi})
    edges = [p_inf, *inner, p_hi]
    return _panel_nodes(edges, n), c


def _raw_tensor(model, particle, backend, quad):
    amps = get_backend(backend)
    d = model.dim
    m = model.mass
    e = model.energies
    gaps = model.gaps
    pc = p_cut(particle, quad.p_cut_tolerance)
    t = np.zeros((d, d, d, d), dtype=complex)
    for j in range(d):
        for k in range(d):
            for jp in range(d):
                for kp in range(d):
                    grid = _entry_grid(model, backend, j, k, jp, kp, pc, quad.nodes)
                    if grid is None:
                        continue
                    (p, w), c = grid
                    pi = np.sqrt(np.clip(p * p - c, 0, None))
                    ep = p * p / (2 * m)
                    a1 = amps(model, ep + e[j])
                    a2 = amps(model, ep - gaps[jp, j] + e[kp])
                    s = a1.transmission[:, jp, j] * np.conj(a2.transmission[:, kp, k])
                    if backend != "approx":
                        s = s + a1.reflection[:, jp, j] * np.conj(a2.reflection[:, kp, k])
                    f = rho_u(particle, p, pi) * np.sqrt(p / pi) * s
                    t[j, k, jp, kp] = np.sum(w * f)
    return t


def hermiticity_defect(tensor):
    """max | T[j,k,jp,kp] - conj(T[k,j,kp,jp]) |."""
    return float(np.max(np.abs(tensor - np.conj(tensor.transpose(1, 0, 3, 2)))))


def trace_defects(tensor):
    """(all columns, population columns) max | sum_jp T[j,k,jp,jp] - delta_jk |."""
    d = tensor.shape[0]
    tr = np.einsum("jkaa->jk", tensor) - np.eye(d)
    return float(np.max(np.abs(tr))), float(np.max(np.abs(np.diag(tr))))


def detailed_balance_defect(probs, energies, beta):
    """max | exp(-beta e_j) P[j->jp] - exp(-beta e_jp) P[jp->j] |."""
    probs = np.asarray(probs, dtype=float)
    w = np.exp(-beta * (np.asarray(energies) - np.min(energies)))
    flow = w[:, None] * probs
    return float(np.max(np.abs(flow - flow.T)))


def map_diagnostics(superop, energies, beta, raw_hermiticity_defect=None, convergence=float("nan")):
    t = superop.tensor
    trace_all, trace_pop = trace_defects(t)
    idx = np.arange(superop.dim)
    pops = t[idx[:, None], idx[:, None], idx[None, :], idx[None, :]].real
    herm = hermiticity_defect(t) if raw_hermiticity_defect is None else raw_hermiticity_defect
    return MapDiagnostics(
        trace_defect=trace_all,
        population_trace_defect=trace_pop,
        hermiticity_defect=herm,
        choi_min_eigenvalue=choi_min_eigenvalue(superop),
        detailed_balance_defect=detailed_balance_defect(pops, energies, beta),
        convergence=convergence,
    )


def build_map(model, particle, backend="approx", quad=None, check_convergence=True):
    """Collision map by per-entry momentum quadrature.

    With ``check_convergence`` the tensor is recomputed with twice the nodes
    and the largest entry change is stored in the diagnostics; a change above
    1e-6 attaches a warning to the result.
    """
    quad = quad or QuadratureSpec()
    if not np.isclose(model.mass, particle.mass, rtol=1e-12, atol=0):
        raise DomainError("particle mass differs from the scattering model mass")
    if not np.isclose(model.hbar, particle.hbar, rtol=1e-12, atol=0):
        raise DomainError("particle hbar differs from the scattering model hbar")
    get_backend(backend)

    raw = _raw_tensor(model, particle, backend, quad)
    herm_raw = hermiticity_defect(raw)
    sym = 0.5 * (raw + np.conj(raw.transpose(1, 0, 3, 2)))
    superop = Superoperator(sym)

    notes = []
    conv = float("nan")
    if check_convergence:
        fine = _raw_tensor(model, particle, backend, QuadratureSpec(2 * quad.nodes, quad.p_cut_tolerance))
        conv = float(np.max(np.abs(fine - raw)))
        if conv > CONVERGENCE_WARN:
            notes.append(f"quadrature not converged: entry change {conv:.3e} under node doubling")
    diag = map_diagnostics(superop, model.energies, particle.beta, herm_raw, conv)
    if diag.choi_min_eigenvalue < CHOI_WARN:
        notes.append(f"map is not completely positive: min Choi eigenvalue {diag.choi_min_eigenvalue:.3e}")
    for note in notes:
        category = QuadratureWarning if note.startswith("quadrature") else PositivityWarning
        warnings.warn(note, category, stacklevel=2)
    return CollisionMap(superop, diag, model.energies, particle.beta, tuple(notes))


def transition_probs_energy(model, beta, backend="approx", p_cut_tolerance=1e-14):
    """Population transition matrix from the energy-representation integral.

    P[j, jp] = beta exp(beta e_j) sum_alpha int_{max(e_j, e_jp)} exp(-beta E) |s^a_{jp j}(E)|^2 dE,
    evaluated with adaptive Gauss-Kronrod (scipy ``quad``), independently of
    the momentum quadrature used by ``build_map``.
    """
    amps = get_backend(backend)
    d = model.dim
    e = model.energies
    span = np.log(1 / p_cut_tolerance) / beta
    kinks = breakpoints(model, backend)
    probs = np.zeros((d, d))

    def integrand(E, j, jp):
        a = amps(model, E)
        val = abs(a.transmission[jp, j]) ** 2 + abs(a.reflection[jp, j]) ** 2
        return np.exp(-beta * (E - e[j])) * val

    for j in range(d):
        for jp in range(d):
            lo, hi = max(e[j], e[jp]), e[j] + span
            if hi <= lo:
                continue
            pts = [lo] + sorted(x for x in kinks if lo < x < hi) + [hi]
            total = 0.0
            for a, b in zip(pts[:-1], pts[1:]):
                val, _ = integrate.quad(integrand, a, b, args=(j, jp), epsabs=1e-14, epsrel=1e-13, limit=400)
                total += val
            probs[j, jp] = beta * total
    return probs
