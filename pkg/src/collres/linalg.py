"""Dense matrix and superoperator algebra for a d-level system.

Vectorization convention (used everywhere in the package): a d x d matrix
``rho`` is flattened row-major, so the pair (j, k) maps to ``a = j*d + k``.
A superoperator is stored as a rank-4 tensor ``T[j, k, jp, kp]`` meaning

    rho'[jp, kp] = sum_{j,k} T[j, k, jp, kp] * rho[j, k]

and its matrix view ``M`` acts on ``rho.reshape(d*d)`` from the left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def as_matrix(a):
    """Validate a square, finite complex matrix and return an immutable copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return _frozen(a)


def as_hermitian(a, tol=HERMITIAN_TOL):
    """Symmetrize ``a`` to (a + a^dagger)/2.

    Raises if the Hermiticity defect exceeds ``tol`` times max(1, |a|_max).
    """
    a = np.asarray(as_matrix(a))
    defect = np.max(np.abs(a - a.conj().T))
    if defect > tol * max(1.0, np.max(np.abs(a))):
        raise DomainError(f"matrix is not Hermitian (defect {defect:.3e})")
    return _frozen(0.5 * (a + a.conj().T))


def as_density_matrix(rho):
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = np.asarray(as_hermitian(rho))
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise DomainError(f"trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -POSITIVITY_TOL:
        raise DomainError(f"smallest eigenvalue {lo:.3e} is negative")
    return _frozen(rho)


def eig_hermitian(h):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    h = as_hermitian(h)
    w, u = np.linalg.eigh(h)
    return w, u


def matrix_function(h, f):
    """Return U diag(f(lambda)) U^dagger for Hermitian ``h``.

    ``f`` is applied elementwise to the real eigenvalue array and must return
    finite values.
    """
    w, u = eig_hermitian(h)
    fw = np.asarray(f(w), dtype=complex)
    if fw.shape != w.shape or not np.all(np.isfinite(fw)):
        raise DomainError("f is not finite on the spectrum")
    return (u * fw) @ u.conj().T


@dataclass(frozen=True)
class Superoperator:
    """Linear map on d x d matrices, stored as ``tensor[j, k, jp, kp]``."""

    tensor: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=complex)
        if t.ndim != 4 or len(set(t.shape)) != 1:
            raise DimensionError(f"superoperator tensor must be (d,d,d,d), got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise DomainError("superoperator has non-finite entries")
        object.__setattr__(self, "tensor", _frozen(t))

    @property
    def dim(self):
        return self.tensor.shape[0]

    @property
    def matrix(self):
        d = self.dim
        return self.tensor.reshape(d * d, d * d).T

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=complex)
        n = m.shape[0]
        d = int(round(np.sqrt(n)))
        if m.shape != (n, n) or d * d != n:
            raise DimensionError(f"matrix view must be (d^2, d^2), got {m.shape}")
        return cls(m.T.reshape(d, d, d, d))

    @classmethod
    def identity(cls, d):
        return cls.from_matrix(np.eye(d * d))

    def __call__(self, rho):
        return apply_superop(self, rho)


def apply_superop(s, rho):
    """Apply ``s`` to ``rho`` without any normalization or hermitization."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (s.dim, s.dim):
        raise DimensionError(f"state shape {rho.shape} does not match superoperator dim {s.dim}")
    return np.einsum("jkab,jk->ab", s.tensor, rho)


def compose(s2, s1):
    """Superoperator for applying ``s1`` first, then ``s2``."""
    if s1.dim != s2.dim:
        raise DimensionError(f"cannot compose dims {s2.dim} and {s1.dim}")
    return Superoperator.from_matrix(s2.matrix @ s1.matrix)


def _energies(h_s):
    h = np.asarray(h_s)
    if h.ndim == 1:
        return np.asarray(h, dtype=float)
    return eig_hermitian(h)[0]


def unitary_superop(h_s, tau, hbar=1.0):
    """Free evolution rho -> exp(-i H tau/hbar) rho exp(i H tau/hbar) in the H eigenbasis.

    ``h_s`` is either the 1-D array of energies or a Hermitian matrix whose
    eigenvalues are used.
    """
    if tau < 0:
        raise DomainError("tau must be non-negative")
    e = _energies(h_s)
    d = e.size
    phase = np.exp(-1j * np.subtract.outer(e, e) * tau / hbar)
    t = np.zeros((d, d, d, d), dtype=complex)
    jj, kk = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    t[jj, kk, jj, kk] = phase
    return Superoperator(t)


def full_dephasing(d):
    """Projector onto the diagonal: kills every off-diagonal entry."""
    if d < 1:
        raise DomainError("d must be >= 1")
    t = np.zeros((d, d, d, d), dtype=complex)
    idx = np.arange(d)
    t[idx, idx, idx, idx] = 1.0
    return Superoperator(t)


def choi_matrix(s):
    """Choi matrix sum_{jk} |j><k| (x) S(|j><k|), indexed [(j,jp), (k,kp)]."""
    d = s.dim
    c = s.tensor.transpose(0, 2, 1, 3).reshape(d * d, d * d)
    return as_hermitian(c)


def choi_min_eigenvalue(s):
    return float(np.linalg.eigvalsh(choi_matrix(s))[0])
