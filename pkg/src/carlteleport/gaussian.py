"""Gaussian-state oracle: exact moment propagation under quadratic Hamiltonians.

Quadratures are ``x = (a + a^dag)/2`` and ``y = (a - a^dag)/2i`` so the vacuum
variance is 1/4.  Phase-space vectors are interleaved per mode,
``(x_0, y_0, x_1, y_1, ...)``, and ``[R_j, R_k] = (i/2) Omega_jk``.

A :class:`QuadraticHamiltonian` stands for::

    H = sum_ij A_ij a_i^dag a_j + sum_ij (B_ij a_i^dag a_j^dag + h.c.)
        + sum_i (f_i a_i^dag + h.c.)

with ``A`` Hermitian and ``B`` symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fock import (
    LEAKAGE_TOLERANCE,
    DensityOperator,
    FockSpace,
    StateVector,
    TruncationError,
    annihilation,
)

VACUUM_VARIANCE = 0.25


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _readonly(arr, dtype) -> np.ndarray:
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray
    validate: bool = True

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"inconsistent moment shapes {mean.shape}, {cov.shape}")
        if self.validate:
            if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12:
                raise ValueError("covariance matrix is not symmetric")
            lo = np.linalg.eigvalsh(cov + 0.25j * symplectic_form(mean.size // 2))[0]
            if lo < -1e-9:
                raise ValueError(f"covariance violates the uncertainty relation ({lo:.3e})")
        object.__setattr__(self, "mean", _readonly(mean, float))
        object.__setattr__(self, "cov", _readonly(0.5 * (cov + cov.T), float))

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, n_modes: int) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), VACUUM_VARIANCE * np.eye(2 * n_modes))

    @classmethod
    def coherent(cls, amplitudes) -> "GaussianState":
        mu = np.asarray(amplitudes, dtype=complex).reshape(-1)
        mean = np.column_stack([mu.real, mu.imag]).reshape(-1)
        return cls(mean, VACUUM_VARIANCE * np.eye(2 * mu.size))

    @classmethod
    def thermal(cls, nbars) -> "GaussianState":
        nbar = np.asarray(nbars, dtype=float).reshape(-1)
        return cls(np.zeros(2 * nbar.size), np.diag(np.repeat((2 * nbar + 1) / 4, 2)))

    def amplitude(self, mode: int) -> complex:
        return complex(self.mean[2 * mode], self.mean[2 * mode + 1])

    def correlator_aa(self, i: int, j: int) -> complex:
        """``<a_i a_j>``."""
        v, m = self.cov, self.mean
        xx = v[2 * i, 2 * j] + m[2 * i] * m[2 * j]
        yy = v[2 * i + 1, 2 * j + 1] + m[2 * i + 1] * m[2 * j + 1]
        xy = v[2 * i, 2 * j + 1] + m[2 * i] * m[2 * j + 1]
        yx = v[2 * i + 1, 2 * j] + m[2 * i + 1] * m[2 * j]
        return complex(xx - yy, xy + yx)

    def purity_determinant(self) -> float:
        """``det(cov)``; a pure M-mode state has ``(1/16)^M``."""
        return float(np.linalg.det(self.cov))


@dataclass(frozen=True)
class QuadraticHamiltonian:
    hermitian_block: np.ndarray
    squeezing_block: np.ndarray | None = None
    linear: np.ndarray | None = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.hermitian_block, dtype=complex))
        m = a.shape[0]
        b = np.zeros((m, m), complex) if self.squeezing_block is None else np.asarray(self.squeezing_block, dtype=complex)
        f = np.zeros(m, complex) if self.linear is None else np.asarray(self.linear, dtype=complex).reshape(-1)
        if a.shape != (m, m) or b.shape != (m, m) or f.shape != (m,):
            raise ValueError("Hamiltonian blocks have inconsistent shapes")
        if np.max(np.abs(a - a.conj().T)) > 1e-12:
            raise ValueError("hermitian_block must be Hermitian")
        if np.max(np.abs(b - b.T)) > 1e-12:
            raise ValueError("squeezing_block must be symmetric")
        object.__setattr__(self, "hermitian_block", _readonly(a, complex))
        object.__setattr__(self, "squeezing_block", _readonly(b, complex))
        object.__setattr__(self, "linear", _readonly(f, complex))

    @property
    def n_modes(self) -> int:
        return self.hermitian_block.shape[0]

    def heisenberg_coefficients(self):
        """``(M, N, c)`` with ``da/dt = M a + N a^dag + c``."""
        return -1j * self.hermitian_block, -2j * self.squeezing_block, -1j * self.linear

    def generator(self) -> tuple[np.ndarray, np.ndarray]:
        """Real ``(G, d)`` with ``dR/dt = G R + d`` for the interleaved quadratures."""
        mm, nn, c = self.heisenberg_coefficients()
        p, q = mm + nn, mm - nn
        m = self.n_modes
        g = np.empty((2 * m, 2 * m))
        g[0::2, 0::2] = p.real
        g[0::2, 1::2] = -q.imag
        g[1::2, 0::2] = p.imag
        g[1::2, 1::2] = q.real
        d = np.column_stack([c.real, c.imag]).reshape(-1)
        return g, d

    def to_fock(self, space: FockSpace, sparse: bool = True):
        """Matrix of the Hamiltonian on a truncated Fock space."""
        if space.n_modes != self.n_modes:
            raise ValueError(f"Hamiltonian has {self.n_modes} modes, space has {space.n_modes}")
        ann = [annihilation(space, i, sparse=True) for i in range(self.n_modes)]
        cre = [x.T.tocsr() for x in ann]
        h = sp.csr_matrix((space.total_dim, space.total_dim), dtype=complex)
        a_blk, b_blk, f = self.hermitian_block, self.squeezing_block, self.linear
        for i in range(self.n_modes):
            if f[i] != 0:
                h = h + f[i] * cre[i] + np.conj(f[i]) * ann[i]
            for j in range(self.n_modes):
                if a_blk[i, j] != 0:
                    h = h + a_blk[i, j] * (cre[i] @ ann[j])
                if b_blk[i, j] != 0:
                    h = h + b_blk[i, j] * (cre[i] @ cre[j]) + np.conj(b_blk[i, j]) * (ann[j] @ ann[i])
        h = h.tocsr()
        return h if sparse else h.toarray()


def symplectic_propagator(h: QuadraticHamiltonian, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact affine flow ``R(t) = S R(0) + drift`` via one augmented exponential."""
    g, d = h.generator()
    n = g.shape[0]
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = g
    aug[:n, n] = d
    e = sla.expm(aug * t)
    return e[:n, :n], e[:n, n]


def evolve_gaussian(h: QuadraticHamiltonian, t: float, initial: GaussianState) -> GaussianState:
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if initial.n_modes != h.n_modes:
        raise ValueError("state and Hamiltonian mode counts differ")
    s, drift = symplectic_propagator(h, t)
    return GaussianState(s @ initial.mean + drift, s @ initial.cov @ s.T, validate=False)


def mode_populations(state: GaussianState) -> np.ndarray:
    """Mean occupation per mode, ``var x + var y + |<a>|^2 - 1/2``."""
    v, m = state.cov, state.mean
    return np.diag(v)[0::2] + np.diag(v)[1::2] + m[0::2] ** 2 + m[1::2] ** 2 - 0.5


def quadrature_operators(space: FockSpace) -> list:
    ops = []
    for i in range(space.n_modes):
        a = annihilation(space, i, sparse=True)
        ad = a.T.tocsr()
        ops += [0.5 * (a + ad), -0.5j * (a - ad)]
    return ops


def fock_moments(rho: DensityOperator | StateVector) -> GaussianState:
    """First and second quadrature moments read off Fock matrix elements.

    The result carries the :class:`GaussianState` layout but is not assumed
    Gaussian; it is only meant for moment-level comparison.
    """
    leak = rho.leakage()
    if leak > LEAKAGE_TOLERANCE:
        raise TruncationError("moments unreliable near the truncation edge", leak)
    ops = quadrature_operators(rho.space)
    n = len(ops)
    second = np.empty((n, n))
    if isinstance(rho, StateVector):
        vecs = [op @ rho.amplitudes for op in ops]
        mean = np.array([np.vdot(rho.amplitudes, v).real for v in vecs])
        for j in range(n):
            for k in range(n):
                second[j, k] = np.vdot(vecs[j], vecs[k]).real
    else:
        mean = np.array([rho.expect(op).real for op in ops])
        for j in range(n):
            for k in range(n):
                second[j, k] = rho.expect(ops[j] @ ops[k]).real
    cov = 0.5 * (second + second.T) - np.outer(mean, mean)
    return GaussianState(mean, cov, validate=False)


__all__ = [
    "VACUUM_VARIANCE", "symplectic_form", "GaussianState", "QuadraticHamiltonian",
    "symplectic_propagator", "evolve_gaussian", "mode_populations", "quadrature_operators",
    "fock_moments",
]
