"""Truncated Fock-space linear algebra.

Multimode spaces are little-endian: in a flat basis index, mode 0 varies
fastest, i.e. ``index = n0 + d0 * (n1 + d1 * (n2 + ...))``.  All dense
arrays held by the state containers are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import lgamma, log
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

# top-two-level population above which an operation refuses to proceed
LEAKAGE_TOLERANCE = 1e-6
ENTROPY_CUTOFF = 1e-14
PSD_CHECK_MAX_DIM = 1024


class TruncationError(ValueError):
    """Raised when a truncated Fock space cannot hold a state faithfully."""

    def __init__(self, message: str, leakage: float):
        super().__init__(f"{message} (leakage estimate {leakage:.3e})")
        self.leakage = float(leakage)


@dataclass(frozen=True)
class FockSpace:
    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        if not dims:
            raise ValueError("a Fock space needs at least one mode")
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode dimension must be >= 2, got {dims}")
        object.__setattr__(self, "mode_dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.mode_dims))

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        """Shape of a C-ordered reshape of a flat vector (last mode first)."""
        return self.mode_dims[::-1]

    def index(self, occupations: Sequence[int]) -> int:
        """Flat basis index of ``|n0, n1, ...>``."""
        if len(occupations) != self.n_modes:
            raise ValueError("one occupation number per mode is required")
        idx = 0
        for n, d in zip(reversed(occupations), reversed(self.mode_dims)):
            if not 0 <= n < d:
                raise ValueError(f"occupation {n} outside truncation {d}")
            idx = idx * d + int(n)
        return idx

    def occupations(self, index: int) -> tuple[int, ...]:
        out = []
        for d in self.mode_dims:
            out.append(index % d)
            index //= d
        return tuple(out)

    def number_grid(self, mode_index: int) -> np.ndarray:
        """Occupation number of ``mode_index`` for every flat basis index."""
        self._check_mode(mode_index)
        stride = int(np.prod(self.mode_dims[:mode_index], dtype=np.int64))
        return (np.arange(self.total_dim) // stride) % self.mode_dims[mode_index]

    def _check_mode(self, mode_index: int) -> None:
        if not (isinstance(mode_index, (int, np.integer)) and 0 <= mode_index < self.n_modes):
            raise ValueError(f"invalid mode index {mode_index!r} for {self.n_modes} modes")

    def subspace(self, modes: Iterable[int]) -> "FockSpace":
        return FockSpace(tuple(self.mode_dims[m] for m in modes))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def _mode_leakage(populations: np.ndarray, space: FockSpace) -> np.ndarray:
    """Top-two-level population per mode from a flat diagonal."""
    out = np.empty(space.n_modes)
    for m, d in enumerate(space.mode_dims):
        n = space.number_grid(m)
        out[m] = populations[n >= d - 2].sum()
    return out


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    space: FockSpace
    normalize: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.space.total_dim:
            raise ValueError(f"expected {self.space.total_dim} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if self.normalize:
            if norm == 0:
                raise ValueError("cannot normalize a zero vector")
            amps = amps / norm
        elif abs(norm**2 - 1) > 1e-10:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm**2:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mode_leakage(self) -> np.ndarray:
        return _mode_leakage(self.populations(), self.space)

    def leakage(self) -> float:
        """Largest top-two-level population over all modes."""
        return float(self.mode_leakage().max())

    def check_truncation(self, tolerance: float = LEAKAGE_TOLERANCE) -> "StateVector":
        leak = self.leakage()
        if leak > tolerance:
            raise TruncationError("state reaches the top of the Fock ladder", leak)
        return self

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.tensor_shape)

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.space)

    def overlap(self, other: "StateVector") -> complex:
        _same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray
    space: FockSpace
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dim = self.space.total_dim
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {mat.shape}")
        if self.validate:
            if np.max(np.abs(mat - mat.conj().T), initial=0.0) > 1e-10:
                raise ValueError("density operator is not Hermitian")
            tr = np.trace(mat).real
            if abs(tr - 1) > 1e-8:
                raise ValueError(f"density operator trace is {tr:.12g}, expected 1")
            if dim <= PSD_CHECK_MAX_DIM:
                lo = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0]
                if lo < -1e-8:
                    raise ValueError(f"density operator has negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", _frozen(mat))

    @classmethod
    def from_unnormalized(cls, matrix: np.ndarray, space: FockSpace) -> "DensityOperator":
        mat = np.asarray(matrix, dtype=complex)
        mat = 0.5 * (mat + mat.conj().T)
        return cls(mat / np.trace(mat).real, space)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def mode_leakage(self) -> np.ndarray:
        return _mode_leakage(self.populations(), self.space)

    def leakage(self) -> float:
        return float(self.mode_leakage().max())

    def check_truncation(self, tolerance: float = LEAKAGE_TOLERANCE) -> "DensityOperator":
        leak = self.leakage()
        if leak > tolerance:
            raise TruncationError("state reaches the top of the Fock ladder", leak)
        return self

    def expect(self, op) -> complex:
        if sp.issparse(op):
            return complex(op.multiply(self.matrix.T).sum())
        return complex(np.einsum("ij,ji->", self.matrix, op))

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, self.matrix)))


def _same_space(a: FockSpace, b: FockSpace) -> None:
    if a.mode_dims != b.mode_dims:
        raise ValueError(f"space mismatch: {a.mode_dims} vs {b.mode_dims}")


# ---------------------------------------------------------------------------
# operators


def lowering_matrix(dim: int) -> np.ndarray:
    """Single-mode truncated annihilation operator, ``<n-1|a|n> = sqrt(n)``."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def embed(space: FockSpace, mode_index: int, op, sparse: bool = False):
    """Lift a single-mode operator to ``space`` acting on ``mode_index``."""
    space._check_mode(mode_index)
    factors = [sp.identity(d, format="csr") for d in space.mode_dims]
    factors[mode_index] = sp.csr_matrix(op)
    # little-endian: last mode is the slowest (leftmost) Kronecker factor
    out = reduce(lambda acc, f: sp.kron(acc, f, format="csr"), factors[::-1])
    return out if sparse else out.toarray()


def tensor(*ops):
    """Kronecker product of per-mode operators or vectors, listed mode 0 first."""
    return reduce(np.kron, [np.asarray(o) for o in ops[::-1]])


def annihilation(space: FockSpace, mode_index: int, sparse: bool = False):
    space._check_mode(mode_index)
    return embed(space, mode_index, lowering_matrix(space.mode_dims[mode_index]), sparse)


def creation(space: FockSpace, mode_index: int, sparse: bool = False):
    space._check_mode(mode_index)
    return embed(space, mode_index, lowering_matrix(space.mode_dims[mode_index]).T, sparse)


def number_operator(space: FockSpace, mode_index: int, sparse: bool = False):
    n = space.number_grid(mode_index).astype(float)
    return sp.diags(n, format="csr") if sparse else np.diag(n)


def coherent_leakage(alpha: complex, dim: int) -> float:
    """Poisson mass of a coherent state at or above level ``dim - 2``."""
    mu = abs(alpha) ** 2
    if mu == 0:
        return 0.0
    levels = np.arange(dim - 2, dim + 400)
    logp = -mu + levels * log(mu) - np.array([lgamma(k + 1) for k in levels])
    return float(np.exp(logp).sum())


def single_mode_displacement(dim: int, alpha: complex) -> np.ndarray:
    """``exp(alpha a^dag - conj(alpha) a)`` of the truncated generator."""
    a = lowering_matrix(dim)
    return sla.expm(alpha * a.T - np.conj(alpha) * a)


def displacement(space: FockSpace, mode_index: int, alpha: complex) -> np.ndarray:
    """Displacement operator on one mode, built by dense matrix exponential.

    Raises
    ------
    TruncationError
        If ``|alpha|^2`` exceeds a quarter of the mode dimension.
    """
    space._check_mode(mode_index)
    dim = space.mode_dims[mode_index]
    if abs(alpha) ** 2 > dim / 4:
        raise TruncationError(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds dim/4 = {dim / 4:.3g}",
            coherent_leakage(alpha, dim),
        )
    return embed(space, mode_index, single_mode_displacement(dim, alpha))


def single_mode_squeezer(dim: int, r: float) -> np.ndarray:
    """``exp(r (a^2 - a^dag^2) / 2)``; squeezes the x quadrature for r > 0."""
    a = lowering_matrix(dim)
    return sla.expm(0.5 * r * (a @ a - a.T @ a.T))


# ---------------------------------------------------------------------------
# states


def basis_state(space: FockSpace, occupations: Sequence[int]) -> StateVector:
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[space.index(occupations)] = 1.0
    return StateVector(amps, space)


def vacuum(space: FockSpace) -> StateVector:
    return basis_state(space, [0] * space.n_modes)


def fock_state(dim: int, n: int) -> StateVector:
    return basis_state(FockSpace((dim,)), [n])


def coherent_state(dim: int, alpha: complex) -> StateVector:
    """Single-mode coherent state from its closed-form Fock amplitudes."""
    n = np.arange(dim)
    logfact = np.array([lgamma(k + 1) for k in n])
    mag = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha) + 1e-300) - 0.5 * logfact)
    if alpha == 0:
        mag = (n == 0).astype(float)
    amps = mag * np.exp(1j * np.angle(alpha) * n)
    state = StateVector(amps, FockSpace((dim,)), normalize=True)
    return state.check_truncation()


def squeezed_vacuum(space: FockSpace, mode_index: int, r: float) -> StateVector:
    """Squeezed vacuum on one mode (others in vacuum), via the exponential.

    Only even Fock levels are populated; for ``r > 0`` the x quadrature is
    squeezed.  The top two levels of the squeezed mode must hold less than 1e-8.
    """
    space._check_mode(mode_index)
    dim = space.mode_dims[mode_index]
    column = single_mode_squeezer(dim, r)[:, 0]
    column[1::2] = 0.0
    top = float(np.sum(np.abs(column[-2:]) ** 2))
    if top > 1e-8:
        raise TruncationError(f"squeezing r={r} too strong for dim {dim}", top)
    factors = [np.eye(d)[:, 0] for d in space.mode_dims]
    factors[mode_index] = column
    return StateVector(tensor(*factors), space, normalize=True)


def thermal_state(dim: int, nbar: float) -> DensityOperator:
    """Truncated, renormalized thermal state with mean occupation ``nbar``."""
    n = np.arange(dim)
    p = (nbar / (1 + nbar)) ** n / (1 + nbar) if nbar > 0 else (n == 0).astype(float)
    return DensityOperator(np.diag(p / p.sum()), FockSpace((dim,)))


def product_state(*parts: StateVector) -> StateVector:
    space = FockSpace(tuple(d for s in parts for d in s.space.mode_dims))
    return StateVector(tensor(*[s.amplitudes for s in parts]), space, normalize=True)


# ---------------------------------------------------------------------------
# reductions and metrics


def partial_trace(rho: DensityOperator | StateVector, keep_modes: Iterable[int]) -> DensityOperator:
    """Reduced density operator on ``keep_modes`` (returned in ascending mode order)."""
    space = rho.space
    keep = sorted(set(int(k) for k in keep_modes))
    if not keep:
        raise ValueError("keep_modes must name at least one mode")
    for k in keep:
        space._check_mode(k)
    drop = [m for m in range(space.n_modes) if m not in keep]
    sub = space.subspace(keep)
    nm = space.n_modes
    # tensor axis j corresponds to mode nm - 1 - j
    keep_axes = [nm - 1 - m for m in keep[::-1]]
    drop_axes = [nm - 1 - m for m in drop[::-1]]
    if isinstance(rho, StateVector):
        psi = rho.tensor().transpose(keep_axes + drop_axes).reshape(sub.total_dim, -1)
        return DensityOperator(psi @ psi.conj().T, sub, validate=False)
    t = rho.matrix.reshape(space.tensor_shape * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:nm])
    col = list(letters[nm : 2 * nm])
    for ax in drop_axes:
        col[ax] = row[ax]
    out = "".join(row[ax] for ax in keep_axes) + "".join(col[ax] for ax in keep_axes)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    return DensityOperator(reduced.reshape(sub.total_dim, sub.total_dim), sub, validate=False)


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return np.outer(state.amplitudes, state.amplitudes.conj())
    return state.matrix


def _sqrt_factor(mat: np.ndarray, rel_cutoff: float = 1e-13) -> np.ndarray:
    """``L`` with ``mat ~ L L^dag``, dropping eigenvalues at the round-off floor."""
    w, v = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    keep = w > rel_cutoff * max(w[-1], 0.0)
    return v[:, keep] * np.sqrt(w[keep])


def fidelity(a, b) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))^2``; equals ``<psi|b|psi>`` for pure ``a``."""
    _same_space(a.space, b.space)
    if isinstance(a, StateVector):
        return float(np.clip(np.real(np.vdot(a.amplitudes, _as_matrix(b) @ a.amplitudes)), 0, 1))
    if isinstance(b, StateVector):
        return fidelity(b, a)
    # trace norm of sqrt(a) sqrt(b) from factor square roots: singular values carry
    # absolute error ~eps, whereas square roots of near-zero eigenvalues amplify it
    nuclear = np.linalg.svd(_sqrt_factor(a.matrix).conj().T @ _sqrt_factor(b.matrix), compute_uv=False).sum()
    return float(np.clip(nuclear**2, 0, 1))


def trace_distance(a, b) -> float:
    _same_space(a.space, b.space)
    w = np.linalg.eigvalsh(_as_matrix(a) - _as_matrix(b))
    return float(np.clip(0.5 * np.abs(w).sum(), 0, 1))


def state_metrics(a, b) -> dict[str, float]:
    """Fidelity (squared convention), root fidelity and trace distance."""
    f = fidelity(a, b)
    return {"fidelity": f, "root_fidelity": float(np.sqrt(f)), "trace_distance": trace_distance(a, b)}


def von_neumann_entropy(rho: DensityOperator | StateVector) -> float:
    if isinstance(rho, StateVector):
        return 0.0
    w = np.linalg.eigvalsh(rho.matrix)
    w = w[w > ENTROPY_CUTOFF]
    return float(-np.sum(w * np.log(w)))


def commutator(x, y):
    return x @ y - y @ x


# ---------------------------------------------------------------------------
# serialization (complex numbers as [re, im], matrices row-major)


def complex_pairs(values) -> list:
    arr = np.asarray(values)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [complex_pairs(v) for v in arr]


def from_complex_pairs(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(state: StateVector | DensityOperator) -> dict:
    if isinstance(state, StateVector):
        return {"kind": "state_vector", "mode_dims": list(state.space.mode_dims),
                "amplitudes": complex_pairs(state.amplitudes)}
    return {"kind": "density_operator", "mode_dims": list(state.space.mode_dims),
            "matrix": complex_pairs(state.matrix)}


def state_from_json(data: dict) -> StateVector | DensityOperator:
    space = FockSpace(tuple(data["mode_dims"]))
    if data["kind"] == "state_vector":
        return StateVector(from_complex_pairs(data["amplitudes"]), space)
    if data["kind"] == "density_operator":
        return DensityOperator(from_complex_pairs(data["matrix"]), space)
    raise ValueError(f"unknown state kind {data['kind']!r}")


__all__ = [
    "LEAKAGE_TOLERANCE", "TruncationError", "FockSpace", "StateVector", "DensityOperator",
    "lowering_matrix", "embed", "tensor", "annihilation", "creation", "number_operator",
    "displacement", "single_mode_displacement", "single_mode_squeezer", "coherent_leakage",
    "basis_state", "vacuum", "fock_state", "coherent_state", "squeezed_vacuum", "thermal_state",
    "product_state", "partial_trace", "fidelity", "trace_distance", "state_metrics",
    "von_neumann_entropy", "commutator", "complex_pairs", "from_complex_pairs",
    "state_to_json", "state_from_json",
]
