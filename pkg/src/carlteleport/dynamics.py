"""Linearized CARL dynamics: the three-mode parametric Hamiltonian and its states.

Mode order throughout is ``(a1, a2, a3)``: recoiling atoms that lost momentum,
atoms that gained momentum, and the scattered photons.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import lgamma

import numpy as np
import scipy.constants as const
import scipy.sparse.linalg as spla

from .fock import (
    LEAKAGE_TOLERANCE,
    DensityOperator,
    FockSpace,
    StateVector,
    TruncationError,
    vacuum,
)
from .gaussian import GaussianState, QuadraticHamiltonian, evolve_gaussian, mode_populations

A1, A2, A3 = 0, 1, 2
DENSE_LIMIT = 1024

# config key -> (symbol, meaning)
PARAMETER_KEYS = {
    "g": ("g", "single-atom coupling, inverse time"),
    "n_atoms": ("N", "condensate atom number; enters the linear model only as g*sqrt(N)"),
    "omega_r": ("omega_r", "recoil frequency hbar q^2 / 2M, inverse time"),
    "delta": ("Delta", "pump-probe detuning omega_2 - omega_1, inverse time"),
    "delta_plus": ("delta_+", "Delta + omega_r (derived, read-only)"),
    "delta_minus": ("delta_-", "Delta - omega_r (derived, read-only)"),
}


class EmptyWindowError(ValueError):
    """The admissible interaction-time window is empty (g sqrt(N) >= 4 omega_r)."""


@dataclass(frozen=True)
class CarlParams:
    g: float
    n_atoms: float
    omega_r: float
    delta: float

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if not self.n_atoms >= 1:
            raise ValueError("n_atoms must be >= 1")
        if not self.omega_r > 0:
            raise ValueError("omega_r must be positive")

    @classmethod
    def from_ratio(cls, ratio: float, omega_r: float = 1.0, n_atoms: float = 1e6,
                   delta: float | None = None) -> "CarlParams":
        """Parameters with ``g sqrt(N) / 2 omega_r = ratio``.

        ``delta`` defaults to ``+omega_r``, where the a1-a3 pair process is resonant.
        """
        coupling = 2 * omega_r * ratio
        return cls(coupling / np.sqrt(n_atoms), n_atoms, omega_r,
                   omega_r if delta is None else delta)

    @property
    def collective_coupling(self) -> float:
        return self.g * np.sqrt(self.n_atoms)

    @property
    def delta_plus(self) -> float:
        return self.delta + self.omega_r

    @property
    def delta_minus(self) -> float:
        return self.delta - self.omega_r

    @property
    def quantum_ratio(self) -> float:
        """``g sqrt(N) / 2 omega_r``; small in the quantum limit."""
        return self.collective_coupling / (2 * self.omega_r)

    def with_atoms(self, n_atoms: float) -> "CarlParams":
        return CarlParams(self.g, n_atoms, self.omega_r, self.delta)

    def to_dict(self) -> dict:
        # g is taken real positive; its phase is recorded so reports state the convention
        return {"g": self.g, "g_phase": 0.0, "n_atoms": self.n_atoms, "omega_r": self.omega_r, "delta": self.delta,
                "delta_plus": self.delta_plus, "delta_minus": self.delta_minus}


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory quantities (SI units) from which the model parameters follow."""

    rabi: float
    detuning20: float
    pump_frequency: float
    dipole: float
    volume: float
    mass: float
    k1: tuple[float, float, float]
    k2: tuple[float, float, float]
    condensate_size: float
    wavelength: float
    n_atoms: float = 1.0
    probe_detuning: float | None = None

    def __post_init__(self):
        if not self.condensate_size > 0:
            raise ValueError("condensate_size must be positive")


@dataclass(frozen=True)
class ModelConversion:
    params: CarlParams
    q: float
    delocalized: bool
    notes: tuple[str, ...] = field(default_factory=tuple)


def physical_to_model(p: PhysicalParams) -> ModelConversion:
    k1, k2 = np.asarray(p.k1, float), np.asarray(p.k2, float)
    q = float(np.linalg.norm(k1 - k2))
    if q == 0:
        raise ValueError("degenerate geometry: k1 == k2 gives zero recoil momentum")
    omega_r = const.hbar * q**2 / (2 * p.mass)
    g = (p.rabi / (2 * p.detuning20)) * np.sqrt(p.pump_frequency * p.dipole**2 / (2 * const.hbar * const.epsilon_0 * p.volume))
    delta = p.probe_detuning
    if delta is None:
        delta = p.pump_frequency - const.c * float(np.linalg.norm(k1))
    notes = []
    delocalized = p.condensate_size > 10 * p.wavelength
    if not delocalized:
        notes.append("condensate size L <= 10 lambda: momentum-state description not justified")
        warnings.warn(notes[-1], stacklevel=2)
    return ModelConversion(CarlParams(float(abs(g)), p.n_atoms, omega_r, float(delta)), q, delocalized, tuple(notes))


# ---------------------------------------------------------------------------
# quantum three-mode model


def build_three_mode_hamiltonian(params: CarlParams) -> QuadraticHamiltonian:
    """``d+ a2^dag a2 - d- a1^dag a1 + i g sqrt(N) [(a1^dag + a2) a3^dag - h.c.]``."""
    eps = params.collective_coupling
    a = np.zeros((3, 3), complex)
    a[A1, A1] = -params.delta_minus
    a[A2, A2] = params.delta_plus
    a[A3, A2] = 1j * eps
    a[A2, A3] = -1j * eps
    b = np.zeros((3, 3), complex)
    b[A1, A3] = b[A3, A1] = 0.5j * eps
    return QuadraticHamiltonian(a, b)


def constant_of_motion(space: FockSpace, sparse: bool = False):
    """Diagonal of ``C = n2 - n1 + n3`` (as a matrix unless ``sparse``)."""
    import scipy.sparse as sp

    c = (space.number_grid(A2) - space.number_grid(A1) + space.number_grid(A3)).astype(float)
    return sp.diags(c, format="csr") if sparse else np.diag(c)


def gaussian_from_vacuum(params: CarlParams, t: float) -> GaussianState:
    return evolve_gaussian(build_three_mode_hamiltonian(params), t, GaussianState.vacuum(3))


def exact_populations(params: CarlParams, t: float) -> np.ndarray:
    """``(N1, N2, N3)`` from the truncation-free Gaussian evolution."""
    return mode_populations(gaussian_from_vacuum(params, t))


class FockPropagator:
    """``exp(-i H t)`` on a truncated space.

    Dense eigendecomposition up to ``dense_limit`` basis states, otherwise
    sparse action of the exponential (``scipy.sparse.linalg.expm_multiply``).
    """

    def __init__(self, h, space: FockSpace, dense_limit: int = DENSE_LIMIT):
        self.space = space
        self.matrix = h.to_fock(space, sparse=True) if isinstance(h, QuadraticHamiltonian) else h
        self.dense = space.total_dim <= dense_limit
        if self.dense:
            mat = self.matrix.toarray() if hasattr(self.matrix, "toarray") else np.asarray(self.matrix)
            self._energies, self._vectors = np.linalg.eigh(mat)
        else:
            self._sparse = self.matrix.tocsc() if hasattr(self.matrix, "tocsc") else self.matrix

    def _apply(self, psi: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return psi.copy()
        if self.dense:
            return self._vectors @ (np.exp(-1j * self._energies * t) * (self._vectors.conj().T @ psi))
        return spla.expm_multiply(-1j * t * self._sparse, psi)

    def evolve(self, initial: StateVector, t: float, check: bool = True) -> StateVector:
        return self.evolve_many(initial, [t], check)[0]

    def evolve_many(self, initial: StateVector, times, check: bool = True) -> list[StateVector]:
        times = np.asarray(times, dtype=float).reshape(-1)
        if np.any(times < 0) or np.any(np.diff(times) < 0):
            raise ValueError("times must be non-negative and non-decreasing")
        if initial.space.mode_dims != self.space.mode_dims:
            raise ValueError("initial state lives on a different space")
        if check:
            initial.check_truncation()
        out, psi, last = [], initial.amplitudes, 0.0
        for t in times:
            # dense: exact from t=0; sparse: step from the previous time
            psi = self._apply(initial.amplitudes, t) if self.dense else self._apply(psi, t - last)
            last = t
            state = StateVector(psi, self.space, normalize=True)
            if check:
                state.check_truncation()
            out.append(state)
        return out


def evolve_fock(h, t, initial: StateVector, check: bool = True, dense_limit: int = DENSE_LIMIT):
    """Evolve ``initial`` under ``h`` (QuadraticHamiltonian or matrix).

    ``t`` may be a scalar (returns one state) or a non-decreasing sequence.

    Raises
    ------
    TruncationError
        If the initial state or any result has top-two-level population above 1e-6.
    """
    prop = FockPropagator(h, initial.space, dense_limit)
    if np.ndim(t) == 0:
        return prop.evolve(initial, float(t), check)
    return prop.evolve_many(initial, t, check)


def fock_populations(state: StateVector) -> np.ndarray:
    p = state.populations()
    return np.array([np.dot(state.space.number_grid(m), p) for m in range(state.space.n_modes)])


@dataclass(frozen=True)
class AsymptoticPopulations:
    n1: float
    n2: float
    n3: float
    quantum_limit: bool
    long_time: bool

    def as_array(self) -> np.ndarray:
        return np.array([self.n1, self.n2, self.n3])


def analytic_populations(params: CarlParams, t: float, long_time_threshold: float = 4.0) -> AsymptoticPopulations:
    """Exponential-gain asymptotics, valid for ``g sqrt(N) << 2 omega_r`` and ``2 g sqrt(N) t >> 1``."""
    eps = params.collective_coupling
    ratio2 = params.quantum_ratio**2
    growth = 0.25 * np.exp(2 * eps * t)
    quantum_limit = params.quantum_ratio < 1
    long_time = 2 * eps * t >= long_time_threshold
    if not quantum_limit:
        warnings.warn("outside the quantum limit g sqrt(N) < 2 omega_r; asymptotic populations unreliable", stacklevel=2)
    return AsymptoticPopulations((1 + ratio2) * growth, ratio2 * growth, growth, quantum_limit, long_time)


@dataclass(frozen=True)
class InteractionWindow:
    t_lower_scale: float
    t_upper: float

    def time_at(self, fraction: float) -> float:
        return fraction * self.t_upper


def interaction_window(params: CarlParams) -> InteractionWindow:
    """Times with ``1/(g sqrt N) << t <= ln(4 omega_r / g sqrt N) / (g sqrt N)``, i.e. N2 <= 1."""
    eps = params.collective_coupling
    if eps >= 4 * params.omega_r:
        raise EmptyWindowError(f"g sqrt(N) = {eps:.6g} >= 4 omega_r = {4 * params.omega_r:.6g}: no admissible time")
    return InteractionWindow(1 / eps, np.log(4 * params.omega_r / eps) / eps)


def state_0_coefficients(params: CarlParams, t: float) -> tuple[complex, complex, np.ndarray]:
    """``(alpha, beta, (N1, N2, N3))`` for the vacuum-evolved state.

    Magnitudes come from the populations, phases from ``<a1 a2>`` and
    ``<a1 a3>`` which equal ``alpha (1 + N1)`` and ``beta (1 + N1)``.
    """
    g = gaussian_from_vacuum(params, t)
    n = mode_populations(g)
    n = np.clip(n, 0, None)
    alpha = np.sqrt(n[A2] / (1 + n[A1])) * np.exp(1j * np.angle(g.correlator_aa(A1, A2)))
    beta = np.sqrt(n[A3] / (1 + n[A1])) * np.exp(1j * np.angle(g.correlator_aa(A1, A3)))
    return complex(alpha), complex(beta), n


def _log_power(x: complex, k: np.ndarray) -> np.ndarray:
    if x == 0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * np.log(abs(x))


def _state_0_amplitudes(alpha: complex, beta: complex, n1: float, space: FockSpace) -> np.ndarray:
    d1, d2, d3 = space.mode_dims
    amps = np.zeros(space.total_dim, dtype=complex)
    m = np.arange(d2)[:, None]
    n = np.arange(d3)[None, :]
    k = m + n
    ok = k < d1
    lg = np.vectorize(lgamma)
    logmag = 0.5 * (lg(k + 1) - lg(m + 1) - lg(n + 1)) + _log_power(alpha, m) + _log_power(beta, n)
    coeff = np.exp(logmag) * np.exp(1j * (m * np.angle(alpha) + n * np.angle(beta))) / np.sqrt(1 + n1)
    coeff = np.where(ok, coeff, 0)
    mm, nn = np.broadcast_arrays(m, n)
    idx = np.where(ok, (mm + nn) + d1 * (mm + d2 * nn), 0)
    amps[idx[ok]] = coeff[ok]
    return amps


def build_state_0(params: CarlParams, t: float, space: FockSpace) -> StateVector:
    """Closed-form vacuum-evolved state ``sum alpha^m beta^n sqrt((m+n)!/m!n!) |m+n, m, n>``."""
    if space.n_modes != 3:
        raise ValueError("the CARL state lives on three modes (a1, a2, a3)")
    alpha, beta, n = state_0_coefficients(params, t)
    amps = _state_0_amplitudes(alpha, beta, n[A1], space)
    missing = 1 - np.vdot(amps, amps).real
    if missing > LEAKAGE_TOLERANCE:
        raise TruncationError(f"dims {space.mode_dims} cut off the state", missing)
    return StateVector(amps, space, normalize=True).check_truncation()


def state_0_fidelity(params: CarlParams, t: float, space: FockSpace, dense_limit: int = DENSE_LIMIT) -> float:
    """Overlap fidelity between the closed form and direct Fock evolution."""
    closed = build_state_0(params, t, space)
    evolved = evolve_fock(build_three_mode_hamiltonian(params), t, vacuum(space), dense_limit=dense_limit)
    return abs(closed.overlap(evolved)) ** 2


def twin_state_vector(n3_mean: float, space: FockSpace) -> StateVector:
    """``sum beta^n |n, n> / sqrt(1 + N1)`` on modes (a1, a3), with N1 = N3 = ``n3_mean``."""
    if space.n_modes != 2:
        raise ValueError("the twin state lives on two modes (a1, a3)")
    if n3_mean < 0:
        raise ValueError("mean population must be non-negative")
    beta2 = n3_mean / (1 + n3_mean)
    d = min(space.mode_dims)
    n = np.arange(d)
    coeff = np.sqrt(beta2) ** n / np.sqrt(1 + n3_mean)
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[n + space.mode_dims[0] * n] = coeff
    missing = 1 - np.sum(coeff**2)
    if missing > LEAKAGE_TOLERANCE:
        raise TruncationError(f"dims {space.mode_dims} cut off the twin state", missing)
    return StateVector(amps, space, normalize=True).check_truncation()


def reduced_twin_state(n3_mean: float, space: FockSpace) -> DensityOperator:
    return twin_state_vector(n3_mean, space).to_density()


def population_series(params: CarlParams, times, space: FockSpace, dense_limit: int = DENSE_LIMIT) -> dict[str, np.ndarray]:
    """Fock-evolved populations, ``<C>`` and leakage alongside the Gaussian and asymptotic values."""
    times = np.asarray(times, dtype=float)
    states = evolve_fock(build_three_mode_hamiltonian(params), times, vacuum(space), dense_limit=dense_limit)
    cdiag = space.number_grid(A2) - space.number_grid(A1) + space.number_grid(A3)
    fock = np.array([fock_populations(s) for s in states])
    gauss = np.array([exact_populations(params, t) for t in times])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        asym = np.array([analytic_populations(params, t).as_array() for t in times])
    return {
        "t": times,
        "N1": fock[:, 0], "N2": fock[:, 1], "N3": fock[:, 2],
        "C": np.array([np.dot(cdiag, s.populations()) for s in states]),
        "leakage": np.array([s.leakage() for s in states]),
        "gaussian_N1": gauss[:, 0], "gaussian_N2": gauss[:, 1], "gaussian_N3": gauss[:, 2],
        "analytic_N1": asym[:, 0], "analytic_N2": asym[:, 1], "analytic_N3": asym[:, 2],
    }


# ---------------------------------------------------------------------------
# classical model


@dataclass(frozen=True)
class ClassicalAtomState:
    theta: np.ndarray
    p: np.ndarray
    field: complex

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if theta.size < 1 or theta.shape != p.shape:
            raise ValueError("theta and p must be equal-length, non-empty arrays")
        theta.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "field", complex(self.field))


def classical_energy(params: CarlParams, s: ClassicalAtomState) -> float:
    """``sum_j [omega_r p_j^2 - i g (a e^{i theta_j} - c.c.)] - Delta |a|^2``."""
    coupling = 2 * params.g * np.sum(np.imag(s.field * np.exp(1j * s.theta)))
    return float(params.omega_r * np.sum(s.p**2) + coupling - params.delta * abs(s.field) ** 2)


def classical_momentum(s: ClassicalAtomState) -> float:
    return float(abs(s.field) ** 2 + np.sum(s.p))


@dataclass(frozen=True)
class ClassicalTrajectory:
    times: np.ndarray
    states: list[ClassicalAtomState]
    energy: np.ndarray
    momentum: np.ndarray


def _classical_rhs(params: CarlParams, y: np.ndarray, n: int) -> np.ndarray:
    theta, p = y[:n], y[n : 2 * n]
    a = y[2 * n] + 1j * y[2 * n + 1]
    e = np.exp(1j * theta)
    adot = params.g * np.sum(e.conj()) + 1j * params.delta * a
    out = np.empty_like(y)
    out[:n] = 2 * params.omega_r * p
    out[n : 2 * n] = -2 * params.g * np.real(a * e)
    out[2 * n] = adot.real
    out[2 * n + 1] = adot.imag
    return out


def classical_carl_simulate(params: CarlParams, initial: ClassicalAtomState, t: float, dt: float,
                            sample_every: int = 1) -> ClassicalTrajectory:
    """Fixed-step RK4 integration of the classical CARL equations of motion."""
    n = initial.theta.size
    fastest = max(params.omega_r, params.g * np.sqrt(n), abs(params.delta))
    if dt <= 0 or dt * fastest >= 0.05:
        raise ValueError(f"step size dt={dt} does not resolve the fastest frequency {fastest:.4g}")
    steps = int(round(t / dt))
    y = np.concatenate([initial.theta, initial.p, [initial.field.real, initial.field.imag]])
    times, states = [0.0], [initial]
    for k in range(1, steps + 1):
        k1 = _classical_rhs(params, y, n)
        k2 = _classical_rhs(params, y + 0.5 * dt * k1, n)
        k3 = _classical_rhs(params, y + 0.5 * dt * k2, n)
        k4 = _classical_rhs(params, y + dt * k3, n)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % sample_every == 0 or k == steps:
            times.append(k * dt)
            states.append(ClassicalAtomState(y[:n], y[n : 2 * n], complex(y[2 * n], y[2 * n + 1])))
    energy = np.array([classical_energy(params, s) for s in states])
    momentum = np.array([classical_momentum(s) for s in states])
    return ClassicalTrajectory(np.array(times), states, energy, momentum)
