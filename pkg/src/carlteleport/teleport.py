"""Bell measurement, conditional correction and the equivalent Gaussian channel.

The resource lives on modes ``(a1, a3)``; the state to teleport lives on the
extra radiation mode ``a4`` and is supplied as a single-mode state.  The
Bell-measurement POVM on ``a3`` is ``Pi_alpha = D(alpha) sigma^T D(alpha)^dag / pi``
with the transpose taken in the Fock basis.

With that transpose, a resource ``sum beta^n |n, n>`` with real positive
``beta`` leaves ``a1`` in ``D(conj(alpha)) sigma D(conj(alpha))^dag`` in the
high-gain limit, so the feed-forward correction that reproduces the
Gaussian channel is ``D(-conj(alpha))`` (``correction="matched"``).  The
literal ``D(alpha)`` is available as ``correction="literal"``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.linalg as sla

from ._displace import DisplacementBasis
from .dynamics import (
    A3,
    CarlParams,
    build_state_0,
    exact_populations,
    state_0_coefficients,
)
from .fock import (
    LEAKAGE_TOLERANCE,
    DensityOperator,
    FockSpace,
    StateVector,
    TruncationError,
    coherent_leakage,
    fidelity,
    partial_trace,
    single_mode_displacement,
    tensor,
    trace_distance,
)
from .gaussian import QuadraticHamiltonian

NEGLIGIBLE_PROBABILITY = 1e-14


class NegligibleOutcomeError(ValueError):
    """The requested Bell outcome has (numerically) zero probability density."""

    def __init__(self, p_alpha: float):
        super().__init__(f"outcome probability density {p_alpha:.3e} is negligible; not normalizing")
        self.p_alpha = p_alpha


@dataclass(frozen=True)
class BellOutcome:
    alpha: complex
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("outcome weight must be non-negative")


def noise_parameter(n1: float, n3: float) -> float:
    """``1 + S - sqrt(S (S + 2))`` with ``S = N1 + N3``, in cancellation-free form."""
    s = n1 + n3
    return 1.0 / (1.0 + s + np.sqrt(s * (s + 2.0)))


@dataclass(frozen=True)
class ChannelSpec:
    k: float
    provenance: dict | None = None

    def __post_init__(self):
        if not self.k >= 0:
            raise ValueError("noise parameter K must be non-negative")
        if self.provenance is not None:
            expected = noise_parameter(self.provenance["n1"], self.provenance["n3"])
            if abs(expected - self.k) > 1e-12:
                raise ValueError(f"K = {self.k} disagrees with its provenance ({expected})")


def channel_parameter(n1: float, n3: float, time: float | None = None) -> ChannelSpec:
    if n1 < 0 or n3 < 0:
        raise ValueError("populations must be non-negative")
    return ChannelSpec(noise_parameter(n1, n3), {"n1": float(n1), "n3": float(n3), "time": time})


@dataclass(frozen=True)
class GridSpec:
    """Polar quadrature: Gauss-Legendre in ``|alpha|^2`` times a uniform angular rule."""

    radius: float | None = None
    n_radial: int = 64
    n_angular: int = 64


def polar_nodes(radius: float, n_radial: int, n_angular: int):
    """Nodes ``alpha`` and area weights with ``sum w f(alpha) ~ int d^2 alpha f``."""
    x, w = np.polynomial.legendre.leggauss(n_radial)
    u = 0.5 * (x + 1) * radius**2
    wu = 0.5 * w * radius**2
    theta = 2 * np.pi * np.arange(n_angular) / n_angular
    # d^2 alpha = (1/2) du dtheta
    return np.sqrt(u), theta, 0.5 * wu * (2 * np.pi / n_angular)


# ---------------------------------------------------------------------------
# factorizations


def _state_factor(sigma) -> np.ndarray:
    """``L`` with ``sigma = L L^dag`` (columns weighted by sqrt of eigenvalues)."""
    if isinstance(sigma, StateVector):
        return sigma.amplitudes[:, None].copy()
    w, v = np.linalg.eigh(sigma.matrix)
    keep = w > 1e-14 * max(w.max(), 1e-300)
    return v[:, keep] * np.sqrt(w[keep])


def _resource_factors(resource) -> np.ndarray:
    """Array ``F[k, i1, i3]`` with ``resource = sum_k |F_k>><<F_k|``."""
    space = resource.space
    if space.n_modes != 2:
        raise ValueError("the resource must be a two-mode state on (a1, a3)")
    d1, d3 = space.mode_dims
    if isinstance(resource, StateVector):
        return resource.tensor().T[None, :, :].copy()
    w, v = np.linalg.eigh(resource.matrix)
    keep = w > 1e-14 * w.max()
    vecs = v[:, keep] * np.sqrt(w[keep])
    return vecs.T.reshape(-1, d3, d1).transpose(0, 2, 1).copy()


def _mean_number(sigma) -> float:
    p = np.real(np.diag(sigma.matrix)) if isinstance(sigma, DensityOperator) else sigma.populations()
    return float(np.dot(np.arange(p.size), p))


def resource_populations(resource) -> tuple[float, float]:
    f = _resource_factors(resource)
    w = np.sum(np.abs(f) ** 2, axis=0)
    return float(np.dot(np.arange(w.shape[0]), w.sum(axis=1))), float(np.dot(np.arange(w.shape[1]), w.sum(axis=0)))


def _single_mode(sigma) -> int:
    if sigma.space.n_modes != 1:
        raise ValueError("the state to teleport must be a single-mode state")
    return sigma.space.mode_dims[0]


def _correction(kind) -> Callable[[np.ndarray], np.ndarray]:
    if callable(kind):
        return kind
    if kind == "matched":
        return lambda a: -np.conj(a)
    if kind == "literal":
        return lambda a: a
    raise ValueError(f"unknown correction {kind!r}")


# ---------------------------------------------------------------------------
# POVM


def povm_element(alpha: complex, sigma, space: FockSpace | None = None, check: bool = True) -> np.ndarray:
    """``Pi_alpha = D(alpha) sigma^T D(alpha)^dag / pi`` compressed to ``space`` (default: sigma's).

    Raises
    ------
    TruncationError
        If ``check`` and ``|alpha|^2`` exceeds a quarter of the output dimension.
    """
    dsig = _single_mode(sigma)
    dim = dsig if space is None else space.mode_dims[0]
    if check and abs(alpha) ** 2 > dim / 4:
        raise TruncationError(f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds dim/4", coherent_leakage(alpha, dim))
    lt = _state_factor(sigma).conj()  # sigma^T = conj(L) conj(L)^dag
    basis = DisplacementBasis(max(dim, dsig), abs(alpha))
    dl = basis.apply([alpha], lt, dim)[0]
    return dl @ dl.conj().T / np.pi


def povm_grid_integral(sigma, radius: float, dim: int, n_radial: int = 64, n_angular: int = 64) -> np.ndarray:
    """Polar-quadrature integral of ``Pi_alpha`` over the disk ``|alpha| <= radius``."""
    dsig = _single_mode(sigma)
    lt = _state_factor(sigma).conj()
    radii, theta, weights = polar_nodes(radius, n_radial, n_angular)
    basis = DisplacementBasis(max(dim, dsig), radius)
    total = np.zeros((dim, dim), complex)
    for r, w in zip(radii, weights):
        dl = basis.apply(r * np.exp(1j * theta), lt, dim)
        cols = np.sqrt(w / np.pi) * dl.transpose(1, 0, 2).reshape(dim, -1)
        total += cols @ cols.conj().T
    return total


# ---------------------------------------------------------------------------
# conditional dynamics


class _BellEngine:
    """Batched evaluation of ``p_alpha`` and the (unnormalized) corrected states."""

    def __init__(self, resource, sigma, max_radius: float, out_dim: int | None = None, correction="matched"):
        self.factors = _resource_factors(resource)
        self.sigma_t = _state_factor(sigma).conj()
        self.dsig = _single_mode(sigma)
        _, self.d1, self.d3 = self.factors.shape
        self.out_dim = out_dim or self.d1
        self.correction = _correction(correction)
        top = max(self.d1, self.d3, self.dsig, self.out_dim)
        self.basis = DisplacementBasis(top, max_radius)

    def conditional(self, alphas: np.ndarray) -> np.ndarray:
        """``W`` with ``rho_alpha * p_alpha = W W^dag / pi`` on mode a1, shape (n, d1, m)."""
        dl = self.basis.apply(np.conj(alphas), self.sigma_t, self.d3)  # (n, d3, rank)
        w = np.einsum("kij,njr->nikr", self.factors, dl)
        return w.reshape(w.shape[0], self.d1, -1)

    def corrected(self, alphas: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.basis.apply(self.correction(alphas), w, self.out_dim)

    def probabilities(self, alphas: np.ndarray) -> np.ndarray:
        w = self.conditional(alphas)
        return np.sum(np.abs(w) ** 2, axis=(1, 2)) / np.pi


@dataclass(frozen=True)
class ConditionalOutcome:
    p_alpha: float
    rho_alpha: DensityOperator
    tau_alpha: DensityOperator
    correction_amplitude: complex


def conditional_state(resource, sigma, alpha: complex, correction="matched", out_dim: int | None = None) -> ConditionalOutcome:
    """Outcome density ``p_alpha``, conditional state on a1 and its corrected version."""
    engine = _BellEngine(resource, sigma, max(abs(alpha), 1e-12), out_dim, correction)
    alphas = np.array([alpha], dtype=complex)
    w = engine.conditional(alphas)
    p = float(np.sum(np.abs(w) ** 2) / np.pi)
    if p <= NEGLIGIBLE_PROBABILITY:
        raise NegligibleOutcomeError(p)
    rho = w[0] @ w[0].conj().T / np.pi / p
    t = engine.corrected(alphas, w)[0]
    tau = t @ t.conj().T / np.pi / p
    d1 = FockSpace((engine.d1,))
    return ConditionalOutcome(
        p,
        DensityOperator(0.5 * (rho + rho.conj().T), d1),
        DensityOperator.from_unnormalized(tau, FockSpace((engine.out_dim,))),
        complex(engine.correction(alphas)[0]),
    )


@dataclass(frozen=True)
class TeleportationResult:
    tau: DensityOperator
    raw_trace: float
    channel: ChannelSpec
    grid: GridSpec
    min_radius: float

    @property
    def quadrature_tolerance(self) -> float:
        return abs(1.0 - self.raw_trace)


def coverage_radius(k: float, sigma) -> float:
    return float(3 * (np.sqrt(k) + np.sqrt(_mean_number(sigma)) + 1))


def default_radius(resource, sigma) -> float:
    n1, n3 = resource_populations(resource)
    k = noise_parameter(n1, n3)
    return float(max(coverage_radius(k, sigma), 4 * np.sqrt(n3 + 1 + _mean_number(sigma))))


def teleported_state_quadrature(resource, sigma, grid: GridSpec | None = None, correction="matched",
                                out_dim: int | None = None) -> TeleportationResult:
    """Average of ``p_alpha tau_alpha`` over the Bell outcomes by polar quadrature.

    The output lives on a1 truncated to ``out_dim`` (default: sigma's dimension).
    """
    grid = grid or GridSpec()
    n1, n3 = resource_populations(resource)
    spec = channel_parameter(n1, n3)
    min_radius = coverage_radius(spec.k, sigma)
    radius = grid.radius if grid.radius is not None else default_radius(resource, sigma)
    if radius < min_radius:
        raise ValueError(f"grid radius {radius:.4g} below the coverage bound {min_radius:.4g}")
    out_dim = out_dim or _single_mode(sigma)
    n_angular = max(grid.n_angular, 2 * max(out_dim, _single_mode(sigma)) + 2)
    if n_angular != grid.n_angular:
        warnings.warn(f"raising angular nodes to {n_angular} to avoid aliasing", stacklevel=2)
    grid = GridSpec(float(radius), grid.n_radial, n_angular)
    engine = _BellEngine(resource, sigma, radius, out_dim, correction)
    radii, theta, weights = polar_nodes(radius, grid.n_radial, grid.n_angular)
    tau = np.zeros((out_dim, out_dim), complex)
    for r, wgt in zip(radii, weights):
        alphas = r * np.exp(1j * theta)
        t = engine.corrected(alphas, engine.conditional(alphas))
        cols = np.sqrt(wgt / np.pi) * t.transpose(1, 0, 2).reshape(out_dim, -1)
        tau += cols @ cols.conj().T
    raw = float(np.trace(tau).real)
    return TeleportationResult(DensityOperator.from_unnormalized(tau, FockSpace((out_dim,))), raw, spec, grid,
                               float(min_radius))


# ---------------------------------------------------------------------------
# closed-form channel


def gaussian_channel_apply(sigma, spec: ChannelSpec | float, n_radial: int = 48, n_angular: int | None = None) -> DensityOperator:
    """``int d^2 alpha exp(-|alpha|^2/K) / (pi K) D(alpha) sigma D(alpha)^dag``.

    Gauss-Laguerre in ``|alpha|^2 / K`` times a uniform angular rule; the
    result is compressed to sigma's space.
    """
    k = spec.k if isinstance(spec, ChannelSpec) else float(spec)
    if k < 0:
        raise ValueError("K must be non-negative")
    sigma_rho = sigma.to_density() if isinstance(sigma, StateVector) else sigma
    if k < 1e-12:
        return sigma_rho
    dim = _single_mode(sigma)
    n_angular = n_angular or max(64, 2 * dim + 2)
    x, w = np.polynomial.laguerre.laggauss(n_radial)
    keep = w > 1e-30
    x, w = x[keep], w[keep]
    radii = np.sqrt(k * x)
    theta = 2 * np.pi * np.arange(n_angular) / n_angular
    lmat = _state_factor(sigma)
    basis = DisplacementBasis(dim, radii.max())
    out = np.zeros((dim, dim), complex)
    for r, wi in zip(radii, w):
        dl = basis.apply(r * np.exp(1j * theta), lmat, dim)
        cols = np.sqrt(wi / n_angular) * dl.transpose(1, 0, 2).reshape(dim, -1)
        out += cols @ cols.conj().T
    deficit = 1 - np.trace(out).real
    if deficit > LEAKAGE_TOLERANCE:
        raise TruncationError(f"channel output does not fit in dim {dim}", deficit)
    result = DensityOperator.from_unnormalized(out, FockSpace((dim,)))
    return result.check_truncation()


def channel_with_number_fluctuations(sigma, params: CarlParams, t: float, n_distribution) -> DensityOperator:
    """Mixture of fixed-N channels over a discrete condensate-number distribution.

    ``n_distribution`` maps atom numbers to probabilities (dict or (N, P) pairs).
    """
    items = list(n_distribution.items()) if isinstance(n_distribution, Mapping) else list(n_distribution)
    if not items:
        raise ValueError("empty atom-number distribution")
    probs = np.array([p for _, p in items], dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-9:
        raise ValueError("atom-number probabilities must be non-negative and sum to 1")
    dim = _single_mode(sigma)
    total = np.zeros((dim, dim), complex)
    for (n_atoms, prob) in items:
        if not n_atoms > 0:
            raise ValueError("atom numbers must be positive")
        n = exact_populations(params.with_atoms(n_atoms), t)
        total += prob * gaussian_channel_apply(sigma, channel_parameter(n[0], n[2], t)).matrix
    return DensityOperator.from_unnormalized(total, FockSpace((dim,)))


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class SamplingMesh:
    radius: float
    n_u: int
    n_theta: int
    cdf: np.ndarray


def _sampling_mesh(engine: _BellEngine, radius: float, n_u: int, n_theta: int) -> SamplingMesh:
    u_mid = (np.arange(n_u) + 0.5) * radius**2 / n_u
    theta_mid = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    dens = np.empty((n_u, n_theta))
    for i, u in enumerate(u_mid):
        dens[i] = engine.probabilities(np.sqrt(u) * np.exp(1j * theta_mid))
    cdf = np.cumsum(dens.reshape(-1))
    return SamplingMesh(radius, n_u, n_theta, cdf / cdf[-1])


def sample_bell_outcome(resource, sigma, rng_seed: int, count: int, grid: GridSpec | None = None,
                        refine: int = 4, correction="matched", return_states: bool = False,
                        chunk: int = 512):
    """Draw Bell outcomes by inverse CDF over a refined polar mesh.

    The mesh uses ``refine * n_radial`` uniform cells in ``|alpha|^2`` and
    ``refine/2 * n_angular`` angular cells with midpoint densities; inside a
    cell the outcome is uniform in area.  Each outcome carries its exact
    density ``p_alpha``.  The uniforms for sample ``i`` are row ``i`` of one
    ``default_rng(seed)`` draw, so results are a pure function of (seed, i).
    If ``return_states``, the mean of the corrected states is returned too.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    grid = grid or GridSpec()
    radius = grid.radius if grid.radius is not None else default_radius(resource, sigma)
    n1, n3 = resource_populations(resource)
    if radius < coverage_radius(noise_parameter(n1, n3), sigma):
        raise ValueError("sampling grid does not cover the outcome distribution")
    out_dim = _single_mode(sigma)
    engine = _BellEngine(resource, sigma, radius, out_dim, correction)
    mesh = _sampling_mesh(engine, radius, refine * grid.n_radial, max(1, refine // 2) * grid.n_angular)
    uniforms = np.random.default_rng(rng_seed).random((count, 3))
    cell = np.minimum(np.searchsorted(mesh.cdf, uniforms[:, 0], side="right"), mesh.cdf.size - 1)
    iu, it = np.divmod(cell, mesh.n_theta)
    du = radius**2 / mesh.n_u
    u = (iu + uniforms[:, 1]) * du
    theta = 2 * np.pi * (it + uniforms[:, 2]) / mesh.n_theta
    alphas = np.sqrt(u) * np.exp(1j * theta)
    weights = np.empty(count)
    tau_sum = np.zeros((out_dim, out_dim), complex)
    for start in range(0, count, chunk):
        sl = slice(start, start + chunk)
        w = engine.conditional(alphas[sl])
        p = np.sum(np.abs(w) ** 2, axis=(1, 2)) / np.pi
        weights[sl] = p
        if return_states:
            t = engine.corrected(alphas[sl], w) / np.sqrt(np.pi * p)[:, None, None]
            flat = t.transpose(1, 0, 2).reshape(out_dim, -1)
            tau_sum += flat @ flat.conj().T
    outcomes = [BellOutcome(complex(a), float(p)) for a, p in zip(alphas, weights)]
    if not return_states:
        return outcomes
    return outcomes, DensityOperator.from_unnormalized(tau_sum / count, FockSpace((out_dim,)))


# ---------------------------------------------------------------------------
# displacement pulse


def pulse_hamiltonian(params: CarlParams, gamma: complex) -> QuadraticHamiltonian:
    """Classical-a3 limit of the three-mode coupling on (a1, a2), number terms dropped:
    ``i g sqrt(N) [conj(gamma) (a1^dag + a2) - gamma (a1 + a2^dag)]``."""
    eps = params.collective_coupling
    return QuadraticHamiltonian(np.zeros((2, 2)), None, [1j * eps * np.conj(gamma), -1j * eps * gamma])


@dataclass(frozen=True)
class PulseResult:
    alpha_applied: complex
    unitary: np.ndarray
    deviation: float
    global_phase: float
    adjoint_form_deviation: float
    hamiltonian: QuadraticHamiltonian = field(repr=False)


def _phase_aligned_deviation(u: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    phase = float(np.angle(np.trace(target.conj().T @ u)))
    return float(np.linalg.norm(u - np.exp(1j * phase) * target, 2)), phase


def displacement_pulse(params: CarlParams, gamma: complex, tau_pulse: float,
                       space: FockSpace | None = None) -> PulseResult:
    """``exp(i H2 tau)`` on (a1, a2) and its factorization into single-mode displacements.

    ``deviation`` compares with ``D1(alpha) (x) D2(-conj(alpha))`` on the lower
    half of each Fock ladder, up to a global phase; ``adjoint_form_deviation``
    compares with ``D1(alpha) (x) D2(alpha)^dag = D1(alpha) (x) D2(-alpha)``, which
    agrees for real alpha.
    """
    space = space or FockSpace((20, 20))
    if space.n_modes != 2:
        raise ValueError("the pulse acts on the two atomic modes (a1, a2)")
    alpha = complex(-params.collective_coupling * np.conj(gamma) * tau_pulse)
    for d in space.mode_dims:
        if abs(alpha) ** 2 > d / 4:
            raise TruncationError(f"pulse amplitude |alpha|^2 = {abs(alpha) ** 2:.3g} exceeds dim/4",
                                  coherent_leakage(alpha, d))
    h2 = pulse_hamiltonian(params, gamma)
    u = sla.expm(1j * tau_pulse * h2.to_fock(space, sparse=False))
    d1, d2 = space.mode_dims
    central = np.flatnonzero((space.number_grid(0) < d1 // 2) & (space.number_grid(1) < d2 // 2))
    blk = np.ix_(central, central)
    target = tensor(single_mode_displacement(d1, alpha), single_mode_displacement(d2, -np.conj(alpha)))
    adjoint = tensor(single_mode_displacement(d1, alpha), single_mode_displacement(d2, -alpha))
    dev, phase = _phase_aligned_deviation(u[blk], target[blk])
    adjoint_dev, _ = _phase_aligned_deviation(u[blk], adjoint[blk])
    return PulseResult(alpha, u, dev, phase, adjoint_dev, h2)


def inverse_pulse_for(alpha_target: complex, params: CarlParams, tau_pulse: float = 1.0) -> tuple[complex, float]:
    """Pulse amplitude ``gamma`` that yields ``alpha_target`` in time ``tau_pulse``."""
    if tau_pulse == 0:
        raise ValueError("tau_pulse must be non-zero")
    if not np.isfinite(alpha_target):
        raise ValueError("alpha_target must be finite")
    gamma = -np.conj(alpha_target) / (params.collective_coupling * tau_pulse)
    return complex(gamma), float(tau_pulse)


# ---------------------------------------------------------------------------
# three-mode diagnostic


def three_mode_resource(params: CarlParams, t: float, space: FockSpace) -> DensityOperator:
    """The full vacuum-evolved state traced over a2, phase-referenced so ``<a1 a3>`` is real positive."""
    _, beta, _ = state_0_coefficients(params, t)
    psi = build_state_0(params, t, space)
    n3 = space.number_grid(A3)
    aligned = StateVector(psi.amplitudes * np.exp(-1j * np.angle(beta) * n3), space)
    return partial_trace(aligned, [0, 2])


def n2_correction_diagnostic(params: CarlParams, t: float, sigma, space: FockSpace,
                             grid: GridSpec | None = None) -> dict:
    """Trace distance between teleporting with the full state and the K-channel."""
    resource = three_mode_resource(params, t, space)
    n = exact_populations(params, t)
    spec = channel_parameter(n[0], n[2], t)
    tele = teleported_state_quadrature(resource, sigma, grid)
    ideal = gaussian_channel_apply(sigma, spec)
    return {
        "n1": float(n[0]), "n2": float(n[1]), "n3": float(n[2]), "k": spec.k,
        "trace_distance": trace_distance(tele.tau, ideal),
        "fidelity_full": fidelity(sigma, tele.tau) if isinstance(sigma, StateVector) else None,
        "fidelity_channel": fidelity(sigma, ideal) if isinstance(sigma, StateVector) else None,
    }
