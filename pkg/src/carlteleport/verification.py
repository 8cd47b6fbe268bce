"""The acceptance suite, shared by ``verify-all`` and the test-suite.

Every criterion returns a :class:`CriterionResult` whose ``values`` hold the
measured quantities next to their thresholds.  Nothing here depends on wall
clock time, so repeated runs produce identical records.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import (
    A1,
    A2,
    A3,
    CarlParams,
    ClassicalAtomState,
    EmptyWindowError,
    analytic_populations,
    build_three_mode_hamiltonian,
    classical_carl_simulate,
    constant_of_motion,
    evolve_fock,
    exact_populations,
    fock_populations,
    interaction_window,
    state_0_fidelity,
    twin_state_vector,
)
from .fock import (
    FockSpace,
    coherent_state,
    fidelity,
    fock_state,
    squeezed_vacuum,
    trace_distance,
    vacuum,
)
from .readout import atom_count_statistics, number_moments, odd_population_weight
from .teleport import (
    GridSpec,
    displacement_pulse,
    gaussian_channel_apply,
    inverse_pulse_for,
    povm_grid_integral,
    sample_bell_outcome,
    teleported_state_quadrature,
)

DEFAULT_SEED = 1234


@dataclass(frozen=True)
class CriterionResult:
    id: int
    name: str
    passed: bool
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.id:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}"

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": bool(self.passed), "values": self.values}


def criterion_conservation() -> CriterionResult:
    params = CarlParams.from_ratio(0.1)
    eps = params.collective_coupling
    window = interaction_window(params)
    times = np.linspace(0.0, window.t_upper, 50)
    gauss_err = max(abs(n[A1] - n[A2] - n[A3]) for n in (exact_populations(params, t) for t in times))
    space = FockSpace((16, 8, 16))
    fock_times = np.linspace(0.0, 0.5 / eps, 50)
    states = evolve_fock(build_three_mode_hamiltonian(params), fock_times, vacuum(space), check=False)
    c = constant_of_motion(space, sparse=True)
    c_vals = np.array([s.expect(c).real for s in states])
    drift = float(np.abs(c_vals - c_vals[0]).max())
    leak = float(max(s.leakage() for s in states))
    ok = gauss_err <= 1e-10 and drift <= 1e-8 and leak < 1e-8
    return CriterionResult(1, "conservation of N1 - N2 - N3", ok, {
        "gaussian_max_violation": gauss_err, "gaussian_tolerance": 1e-10,
        "fock_c_drift": drift, "fock_drift_tolerance": 1e-8,
        "fock_max_leakage": leak, "fock_leakage_tolerance": 1e-8,
    })


def criterion_engine_equivalence() -> CriterionResult:
    params = CarlParams.from_ratio(0.1, delta=-1.0)
    eps = params.collective_coupling
    times = np.linspace(0.0, 1.5 / eps, 16)
    space = FockSpace((16, 8, 16))
    states = evolve_fock(build_three_mode_hamiltonian(params), times, vacuum(space))
    err = max(float(np.abs(fock_populations(s) - exact_populations(params, t)).max()) for s, t in zip(states, times))
    return CriterionResult(2, "Fock and Gaussian engines agree", err <= 1e-6, {"max_difference": err, "tolerance": 1e-6})


def criterion_asymptotics() -> CriterionResult:
    ratio = 0.05
    params = CarlParams.from_ratio(ratio)
    t = 10.0 / (2 * params.collective_coupling)
    exact = exact_populations(params, t)
    approx = analytic_populations(params, t).as_array()
    rel = np.abs(approx - exact) / exact
    ratio_err = abs(approx[A2] / approx[A3] - ratio**2) / ratio**2
    ok = bool(np.all(rel <= 0.10)) and ratio_err <= 1e-12
    return CriterionResult(3, "asymptotic populations", ok, {
        "relative_errors": rel.tolist(), "tolerance": 0.10,
        "analytic_ratio_error": ratio_err, "exact_ratio_n2_n3": float(exact[A2] / exact[A3]),
        "quantum_ratio_squared": ratio**2,
    })


def criterion_window() -> CriterionResult:
    params = CarlParams.from_ratio(0.05)
    t_upper = interaction_window(params).t_upper
    n2 = float(exact_populations(params, t_upper)[A2])
    try:
        interaction_window(CarlParams.from_ratio(2.0))
        empty_raised = False
    except EmptyWindowError:
        empty_raised = True
    ok = abs(n2 - 1) <= 0.05 and empty_raised
    return CriterionResult(4, "interaction window", ok, {
        "n2_at_t_upper": n2, "tolerance": 0.05, "empty_window_error": empty_raised,
    })


STATE_FORM_CASES = ((1.0, (48, 6, 48)), (1.3, (80, 6, 80)), (1.6, (128, 6, 128)), (2.0, (240, 6, 240)))


def criterion_state_form() -> CriterionResult:
    params = CarlParams.from_ratio(0.05)
    window = interaction_window(params)
    eps = params.collective_coupling
    infid = {}
    for eps_t, dims in STATE_FORM_CASES:
        t = eps_t / eps
        assert window.t_lower_scale <= t <= window.t_upper
        infid[str(eps_t)] = 1.0 - state_0_fidelity(params, t, FockSpace(dims))
    worst = max(infid.values())
    return CriterionResult(5, "closed-form state matches evolution", worst <= 1e-6,
                           {"infidelity_by_eps_t": infid, "tolerance": 1e-6})


def channel_inputs(dim: int = 25) -> dict:
    return {
        "coherent_0.5": coherent_state(dim, 0.5),
        "squeezed_0.5": squeezed_vacuum(FockSpace((dim,)), 0, 0.5),
        "fock_2": fock_state(dim, 2),
    }


CHANNEL_RESOURCE_DIMS = {2.0: 40, 8.0: 90}


def criterion_channel_theorem() -> CriterionResult:
    distances = {}
    for s, d in CHANNEL_RESOURCE_DIMS.items():
        resource = twin_state_vector(s / 2, FockSpace((d, d)))
        for name, sigma in channel_inputs().items():
            result = teleported_state_quadrature(resource, sigma)
            ideal = gaussian_channel_apply(sigma, result.channel)
            distances[f"S={s:g}/{name}"] = trace_distance(result.tau, ideal)
    worst = max(distances.values())
    return CriterionResult(6, "teleportation equals the Gaussian channel", worst <= 1e-3,
                           {"trace_distances": distances, "tolerance": 1e-3})


def criterion_povm_completeness() -> CriterionResult:
    errors = {}
    for name, sigma in {"vacuum": fock_state(20, 0), "squeezed_0.4": squeezed_vacuum(FockSpace((20,)), 0, 0.4)}.items():
        total = povm_grid_integral(sigma, 6.0, 20)
        errors[name] = float(np.abs(total[:10, :10] - np.eye(10)).max())
    worst = max(errors.values())
    return CriterionResult(7, "POVM completeness", worst <= 1e-2, {"max_abs_error": errors, "tolerance": 1e-2})


def criterion_coherent_fidelity() -> CriterionResult:
    errors = {}
    for k in (0.056, 0.27, 1.0):
        for mu in (0.5, 1.0):
            sigma = coherent_state(40, mu)
            f = fidelity(sigma, gaussian_channel_apply(sigma, k))
            errors[f"K={k:g}/mu={mu:g}"] = abs(f - 1 / (1 + k))
    worst = max(errors.values())
    return CriterionResult(8, "coherent-state fidelity 1/(1+K)", worst <= 1e-4, {"abs_errors": errors, "tolerance": 1e-4})


def criterion_monte_carlo(seed: int = DEFAULT_SEED) -> CriterionResult:
    resource = twin_state_vector(1.0, FockSpace((26, 26)))
    sigma = coherent_state(14, 0.5)
    grid = GridSpec()
    reference = teleported_state_quadrature(resource, sigma, grid).tau
    distances = []
    for count in (1_000, 10_000, 100_000):
        _, tau = sample_bell_outcome(resource, sigma, seed, count, grid, return_states=True)
        distances.append(trace_distance(tau, reference))
    ok = distances[0] > distances[1] > distances[2] and distances[2] <= 5e-3
    return CriterionResult(9, "Monte Carlo converges to quadrature", ok, {
        "counts": [1_000, 10_000, 100_000], "trace_distances": distances, "tolerance": 5e-3, "seed": seed,
    })


PULSE_TARGETS = (1.0, -1.0, 0.5, -0.3, 0.8 + 0j, 0.7 * np.exp(1j * np.pi / 3), 0.5j, 0.6 - 0.6j)


def criterion_pulse() -> CriterionResult:
    params = CarlParams.from_ratio(0.05)
    space = FockSpace((20, 20))
    dev = {}
    for target in PULSE_TARGETS:
        gamma, tau = inverse_pulse_for(complex(target), params, 1.0)
        res = displacement_pulse(params, gamma, tau, space)
        key = f"{complex(target):.4f}"
        # the D2(alpha)^dag form for real alpha, its conjugate-amplitude form otherwise
        dev[key] = res.adjoint_form_deviation if complex(target).imag == 0 else res.deviation
    worst = max(dev.values())
    return CriterionResult(10, "pulse factorizes into displacements", worst <= 1e-8,
                           {"deviations": dev, "tolerance": 1e-8})


def criterion_readout(seed: int = DEFAULT_SEED) -> CriterionResult:
    k = 0.05
    squeezed = gaussian_channel_apply(squeezed_vacuum(FockSpace((40,)), 0, 0.5), k)
    odd = odd_population_weight(squeezed)
    hist = atom_count_statistics(squeezed, 100_000, seed)
    _, var = number_moments(gaussian_channel_apply(fock_state(25, 2), k))
    ok = odd <= 0.02 and hist.odd_fraction <= 0.02 and var < 0.25
    return CriterionResult(11, "atom-counting signatures", ok, {
        "squeezed_odd_weight": odd, "squeezed_empirical_odd_fraction": hist.odd_fraction, "odd_tolerance": 0.02,
        "fock2_number_variance": var, "variance_tolerance": 0.25, "k": k, "shots": 100_000, "seed": seed,
    })


def criterion_classical(seed: int = DEFAULT_SEED) -> CriterionResult:
    params = CarlParams(g=0.01, n_atoms=100, omega_r=1.0, delta=1.0)
    rng = np.random.default_rng(seed)
    n = 100
    initial = ClassicalAtomState(2 * np.pi * np.arange(n) / n + 0.01 * rng.normal(size=n),
                                 0.1 * rng.normal(size=n), 0.1 + 0.05j)
    traj = classical_carl_simulate(params, initial, 10.0, 0.01)
    e_drift = float(np.abs(traj.energy - traj.energy[0]).max())
    p_drift = float(np.abs(traj.momentum - traj.momentum[0]).max())
    ok = len(traj.times) == 1001 and e_drift <= 1e-8 and p_drift <= 1e-8
    return CriterionResult(12, "classical invariants", ok, {
        "energy_drift": e_drift, "momentum_drift": p_drift, "tolerance": 1e-8, "steps": len(traj.times) - 1,
        "atoms": n,
    })


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_conservation,
    2: criterion_engine_equivalence,
    3: criterion_asymptotics,
    4: criterion_window,
    5: criterion_state_form,
    6: criterion_channel_theorem,
    7: criterion_povm_completeness,
    8: criterion_coherent_fidelity,
    9: criterion_monte_carlo,
    10: criterion_pulse,
    11: criterion_readout,
    12: criterion_classical,
}
SEEDED = {9, 11, 12}


def run_criterion(cid: int, seed: int = DEFAULT_SEED) -> CriterionResult:
    fn = CRITERIA[cid]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(seed) if cid in SEEDED else fn()


def run_all(seed: int = DEFAULT_SEED, ids=None) -> list[CriterionResult]:
    return [run_criterion(cid, seed) for cid in (ids or sorted(CRITERIA))]
