"""Quantum teleportation of atomic states through a collective-atomic-recoil-laser resource.

Subpackages by layer:

- :mod:`carlteleport.fock` -- truncated Fock spaces, states, operators and metrics
- :mod:`carlteleport.gaussian` -- exact Gaussian moment propagation (truncation-free oracle)
- :mod:`carlteleport.dynamics` -- the three-mode CARL model, its closed-form state and the classical limit
- :mod:`carlteleport.teleport` -- Bell measurement, conditional correction and the Gaussian channel
- :mod:`carlteleport.readout` -- atom-counting statistics and verification metrics
- :mod:`carlteleport.cli` -- batch front end (``carlteleport`` console script)
"""

from .dynamics import (
    CarlParams,
    EmptyWindowError,
    PhysicalParams,
    analytic_populations,
    build_state_0,
    build_three_mode_hamiltonian,
    classical_carl_simulate,
    evolve_fock,
    exact_populations,
    interaction_window,
    physical_to_model,
    reduced_twin_state,
    twin_state_vector,
)
from .fock import (
    DensityOperator,
    FockSpace,
    StateVector,
    TruncationError,
    fidelity,
    trace_distance,
)
from .gaussian import GaussianState, QuadraticHamiltonian, evolve_gaussian
from .readout import CountHistogram, atom_count_statistics, diagonal_fidelity_report, entanglement_report
from .teleport import (
    BellOutcome,
    ChannelSpec,
    GridSpec,
    channel_parameter,
    conditional_state,
    displacement_pulse,
    gaussian_channel_apply,
    inverse_pulse_for,
    povm_element,
    sample_bell_outcome,
    teleported_state_quadrature,
)

__version__ = "0.1.0"

__all__ = [
    "CarlParams", "PhysicalParams", "EmptyWindowError", "physical_to_model", "build_three_mode_hamiltonian",
    "analytic_populations", "build_state_0", "classical_carl_simulate", "evolve_fock", "exact_populations",
    "interaction_window", "reduced_twin_state", "twin_state_vector",
    "FockSpace", "StateVector", "DensityOperator", "TruncationError", "fidelity", "trace_distance",
    "GaussianState", "QuadraticHamiltonian", "evolve_gaussian",
    "CountHistogram", "atom_count_statistics", "diagonal_fidelity_report", "entanglement_report",
    "BellOutcome", "ChannelSpec", "GridSpec", "channel_parameter", "conditional_state", "displacement_pulse",
    "gaussian_channel_apply", "inverse_pulse_for", "povm_element", "sample_bell_outcome",
    "teleported_state_quadrature",
]
