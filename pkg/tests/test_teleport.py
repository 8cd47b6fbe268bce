import numpy as np
import pytest
from scipy import stats
from scipy.special import gammainc

from carlteleport.dynamics import CarlParams, exact_populations, interaction_window, twin_state_vector
from carlteleport.fock import (
    FockSpace,
    StateVector,
    TruncationError,
    annihilation,
    coherent_state,
    fidelity,
    fock_state,
    number_operator,
    squeezed_vacuum,
    thermal_state,
    trace_distance,
    vacuum,
)
from carlteleport.teleport import (
    BellOutcome,
    ChannelSpec,
    GridSpec,
    NegligibleOutcomeError,
    channel_parameter,
    channel_with_number_fluctuations,
    conditional_state,
    coverage_radius,
    displacement_pulse,
    gaussian_channel_apply,
    inverse_pulse_for,
    noise_parameter,
    polar_nodes,
    povm_element,
    povm_grid_integral,
    resource_populations,
    sample_bell_outcome,
    teleported_state_quadrature,
)


def unentangled_vacuum(dim=30):
    return vacuum(FockSpace((dim, dim)))


def channel_inputs(dim=40):
    return {
        "coherent": coherent_state(dim, 0.5),
        "squeezed": squeezed_vacuum(FockSpace((dim,)), 0, 0.5),
        "fock2": fock_state(dim, 2),
    }


class TestNoiseParameter:
    def test_values(self):
        assert noise_parameter(0, 0) == 1.0
        assert noise_parameter(1, 1) == pytest.approx(3 - np.sqrt(8), rel=1e-14)
        assert noise_parameter(4, 4) == pytest.approx(9 - np.sqrt(80), rel=1e-12)

    def test_high_gain_asymptote(self):
        s = 1e8
        assert noise_parameter(s / 2, s / 2) == pytest.approx(1 / (2 * s), rel=1e-7)

    def test_spec_provenance(self):
        spec = channel_parameter(1.0, 1.0, time=3.0)
        assert spec.provenance == {"n1": 1.0, "n3": 1.0, "time": 3.0}
        with pytest.raises(ValueError, match="provenance"):
            ChannelSpec(0.2, {"n1": 1.0, "n3": 1.0})
        with pytest.raises(ValueError):
            channel_parameter(-1.0, 1.0)
        with pytest.raises(ValueError):
            ChannelSpec(-0.1)

    def test_bell_outcome_weight(self):
        with pytest.raises(ValueError):
            BellOutcome(0.1, -1.0)


class TestPolarNodes:
    def test_gaussian_integral(self):
        radii, theta, weights = polar_nodes(8.0, 64, 16)
        total = sum(w * theta.size * np.exp(-(r**2)) for r, w in zip(radii, weights))
        assert total == pytest.approx(np.pi, rel=1e-12)


class TestPovm:
    def test_vacuum_gives_coherent_projector(self):
        alpha = 0.7 - 0.4j
        ket = coherent_state(25, alpha).amplitudes
        pi = povm_element(alpha, vacuum(FockSpace((25,))))
        assert np.max(np.abs(pi - np.outer(ket, ket.conj()) / np.pi)) <= 1e-12

    def test_positive_semidefinite(self):
        sigma = squeezed_vacuum(FockSpace((30,)), 0, 0.4)
        pi = povm_element(0.3 - 0.2j, sigma)
        assert np.linalg.eigvalsh(pi).min() >= -1e-12
        assert np.allclose(pi, pi.conj().T, atol=1e-14)

    def test_uses_transpose(self):
        # for a complex sigma the POVM displaces sigma^T = conj(sigma), not sigma
        sigma = coherent_state(25, 0.5j)
        pi = povm_element(0.0, sigma)
        ket = coherent_state(25, -0.5j).amplitudes
        assert np.max(np.abs(pi - np.outer(ket, ket.conj()) / np.pi)) <= 1e-12

    def test_truncation_guard(self):
        with pytest.raises(TruncationError):
            povm_element(3.0, vacuum(FockSpace((20,))))

    def test_completeness_vacuum_oracle(self):
        dim = 8
        radius = 5.0
        total = povm_grid_integral(vacuum(FockSpace((dim,))), radius, dim)
        expected = np.diag(gammainc(np.arange(1, dim + 1), radius**2))
        assert np.max(np.abs(total - expected)) <= 1e-10

    def test_completeness_improves_with_radius(self):
        sigma = squeezed_vacuum(FockSpace((20,)), 0, 0.3)
        errors = [np.linalg.norm(povm_grid_integral(sigma, r, 6) - np.eye(6), 2) for r in (4.0, 5.0, 6.0)]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] <= 1e-6


class TestConditionalState:
    @pytest.mark.parametrize("alpha", [0.0, 0.6 + 0.3j, -1.2j])
    def test_unentangled_literal(self, alpha):
        out = conditional_state(unentangled_vacuum(), vacuum(FockSpace((30,))), alpha, correction="literal")
        assert out.p_alpha == pytest.approx(np.exp(-abs(alpha) ** 2) / np.pi, rel=1e-12)
        assert out.rho_alpha.matrix[0, 0].real == pytest.approx(1.0)
        assert fidelity(coherent_state(30, alpha), out.tau_alpha) == pytest.approx(1.0, abs=1e-12)
        assert out.correction_amplitude == pytest.approx(alpha)

    def test_matched_correction_amplitude(self):
        out = conditional_state(unentangled_vacuum(), vacuum(FockSpace((30,))), 0.6 + 0.3j)
        assert out.correction_amplitude == pytest.approx(-0.6 + 0.3j)

    def test_twin_high_gain_recovers_input(self):
        # strong entanglement: the corrected state approaches sigma for every outcome
        resource = twin_state_vector(25.0, FockSpace((400, 400)))
        sigma = coherent_state(20, 0.5)
        out = conditional_state(resource, sigma, 0.8 - 0.3j, out_dim=20)
        assert fidelity(sigma, out.tau_alpha) >= 0.97

    def test_negligible_outcome(self):
        with pytest.raises(NegligibleOutcomeError) as info:
            conditional_state(unentangled_vacuum(60), vacuum(FockSpace((30,))), 7.0)
        assert info.value.p_alpha < 1e-14

    def test_unknown_correction(self):
        with pytest.raises(ValueError):
            conditional_state(unentangled_vacuum(), vacuum(FockSpace((30,))), 0.1, correction="bogus")


class TestQuadrature:
    def test_probability_normalized(self, twin_s2):
        sigma = coherent_state(25, 0.5)
        result = teleported_state_quadrature(twin_s2, sigma, GridSpec(radius=6.0, n_angular=82), out_dim=40)
        assert result.raw_trace == pytest.approx(1.0, abs=1e-3)

    def test_unentangled_vacuum_gives_thermal(self):
        sigma = vacuum(FockSpace((20,)))
        result = teleported_state_quadrature(unentangled_vacuum(20), sigma)
        assert result.channel.k == pytest.approx(1.0)
        assert trace_distance(result.tau, thermal_state(20, 1.0)) <= 1e-6

    def test_twin_matches_channel(self, twin_s2):
        sigma = coherent_state(25, 0.5)
        result = teleported_state_quadrature(twin_s2, sigma)
        k = noise_parameter(1.0, 1.0)
        assert result.channel.k == pytest.approx(k, rel=1e-9)
        assert fidelity(sigma, result.tau) == pytest.approx(1 / (1 + k), abs=1e-6)
        assert trace_distance(result.tau, gaussian_channel_apply(sigma, k)) <= 1e-6

    def test_resource_populations(self, twin_s2):
        assert resource_populations(twin_s2) == pytest.approx((1.0, 1.0), abs=1e-9)

    def test_coverage_error(self, twin_s2):
        sigma = coherent_state(25, 0.5)
        assert coverage_radius(0.17, sigma) > 4.0
        with pytest.raises(ValueError, match="coverage"):
            teleported_state_quadrature(twin_s2, sigma, GridSpec(radius=2.0))

    def test_angular_nodes_raised(self, twin_s2):
        with pytest.warns(UserWarning, match="angular"):
            result = teleported_state_quadrature(twin_s2, coherent_state(40, 0.5), GridSpec(n_angular=16))
        assert result.grid.n_angular == 82

    def test_rejects_multimode_input(self, twin_s2):
        with pytest.raises(ValueError):
            teleported_state_quadrature(twin_s2, vacuum(FockSpace((4, 4))))


class TestGaussianChannel:
    def test_zero_noise_identity(self):
        sigma = squeezed_vacuum(FockSpace((30,)), 0, 0.5)
        assert trace_distance(sigma, gaussian_channel_apply(sigma, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_small_noise_continuous(self):
        sigma = coherent_state(30, 1.0)
        assert trace_distance(sigma, gaussian_channel_apply(sigma, 1e-8)) <= 1e-6

    @pytest.mark.parametrize("k", [0.01, 0.1, 0.5, 1.0])
    def test_coherent_closed_forms(self, k):
        mu = 0.8 - 0.3j
        sigma = coherent_state(60, mu)
        out = gaussian_channel_apply(sigma, k)
        assert out.trace() == pytest.approx(1.0, abs=1e-12)
        assert out.expect(number_operator(FockSpace((60,)), 0)) == pytest.approx(abs(mu) ** 2 + k, abs=1e-9)
        assert out.expect(annihilation(FockSpace((60,)), 0)) == pytest.approx(mu, abs=1e-9)
        assert fidelity(sigma, out) == pytest.approx(1 / (1 + k), abs=1e-9)

    def test_vacuum_to_thermal(self):
        out = gaussian_channel_apply(vacuum(FockSpace((40,))), 0.5)
        assert trace_distance(out, thermal_state(40, 0.5)) <= 1e-9

    @pytest.mark.parametrize("name", ["coherent", "squeezed", "fock2"])
    def test_fidelity_strictly_decreasing(self, name):
        sigma = channel_inputs()[name]
        f = [fidelity(sigma, gaussian_channel_apply(sigma, k)) for k in (0.01, 0.1, 0.5, 1.0)]
        assert all(b < a for a, b in zip(f, f[1:]))

    def test_accepts_spec(self):
        sigma = coherent_state(30, 0.5)
        spec = channel_parameter(1.0, 1.0)
        assert trace_distance(gaussian_channel_apply(sigma, spec), gaussian_channel_apply(sigma, spec.k)) == 0.0

    def test_truncation(self):
        with pytest.raises(TruncationError):
            gaussian_channel_apply(coherent_state(12, 1.0), 2.0)

    def test_negative_k(self):
        with pytest.raises(ValueError):
            gaussian_channel_apply(coherent_state(12, 0.1), -0.5)


@pytest.fixture(scope="module")
def setting():
    params = CarlParams.from_ratio(0.05)
    t = 4.0 / params.collective_coupling
    return params, t, coherent_state(40, 0.5)


class TestNumberFluctuations:
    def test_point_mass(self, setting):
        params, t, sigma = setting
        n = exact_populations(params, t)
        fixed = gaussian_channel_apply(sigma, channel_parameter(n[0], n[2]))
        mixed = channel_with_number_fluctuations(sigma, params, t, {params.n_atoms: 1.0})
        assert trace_distance(fixed, mixed) <= 1e-12

    def test_two_point_spread_costs_fidelity(self, setting):
        params, t, sigma = setting
        n0 = params.n_atoms
        mixed = channel_with_number_fluctuations(sigma, params, t, [(0.8 * n0, 0.5), (1.2 * n0, 0.5)])
        n = exact_populations(params, t)
        fixed = gaussian_channel_apply(sigma, channel_parameter(n[0], n[2]))
        assert mixed.trace() == pytest.approx(1.0, abs=1e-12)
        assert fidelity(sigma, mixed) <= fidelity(sigma, fixed)

    @pytest.mark.parametrize("dist", [{}, {1e6: 0.5}, {1e6: 1.5, 2e6: -0.5}, {0.0: 1.0}])
    def test_invalid(self, setting, dist):
        params, t, sigma = setting
        with pytest.raises(ValueError):
            channel_with_number_fluctuations(sigma, params, t, dist)


class TestSampling:
    def test_deterministic(self, twin_s2):
        sigma = coherent_state(20, 0.5)
        a = sample_bell_outcome(twin_s2, sigma, 7, 50)
        b = sample_bell_outcome(twin_s2, sigma, 7, 50)
        c = sample_bell_outcome(twin_s2, sigma, 8, 50)
        assert a == b
        assert a != c

    def test_prefix_stable(self, twin_s2):
        sigma = coherent_state(20, 0.5)
        short = sample_bell_outcome(twin_s2, sigma, 3, 10)
        long = sample_bell_outcome(twin_s2, sigma, 3, 40)
        assert long[:10] == short

    def test_weights_exact(self):
        outcomes = sample_bell_outcome(unentangled_vacuum(), vacuum(FockSpace((20,))), 11, 200)
        for o in outcomes:
            assert o.weight == pytest.approx(np.exp(-abs(o.alpha) ** 2) / np.pi, rel=1e-10)

    def test_radial_distribution(self):
        # unentangled vacuum: |alpha|^2 is exponential with mean 1
        outcomes = sample_bell_outcome(unentangled_vacuum(), vacuum(FockSpace((20,))), 2024, 20000)
        u = np.array([abs(o.alpha) ** 2 for o in outcomes])
        assert u.mean() == pytest.approx(1.0, abs=4 / np.sqrt(u.size))
        edges = -np.log(1 - np.linspace(0, 1, 11)[:-1])
        counts = np.histogram(u, bins=np.append(edges, np.inf))[0]
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_angular_uniform(self):
        outcomes = sample_bell_outcome(unentangled_vacuum(), vacuum(FockSpace((20,))), 99, 20000)
        phases = np.mod(np.angle([o.alpha for o in outcomes]), 2 * np.pi)
        counts = np.histogram(phases, bins=8, range=(0, 2 * np.pi))[0]
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_mean_state_approaches_quadrature(self, twin_s2):
        sigma = coherent_state(20, 0.5)
        exact = teleported_state_quadrature(twin_s2, sigma).tau
        _, mean = sample_bell_outcome(twin_s2, sigma, 5, 4000, return_states=True)
        assert mean.trace() == pytest.approx(1.0, abs=1e-9)
        assert trace_distance(mean, exact) <= 0.03

    def test_validation(self, twin_s2):
        sigma = coherent_state(20, 0.5)
        with pytest.raises(ValueError):
            sample_bell_outcome(twin_s2, sigma, 1, 0)
        with pytest.raises(ValueError):
            sample_bell_outcome(twin_s2, sigma, 1, 5, grid=GridSpec(radius=1.0))


class TestDisplacementPulse:
    def test_zero_gamma_identity(self, quantum_params):
        out = displacement_pulse(quantum_params, 0.0, 5.0, FockSpace((10, 10)))
        assert out.alpha_applied == 0
        assert np.max(np.abs(out.unitary - np.eye(100))) <= 1e-12

    @pytest.mark.parametrize("gamma", [0.3, 0.2 - 0.5j, 1j])
    def test_factorizes(self, quantum_params, gamma):
        out = displacement_pulse(quantum_params, gamma / quantum_params.collective_coupling, 1.0)
        assert out.alpha_applied == pytest.approx(-np.conj(gamma), abs=1e-14)
        assert out.deviation <= 1e-10

    def test_adjoint_form_real_only(self, quantum_params):
        eps = quantum_params.collective_coupling
        real = displacement_pulse(quantum_params, 0.5 / eps, 1.0)
        complex_ = displacement_pulse(quantum_params, 0.5j / eps, 1.0)
        assert real.adjoint_form_deviation <= 1e-10
        assert complex_.adjoint_form_deviation > 0.1

    def test_linear_in_duration(self, quantum_params):
        gamma = (0.3 + 0.1j) / quantum_params.collective_coupling
        one = displacement_pulse(quantum_params, gamma, 1.0).alpha_applied
        two = displacement_pulse(quantum_params, gamma, 2.0).alpha_applied
        assert two == pytest.approx(2 * one, rel=1e-14)

    def test_inverse_round_trip(self, quantum_params):
        target = 0.7 * np.exp(1j * np.pi / 3)
        gamma, tau = inverse_pulse_for(target, quantum_params)
        out = displacement_pulse(quantum_params, gamma, tau)
        assert out.alpha_applied == pytest.approx(target, abs=1e-14)
        assert out.deviation <= 1e-10

    def test_inverse_scaling(self, quantum_params):
        g1, _ = inverse_pulse_for(0.5, quantum_params, 1.0)
        g2, _ = inverse_pulse_for(0.5, quantum_params, 0.5)
        assert abs(g2) == pytest.approx(2 * abs(g1), rel=1e-14)
        with pytest.raises(ValueError):
            inverse_pulse_for(0.5, quantum_params, 0.0)

    def test_truncation(self, quantum_params):
        with pytest.raises(TruncationError):
            displacement_pulse(quantum_params, 3.0 / quantum_params.collective_coupling, 1.0, FockSpace((12, 12)))


class TestWindowResource:
    def test_twin_resource_in_window(self, quantum_params):
        t = interaction_window(quantum_params).time_at(0.5)
        n = exact_populations(quantum_params, t)
        resource = twin_state_vector(n[2], FockSpace((300, 300)))
        assert isinstance(resource, StateVector)
        n1, n3 = resource_populations(resource)
        assert n1 == pytest.approx(n3, rel=1e-12)
        assert n3 == pytest.approx(n[2], rel=1e-8)
