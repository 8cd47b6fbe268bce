import numpy as np
import pytest

from carlteleport.dynamics import twin_state_vector
from carlteleport.fock import (
    DensityOperator,
    FockSpace,
    StateVector,
    basis_state,
    coherent_state,
    fock_state,
    squeezed_vacuum,
    thermal_state,
    trace_distance,
)
from carlteleport.readout import (
    ACCESSIBLE,
    SIMULATION_ONLY,
    CountHistogram,
    atom_count_statistics,
    diagonal_fidelity_report,
    entanglement_report,
    multinomial_tv_bound,
    number_moments,
    odd_population_weight,
)
from carlteleport.teleport import gaussian_channel_apply

from conftest import random_density


class TestCountHistogram:
    def test_invariant(self):
        with pytest.raises(ValueError, match="shots"):
            CountHistogram([1, 2, 3], 7)
        with pytest.raises(ValueError):
            CountHistogram([1, -1], 0)

    def test_moments(self):
        h = CountHistogram([1, 2, 1], 4)
        assert h.mean == pytest.approx(1.0)
        assert h.variance == pytest.approx(0.5)
        assert h.odd_fraction == pytest.approx(0.5)

    def test_immutable(self):
        h = CountHistogram([3, 1], 4)
        with pytest.raises(ValueError):
            h.counts[0] = 0

    def test_tv_distance_pads(self):
        h = CountHistogram([2, 2], 4)
        assert h.tv_distance([0.5, 0.25, 0.25]) == pytest.approx(0.25)


class TestCountStatistics:
    def test_fock_state_exact(self):
        h = atom_count_statistics(fock_state(6, 2), 500, rng_seed=1)
        assert h.counts[2] == 500 and h.counts.sum() == 500

    @pytest.mark.parametrize("shots", [1, 17, 1000])
    def test_sum_equals_shots(self, shots):
        h = atom_count_statistics(thermal_state(20, 1.0), shots, rng_seed=3)
        assert int(h.counts.sum()) == shots == h.shots

    def test_multinomial_rate(self):
        tau = gaussian_channel_apply(coherent_state(30, 1.0), 0.2)
        p = np.real(np.diag(tau.matrix))
        shots = 100_000
        h = atom_count_statistics(tau, shots, rng_seed=2024)
        bound = multinomial_tv_bound(p, shots)
        assert h.tv_distance(p) <= 0.02
        assert h.tv_distance(p) <= bound

    def test_deterministic(self):
        tau = thermal_state(15, 0.5)
        a = atom_count_statistics(tau, 1000, rng_seed=9)
        b = atom_count_statistics(tau, 1000, rng_seed=9)
        assert np.array_equal(a.counts, b.counts)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            atom_count_statistics(thermal_state(5, 0.1), 0, rng_seed=1)
        with pytest.raises(ValueError):
            atom_count_statistics(basis_state(FockSpace((3, 3)), (0, 0)), 10, rng_seed=1)


class TestDiagonalMetrics:
    def test_parity_and_moments(self):
        sigma = squeezed_vacuum(FockSpace((30,)), 0, 0.5)
        assert odd_population_weight(sigma) == pytest.approx(0.0, abs=1e-14)
        mean, var = number_moments(thermal_state(80, 1.0))
        assert mean == pytest.approx(1.0, abs=1e-9)
        assert var == pytest.approx(2.0, abs=1e-8)

    @pytest.mark.parametrize("k", [0.01, 0.05, 0.2])
    def test_odd_weight_gaussian_parity(self, k):
        # <(-1)^n> = 1 / (4 sqrt(det V)); the channel adds K/2 to each quadrature variance
        r = 0.5
        det = (np.exp(-2 * r) / 4 + k / 2) * (np.exp(2 * r) / 4 + k / 2)
        expected = 0.5 * (1 - 1 / (4 * np.sqrt(det)))
        tau = gaussian_channel_apply(squeezed_vacuum(FockSpace((60,)), 0, r), k)
        assert odd_population_weight(tau) == pytest.approx(expected, abs=1e-9)

    def test_identical_states(self):
        sigma = coherent_state(20, 0.5)
        report = diagonal_fidelity_report(sigma, sigma.to_density())
        assert report.fidelity == pytest.approx(1.0)
        assert report.trace_distance == pytest.approx(0.0, abs=1e-12)
        assert report.diagonal_tv_distance == pytest.approx(0.0, abs=1e-14)
        assert report.fock_input is None and report.sharpness is None

    def test_fock_sharpness(self):
        sigma = fock_state(30, 2)
        tau = gaussian_channel_apply(sigma, 0.01)
        report = diagonal_fidelity_report(sigma, tau)
        assert report.fock_input == 2
        # thermal-noise broadening of |2>: K (2n + 1) + K^2
        assert report.sharpness == pytest.approx(0.01 * 5 + 0.01**2, rel=1e-6)
        assert report.odd_weight > 0

    def test_sections_labelled(self):
        d = diagonal_fidelity_report(fock_state(10, 1), thermal_state(10, 0.2)).to_dict()
        assert set(d) == {SIMULATION_ONLY, ACCESSIBLE}
        assert "fidelity" in d[SIMULATION_ONLY] and "odd_weight" in d[ACCESSIBLE]

    def test_dephasing_monotone(self, rng):
        space = FockSpace((8,))
        for _ in range(20):
            a = DensityOperator(random_density(rng, 8, 3), space)
            b = DensityOperator(random_density(rng, 8), space)
            report = diagonal_fidelity_report(a, b)
            assert report.diagonal_tv_distance <= trace_distance(a, b) + 1e-12

    def test_space_mismatch(self):
        with pytest.raises(ValueError):
            diagonal_fidelity_report(fock_state(5, 1), fock_state(6, 1))


class TestEntanglement:
    def test_product_state(self):
        assert entanglement_report(basis_state(FockSpace((3, 4, 2)), (1, 2, 0)), [0]) == pytest.approx(0.0, abs=1e-12)

    def test_twin_state(self, twin_s2):
        assert entanglement_report(twin_s2, [0]) == pytest.approx(2 * np.log(2), abs=1e-8)

    def test_complementary_partitions(self, rng):
        space = FockSpace((3, 4, 2))
        psi = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
        state = StateVector(psi, space, normalize=True)
        assert entanglement_report(state, [1]) == pytest.approx(entanglement_report(state, [0, 2]), abs=1e-12)
        assert entanglement_report(state, [0, 1, 2]) == 0.0

    def test_rejects_mixed_and_bad_partition(self):
        with pytest.raises(ValueError):
            entanglement_report(thermal_state(5, 0.5), [0])
        with pytest.raises(ValueError):
            entanglement_report(twin_state_vector(0.5, FockSpace((20, 20))), [2])
