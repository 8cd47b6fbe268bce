"""Atom-counting readout and verification metrics.

Only the diagonal of the teleported state in the number basis is reachable
by counting atoms; metrics that need off-diagonal elements are reported but
labelled as simulation-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator, StateVector, _same_space, state_metrics

SIMULATION_ONLY = "simulation-only"
ACCESSIBLE = "experimentally accessible"
FOCK_INPUT_TOLERANCE = 1e-12


def _diagonal(state) -> np.ndarray:
    if state.space.n_modes != 1:
        raise ValueError("counting statistics are defined for single-mode states")
    if isinstance(state, StateVector):
        p = state.populations()
    else:
        p = np.real(np.diag(state.matrix))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


@dataclass(frozen=True)
class CountHistogram:
    counts: np.ndarray
    shots: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64).copy()
        if counts.ndim != 1 or np.any(counts < 0):
            raise ValueError("counts must be a non-negative integer vector")
        if int(counts.sum()) != self.shots:
            raise ValueError(f"counts sum to {counts.sum()}, expected {self.shots} shots")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    @property
    def odd_fraction(self) -> float:
        return float(self.counts[1::2].sum() / self.shots)

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.counts.size), self.frequencies()))

    @property
    def variance(self) -> float:
        n = np.arange(self.counts.size)
        return float(np.dot(n**2, self.frequencies()) - self.mean**2)

    def tv_distance(self, probabilities) -> float:
        p = np.asarray(probabilities, dtype=float)
        size = max(p.size, self.counts.size)
        f = np.pad(self.frequencies(), (0, size - self.counts.size))
        return float(0.5 * np.abs(f - np.pad(p, (0, size - p.size))).sum())


def multinomial_tv_bound(probabilities, shots: int, z: float = 3.0) -> float:
    """Conservative ``z``-sigma bound on the TV distance of an empirical histogram.

    Sums the per-bin ``z`` standard deviations, ``(1/2) sum z sqrt(p (1 - p) / shots)``.
    """
    p = np.asarray(probabilities, dtype=float)
    return float(0.5 * z * np.sum(np.sqrt(p * (1 - p) / shots)))


def atom_count_statistics(tau, shots: int, rng_seed: int) -> CountHistogram:
    """I.i.d. atom-number samples from the diagonal of a single-mode state."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = _diagonal(tau)
    rng = np.random.default_rng(rng_seed)
    samples = rng.choice(p.size, size=shots, p=p)
    return CountHistogram(np.bincount(samples, minlength=p.size), shots)


def odd_population_weight(state) -> float:
    return float(_diagonal(state)[1::2].sum())


def number_moments(state) -> tuple[float, float]:
    p = _diagonal(state)
    n = np.arange(p.size)
    mean = float(np.dot(n, p))
    return mean, float(np.dot((n - mean) ** 2, p))


@dataclass(frozen=True)
class DiagonalReport:
    fidelity: float
    root_fidelity: float
    trace_distance: float
    diagonal_tv_distance: float
    odd_weight: float
    mean_number: float
    number_variance: float
    fock_input: int | None

    @property
    def sharpness(self) -> float | None:
        """Variance of the atom number in the output, reported for Fock inputs only."""
        return self.number_variance if self.fock_input is not None else None

    def to_dict(self) -> dict:
        return {
            SIMULATION_ONLY: {
                "fidelity": self.fidelity,
                "root_fidelity": self.root_fidelity,
                "trace_distance": self.trace_distance,
            },
            ACCESSIBLE: {
                "diagonal_tv_distance": self.diagonal_tv_distance,
                "odd_weight": self.odd_weight,
                "mean_number": self.mean_number,
                "number_variance": self.number_variance,
                "fock_input": self.fock_input,
                "sharpness": self.sharpness,
            },
        }


def diagonal_fidelity_report(sigma, tau) -> DiagonalReport:
    """Full-state metrics plus the metrics reachable by atom counting."""
    _same_space(sigma.space, tau.space)
    metrics = state_metrics(sigma, tau)
    ps, pt = _diagonal(sigma), _diagonal(tau)
    mean, var = number_moments(tau)
    top = int(np.argmax(ps))
    fock_input = top if ps[top] > 1 - FOCK_INPUT_TOLERANCE else None
    return DiagonalReport(
        metrics["fidelity"], metrics["root_fidelity"], metrics["trace_distance"],
        float(0.5 * np.abs(ps - pt).sum()), odd_population_weight(tau), mean, var, fock_input,
    )


def entanglement_report(state: StateVector, partition) -> float:
    """Entanglement entropy (natural log) of ``partition`` against the remaining modes."""
    if isinstance(state, DensityOperator) or not isinstance(state, StateVector):
        raise ValueError("entanglement entropy is defined here for pure states only")
    space = state.space
    part = sorted({int(m) for m in partition})
    if not part or any(m < 0 or m >= space.n_modes for m in part):
        raise ValueError(f"invalid partition {partition} for {space.n_modes} modes")
    rest = [m for m in range(space.n_modes) if m not in part]
    if not rest:
        return 0.0
    # tensor() axes run from the last mode to mode 0
    axis = {m: space.n_modes - 1 - m for m in range(space.n_modes)}
    t = state.tensor().transpose([axis[m] for m in part] + [axis[m] for m in rest])
    rows = int(np.prod([space.mode_dims[m] for m in part]))
    s = np.linalg.svd(t.reshape(rows, -1), compute_uv=False)
    w = s**2
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log(w)))
