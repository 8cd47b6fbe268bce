"""Batched displacement blocks from one eigendecomposition of the generator.

``D(r e^{i phi}) = R(phi) exp(r (a^dag - a)) R(phi)^dag`` with ``R(phi) = e^{i phi n}``,
so a single Hermitian eigendecomposition of ``i (a^dag - a)`` on a working
space large enough to hold every displaced column serves all amplitudes.
Blocks are exact compressions of the infinite-dimensional operator to the
requested rows and columns, up to the working-space truncation error.
"""

from __future__ import annotations

import numpy as np

from .fock import lowering_matrix


def required_work_dim(max_index: int, max_radius: float, margin: float = 7.0) -> int:
    """Working dimension holding ``D(alpha)|n>`` for ``n <= max_index``, ``|alpha| <= max_radius``."""
    return int(np.ceil((np.sqrt(max_index) + max_radius + margin) ** 2)) + 2


class DisplacementBasis:
    def __init__(self, max_index: int, max_radius: float, work_dim: int | None = None):
        self.max_index = int(max_index)
        self.max_radius = float(max_radius)
        self.work_dim = work_dim or required_work_dim(self.max_index, self.max_radius)
        a = lowering_matrix(self.work_dim)
        self._eigvals, self._eigvecs = np.linalg.eigh(1j * (a.T - a))

    def _check(self, radii, rows: int, cols: int) -> None:
        if max(rows, cols) > self.max_index + 1:
            raise ValueError(f"block {rows}x{cols} exceeds the prepared index range {self.max_index + 1}")
        if np.max(radii, initial=0.0) > self.max_radius * (1 + 1e-12):
            raise ValueError(f"|alpha| = {np.max(radii):.4g} exceeds the prepared radius {self.max_radius:.4g}")

    def radial(self, radii, rows: int, cols: int) -> np.ndarray:
        """Real blocks ``exp(r (a^dag - a))[:rows, :cols]``, stacked over ``radii``."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        self._check(radii, rows, cols)
        v = self._eigvecs
        phases = np.exp(-1j * radii[:, None] * self._eigvals[None, :])
        out = np.einsum("ik,rk,jk->rij", v[:rows], phases, v[:cols].conj(), optimize=True)
        return out.real

    def blocks(self, alphas, rows: int, cols: int) -> np.ndarray:
        """Complex blocks ``D(alpha)[:rows, :cols]``, stacked over ``alphas``."""
        alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
        base = self.radial(np.abs(alphas), rows, cols)
        return rotate_blocks(base, np.angle(alphas))

    def block(self, alpha: complex, rows: int, cols: int) -> np.ndarray:
        return self.blocks([alpha], rows, cols)[0]

    def apply(self, alphas, vectors, rows: int) -> np.ndarray:
        """``D(alpha)[:rows, :cols] @ vectors`` for every alpha, without forming the blocks.

        ``vectors`` has shape ``(cols, k)`` (shared) or ``(n, cols, k)`` (one per alpha);
        the result has shape ``(n, rows, k)``.
        """
        alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
        vectors = np.asarray(vectors, dtype=complex)
        cols = vectors.shape[-2]
        radii, angles = np.abs(alphas), np.angle(alphas)
        self._check(radii, rows, cols)
        v = self._eigvecs
        rot_in = np.exp(-1j * angles[:, None] * np.arange(cols)[None, :])
        x = v[:cols].conj().T @ (rot_in[:, :, None] * vectors)
        x *= np.exp(-1j * radii[:, None] * self._eigvals[None, :])[:, :, None]
        y = v[:rows] @ x
        y *= np.exp(1j * angles[:, None] * np.arange(rows)[None, :])[:, :, None]
        return y


def rotate_blocks(radial_blocks: np.ndarray, angles) -> np.ndarray:
    """Apply ``R(phi) . R(phi)^dag`` to radial blocks (broadcast over a leading axis)."""
    angles = np.asarray(angles, dtype=float)
    rows, cols = radial_blocks.shape[-2:]
    m = np.arange(rows)[:, None]
    n = np.arange(cols)[None, :]
    return radial_blocks * np.exp(1j * angles[..., None, None] * (m - n))
