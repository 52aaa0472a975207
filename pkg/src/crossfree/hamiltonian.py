"""Matrix-free ``H(lam) = H_P + lam * H_B`` in the computational basis.

``H_P`` is diagonal and stored explicitly; the driver
``H_B = -sum_i delta_i sigma_x^(i)`` is applied on the fly by bit flips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ising import DimensionError, IsingModel, flip_axis, scaled_energies

DEFAULT_MATVEC_LIMIT = 26


class MatvecLimitExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SparseHamiltonian:
    num_qubits: int
    diagonal: np.ndarray
    delta: np.ndarray

    @property
    def dimension(self) -> int:
        return 1 << self.num_qubits

    def driver(self, x: np.ndarray) -> np.ndarray:
        """``H_B x``."""
        x = self._check(x)
        y = np.zeros_like(x, dtype=np.float64)
        for q, d in enumerate(self.delta):
            if d:
                y -= d * flip_axis(x, q)
        return y

    def matvec(self, lam: float, x: np.ndarray) -> np.ndarray:
        """``H(lam) x`` for a vector or a ``(dim, p)`` block."""
        x = self._check(x)
        diag = self.diagonal if x.ndim == 1 else self.diagonal[:, None]
        y = diag * x
        if lam:
            for q, d in enumerate(self.delta):
                if d:
                    y -= (lam * d) * flip_axis(x, q)
        return y

    def norm_bound(self, lam: float) -> float:
        """Gershgorin bound on ``||H(lam)||``."""
        return float(np.abs(self.diagonal).max(initial=0.0) + abs(lam) * self.delta.sum())

    def dense(self, lam: float) -> np.ndarray:
        """Explicit matrix; for small systems and oracles only."""
        dim = self.dimension
        mat = np.diag(self.diagonal.astype(np.float64))
        idx = np.arange(dim)
        for q, d in enumerate(self.delta):
            mat[idx, idx ^ (1 << q)] -= lam * d
        return mat

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.dimension or x.ndim not in (1, 2):
            raise DimensionError(f"vector of shape {x.shape} does not match dimension {self.dimension}")
        return x


def build(model: IsingModel, limit: int = DEFAULT_MATVEC_LIMIT) -> SparseHamiltonian:
    if model.num_qubits > limit:
        raise MatvecLimitExceeded(f"{model.num_qubits} qubits exceeds the matvec limit of {limit}")
    energies, scale = scaled_energies(model)
    diagonal = energies.astype(np.float64) / scale
    delta = np.array([float(d) for d in model.delta], dtype=np.float64)
    return SparseHamiltonian(model.num_qubits, diagonal, delta)


def matvec(H: SparseHamiltonian, lam: float, x: np.ndarray) -> np.ndarray:
    return H.matvec(lam, x)
