"""Open-boundary antiferromagnetic Heisenberg chain and its exact ground state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import Observable, PauliString, observable_matrix
from .statevec import StateVector

__all__ = [
    "HeisenbergChain",
    "ExactSolution",
    "MAX_ED_SITES",
    "build_hamiltonian",
    "exact_diagonalize",
    "magnetization_sector",
    "hamming_weights",
]

MAX_ED_SITES = 12


@dataclass(frozen=True)
class HeisenbergChain:
    n_sites: int
    coupling: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"a chain needs at least 2 sites, got {self.n_sites}")
        if not self.coupling > 0:
            raise ValueError(f"antiferromagnetic coupling must be positive, got {self.coupling}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def bonds(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(self.n_sites - 1)]


def build_hamiltonian(chain: HeisenbergChain) -> Observable:
    """``J * sum_i (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1})``, open boundary.

    Terms are ordered bond-major: XX, YY, ZZ on bond (0, 1), then bond (1, 2), ...
    """
    n = chain.n_sites
    terms = []
    for i, j in chain.bonds:
        for axis in "XYZ":
            axes = ["I"] * n
            axes[i] = axes[j] = axis
            terms.append(PauliString(tuple(axes), chain.coupling))
    return Observable(terms, n)


@dataclass(frozen=True, eq=False)
class ExactSolution:
    chain: HeisenbergChain
    ground_energy: float
    ground_state: StateVector
    spectrum: np.ndarray

    @property
    def gap(self) -> float:
        """Distance from the ground energy to the next distinct level."""
        above = self.spectrum[self.spectrum > self.ground_energy + 1e-9]
        return float(above[0] - self.ground_energy) if above.size else 0.0


def exact_diagonalize(chain: HeisenbergChain) -> ExactSolution:
    if chain.n_sites > MAX_ED_SITES:
        raise ValueError(
            f"dense diagonalization supports up to {MAX_ED_SITES} sites, got {chain.n_sites}"
        )
    matrix = observable_matrix(build_hamiltonian(chain))
    # every term is real under the chosen basis (Y appears only in pairs)
    evals, evecs = np.linalg.eigh(matrix.real)
    ground = evecs[:, 0].astype(complex)
    # deterministic global phase: largest-magnitude amplitude made real positive
    k = int(np.argmax(np.abs(ground)))
    ground *= np.conj(ground[k]) / abs(ground[k])
    spectrum = np.array(evals)
    spectrum.setflags(write=False)
    return ExactSolution(chain, float(evals[0]), StateVector(ground, chain.n_sites), spectrum)


def hamming_weights(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n)).astype(np.int64)


def magnetization_sector(psi: StateVector) -> dict[int, float]:
    """Probability mass per Hamming weight (number of sites in state 1).

    Hamming weight ``w`` corresponds to ``S^z_tot = (n - 2w) / 2``. Every
    weight ``0..n`` appears as a key, including empty sectors.
    """
    probs = psi.probabilities()
    weights = hamming_weights(psi.qubit_count)
    masses = np.bincount(weights, weights=probs, minlength=psi.qubit_count + 1)
    return {w: float(m) for w, m in enumerate(masses)}
