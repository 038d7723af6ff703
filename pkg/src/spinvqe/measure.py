"""Shot-based Pauli measurement: basis rotations, sampling and error propagation.

Randomness comes from numpy's counter-based Philox generator. A sub-seed for
measurement setting ``k`` under master seed ``s`` is
``derive_seed(s, k)``, i.e. the first 64-bit word of
``SeedSequence([s, k])``; results therefore depend only on ``(s, k)`` and not
on the order in which settings are executed.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pauli import NORM_TOL, Observable, PauliAxis, PauliString
from .statevec import Gate, StateVector, apply_gate

__all__ = [
    "DEFAULT_SHOTS",
    "MeasurementBasis",
    "ShotRecord",
    "EnergyEstimate",
    "derive_seed",
    "make_rng",
    "rotate_for_basis",
    "sample_shots",
    "sample_probabilities",
    "estimate_term",
    "exact_term",
    "measurement_settings",
    "measure_setting",
    "combine_terms",
    "estimate_energy",
    "write_shot_csv",
]

DEFAULT_SHOTS = 1500


def derive_seed(seed: int, *keys: int) -> int:
    words = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)
    return int(words[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class MeasurementBasis:
    """Per-site pre-measurement rotations for one Pauli setting.

    X sites get H, Y sites get S-dagger then H, Z and I sites are measured
    directly. After rotation the string's eigenvalue is the parity of the
    measured bits on its support.
    """

    axes: tuple[PauliAxis, ...]

    @classmethod
    def of(cls, term: PauliString) -> "MeasurementBasis":
        return cls(term.axes)

    def gates(self) -> list[Gate]:
        out = []
        for site, axis in enumerate(self.axes):
            if axis is PauliAxis.X:
                out.append(Gate("h", (site,)))
            elif axis is PauliAxis.Y:
                out.append(Gate("sdg", (site,)))
                out.append(Gate("h", (site,)))
        return out

    def covers(self, term: PauliString) -> bool:
        """True when ``term`` can be read from outcomes in this basis."""
        if len(term.axes) != len(self.axes):
            return False
        return all(t is PauliAxis.I or t is b for t, b in zip(term.axes, self.axes))


def rotate_for_basis(psi: StateVector, term: PauliString) -> StateVector:
    if term.qubit_count != psi.qubit_count:
        raise ValueError(f"term has {term.qubit_count} sites, state has {psi.qubit_count}")
    for gate in MeasurementBasis.of(term).gates():
        psi = apply_gate(psi, gate)
    return psi


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """Sampled outcomes, stored as basis-state indices (site 0 = LSB)."""

    outcomes: np.ndarray
    basis: PauliString
    seed: int
    qubit_count: int

    @property
    def shots(self) -> int:
        return int(self.outcomes.size)

    @property
    def bitstrings(self) -> list[str]:
        n = self.qubit_count
        return ["".join(str((k >> s) & 1) for s in range(n)) for k in self.outcomes.tolist()]

    def counts(self) -> dict[str, int]:
        return dict(sorted(Counter(self.bitstrings).items()))


def sample_probabilities(probs: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Draw ``shots`` basis indices from a probability vector."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    total = p.sum()
    if not total > 0:
        raise ValueError("probability vector has no mass")
    return make_rng(seed).choice(p.size, size=int(shots), p=p / total)


def sample_shots(psi: StateVector, shots: int, seed: int,
                 basis: PauliString | None = None) -> ShotRecord:
    """Born-rule samples of ``psi`` in the computational basis.

    ``basis`` only labels the record (the caller has already rotated ``psi``);
    it defaults to all-Z.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = psi.probabilities()
    if abs(probs.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {probs.sum()!r})")
    if basis is None:
        basis = PauliString(("Z",) * psi.qubit_count)
    outcomes = sample_probabilities(probs, shots, seed)
    return ShotRecord(outcomes, basis, int(seed), psi.qubit_count)


def _support_mask(term: PauliString) -> int:
    return sum(1 << s for s in term.support)


def _parity_signs(indices: np.ndarray, term: PauliString) -> np.ndarray:
    return 1 - 2 * (np.bitwise_count(indices & _support_mask(term)).astype(np.int64) & 1)


def estimate_term(record: ShotRecord, term: PauliString) -> tuple[float, float]:
    """Return ``(coeff * p_hat, coeff**2 * (1 - p_hat**2) / shots)``.

    ``p_hat`` is the mean parity over the term's support; the variance is the
    plug-in binomial estimate.
    """
    if not MeasurementBasis.of(record.basis).covers(term):
        raise ValueError(f"record measured in {record.basis.label}, cannot estimate {term.label}")
    if term.is_identity:
        return term.coefficient, 0.0
    p_hat = float(np.mean(_parity_signs(record.outcomes, term)))
    c = term.coefficient
    return c * p_hat, c * c * (1.0 - p_hat * p_hat) / record.shots


def exact_term(probs: np.ndarray, term: PauliString) -> tuple[float, float]:
    """Infinite-shot counterpart of :func:`estimate_term` on rotated probabilities."""
    if term.is_identity:
        return term.coefficient, 0.0
    signs = _parity_signs(np.arange(probs.size), term)
    return term.coefficient * float(np.dot(probs, signs)), 0.0


def measurement_settings(obs: Observable, grouping: str = "term"
                         ) -> list[tuple[PauliString, list[int]]]:
    """Pair each measurement setting with the indices of terms read from it.

    ``grouping="term"`` gives one setting per non-identity term (each term
    measured with its own shots). ``grouping="global"`` greedily merges terms
    that agree site by site, so a Heisenberg chain of any length needs only
    the X..X, Y..Y and Z..Z settings. Unused sites in a setting are Z.
    Identity terms belong to no setting.
    """
    if grouping not in ("term", "global"):
        raise ValueError(f"unknown grouping {grouping!r}")
    n = obs.qubit_count
    groups: list[tuple[list[PauliAxis], list[int]]] = []
    for index, term in enumerate(obs.terms):
        if term.is_identity:
            continue
        if grouping == "global":
            for axes, members in groups:
                if all(t is PauliAxis.I or a in (PauliAxis.I, t) for t, a in zip(term.axes, axes)):
                    for s, t in enumerate(term.axes):
                        if t is not PauliAxis.I:
                            axes[s] = t
                    members.append(index)
                    break
            else:
                groups.append((list(term.axes), [index]))
        else:
            groups.append((list(term.axes), [index]))
    settings = []
    for axes, members in groups:
        axes = [PauliAxis.Z if a is PauliAxis.I else a for a in axes]
        settings.append((PauliString(tuple(axes)), members))
    assert all(len(s.axes) == n for s, _ in settings)
    return settings


@dataclass(frozen=True, eq=False)
class EnergyEstimate:
    """Energy with one-sigma uncertainty and the per-term breakdown.

    ``variance`` is the sum of per-term variances, accumulated in term order;
    ``sigma`` is its square root. ``shots`` is ``None`` on the analytic path.
    """

    energy: float
    variance: float
    per_term: Mapping[PauliString, tuple[float, float]] = field(default_factory=dict)
    shots: int | None = None

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "sigma": self.sigma,
            "variance": self.variance,
            "shots": self.shots,
            "per_term": [
                {"term": t.label, "coefficient": t.coefficient, "estimate": e, "variance": v}
                for t, (e, v) in self.per_term.items()
            ],
        }


def measure_setting(probs: np.ndarray, setting: PauliString, terms: Sequence[PauliString],
                    shots: int | None, seed: int) -> tuple[list[tuple[float, float]],
                                                           ShotRecord | None]:
    """Estimate ``terms`` from the outcome distribution of one setting.

    ``probs`` must already include the basis rotation (and any readout
    noise). With ``shots=None`` the parities are computed analytically.
    """
    if shots is None:
        return [exact_term(probs, t) for t in terms], None
    n = setting.qubit_count
    record = ShotRecord(sample_probabilities(probs, shots, seed), setting, int(seed), n)
    return [estimate_term(record, t) for t in terms], record


def combine_terms(obs: Observable, results: Mapping[int, tuple[float, float]],
                  shots: int | None) -> EnergyEstimate:
    """Sum per-term ``(estimate, variance)`` pairs, keyed by term index."""
    energy = 0.0
    variance = 0.0
    per_term = {}
    for index, term in enumerate(obs.terms):
        est, var = results[index] if index in results else (term.coefficient, 0.0)
        per_term[term] = (est, var)
        energy += est
        variance += var
    return EnergyEstimate(energy, variance, per_term, shots)


def estimate_energy(psi: StateVector, obs: Observable, shots_per_term: int | None = DEFAULT_SHOTS,
                    seed: int = 0, grouping: str = "term",
                    records: list | None = None) -> EnergyEstimate:
    """Rotate, sample and estimate every measurement setting of ``obs``.

    ``shots_per_term=None`` selects the infinite-shot path (sigma = 0).
    Setting ``k`` is sampled with ``derive_seed(seed, k)``. Shot records are
    appended to ``records`` when a list is given.
    """
    if obs.qubit_count != psi.qubit_count:
        raise ValueError(f"observable has {obs.qubit_count} qubits, state has {psi.qubit_count}")
    if shots_per_term is not None and shots_per_term < 1:
        raise ValueError(f"shots must be >= 1, got {shots_per_term}")
    norm2 = float(np.vdot(psi.amplitudes, psi.amplitudes).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {norm2!r})")
    results: dict[int, tuple[float, float]] = {}
    for k, (setting, members) in enumerate(measurement_settings(obs, grouping)):
        probs = rotate_for_basis(psi, setting).probabilities()
        terms = [obs.terms[i] for i in members]
        values, record = measure_setting(probs, setting, terms, shots_per_term,
                                         derive_seed(seed, k))
        results.update(zip(members, values))
        if records is not None and record is not None:
            records.append(record)
    return combine_terms(obs, results, shots_per_term)


CSV_COLUMNS = ("seed", "basis", "bitstring", "count")


def write_shot_csv(records: Iterable[ShotRecord], stream=None) -> str:
    """Write ``seed,basis,bitstring,count`` rows; returns the text if no stream."""
    own = stream is None
    if own:
        stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        for bits, count in record.counts().items():
            writer.writerow([record.seed, record.basis.label, bits, count])
    return stream.getvalue() if own else ""
