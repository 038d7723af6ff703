"""Pauli strings, weighted sums of them, and their exact action on statevectors.

Site ``i`` corresponds to bit ``i`` of a basis-state index (site 0 is the
least-significant bit). Axis strings are written site 0 first, so ``"XZ"``
means X on site 0 and Z on site 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliAxis",
    "PauliString",
    "Observable",
    "apply_pauli_string",
    "exact_expectation",
    "observable_matrix",
    "parse_observable",
    "format_observable",
]

NORM_TOL = 1e-10
IMAG_TOL = 1e-10


class PauliAxis(str, enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"


def _as_axes(axes: Iterable[PauliAxis | str]) -> tuple[PauliAxis, ...]:
    return tuple(PauliAxis(a) for a in axes)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site Paulis with a real coefficient."""

    axes: tuple[PauliAxis, ...]
    coefficient: float = 1.0

    def __post_init__(self):
        axes = _as_axes(self.axes)
        if not axes:
            raise ValueError("a Pauli string needs at least one site")
        object.__setattr__(self, "axes", axes)
        coeff = self.coefficient
        if isinstance(coeff, complex) or np.iscomplexobj(coeff):
            raise TypeError("Pauli coefficients must be real")
        object.__setattr__(self, "coefficient", float(coeff))

    @classmethod
    def from_label(cls, label: str, coefficient: float = 1.0) -> "PauliString":
        return cls(tuple(label.upper()), coefficient)

    @property
    def label(self) -> str:
        return "".join(a.value for a in self.axes)

    @property
    def qubit_count(self) -> int:
        return len(self.axes)

    @property
    def is_identity(self) -> bool:
        return all(a is PauliAxis.I for a in self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        """Sites carrying a non-identity axis."""
        return tuple(i for i, a in enumerate(self.axes) if a is not PauliAxis.I)

    def masks(self) -> tuple[int, int, int]:
        """Return ``(flip_mask, phase_mask, n_y)`` for the bit-level action.

        ``P|k> = i**n_y * (-1)**popcount(k & phase_mask) |k ^ flip_mask>``.
        """
        flip = phase = n_y = 0
        for site, axis in enumerate(self.axes):
            bit = 1 << site
            if axis is PauliAxis.X:
                flip |= bit
            elif axis is PauliAxis.Y:
                flip |= bit
                phase |= bit
                n_y += 1
            elif axis is PauliAxis.Z:
                phase |= bit
        return flip, phase, n_y

    def with_coefficient(self, coefficient: float) -> "PauliString":
        return PauliString(self.axes, coefficient)

    def __repr__(self) -> str:
        return f"PauliString({self.coefficient!r} * {self.label})"


class Observable:
    """Real-weighted sum of Pauli strings on a fixed number of qubits.

    Terms with identical axes are merged at construction (coefficients
    summed, first-seen order kept). Instances are treated as immutable.
    """

    __slots__ = ("_terms", "_qubit_count")

    def __init__(self, terms: Iterable[PauliString], qubit_count: int | None = None):
        terms = list(terms)
        if qubit_count is None:
            if not terms:
                raise ValueError("qubit_count is required for an empty observable")
            qubit_count = terms[0].qubit_count
        if qubit_count < 1:
            raise ValueError(f"qubit_count must be positive, got {qubit_count}")
        merged: dict[tuple[PauliAxis, ...], float] = {}
        for term in terms:
            if term.qubit_count != qubit_count:
                raise ValueError(
                    f"term {term.label} has {term.qubit_count} sites, expected {qubit_count}"
                )
            merged[term.axes] = merged.get(term.axes, 0.0) + term.coefficient
        self._terms = tuple(PauliString(axes, c) for axes, c in merged.items())
        self._qubit_count = qubit_count

    @property
    def terms(self) -> tuple[PauliString, ...]:
        return self._terms

    @property
    def qubit_count(self) -> int:
        return self._qubit_count

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observable):
            return NotImplemented
        return self._qubit_count == other._qubit_count and self._terms == other._terms

    def __add__(self, other: "Observable") -> "Observable":
        if other.qubit_count != self.qubit_count:
            raise ValueError("cannot add observables on different qubit counts")
        return Observable(self._terms + other._terms, self._qubit_count)

    def __mul__(self, scalar: float) -> "Observable":
        return Observable(
            [t.with_coefficient(t.coefficient * scalar) for t in self._terms], self._qubit_count
        )

    __rmul__ = __mul__

    def __repr__(self) -> str:
        body = " + ".join(f"{t.coefficient:g}*{t.label}" for t in self._terms)
        return f"Observable({body or '0'}; n={self._qubit_count})"


def _amplitudes(psi) -> tuple[np.ndarray, int]:
    amps = getattr(psi, "amplitudes", psi)
    amps = np.asarray(amps, dtype=complex)
    n = amps.size.bit_length() - 1
    if amps.ndim != 1 or amps.size != 1 << n:
        raise ValueError(f"statevector length {amps.size} is not a power of two")
    return amps, n


def _pauli_action(term: PauliString, amps: np.ndarray) -> np.ndarray:
    flip, phase, n_y = term.masks()
    idx = np.arange(amps.size)
    parity = np.bitwise_count(idx & phase) & 1
    factor = term.coefficient * (1j**n_y)
    out = np.empty_like(amps)
    out[idx ^ flip] = factor * np.where(parity, -amps, amps)
    return out


def apply_pauli_string(term: PauliString, psi):
    """Apply ``term`` (coefficient included) to ``psi`` and return a new state.

    ``psi`` may be a :class:`~spinvqe.statevec.StateVector` or a raw amplitude
    array; the result has the same type as the input.
    """
    amps, n = _amplitudes(psi)
    if term.qubit_count != n:
        raise ValueError(
            f"Pauli string acts on {term.qubit_count} qubits but the state has {n}"
        )
    out = _pauli_action(term, amps)
    if hasattr(psi, "amplitudes"):
        return type(psi)(out, n)
    return out


def exact_expectation(obs: Observable | PauliString, psi) -> float:
    """Return ``<psi|obs|psi>`` for a normalized state."""
    if isinstance(obs, PauliString):
        obs = Observable([obs])
    amps, n = _amplitudes(psi)
    if obs.qubit_count != n:
        raise ValueError(f"observable acts on {obs.qubit_count} qubits but the state has {n}")
    norm = np.vdot(amps, amps).real
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
    value = 0j
    for term in obs.terms:
        value += np.vdot(amps, _pauli_action(term, amps))
    if abs(value.imag) > IMAG_TOL:
        raise ArithmeticError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def observable_matrix(obs: Observable | PauliString) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of an observable."""
    if isinstance(obs, PauliString):
        obs = Observable([obs])
    dim = 1 << obs.qubit_count
    mat = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for term in obs.terms:
        flip, phase, n_y = term.masks()
        sign = 1 - 2 * (np.bitwise_count(idx & phase).astype(np.int64) & 1)
        mat[idx ^ flip, idx] += term.coefficient * (1j**n_y) * sign
    return mat


def parse_observable(text: str) -> Observable:
    """Parse ``<coeff> <axes>`` lines, e.g. ``1.0 XXI``. ``#`` starts a comment."""
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coeff> <axes>', got {raw!r}")
        try:
            coeff = float(parts[0])
            term = PauliString.from_label(parts[1], coeff)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        terms.append(term)
    if not terms:
        raise ValueError("no terms found")
    return Observable(terms)


def format_observable(obs: Observable) -> str:
    return "".join(f"{t.coefficient!r} {t.label}\n" for t in obs.terms)


def pauli_strings(labels: Sequence[str], coefficient: float = 1.0) -> list[PauliString]:
    return [PauliString.from_label(label, coefficient) for label in labels]
