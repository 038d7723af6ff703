"""Dense statevector simulation over a small, closed gate set."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "Gate",
    "Circuit",
    "GATE_KINDS",
    "init_basis_state",
    "basis_index",
    "apply_gate",
    "run_circuit",
    "CompiledCircuit",
    "gate_matrix",
    "apply_local",
]

MAX_QUBITS = 20

_SQ2 = 1.0 / np.sqrt(2.0)
_H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_SDG = _S.conj().T
# local basis |a b>, first listed site most significant
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

# kind -> number of sites, parameterized?
GATE_KINDS: dict[str, tuple[int, bool]] = {
    "ry": (1, True),
    "h": (1, False),
    "s": (1, False),
    "sdg": (1, False),
    "cnot": (2, False),
    "cz": (2, False),
    "exchange": (2, True),
}


def _check_qubit_count(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over ``2**qubit_count`` basis states.

    The amplitude array is copied and frozen on construction. Normalization is
    not enforced here because Pauli strings with coefficients produce
    unnormalized vectors; operations that need a normalized input check it.
    """

    amplitudes: np.ndarray
    qubit_count: int

    def __post_init__(self):
        _check_qubit_count(self.qubit_count)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.qubit_count:
            raise ValueError(
                f"expected {1 << self.qubit_count} amplitudes for {self.qubit_count} qubits,"
                f" got {amps.size}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_array(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size != 1 << n:
            raise ValueError(f"length {amps.size} is not a power of two")
        return cls(amps, n)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __len__(self) -> int:
        return self.amplitudes.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.qubit_count == other.qubit_count and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    def __repr__(self) -> str:
        return f"StateVector(n={self.qubit_count}, amplitudes={self.amplitudes!r})"


def basis_index(bits: Sequence[int]) -> int:
    """Basis-state index of a per-site bit list (site 0 is the LSB)."""
    index = 0
    for site, bit in enumerate(bits):
        if bit not in (0, 1):
            raise ValueError(f"bit values must be 0 or 1, got {bit!r}")
        index |= int(bit) << site
    return index


def init_basis_state(n: int, bits: Sequence[int]) -> StateVector:
    _check_qubit_count(n)
    if len(bits) != n:
        raise ValueError(f"bitstring has {len(bits)} entries, expected {n}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[basis_index(bits)] = 1.0
    return StateVector(amps, n)


@dataclass(frozen=True)
class Gate:
    """A gate from the closed set in :data:`GATE_KINDS`.

    ``angle`` holds a concrete value; ``param`` names a circuit parameter that
    supplies it at bind time. Exactly one of them is set for rotation kinds.
    For ``cnot`` the sites are ``(control, target)``.
    """

    kind: str
    sites: tuple[int, ...]
    angle: float | None = None
    param: str | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity, parameterized = GATE_KINDS[self.kind]
        sites = tuple(int(s) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        if len(sites) != arity:
            raise ValueError(f"{self.kind} acts on {arity} site(s), got {sites}")
        if len(set(sites)) != len(sites) or min(sites) < 0:
            raise ValueError(f"invalid sites {sites} for {self.kind}")
        if parameterized:
            if (self.angle is None) == (self.param is None):
                raise ValueError(f"{self.kind} needs exactly one of angle or param")
            if self.angle is not None:
                object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None or self.param is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def is_bound(self) -> bool:
        return self.param is None

    def bind(self, values: Mapping[str, float]) -> "Gate":
        if self.param is None:
            return self
        return Gate(self.kind, self.sites, angle=float(values[self.param]))

    def adjoint(self) -> "Gate":
        if not self.is_bound:
            raise ValueError("cannot take the adjoint of an unbound gate")
        if self.kind in ("ry", "exchange"):
            return replace(self, angle=-self.angle)
        if self.kind == "s":
            return replace(self, kind="sdg")
        if self.kind == "sdg":
            return replace(self, kind="s")
        return self

    def to_dict(self) -> dict:
        record = {"kind": self.kind, "sites": list(self.sites)}
        if self.param is not None:
            record["param"] = self.param
        elif self.angle is not None:
            record["angle"] = self.angle
        return record

    @classmethod
    def from_dict(cls, record: Mapping) -> "Gate":
        return cls(record["kind"], tuple(record["sites"]), record.get("angle"), record.get("param"))


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def exchange_matrix(theta: float) -> np.ndarray:
    """``exp[-i theta (XX + YY + ZZ)]`` in closed form.

    ``XX + YY + ZZ = 2 SWAP - I``, so the exponential is
    ``e^{i theta} (cos 2theta I - i sin 2theta SWAP)``.
    """
    return np.exp(1j * theta) * (
        np.cos(2 * theta) * np.eye(4) - 1j * np.sin(2 * theta) * _SWAP
    )


def gate_matrix(gate: Gate) -> np.ndarray:
    if not gate.is_bound:
        raise ValueError(f"gate {gate.kind} on {gate.sites} has unbound parameter {gate.param!r}")
    kind = gate.kind
    if kind == "ry":
        return ry_matrix(gate.angle)
    if kind == "exchange":
        return exchange_matrix(gate.angle)
    return {"h": _H, "s": _S, "sdg": _SDG, "cnot": _CNOT, "cz": _CZ}[kind]


def apply_local(tensor: np.ndarray, matrix: np.ndarray, sites: Sequence[int], n: int,
                offset: int = 0) -> np.ndarray:
    """Contract a ``k``-site matrix into a tensor whose axes are qubits.

    ``tensor`` has shape ``(2,) * m`` with ``m >= offset + n``; qubit ``s``
    lives on axis ``offset + n - 1 - s`` (so site 0 is the least significant).
    """
    k = len(sites)
    axes = [offset + n - 1 - s for s in sites]
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_gate(psi: StateVector, gate: Gate) -> StateVector:
    n = psi.qubit_count
    if max(gate.sites) >= n:
        raise ValueError(f"gate {gate.kind} sites {gate.sites} out of range for {n} qubits")
    tensor = psi.amplitudes.reshape((2,) * n)
    out = apply_local(tensor, gate_matrix(gate), gate.sites, n)
    return StateVector(out.reshape(-1), n)


@dataclass(frozen=True)
class Circuit:
    """Ordered gates plus the names of the free parameters they reference.

    ``parameters`` fixes the order in which a parameter vector is bound.
    """

    qubit_count: int
    gates: tuple[Gate, ...] = ()
    parameters: tuple[str, ...] = ()

    def __post_init__(self):
        _check_qubit_count(self.qubit_count)
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if len(set(self.parameters)) != len(self.parameters):
            raise ValueError("duplicate parameter names")
        declared = set(self.parameters)
        for g in gates:
            if max(g.sites) >= self.qubit_count:
                raise ValueError(f"gate {g.kind} sites {g.sites} out of range")
            if g.param is not None and g.param not in declared:
                raise ValueError(f"gate references undeclared parameter {g.param!r}")

    @property
    def parameter_count(self) -> int:
        return len(self.parameters)

    def bind(self, params: Sequence[float] | None = None) -> "Circuit":
        values = np.asarray([] if params is None else params, dtype=float).reshape(-1)
        if values.size != self.parameter_count:
            raise ValueError(
                f"circuit takes {self.parameter_count} parameter(s), got {values.size}"
            )
        mapping = dict(zip(self.parameters, values.tolist()))
        return Circuit(self.qubit_count, tuple(g.bind(mapping) for g in self.gates))

    def then(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.qubit_count, self.gates + tuple(gates), self.parameters)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(
            {
                "qubit_count": self.qubit_count,
                "parameters": list(self.parameters),
                "gates": [g.to_dict() for g in self.gates],
            },
            indent=indent,
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        data = json.loads(text)
        return cls(
            data["qubit_count"],
            tuple(Gate.from_dict(g) for g in data["gates"]),
            tuple(data.get("parameters", ())),
        )


class CompiledCircuit:
    """A circuit reduced to array kernels for repeated evaluation.

    Parameter lookups, constant matrices and index slices are resolved once.
    Execution works on a ``(2,) * n`` view of the amplitudes; any trailing
    axes are carried along untouched, so a batch of states can be evolved at
    once by passing an array of shape ``(2**n, batch)``.
    """

    def __init__(self, circuit: Circuit):
        self.qubit_count = n = circuit.qubit_count
        self.parameter_count = circuit.parameter_count
        self.gate_count = len(circuit.gates)
        slots = {name: i for i, name in enumerate(circuit.parameters)}
        full = (slice(None),) * n

        def pick(**fixed):
            sel = list(full)
            for ax, v in fixed.items():
                sel[int(ax[1:])] = v
            return tuple(sel)

        ops = []
        for g in circuit.gates:
            axes = tuple(n - 1 - s for s in g.sites)
            slot = slots[g.param] if g.param is not None else None
            if len(axes) == 1:
                lo, hi = pick(**{f"a{axes[0]}": 0}), pick(**{f"a{axes[0]}": 1})
                mat = None if g.kind == "ry" else gate_matrix(g)
                ops.append((g.kind, (lo, hi), mat, g.angle, slot))
            elif g.kind == "cnot":
                c, tg = axes
                ops.append(("cnot", (pick(**{f"a{c}": 1}), tg - (tg > c)), None, None, None))
            elif g.kind == "cz":
                sel = pick(**{f"a{axes[0]}": 1, f"a{axes[1]}": 1})
                ops.append(("cz", sel, None, None, None))
            else:
                ops.append(("exchange", axes, None, g.angle, slot))
        self._ops = ops

    def param_occurrences(self) -> list[list[tuple[int, str]]]:
        """For each parameter, the ``(gate index, kind)`` pairs that use it."""
        out: list[list[tuple[int, str]]] = [[] for _ in range(self.parameter_count)]
        for i, (kind, _, _, _, slot) in enumerate(self._ops):
            if slot is not None:
                out[slot].append((i, kind))
        return out

    def run(self, params: Sequence[float] | None, amplitudes: np.ndarray) -> np.ndarray:
        n = self.qubit_count
        values = np.asarray([] if params is None else params, dtype=float).reshape(-1)
        if values.size != self.parameter_count:
            raise ValueError(
                f"circuit takes {self.parameter_count} parameter(s), got {values.size}"
            )
        amplitudes = np.asarray(amplitudes)
        batch = amplitudes.shape[1:]
        t = np.array(amplitudes, dtype=complex).reshape((2,) * n + batch)
        for kind, where, mat, fixed, slot in self._ops:
            if kind == "ry":
                half = 0.5 * (fixed if slot is None else values[slot])
                c, s = math.cos(half), math.sin(half)
                lo, hi = where
                a0 = t[lo].copy()
                a1 = t[hi]
                t[lo] = c * a0 - s * a1
                t[hi] = s * a0 + c * a1
            elif mat is not None:
                lo, hi = where
                a0 = t[lo].copy()
                a1 = t[hi]
                t[lo] = mat[0, 0] * a0 + mat[0, 1] * a1
                t[hi] = mat[1, 0] * a0 + mat[1, 1] * a1
            elif kind == "cnot":
                sel, axis = where
                sub = t[sel]
                sub[...] = np.flip(sub, axis=axis).copy()
            elif kind == "cz":
                t[where] *= -1
            else:
                angle = fixed if slot is None else values[slot]
                a, b = where
                t = np.exp(1j * angle) * (
                    math.cos(2 * angle) * t - 1j * math.sin(2 * angle) * np.swapaxes(t, a, b)
                )
        return t.reshape((1 << n,) + batch)


def run_circuit(circuit: Circuit | CompiledCircuit, params: Sequence[float] | None,
                psi0: StateVector) -> StateVector:
    """Apply every gate of ``circuit`` (bound to ``params``) to ``psi0``."""
    if psi0.qubit_count != circuit.qubit_count:
        raise ValueError(
            f"circuit has {circuit.qubit_count} qubits, initial state has {psi0.qubit_count}"
        )
    if not isinstance(circuit, CompiledCircuit):
        circuit = CompiledCircuit(circuit)
    return StateVector(circuit.run(params, psi0.amplitudes), psi0.qubit_count)
