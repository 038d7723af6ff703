"""Variational circuit families and their initial states."""

from __future__ import annotations

from dataclasses import dataclass

from .statevec import Circuit, Gate, StateVector, init_basis_state

__all__ = [
    "FAMILIES",
    "AnsatzSpec",
    "build_hea",
    "build_exchange",
    "build_expressive",
    "build_ansatz",
    "neel_state",
]

FAMILIES = ("hea", "exchange", "expressive")


@dataclass(frozen=True)
class AnsatzSpec:
    """Which circuit family to build, on how many sites, with how many layers.

    ``hea`` is single-layer with one shared angle. ``exchange`` has one shared
    angle per layer. ``expressive`` has one angle per site per layer.
    """

    family: str
    n_sites: int
    layers: int = 1

    def __post_init__(self):
        family = self.family.lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown ansatz family {self.family!r}; choose from {FAMILIES}")
        object.__setattr__(self, "family", family)
        if self.n_sites < 2:
            raise ValueError(f"ansatz needs at least 2 sites, got {self.n_sites}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if family == "hea" and self.layers != 1:
            raise ValueError("the hardware-efficient ansatz has a single layer")

    @property
    def parameter_count(self) -> int:
        if self.family == "hea":
            return 1
        if self.family == "exchange":
            return self.layers
        return self.n_sites * self.layers


def neel_state(n: int) -> StateVector:
    """``|0101...>`` with site 0 in state 0."""
    if n < 1:
        raise ValueError(f"need at least one site, got {n}")
    return init_basis_state(n, [i % 2 for i in range(n)])


def _cnot_ladder(n: int) -> list[Gate]:
    return [Gate("cnot", (i, i + 1)) for i in range(n - 1)]


def build_hea(n: int) -> Circuit:
    """Shared-angle ``R_y`` on every site, then a CNOT ladder ``i -> i+1``.

    For two sites this is ``CNOT_{0,1} (R_y(theta) x R_y(theta))`` with site 0
    as control.
    """
    if n < 2:
        raise ValueError(f"HEA needs at least 2 sites, got {n}")
    gates = [Gate("ry", (i,), param="theta") for i in range(n)] + _cnot_ladder(n)
    return Circuit(n, tuple(gates), ("theta",))


def build_exchange(n: int, layers: int = 1) -> Circuit:
    # one angle per layer, shared by every bond exchange in that layer
    if n < 2:
        raise ValueError(f"exchange ansatz needs at least 2 sites, got {n}")
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    names = tuple(f"theta_{l}" for l in range(layers))
    gates = [
        Gate("exchange", (i, i + 1), param=name) for name in names for i in range(n - 1)
    ]
    return Circuit(n, tuple(gates), names)


def build_expressive(n: int, layers: int) -> Circuit:
    """``layers`` repetitions of independent per-site ``R_y`` plus a CNOT ladder."""
    if n < 2:
        raise ValueError(f"expressive ansatz needs at least 2 sites, got {n}")
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    names = []
    gates = []
    for l in range(layers):
        for i in range(n):
            name = f"theta_{l}_{i}"
            names.append(name)
            gates.append(Gate("ry", (i,), param=name))
        gates.extend(_cnot_ladder(n))
    return Circuit(n, tuple(gates), tuple(names))


def build_ansatz(spec: AnsatzSpec) -> tuple[Circuit, StateVector]:
    """Circuit and initial state for ``spec``; every family starts from Néel."""
    if spec.family == "hea":
        circuit = build_hea(spec.n_sites)
    elif spec.family == "exchange":
        circuit = build_exchange(spec.n_sites, spec.layers)
    else:
        circuit = build_expressive(spec.n_sites, spec.layers)
    assert circuit.parameter_count == spec.parameter_count
    return circuit, neel_state(spec.n_sites)
