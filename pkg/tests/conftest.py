"""Independent dense-matrix oracles shared by the test modules.

Everything here is built from ``np.kron`` and explicit loops over basis
states, without touching the package's bit-mask or tensordot kernels.
Site 0 is the least significant bit, so it is the rightmost kron factor.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.diag([1, 1j])
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_dense(label: str, coeff: float = 1.0) -> np.ndarray:
    # label is written site 0 first; kron wants the highest site first
    return coeff * kron_all([PAULI[c] for c in reversed(label)])


def ham_dense(n: int, j: float = 1.0) -> np.ndarray:
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    for i in range(n - 1):
        for p in "XYZ":
            label = ["I"] * n
            label[i] = label[i + 1] = p
            h += pauli_dense("".join(label), j)
    return h


def ry_dense(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def embed_1q(u: np.ndarray, site: int, n: int) -> np.ndarray:
    return kron_all([u if s == site else I2 for s in reversed(range(n))])


def embed_2q(u: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """Embed a 4x4 matrix whose basis index is ``2*bit_a + bit_b``."""
    dim = 1 << n
    full = np.zeros((dim, dim), dtype=complex)
    rest_mask = ~((1 << a) | (1 << b))
    for col in range(dim):
        ca, cb = (col >> a) & 1, (col >> b) & 1
        for ra in (0, 1):
            for rb in (0, 1):
                row = (col & rest_mask) | (ra << a) | (rb << b)
                full[row, col] += u[2 * ra + rb, 2 * ca + cb]
    return full


CNOT4 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ4 = np.diag([1, 1, 1, -1]).astype(complex)


def exchange_dense(theta: float) -> np.ndarray:
    # matrix exponential through the eigendecomposition of the Hermitian generator
    g = np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z)
    w, v = np.linalg.eigh(g)
    return v @ np.diag(np.exp(-1j * theta * w)) @ v.conj().T


def gate_dense(kind: str, sites, angle, n: int) -> np.ndarray:
    if kind == "ry":
        return embed_1q(ry_dense(angle), sites[0], n)
    if kind == "h":
        return embed_1q(H, sites[0], n)
    if kind == "s":
        return embed_1q(S, sites[0], n)
    if kind == "sdg":
        return embed_1q(S.conj().T, sites[0], n)
    if kind == "cnot":
        return embed_2q(CNOT4, sites[0], sites[1], n)
    if kind == "cz":
        return embed_2q(CZ4, sites[0], sites[1], n)
    if kind == "exchange":
        return embed_2q(exchange_dense(angle), sites[0], sites[1], n)
    raise ValueError(kind)


def circuit_dense(circuit, params=None) -> np.ndarray:
    bound = circuit.bind(params)
    u = np.eye(1 << circuit.qubit_count, dtype=complex)
    for g in bound.gates:
        u = gate_dense(g.kind, g.sites, g.angle, circuit.qubit_count) @ u
    return u


def basis_vec(n: int, bits) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[sum(b << i for i, b in enumerate(bits))] = 1
    return v


def neel_vec(n: int) -> np.ndarray:
    return basis_vec(n, [i % 2 for i in range(n)])


def random_vec(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
