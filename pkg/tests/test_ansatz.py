import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinvqe.ansatz import AnsatzSpec, build_ansatz, build_exchange, build_hea, neel_state
from spinvqe.model import HeisenbergChain, build_hamiltonian, magnetization_sector
from spinvqe.pauli import exact_expectation
from spinvqe.statevec import run_circuit

from conftest import circuit_dense, embed_2q, ham_dense, neel_vec, ry_dense, CNOT4

HEA_N2_MIN = -(0.5 + math.sqrt(2))  # brute-force oracle minimum, at theta = 7 pi / 4


def hea_energy_dense(theta: float) -> float:
    # control is site 0, target site 1
    u = embed_2q(CNOT4, 0, 1, 2) @ np.kron(ry_dense(theta), ry_dense(theta))
    psi = u @ neel_vec(2)
    return float(np.vdot(psi, ham_dense(2) @ psi).real)


def test_parameter_counts():
    assert AnsatzSpec("hea", 2).parameter_count == 1
    assert AnsatzSpec("exchange", 5).parameter_count == 1
    assert AnsatzSpec("exchange", 3, 2).parameter_count == 2
    assert AnsatzSpec("expressive", 3, 4).parameter_count == 12
    with pytest.raises(ValueError):
        AnsatzSpec("hea", 2, 2)
    with pytest.raises(ValueError):
        AnsatzSpec("qaoa", 2)
    with pytest.raises(ValueError):
        AnsatzSpec("exchange", 1)


def test_neel_state():
    np.testing.assert_array_equal(neel_state(4).amplitudes, neel_vec(4))


def test_hea_zero_angle_is_cnot_on_neel():
    psi = run_circuit(build_hea(2), [0.0], neel_state(2))
    # control (site 0) is 0, so |01> is unchanged
    np.testing.assert_allclose(psi.amplitudes, neel_vec(2), atol=1e-15)


@pytest.mark.parametrize("theta", np.linspace(0, 2 * math.pi, 8, endpoint=False))
def test_hea_energy_matches_matrix_oracle(theta):
    circuit, psi0 = build_ansatz(AnsatzSpec("hea", 2))
    e = exact_expectation(build_hamiltonian(HeisenbergChain(2)), run_circuit(circuit, [theta], psi0))
    assert e == pytest.approx(hea_energy_dense(theta), abs=1e-12)


def test_hea_minimum_over_full_period():
    thetas = np.linspace(0, 2 * math.pi, 201)
    circuit, psi0 = build_ansatz(AnsatzSpec("hea", 2))
    h = build_hamiltonian(HeisenbergChain(2))
    energies = [exact_expectation(h, run_circuit(circuit, [t], psi0)) for t in thetas]
    k = int(np.argmin(energies))
    assert energies[k] == pytest.approx(HEA_N2_MIN, abs=1e-3)
    assert hea_energy_dense(7 * math.pi / 4) == pytest.approx(HEA_N2_MIN, abs=1e-12)


@pytest.mark.parametrize("n,layers", [(2, 1), (3, 1), (4, 2), (3, 3)])
def test_circuits_match_dense_unitaries(n, layers, rng):
    for family in ("exchange", "expressive"):
        spec = AnsatzSpec(family, n, layers)
        circuit, psi0 = build_ansatz(spec)
        params = rng.uniform(-math.pi, math.pi, spec.parameter_count)
        psi = run_circuit(circuit, params, psi0)
        np.testing.assert_allclose(psi.amplitudes, circuit_dense(circuit, params) @ neel_vec(n),
                                   atol=1e-12)


@pytest.mark.parametrize("theta", np.linspace(-3, 3, 13))
def test_exchange_two_sites_constant_energy(theta):
    psi = run_circuit(build_exchange(2), [theta], neel_state(2))
    assert exact_expectation(build_hamiltonian(HeisenbergChain(2)), psi) == pytest.approx(-1.0, abs=1e-12)


def test_exchange_three_sites_identity_at_zero():
    psi = run_circuit(build_exchange(3), [0.0], neel_state(3))
    assert exact_expectation(build_hamiltonian(HeisenbergChain(3)), psi) == pytest.approx(-2.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_exchange_conserves_magnetization(n, layers, seed):
    params = np.random.default_rng(seed).uniform(-math.pi, math.pi, layers)
    psi = run_circuit(build_exchange(n, layers), params, neel_state(n))
    assert magnetization_sector(psi)[n // 2] == pytest.approx(1.0, abs=1e-10)


def test_hea_leaves_sector():
    psi = run_circuit(build_hea(2), [math.pi / 2], neel_state(2))
    assert 1.0 - magnetization_sector(psi)[1] > 0.01
