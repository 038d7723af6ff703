import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinvqe.ansatz import build_exchange, neel_state
from spinvqe.checks import random_circuit
from spinvqe.measure import estimate_energy, exact_term
from spinvqe.model import HeisenbergChain, build_hamiltonian
from spinvqe.noise import (
    GARNET_AVERAGES,
    DensityMatrix,
    NoiseModel,
    amplitude_damping_kraus,
    apply_kraus,
    calibrate_from_table,
    depolarize,
    depolarizing_probability,
    evolve_noisy,
    load_noise_config,
    noisy_expectation,
    phase_damping_kraus,
    readout_probabilities,
)
from spinvqe.pauli import PauliString
from spinvqe.statevec import StateVector

from conftest import circuit_dense, embed_1q, random_vec


def rand_rho(n, seed):
    return DensityMatrix.from_statevector(StateVector(random_vec(n, np.random.default_rng(seed)), n))


def test_depolarizing_probability():
    assert depolarizing_probability(0.9982, 2) == pytest.approx(0.0036)
    assert depolarizing_probability(0.9901, 4) == pytest.approx(0.0132)
    assert depolarizing_probability(1.0, 2) == 0.0
    with pytest.raises(ValueError):
        depolarizing_probability(1.2, 2)


def test_garnet_calibration():
    nm = calibrate_from_table()
    assert nm.readout_flip_prob == pytest.approx(0.0288)
    assert nm.single_qubit_depol == pytest.approx(0.0036)
    assert nm.two_qubit_depol == pytest.approx(0.0132)
    assert nm.t2_us == GARNET_AVERAGES["t2_echo_us"]


@pytest.mark.parametrize("kwargs", [
    {"readout_flip_prob": 1.5}, {"single_qubit_depol": -0.1}, {"t1_us": 10.0, "t2_us": 25.0},
    {"t1_us": 0.0},
])
def test_noise_model_validation(kwargs):
    with pytest.raises(ValueError):
        NoiseModel(**kwargs)


def test_noise_config_round_trip(tmp_path):
    nm = calibrate_from_table()
    path = tmp_path / "noise.json"
    path.write_text(json.dumps(nm.to_dict()))
    assert load_noise_config(path) == nm
    path.write_text(json.dumps({"calibration": {"readout_fidelity": 0.99}}))
    assert load_noise_config(path).readout_flip_prob == pytest.approx(0.01)
    path.write_text(json.dumps({"readout_flip_prob": 0.1, "bogus": 1}))
    with pytest.raises(ValueError):
        load_noise_config(path)
    assert NoiseModel.from_dict(NoiseModel().to_dict()) == NoiseModel()


def test_damping_rates():
    nm = NoiseModel(t1_us=30.0, t2_us=20.0)
    gamma, lam = nm.damping(1000.0)
    assert gamma == pytest.approx(1 - math.exp(-1 / 30))
    # coherence decays as exp(-t/T2): sqrt(1-gamma) * sqrt(1-lam)
    assert math.sqrt((1 - gamma) * (1 - lam)) == pytest.approx(math.exp(-1 / 20))
    assert NoiseModel().damping(1000.0) == (0.0, 0.0)


def test_depolarize_single_qubit_formula():
    rho = rand_rho(1, 1)
    out = depolarize(rho, (0,), 0.3)
    np.testing.assert_allclose(out.entries, 0.7 * rho.entries + 0.3 * np.eye(2) / 2, atol=1e-14)


def test_depolarize_two_qubits_of_three_formula():
    rho = rand_rho(3, 2)
    out = depolarize(rho, (0, 2), 0.4)
    # (1-p) rho + p * (I/4 on sites 0,2) x Tr_{0,2} rho
    t = rho.entries.reshape([2] * 6)  # axes: s2 s1 s0 | s2' s1' s0'
    reduced = np.einsum("aicajc->ij", t)
    mixed = np.einsum("ac,ij,bd->aibcjd", np.eye(2), reduced, np.eye(2)).reshape(8, 8) / 4
    np.testing.assert_allclose(out.entries, 0.6 * rho.entries + 0.4 * mixed, atol=1e-13)


def test_full_depolarization_is_maximally_mixed():
    out = depolarize(rand_rho(2, 3), (0, 1), 1.0)
    np.testing.assert_allclose(out.entries, DensityMatrix.maximally_mixed(2).entries, atol=1e-14)


def test_amplitude_damping_against_dense_kraus():
    rho = rand_rho(2, 4)
    out = apply_kraus(rho, amplitude_damping_kraus(0.3), (1,))
    expected = sum(embed_1q(k, 1, 2) @ rho.entries @ embed_1q(k, 1, 2).conj().T
                   for k in amplitude_damping_kraus(0.3))
    np.testing.assert_allclose(out.entries, expected, atol=1e-14)
    excited = DensityMatrix(np.diag([0, 1]).astype(complex), 1)
    assert apply_kraus(excited, amplitude_damping_kraus(0.3), (0,)).entries[1, 1].real == pytest.approx(0.7)


def test_phase_damping_shrinks_coherence_only():
    plus = DensityMatrix(np.full((2, 2), 0.5), 1)
    out = apply_kraus(plus, phase_damping_kraus(0.36), (0,))
    assert out.entries[0, 1].real == pytest.approx(0.5 * 0.8)
    assert out.entries[0, 0].real == pytest.approx(0.5)


def test_density_matrix_check():
    assert rand_rho(2, 5).is_valid()
    assert not DensityMatrix(np.diag([0.5, 0.6]), 1).is_valid()
    assert not DensityMatrix(np.diag([1.5, -0.5]), 1).is_valid()
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_noisy_evolution_stays_physical(n, depth, seed):
    circuit = random_circuit(n, depth, np.random.default_rng(seed))
    nm = NoiseModel(0.05, 0.02, 0.05, t1_us=30.0, t2_us=20.0)
    rho = evolve_noisy(circuit, None, rand_rho(n, seed), nm)
    rho.check()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_zero_noise_matches_statevector(n, depth, seed):
    circuit = random_circuit(n, depth, np.random.default_rng(seed))
    psi0 = random_vec(n, np.random.default_rng(seed + 1))
    rho = evolve_noisy(circuit, None, StateVector(psi0, n), NoiseModel.ideal())
    psi = circuit_dense(circuit) @ psi0
    np.testing.assert_allclose(rho.entries, np.outer(psi, psi.conj()), atol=1e-10)


@pytest.mark.parametrize("p", [0.0, 0.01, 0.05, 0.1, 0.5])
def test_readout_two_site_parity_law(p):
    rho = rand_rho(2, 11)
    zz = PauliString.from_label("ZZ")
    clean = exact_term(rho.probabilities(), zz)[0]
    noisy = exact_term(readout_probabilities(rho, zz, NoiseModel(p)), zz)[0]
    assert noisy == pytest.approx((1 - 2 * p) ** 2 * clean, abs=1e-12)


def test_noisy_expectation_ideal_equals_pure_path():
    psi = StateVector(random_vec(3, np.random.default_rng(12)), 3)
    obs = build_hamiltonian(HeisenbergChain(3))
    rho = DensityMatrix.from_statevector(psi)
    for grouping in ("term", "global"):
        exact = noisy_expectation(rho, obs, NoiseModel.ideal(), None, grouping=grouping)
        assert exact.energy == pytest.approx(estimate_energy(psi, obs, None).energy, abs=1e-12)
        sampled = noisy_expectation(rho, obs, NoiseModel.ideal(), 300, 4, grouping)
        # identical sub-seeds and probabilities give identical samples
        assert sampled.energy == pytest.approx(estimate_energy(psi, obs, 300, 4, grouping).energy,
                                               abs=1e-12)


def test_garnet_shifts_exchange_energy_upward():
    nm = calibrate_from_table()
    obs = build_hamiltonian(HeisenbergChain(2))
    for theta in (0.0, 0.7, 2.0):
        rho = evolve_noisy(build_exchange(2), [theta], neel_state(2), nm)
        e = noisy_expectation(rho, obs, nm, None, grouping="global").energy
        assert -1.0 + 1e-6 < e < -0.8


def test_maximally_mixed_is_fixed_by_readout_and_depolarizing():
    # damping is left out: it pulls the mixed state toward |0...0>
    rho = DensityMatrix.maximally_mixed(3)
    nm = NoiseModel(0.2, 0.01, 0.03)
    e = noisy_expectation(rho, build_hamiltonian(HeisenbergChain(3)), nm)
    assert e.energy == pytest.approx(0.0, abs=1e-12)
