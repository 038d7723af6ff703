import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinvqe.measure import (
    MeasurementBasis,
    derive_seed,
    estimate_energy,
    estimate_term,
    exact_term,
    measurement_settings,
    rotate_for_basis,
    sample_shots,
    write_shot_csv,
)
from spinvqe.model import HeisenbergChain, build_hamiltonian
from spinvqe.pauli import PauliString, exact_expectation, parse_observable
from spinvqe.statevec import StateVector, init_basis_state

from conftest import pauli_dense, random_vec

SINGLET = StateVector(np.array([0, 1, -1, 0]) / math.sqrt(2), 2)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert len({derive_seed(7, k) for k in range(100)}) == 100
    assert derive_seed(7, 1) != derive_seed(8, 1)


def test_sampling_is_reproducible():
    psi = StateVector(random_vec(3, np.random.default_rng(0)), 3)
    a = sample_shots(psi, 500, 42)
    b = sample_shots(psi, 500, 42)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    assert a.counts() == b.counts()
    assert sum(a.counts().values()) == 500


def test_sampling_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_shots(SINGLET, 0, 1)
    with pytest.raises(ValueError):
        sample_shots(StateVector(np.array([1.0, 1.0]), 1), 10, 1)


def test_bitstrings_are_site_zero_first():
    rec = sample_shots(init_basis_state(3, [1, 0, 0]), 5, 0)
    assert rec.bitstrings == ["100"] * 5


def test_basis_rotation_gates():
    basis = MeasurementBasis.of(PauliString.from_label("XYZI"))
    assert [(g.kind, g.sites) for g in basis.gates()] == [("h", (0,)), ("sdg", (1,)), ("h", (1,))]
    assert basis.covers(PauliString.from_label("XIZI"))
    assert not basis.covers(PauliString.from_label("ZIII"))


def test_estimate_term_requires_matching_basis():
    rec = sample_shots(SINGLET, 10, 0)
    with pytest.raises(ValueError):
        estimate_term(rec, PauliString.from_label("XX"))


def test_singlet_estimates_are_exact():
    # every term is sharp on the singlet, so the estimate has no shot noise
    est = estimate_energy(SINGLET, build_hamiltonian(HeisenbergChain(2)), 1500, seed=3)
    assert est.energy == pytest.approx(-3.0, abs=1e-12)
    assert est.sigma == 0.0


def test_variance_is_sum_of_term_variances():
    psi = StateVector(random_vec(3, np.random.default_rng(2)), 3)
    est = estimate_energy(psi, build_hamiltonian(HeisenbergChain(3)), 1500, seed=5)
    total = 0.0
    for _, var in est.per_term.values():
        total += var
    assert est.sigma ** 2 == pytest.approx(total, rel=1e-12)
    assert est.variance == total


def test_per_term_formula():
    psi = StateVector(random_vec(2, np.random.default_rng(4)), 2)
    term = PauliString.from_label("XY", 0.5)
    rec = sample_shots(rotate_for_basis(psi, term), 1000, 9, term)
    p_hat = np.mean([(-1) ** (b.count("1")) for b in rec.bitstrings])
    value, var = estimate_term(rec, term)
    assert value == pytest.approx(0.5 * p_hat, abs=1e-12)
    assert var == pytest.approx(0.25 * (1 - p_hat ** 2) / 1000, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n)),
       st.integers(0, 2**32 - 1))
def test_infinite_shot_path_equals_dense(label, seed):
    psi = random_vec(len(label), np.random.default_rng(seed))
    term = PauliString.from_label(label, 1.3)
    probs = rotate_for_basis(StateVector(psi, len(label)), term).probabilities()
    expected = np.vdot(psi, pauli_dense(label, 1.3) @ psi).real
    assert exact_term(probs, term)[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("grouping", ["term", "global"])
def test_infinite_shot_energy_equals_exact(grouping):
    obs = parse_observable("1.0 XXI\n0.5 IYY\n-0.7 ZIZ\n0.3 XYZ\n2.0 III\n")
    psi = StateVector(random_vec(3, np.random.default_rng(8)), 3)
    est = estimate_energy(psi, obs, None, grouping=grouping)
    assert est.energy == pytest.approx(exact_expectation(obs, psi), abs=1e-12)
    assert est.sigma == 0.0


def test_global_grouping_for_chain():
    for n in (2, 3, 6):
        settings_ = measurement_settings(build_hamiltonian(HeisenbergChain(n)), "global")
        assert [s.label for s, _ in settings_] == ["X" * n, "Y" * n, "Z" * n]
        assert sorted(i for _, m in settings_ for i in m) == list(range(3 * (n - 1)))


def test_term_grouping_one_setting_per_term():
    obs = build_hamiltonian(HeisenbergChain(3))
    s = measurement_settings(obs, "term")
    assert len(s) == 6
    assert s[0][0].label == "XXZ"  # idle sites read in Z


def test_records_and_csv():
    records = []
    psi = StateVector(random_vec(2, np.random.default_rng(3)), 2)
    estimate_energy(psi, build_hamiltonian(HeisenbergChain(2)), 50, seed=1, records=records)
    assert len(records) == 3
    text = write_shot_csv(records)
    lines = text.strip().splitlines()
    assert lines[0] == "seed,basis,bitstring,count"
    assert sum(int(l.split(",")[3]) for l in lines[1:]) == 150
    buf = io.StringIO()
    write_shot_csv(records, buf)
    assert buf.getvalue() == text


@pytest.mark.slow
def test_sampled_mean_converges_to_exact():
    psi = StateVector(random_vec(2, np.random.default_rng(6)), 2)
    obs = build_hamiltonian(HeisenbergChain(2))
    values = [estimate_energy(psi, obs, 1500, seed=s).energy for s in range(200)]
    exact = exact_expectation(obs, psi)
    sigma = estimate_energy(psi, obs, None).sigma  # zero on the analytic path
    assert sigma == 0.0
    assert abs(np.mean(values) - exact) < 4 * np.std(values) / math.sqrt(200)
