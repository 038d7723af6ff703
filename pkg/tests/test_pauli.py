import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinvqe.pauli import (
    Observable,
    PauliString,
    apply_pauli_string,
    exact_expectation,
    format_observable,
    observable_matrix,
    parse_observable,
)
from spinvqe.statevec import StateVector

from conftest import basis_vec, pauli_dense, random_vec

labels = st.integers(1, 5).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_label_order_is_site_zero_first():
    # X on site 0 flips the least significant bit
    out = apply_pauli_string(PauliString.from_label("XI"), basis_vec(2, [0, 0]))
    np.testing.assert_allclose(out, basis_vec(2, [1, 0]))


def test_apply_matches_kron_oracle(rng):
    for label in ["X", "Y", "Z", "XY", "YZI", "ZIXY", "YYYY"]:
        psi = random_vec(len(label), rng)
        out = apply_pauli_string(PauliString.from_label(label, 0.7), psi)
        np.testing.assert_allclose(out, pauli_dense(label, 0.7) @ psi, atol=1e-14)


def test_apply_keeps_input_type():
    psi = StateVector(basis_vec(2, [0, 1]), 2)
    out = apply_pauli_string(PauliString.from_label("ZZ"), psi)
    assert isinstance(out, StateVector)
    np.testing.assert_allclose(out.amplitudes, -psi.amplitudes)


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        apply_pauli_string(PauliString.from_label("XX"), basis_vec(3, [0, 0, 0]))
    with pytest.raises(ValueError):
        exact_expectation(PauliString.from_label("X"), basis_vec(2, [0, 0]))


def test_expectation_requires_normalized_state():
    with pytest.raises(ValueError):
        exact_expectation(PauliString.from_label("Z"), np.array([1.0, 1.0]))


def test_singlet_correlators():
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    for label in ("XX", "YY", "ZZ"):
        assert exact_expectation(PauliString.from_label(label), singlet) == pytest.approx(-1, abs=1e-14)


def test_complex_coefficient_rejected():
    with pytest.raises(TypeError):
        PauliString.from_label("X", 1j)


def test_observable_merges_duplicates_in_order():
    obs = Observable([PauliString.from_label("ZZ", 1.0), PauliString.from_label("XX", 2.0),
                      PauliString.from_label("ZZ", 0.5)])
    assert [t.label for t in obs.terms] == ["ZZ", "XX"]
    assert obs.terms[0].coefficient == 1.5


def test_parse_and_format_round_trip():
    text = "# chain\n1.0 XXI\n-0.25 IZZ\n\n0.5 YIY  # tail\n"
    obs = parse_observable(text)
    assert [t.label for t in obs.terms] == ["XXI", "IZZ", "YIY"]
    assert parse_observable(format_observable(obs)) == obs


@pytest.mark.parametrize("bad", ["", "1.0", "x XX", "1.0 XQ", "1.0 XX\n1.0 XXX"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(ValueError):
        parse_observable(bad)


@settings(max_examples=60, deadline=None)
@given(labels, st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_expectation_matches_dense(label, coeff, seed):
    psi = random_vec(len(label), np.random.default_rng(seed))
    expected = np.vdot(psi, pauli_dense(label, coeff) @ psi).real
    got = exact_expectation(PauliString.from_label(label, coeff), psi)
    assert got == pytest.approx(expected, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(labels)
def test_pauli_squares_to_identity_and_matrix_is_hermitian(label):
    m = observable_matrix(PauliString.from_label(label))
    np.testing.assert_array_equal(m, pauli_dense(label))
    np.testing.assert_allclose(m @ m, np.eye(m.shape[0]), atol=1e-14)
    np.testing.assert_array_equal(m, m.conj().T)
