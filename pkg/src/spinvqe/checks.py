"""Cross-module invariant battery behind ``spinvqe validate``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ansatz import AnsatzSpec, build_ansatz, build_exchange, build_hea, neel_state
from .measure import derive_seed, estimate_energy, exact_term, make_rng, rotate_for_basis
from .model import (
    HeisenbergChain,
    build_hamiltonian,
    exact_diagonalize,
    magnetization_sector,
)
from .noise import (
    DensityMatrix,
    NoiseModel,
    calibrate_from_table,
    evolve_noisy,
    readout_probabilities,
)
from .pauli import PauliString, exact_expectation, observable_matrix
from .runner import (
    Execution,
    ExperimentConfig,
    GridSpec,
    OptimizerSpec,
    build_batch,
    execute_batch,
    run_sweep,
)
from .statevec import GATE_KINDS, Circuit, Gate, StateVector, run_circuit

__all__ = ["Check", "CHECKS", "QUICK", "run_checks", "random_state", "random_circuit"]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name:<28} {self.seconds:6.2f}s  {self.detail}"


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v), n)


def random_circuit(n: int, depth: int, rng: np.random.Generator) -> Circuit:
    kinds = [k for k, (arity, _) in GATE_KINDS.items() if arity <= n]
    gates = []
    for _ in range(depth):
        kind = str(rng.choice(kinds))
        arity, parameterized = GATE_KINDS[kind]
        sites = tuple(int(s) for s in rng.choice(n, size=arity, replace=False))
        angle = float(rng.uniform(-math.pi, math.pi)) if parameterized else None
        gates.append(Gate(kind, sites, angle=angle))
    return Circuit(n, tuple(gates))


def _hamiltonian_structure() -> tuple[bool, str]:
    worst = 0.0
    for n in range(2, 7):
        m = observable_matrix(build_hamiltonian(HeisenbergChain(n)))
        worst = max(worst, float(np.abs(m - m.conj().T).max()), abs(float(np.trace(m).real)))
    return worst == 0.0, f"max |H - H^dag|, |tr H| = {worst:.1e}"


def _exact_energies() -> tuple[bool, str]:
    expected = {2: -3.0, 3: -4.0, 4: -6.4641}
    got = {n: exact_diagonalize(HeisenbergChain(n)).ground_energy for n in expected}
    ok = all(abs(got[n] - e) <= 5e-4 for n, e in expected.items())
    return ok, ", ".join(f"N={n}: {got[n]:.6f}" for n in got)


def _exchange_constant() -> tuple[bool, str]:
    r = run_sweep(ExperimentConfig(HeisenbergChain(2), AnsatzSpec("exchange", 2)))
    dev = max(abs(e.energy + 1.0) for _, e in r.points)
    return dev <= 1e-9, f"max |E + 1| over {len(r.points)} points = {dev:.1e}"


def _symmetry() -> tuple[bool, str]:
    rng = make_rng(11)
    worst = 0.0
    for n in range(2, 7):
        circuit = build_exchange(n, 2)
        start = n // 2
        for _ in range(32):
            psi = run_circuit(circuit, rng.uniform(-math.pi, math.pi, 2), neel_state(n))
            worst = max(worst, 1.0 - magnetization_sector(psi)[start])
    hea = build_hea(2)
    leak = max(1.0 - magnetization_sector(run_circuit(hea, [t], neel_state(2)))[1]
               for t in GridSpec().values())
    ok = worst <= 1e-10 and leak > 0.01
    return ok, f"exchange leak {worst:.1e}, HEA witness leak {leak:.3f}"


def _infinite_shot_equivalence() -> tuple[bool, str]:
    rng = make_rng(12)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 6))
        psi = random_state(n, rng)
        term = PauliString(tuple(rng.choice(list("IXYZ"), n)), float(rng.normal()))
        probs = rotate_for_basis(psi, term).probabilities()
        worst = max(worst, abs(exact_term(probs, term)[0] - exact_expectation(term, psi)))
    return worst <= 1e-12, f"max deviation {worst:.1e} over 100 pairs"


def _density_matrix_equivalence() -> tuple[bool, str]:
    rng = make_rng(13)
    ideal = NoiseModel.ideal()
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        circuit = random_circuit(n, int(rng.integers(1, 12)), rng)
        psi0 = random_state(n, rng)
        psi = run_circuit(circuit, None, psi0).amplitudes
        rho = evolve_noisy(circuit, None, psi0, ideal).entries
        worst = max(worst, float(np.abs(rho - np.outer(psi, psi.conj())).max()))
    return worst <= 1e-10, f"max entry deviation {worst:.1e} over 50 circuits"


def _readout_law() -> tuple[bool, str]:
    rng = make_rng(14)
    worst = 0.0
    zz = PauliString.from_label("ZZ")
    for p in (0.0, 0.01, 0.05, 0.1, 0.5):
        rho = DensityMatrix.from_statevector(random_state(2, rng))
        clean = exact_term(rho.probabilities(), zz)[0]
        noisy = exact_term(readout_probabilities(rho, zz, NoiseModel(p)), zz)[0]
        worst = max(worst, abs(noisy - (1 - 2 * p) ** 2 * clean))
    return worst <= 1e-12, f"max deviation {worst:.1e}"


def _variational_bound() -> tuple[bool, str]:
    rng = make_rng(15)
    worst = math.inf
    for n in range(2, 7):
        h = build_hamiltonian(HeisenbergChain(n))
        e0 = exact_diagonalize(HeisenbergChain(n)).ground_energy
        for spec in (AnsatzSpec("hea", n), AnsatzSpec("exchange", n, 2),
                     AnsatzSpec("expressive", n, 2)):
            circuit, psi0 = build_ansatz(spec)
            for _ in range(8):
                params = rng.uniform(-math.pi, math.pi, spec.parameter_count)
                worst = min(worst, exact_expectation(h, run_circuit(circuit, params, psi0)) - e0)
    return worst >= -1e-9, f"min (E - E0) = {worst:.2e}"


def _variance_calibration(repetitions: int) -> tuple[bool, str]:
    singlet = StateVector(np.array([0, 1, -1, 0]) / math.sqrt(2), 2)
    obs = build_hamiltonian(HeisenbergChain(2))
    # use a state with nonzero shot noise; the singlet is an eigenstate of every term
    psi = run_circuit(build_hea(2), [0.7], neel_state(2))
    out = []
    for state in (singlet, psi):
        est = [estimate_energy(state, obs, 1500, derive_seed(21, r)) for r in range(repetitions)]
        energies = np.array([e.energy for e in est])
        sigma = float(np.mean([e.sigma for e in est]))
        sd = float(energies.std(ddof=1))
        out.append((sd, sigma))
    sd0, sigma0 = out[0]
    sd1, sigma1 = out[1]
    ratio = sd1 / sigma1
    ok = sd0 == 0.0 and sigma0 == 0.0 and 0.8 <= ratio <= 1.25
    return ok, f"singlet sd {sd0:.1e}; probe sd/sigma = {ratio:.3f} ({repetitions} reps)"


def _noisy_bracket() -> tuple[bool, str]:
    ex = Execution.noisy(calibrate_from_table(), 1500, 2024)
    r = run_sweep(ExperimentConfig(HeisenbergChain(2), AnsatzSpec("exchange", 2), ex))
    e = r.min_energy
    return -1.0 <= e <= -0.8 and e > -1.0 + 1e-6, f"sampled minimum {e:.4f}"


def _batch_equivalence() -> tuple[bool, str]:
    ex = Execution.noisy(calibrate_from_table(), 200, 5)
    config = ExperimentConfig(HeisenbergChain(3), AnsatzSpec("exchange", 3),
                              ex, GridSpec(0.0, math.pi, 6))
    seq = run_sweep(config)
    batch = execute_batch(build_batch(config), config)
    same = all(a.energy == b.energy and a.variance == b.variance
               for (_, a), b in zip(seq.points, batch))
    again = run_sweep(config)
    same = same and all(a[1].energy == b[1].energy for a, b in zip(seq.points, again.points))
    return same, "batch, sequential and repeated runs bit-identical" if same else "mismatch"


def _expressive_optimizer() -> tuple[bool, str]:
    bounds = {2: (3, -3.0 + 1e-3), 3: (4, -3.98), 4: (4, -6.0)}
    parts, ok = [], True
    for n, (layers, bound) in bounds.items():
        r = run_sweep(ExperimentConfig(HeisenbergChain(n), AnsatzSpec("expressive", n, layers),
                                       Execution.exact(), OptimizerSpec()))
        ok = ok and r.min_energy <= bound
        parts.append(f"N={n}: {r.min_energy:.6f}")
    return ok, ", ".join(parts)


def _exchange_properties() -> tuple[bool, str]:
    gaps, ok = [], True
    for n in (2, 3, 4):
        chain = HeisenbergChain(n)
        r = run_sweep(ExperimentConfig(chain, AnsatzSpec("exchange", n)))
        neel = exact_expectation(build_hamiltonian(chain), neel_state(n))
        ok = ok and r.reference_energy - 1e-9 <= r.min_energy <= neel + 1e-9
        gaps.append(r.error)
    ok = ok and all(a <= b + 1e-9 for a, b in zip(gaps, gaps[1:]))
    return ok, "gaps " + ", ".join(f"{g:.4f}" for g in gaps)


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "hamiltonian structure": _hamiltonian_structure,
    "exact energies": _exact_energies,
    "exchange N=2 constant": _exchange_constant,
    "symmetry sectors": _symmetry,
    "infinite-shot oracle": _infinite_shot_equivalence,
    "zero-noise density matrix": _density_matrix_equivalence,
    "readout scaling law": _readout_law,
    "variational bound": _variational_bound,
    "variance calibration": lambda: _variance_calibration(500),
    "noisy bracket": _noisy_bracket,
    "batch determinism": _batch_equivalence,
    "exchange properties": _exchange_properties,
    "expressive optimizer": _expressive_optimizer,
}

QUICK = (
    "hamiltonian structure",
    "exact energies",
    "exchange N=2 constant",
    "symmetry sectors",
    "infinite-shot oracle",
    "zero-noise density matrix",
    "readout scaling law",
    "variational bound",
    "noisy bracket",
)


def run_checks(quick: bool = False, report: Callable[[str], None] | None = None) -> list[Check]:
    names = QUICK if quick else tuple(CHECKS)
    results = []
    for name in names:
        start = time.perf_counter()
        try:
            passed, detail = CHECKS[name]()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        check = Check(name, bool(passed), detail, time.perf_counter() - start)
        results.append(check)
        if report is not None:
            report(check.line())
    return results
