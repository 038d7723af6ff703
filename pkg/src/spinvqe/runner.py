"""VQE experiment orchestration: grid sweeps, local optimization, batching, reports."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ansatz import AnsatzSpec, build_ansatz
from .measure import (
    DEFAULT_SHOTS,
    EnergyEstimate,
    combine_terms,
    derive_seed,
    estimate_energy,
    make_rng,
    measure_setting,
    measurement_settings,
    rotate_for_basis,
)
from .model import HeisenbergChain, build_hamiltonian, exact_diagonalize
from .noise import (
    NoiseModel,
    evolve_noisy,
    noisy_expectation,
    readout_probabilities,
)
from .pauli import (
    Observable,
    PauliString,
    format_observable,
    observable_matrix,
    parse_observable,
)
from .statevec import Circuit, CompiledCircuit, StateVector, run_circuit

__all__ = [
    "GridSpec",
    "OptimizerSpec",
    "Execution",
    "ExperimentConfig",
    "SweepResult",
    "BatchEntry",
    "BatchJob",
    "build_batch",
    "execute_batch",
    "run_sweep",
    "run_optimizer",
    "make_report",
    "write_report",
    "golden_section",
    "parse_angle",
    "point_records",
]

log = logging.getLogger(__name__)

MAX_GRID_POINTS = 100_000
EXECUTION_MODES = ("exact", "sampled", "noisy")
TIE_TOL = 1e-12


_ANGLE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(text: str) -> float:
    """Parse a float or a multiple of pi such as ``pi``, ``-pi/2``, ``2*pi``."""
    m = _ANGLE.match(text.lower())
    if m is None:
        return float(text)
    factor = m.group(1)
    if factor in ("", "+", "-", None):
        factor = (factor or "") + "1"
    value = float(factor) * math.pi
    return value / float(m.group(2)) if m.group(2) else value


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid applied to every parameter (Cartesian product)."""

    start: float = 0.0
    end: float = math.pi
    points: int = 50

    def __post_init__(self):
        if self.points < 2:
            raise ValueError(f"a grid needs at least 2 points, got {self.points}")
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError("grid range must be finite")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.points)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``start:end:points``; ``pi`` is understood, e.g. ``0:2*pi:101``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must look like start:end:points, got {text!r}")
        return cls(parse_angle(parts[0]), parse_angle(parts[1]), int(parts[2]))


@dataclass(frozen=True)
class OptimizerSpec:
    """Coordinate-wise golden-section search with random restarts."""

    method: str = "golden"
    max_evals: int = 200_000
    tolerance: float = 1e-10
    restarts: int = 8
    seed: int = 0
    xtol: float = 1e-5
    coarse_points: int = 8

    def __post_init__(self):
        if self.method != "golden":
            raise ValueError(f"unknown optimizer method {self.method!r}")
        if self.max_evals < 1 or self.restarts < 1:
            raise ValueError("max_evals and restarts must be positive")


@dataclass(frozen=True)
class Execution:
    """How energies are obtained.

    ``exact``: analytic statevector expectation. ``sampled``: ``shots`` per
    measurement setting from the statevector. ``noisy``: density-matrix
    evolution under ``noise``; ``shots=None`` gives the exact noisy value.
    """

    mode: str = "exact"
    shots: int | None = None
    seed: int = 0
    noise: NoiseModel | None = None
    grouping: str = "global"

    def __post_init__(self):
        if self.mode not in EXECUTION_MODES:
            raise ValueError(f"unknown execution mode {self.mode!r}")
        if self.mode == "sampled" and self.shots is None:
            object.__setattr__(self, "shots", DEFAULT_SHOTS)
        if self.mode == "exact" and self.shots is not None:
            raise ValueError("exact execution takes no shot count")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if self.mode == "noisy" and self.noise is None:
            object.__setattr__(self, "noise", NoiseModel.ideal())

    @classmethod
    def exact(cls) -> "Execution":
        return cls("exact")

    @classmethod
    def sampled(cls, shots: int = DEFAULT_SHOTS, seed: int = 0) -> "Execution":
        return cls("sampled", shots, seed)

    @classmethod
    def noisy(cls, noise: NoiseModel, shots: int | None = None, seed: int = 0) -> "Execution":
        return cls("noisy", shots, seed, noise)


@dataclass(frozen=True)
class ExperimentConfig:
    chain: HeisenbergChain
    ansatz: AnsatzSpec
    execution: Execution = field(default_factory=Execution)
    sweep: GridSpec | OptimizerSpec = field(default_factory=GridSpec)
    workers: int = 1
    observable: Observable | None = None

    def __post_init__(self):
        if self.chain.n_sites != self.ansatz.n_sites:
            raise ValueError(
                f"chain has {self.chain.n_sites} sites, ansatz has {self.ansatz.n_sites}"
            )
        if self.observable is not None and self.observable.qubit_count != self.chain.n_sites:
            raise ValueError("custom observable does not match the chain length")
        if isinstance(self.sweep, OptimizerSpec) and self.execution.mode != "exact":
            raise ValueError("the optimizer runs on exact statevector execution only")

    @property
    def label(self) -> str:
        a = self.ansatz
        return f"{a.family}_n{a.n_sites}_L{a.layers}_{self.execution.mode}"

    def hamiltonian(self) -> Observable:
        """The custom observable if one was given, else the chain Hamiltonian."""
        return self.observable if self.observable is not None else build_hamiltonian(self.chain)

    def reference_energy(self) -> float:
        if self.observable is None:
            return exact_diagonalize(self.chain).ground_energy
        return float(np.linalg.eigvalsh(observable_matrix(self.observable))[0])

    def to_dict(self) -> dict:
        ex = self.execution
        sweep_kind = "grid" if isinstance(self.sweep, GridSpec) else "optimizer"
        return {
            "chain": asdict(self.chain),
            "ansatz": asdict(self.ansatz),
            "execution": {
                "mode": ex.mode,
                "shots": ex.shots,
                "seed": ex.seed,
                "grouping": ex.grouping,
                "noise": ex.noise.to_dict() if ex.noise is not None else None,
            },
            "sweep": {"kind": sweep_kind, **asdict(self.sweep)},
            "workers": self.workers,
            "observable": format_observable(self.observable) if self.observable else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        ex = dict(data.get("execution", {}))
        noise = ex.pop("noise", None)
        execution = Execution(
            noise=NoiseModel.from_dict(noise) if noise is not None else None, **ex
        )
        sweep = dict(data.get("sweep", {"kind": "grid"}))
        kind = sweep.pop("kind", "grid")
        sweep_spec = GridSpec(**sweep) if kind == "grid" else OptimizerSpec(**sweep)
        return cls(
            HeisenbergChain(**data["chain"]),
            AnsatzSpec(**data["ansatz"]),
            execution,
            sweep_spec,
            data.get("workers", 1),
            parse_observable(data["observable"]) if data.get("observable") else None,
        )

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(eq=False)
class SweepResult:
    config: ExperimentConfig
    points: list[tuple[tuple[float, ...], EnergyEstimate]]
    reference_energy: float
    converged: bool = True
    n_evals: int = 0

    @property
    def min_index(self) -> int:
        """Index of the lowest energy; ties go to the smallest parameter vector.

        Energies within ``TIE_TOL`` of the minimum count as ties, so flat
        landscapes resolve deterministically despite rounding noise.
        """
        best = min(e.energy for _, e in self.points)
        tied = [i for i, (_, e) in enumerate(self.points) if e.energy <= best + TIE_TOL]
        return min(tied, key=lambda i: self.points[i][0])

    @property
    def min_point(self) -> tuple[tuple[float, ...], EnergyEstimate]:
        return self.points[self.min_index]

    @property
    def min_energy(self) -> float:
        return self.min_point[1].energy

    @property
    def error(self) -> float:
        return self.min_energy - self.reference_energy

    def respects_variational_bound(self, slack: float = 1e-9) -> bool:
        return self.error >= -3.0 * self.min_point[1].sigma - slack

    def landscape(self) -> list[tuple[float, float, float]]:
        if self.config.ansatz.parameter_count != 1:
            raise ValueError("landscapes are defined for single-parameter sweeps")
        return [(p[0], e.energy, e.sigma) for p, e in self.points]

    def to_dict(self) -> dict:
        params, best = self.min_point
        return {
            "label": self.config.label,
            "config": self.config.to_dict(),
            "reference_energy": self.reference_energy,
            "min_energy": best.energy,
            "min_sigma": best.sigma,
            "min_params": list(params),
            "error": self.error,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "points": [
                {"params": list(p), "energy": e.energy, "sigma": e.sigma} for p, e in self.points
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepResult":
        config = ExperimentConfig.from_dict(data["config"])
        points = [
            (tuple(p["params"]), EnergyEstimate(p["energy"], p["sigma"] ** 2))
            for p in data["points"]
        ]
        return cls(config, points, data["reference_energy"], data.get("converged", True),
                   data.get("n_evals", len(points)))


def _grid_points(config: ExperimentConfig) -> list[tuple[float, ...]]:
    k = config.ansatz.parameter_count
    values = config.sweep.values().tolist()
    if len(values) ** k > MAX_GRID_POINTS:
        raise ValueError(
            f"grid of {len(values)}^{k} points exceeds {MAX_GRID_POINTS}; use the optimizer"
        )
    return list(itertools.product(values, repeat=k))


def _evaluate_point(config: ExperimentConfig, circuit: Circuit, psi0: StateVector,
                    obs: Observable, params: Sequence[float], index: int,
                    records: list | None = None) -> EnergyEstimate:
    ex = config.execution
    seed = derive_seed(ex.seed, index)
    if ex.mode == "noisy":
        rho = evolve_noisy(circuit, params, psi0, ex.noise)
        return noisy_expectation(rho, obs, ex.noise, ex.shots, seed, ex.grouping, records)
    psi = run_circuit(circuit, params, psi0)
    return estimate_energy(psi, obs, ex.shots, seed, ex.grouping, records)


def point_records(result: "SweepResult", index: int) -> list:
    """Re-measure grid point ``index`` and return its shot records.

    Sub-seeds are the ones used by the sweep, so the records reproduce the
    stored estimate exactly. Empty for infinite-shot executions.
    """
    config = result.config
    circuit, psi0 = build_ansatz(config.ansatz)
    records: list = []
    _evaluate_point(config, circuit, psi0, config.hamiltonian(), result.points[index][0],
                    index, records)
    return records


def _evaluate_chunk(args) -> list[EnergyEstimate]:
    config, chunk = args
    circuit, psi0 = build_ansatz(config.ansatz)
    obs = config.hamiltonian()
    return [_evaluate_point(config, circuit, psi0, obs, p, i) for i, p in chunk]


def run_sweep(config: ExperimentConfig, use_batch: bool = False) -> SweepResult:
    """Evaluate the energy at every grid point; delegates optimizer configs.

    Point ``i`` is measured with master seed ``derive_seed(seed, i)``, so the
    result is identical whether points run sequentially, in a worker pool, or
    through :func:`build_batch` / :func:`execute_batch`.
    """
    if isinstance(config.sweep, OptimizerSpec):
        return run_optimizer(config)
    reference = config.reference_energy()
    grid = _grid_points(config)
    if use_batch:
        estimates = execute_batch(build_batch(config), config)
    elif config.workers > 1:
        indexed = list(enumerate(grid))
        chunks = [indexed[w::config.workers] for w in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_evaluate_chunk, [(config, c) for c in chunks]))
        estimates = [None] * len(grid)
        for chunk, part in zip(chunks, parts):
            for (i, _), est in zip(chunk, part):
                estimates[i] = est
    else:
        estimates = _evaluate_chunk((config, list(enumerate(grid))))
    points = [(tuple(p), e) for p, e in zip(grid, estimates)]
    return SweepResult(config, points, reference, True, len(points))


@dataclass(frozen=True)
class BatchEntry:
    point_index: int
    params: tuple[float, ...]
    setting_index: int
    circuit: Circuit
    basis: PauliString


@dataclass(frozen=True)
class BatchJob:
    entries: tuple[BatchEntry, ...]
    shots: int | None
    seed: int
    qubit_count: int

    def __post_init__(self):
        if any(e.circuit.qubit_count != self.qubit_count for e in self.entries):
            raise ValueError("all circuits in a batch must share one qubit count")

    def __len__(self) -> int:
        return len(self.entries)


def build_batch(config: ExperimentConfig) -> BatchJob:
    """One fully bound circuit per (grid point, measurement setting)."""
    if not isinstance(config.sweep, GridSpec):
        raise ValueError("batching applies to fixed grid sweeps, not optimizer runs")
    circuit, _ = build_ansatz(config.ansatz)
    settings = measurement_settings(config.hamiltonian(), config.execution.grouping)
    entries = []
    for i, params in enumerate(_grid_points(config)):
        bound = circuit.bind(params)
        for k, (setting, _) in enumerate(settings):
            entries.append(BatchEntry(i, tuple(params), k, bound, setting))
    ex = config.execution
    return BatchJob(tuple(entries), ex.shots, ex.seed, config.chain.n_sites)


def execute_batch(job: BatchJob, config: ExperimentConfig) -> list[EnergyEstimate]:
    """Run every batch entry and reassemble per-point energy estimates."""
    ex = config.execution
    obs = config.hamiltonian()
    members = [m for _, m in measurement_settings(obs, ex.grouping)]
    _, psi0 = build_ansatz(config.ansatz)
    per_point: dict[int, dict[int, tuple[float, float]]] = {}
    for entry in job.entries:
        if ex.mode == "noisy":
            rho = evolve_noisy(entry.circuit, None, psi0, ex.noise)
            probs = readout_probabilities(rho, entry.basis, ex.noise)
        else:
            psi = run_circuit(entry.circuit, None, psi0)
            probs = rotate_for_basis(psi, entry.basis).probabilities()
        terms = [obs.terms[i] for i in members[entry.setting_index]]
        seed = derive_seed(derive_seed(job.seed, entry.point_index), entry.setting_index)
        values, _ = measure_setting(probs, entry.basis, terms, job.shots, seed)
        per_point.setdefault(entry.point_index, {}).update(
            zip(members[entry.setting_index], values)
        )
    return [combine_terms(obs, per_point[i], job.shots) for i in sorted(per_point)]


class _BudgetExhausted(Exception):
    pass


def golden_section(f, a: float, b: float, xtol: float) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def run_optimizer(config: ExperimentConfig) -> SweepResult:
    """Gradient-free local search on the exact energy.

    Coordinates are visited in order. Each line search scans a coarse
    periodic grid around the current value and refines the best cell by
    golden-section. Sweeps repeat until one improves the energy by less than
    ``tolerance``; ``restarts`` random starts are drawn from ``U(-pi, pi)``.

    A parameter feeding a single ``R_y`` gate makes the energy along its line
    exactly ``A + B cos t + C sin t``; that line is rebuilt from two extra
    circuit runs and searched without further runs. Other parameters are
    searched with direct evaluations. ``max_evals`` counts circuit runs; when
    it runs out the best point so far is returned with ``converged=False``.
    """
    spec = config.sweep
    if not isinstance(spec, OptimizerSpec):
        raise ValueError("run_optimizer needs an OptimizerSpec sweep")
    if config.execution.mode != "exact":
        raise ValueError("the optimizer runs on exact statevector execution only")
    circuit, psi0 = build_ansatz(config.ansatz)
    compiled = CompiledCircuit(circuit)
    hmat = observable_matrix(config.hamiltonian())
    reference = config.reference_energy()
    k = circuit.parameter_count
    sinusoidal = [len(o) == 1 and o[0][1] == "ry" for o in compiled.param_occurrences()]
    rng = make_rng(spec.seed)
    evals = 0
    incumbent: list = [None, math.inf]

    def energy(x: np.ndarray) -> float:
        nonlocal evals
        if evals >= spec.max_evals:
            raise _BudgetExhausted
        evals += 1
        a = compiled.run(x, psi0.amplitudes)
        value = float(np.vdot(a, hmat @ a).real)
        if value < incumbent[1]:
            incumbent[:] = [x.copy(), value]
        return value

    def line_function(x: np.ndarray, fx: float, j: int):
        x0 = x[j]
        if sinusoidal[j]:
            y = x.copy()
            y[j] = x0 + math.pi / 2
            e_plus = energy(y)
            y[j] = x0 - math.pi / 2
            e_minus = energy(y)
            mean = 0.5 * (e_plus + e_minus)
            b, c = fx - mean, 0.5 * (e_plus - e_minus)
            return lambda t: mean + b * math.cos(t - x0) + c * math.sin(t - x0)

        def direct(t):
            y = x.copy()
            y[j] = t
            return energy(y)

        return direct

    trace: list[tuple[np.ndarray, float]] = []
    converged = True
    step = 2 * math.pi / spec.coarse_points
    try:
        for _ in range(spec.restarts):
            x = rng.uniform(-math.pi, math.pi, k)
            fx = energy(x)
            trace.append((x.copy(), fx))
            while True:
                f_start = fx
                for j in range(k):
                    along = line_function(x, fx, j)
                    grid = x[j] + step * np.arange(spec.coarse_points)
                    vals = [along(t) for t in grid]
                    centre = grid[int(np.argmin(vals))]
                    t, ft = golden_section(along, centre - step, centre + step, spec.xtol)
                    if ft < fx:
                        y = x.copy()
                        y[j] = t
                        fy = energy(y) if sinusoidal[j] else ft
                        if fy < fx:
                            x, fx = y, fy
                trace.append((x.copy(), fx))
                if f_start - fx < spec.tolerance:
                    break
    except _BudgetExhausted:
        converged = False
        if incumbent[1] < min(e for _, e in trace):
            trace.append((incumbent[0], incumbent[1]))
    log.debug("optimizer %s: %d evaluations, converged=%s", config.label, evals, converged)
    points = [(tuple(float(v) for v in p), EnergyEstimate(e, 0.0)) for p, e in trace]
    return SweepResult(config, points, reference, converged, evals)


TABLE_COLUMNS = ("N", "exact", "expressive_min", "exchange_min", "gap")
LANDSCAPE_COLUMNS = ("theta", "energy", "sigma")


def make_report(results: Iterable[SweepResult]) -> dict:
    """Scaling table (noiseless results only) plus per-sweep landscape series.

    ``gap`` is the exchange minimum minus the exact ground energy.
    """
    results = list(results)
    by_n: dict[int, dict] = {}
    for r in results:
        n = r.config.chain.n_sites
        row = by_n.setdefault(n, {"N": n, "exact": r.reference_energy,
                                  "expressive_min": None, "exchange_min": None, "gap": None})
        if r.config.execution.mode != "exact":
            continue
        key = {"expressive": "expressive_min", "exchange": "exchange_min"}.get(
            r.config.ansatz.family
        )
        if key is not None and (row[key] is None or r.min_energy < row[key]):
            row[key] = r.min_energy
    for row in by_n.values():
        if row["exchange_min"] is not None:
            row["gap"] = row["exchange_min"] - row["exact"]
    landscapes = [
        {"label": r.config.label, "rows": r.landscape()}
        for r in results
        if isinstance(r.config.sweep, GridSpec) and r.config.ansatz.parameter_count == 1
    ]
    return {
        "columns": list(TABLE_COLUMNS),
        "table": [by_n[n] for n in sorted(by_n)],
        "landscape_columns": list(LANDSCAPE_COLUMNS),
        "landscapes": landscapes,
    }


def write_report(report: dict, out_dir: str | Path) -> list[Path]:
    """Write ``table4.csv``, landscape CSVs and ``report.json``; returns paths.

    A single landscape goes to ``landscape.csv``; several go to
    ``landscape_<label>.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "table4.csv"
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in report["table"]:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    written.append(path)
    landscapes = report["landscapes"]
    for item in landscapes:
        name = "landscape.csv" if len(landscapes) == 1 else f"landscape_{item['label']}.csv"
        path = out / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LANDSCAPE_COLUMNS)
            writer.writerows(item["rows"])
        written.append(path)
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2))
    written.append(path)
    return written
