"""Command-line entry point: ``spinvqe <command> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .ansatz import build_ansatz
from .measure import DEFAULT_SHOTS, write_shot_csv
from .model import HeisenbergChain, exact_diagonalize, magnetization_sector
from .noise import NoiseModel, calibrate_from_table, load_noise_config
from .runner import (
    ExperimentConfig,
    GridSpec,
    SweepResult,
    make_report,
    point_records,
    run_sweep,
    write_report,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUT_ENV = "SPINVQE_OUT"
DEFAULT_OUT_ROOT = "spinvqe-results"

log = logging.getLogger("spinvqe")


class ConfigError(Exception):
    pass


def output_root() -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT_ROOT))


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(path.read_text())
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _noise_dict(args) -> dict | None:
    if args.noise == "off":
        return None
    if args.noise == "garnet":
        return calibrate_from_table().to_dict()
    if not args.noise_config:
        raise ConfigError("--noise custom requires --noise-config")
    return load_noise_config(args.noise_config).to_dict()


def build_config(args, optimizer: bool = False) -> ExperimentConfig:
    """Merge the config file (if any) with flag overrides and validate."""
    data = load_config_file(args.config) if args.config else {}
    chain = dict(data.get("chain", {"n_sites": 2}))
    ansatz = dict(data.get("ansatz", {"family": "exchange"}))
    execution = dict(data.get("execution", {"mode": "exact"}))
    sweep = dict(data.get("sweep", {"kind": "optimizer" if optimizer else "grid"}))

    if args.n is not None:
        chain["n_sites"] = args.n
    if args.j is not None:
        chain["coupling"] = args.j
    if args.ansatz is not None:
        ansatz["family"] = args.ansatz
    if args.layers is not None:
        ansatz["layers"] = args.layers
    ansatz["n_sites"] = chain["n_sites"]

    if args.noise is not None:
        execution["noise"] = _noise_dict(args)
        if args.noise != "off":
            execution["mode"] = "noisy"
    if args.execution is not None:
        execution["mode"] = args.execution
    mode = execution.get("mode", "exact")
    if mode != "noisy":
        execution["noise"] = None
    if args.shots is not None:
        execution["shots"] = None if args.shots == 0 else args.shots
    if mode == "exact":
        execution["shots"] = None
    elif mode == "sampled" and execution.get("shots") is None:
        execution["shots"] = DEFAULT_SHOTS
    elif mode == "noisy" and "shots" not in execution:
        execution["shots"] = DEFAULT_SHOTS
    if args.seed is not None:
        execution["seed"] = args.seed

    if optimizer:
        kind = sweep.pop("kind", "optimizer")
        sweep = {"kind": "optimizer", **(sweep if kind == "optimizer" else {})}
        if args.seed is not None:
            sweep["seed"] = args.seed
        if getattr(args, "restarts", None) is not None:
            sweep["restarts"] = args.restarts
        if getattr(args, "max_evals", None) is not None:
            sweep["max_evals"] = args.max_evals
    elif args.grid is not None:
        g = GridSpec.parse(args.grid)
        sweep = {"kind": "grid", "start": g.start, "end": g.end, "points": g.points}

    observable = data.get("observable")
    if args.hamiltonian:
        try:
            observable = Path(args.hamiltonian).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read observable {args.hamiltonian}: {exc}") from exc

    merged = {
        "chain": chain,
        "ansatz": ansatz,
        "execution": execution,
        "sweep": sweep,
        "workers": args.workers if args.workers is not None else data.get("workers", 1),
        "observable": observable,
    }
    try:
        return ExperimentConfig.from_dict(merged)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _out_dir(args, default_name: str) -> Path:
    return Path(args.out) if args.out else output_root() / default_name


def _bound_ok(result: SweepResult) -> bool:
    if result.config.execution.mode == "exact":
        return all(e.energy >= result.reference_energy - 1e-9 for _, e in result.points)
    return result.respects_variational_bound()


def _finish_run(args, result: SweepResult, command: str) -> int:
    from .reproduce import write_results

    out = _out_dir(args, result.config.label)
    extra = write_report(make_report([result]), out)
    records = point_records(result, result.min_index) if result.config.execution.shots else []
    if records:
        path = out / "shots.csv"
        with path.open("w", newline="") as fh:
            write_shot_csv(records, fh)
        extra.append(path)
    if args.dump_circuit:
        circuit, _ = build_ansatz(result.config.ansatz)
        Path(args.dump_circuit).write_text(circuit.to_json())
    write_results([result], out, command, result.config.execution.seed, extra)
    params, best = result.min_point
    print(f"{result.config.label}: min energy {best.energy:.6f} +/- {best.sigma:.6f} "
          f"at {[round(p, 6) for p in params]}")
    print(f"exact ground energy {result.reference_energy:.6f}, error {result.error:.6f}, "
          f"evaluations {result.n_evals}, converged {result.converged}")
    print(f"outputs written to {out}")
    if not _bound_ok(result):
        print("FAIL: variational bound violated", file=sys.stderr)
        return 1
    return 0


def cmd_exact(args) -> int:
    n = args.n if args.n is not None else 2
    j = args.j if args.j is not None else 1.0
    sol = exact_diagonalize(HeisenbergChain(n, j))
    sectors = magnetization_sector(sol.ground_state)
    print(json.dumps({
        "N": n,
        "J": j,
        "ground_energy": sol.ground_energy,
        "gap": sol.gap,
        "sectors": {str(w): m for w, m in sectors.items()},
    }, indent=2))
    return 0


def cmd_sweep(args) -> int:
    config = build_config(args)
    return _finish_run(args, run_sweep(config, use_batch=args.batch), "sweep")


def cmd_optimize(args) -> int:
    config = build_config(args, optimizer=True)
    return _finish_run(args, run_sweep(config), "optimize")


def cmd_report(args) -> int:
    results = []
    for path in args.results:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read results {path}: {exc}") from exc
        items = data if isinstance(data, list) else [data]
        results.extend(SweepResult.from_dict(item) for item in items)
    out = _out_dir(args, "report")
    paths = write_report(make_report(results), out)
    for row in make_report(results)["table"]:
        print(", ".join(f"{k}={'' if v is None else v}" for k, v in row.items()))
    print(f"wrote {', '.join(p.name for p in paths)} to {out}")
    return 0


def cmd_reproduce(args) -> int:
    from .reproduce import reproduce

    noise = None
    if args.noise == "custom":
        noise = NoiseModel.from_dict(_noise_dict(args))
    shots = None if args.shots is None else (args.shots or None)
    out = (Path(args.out) if args.out else output_root()) / args.target
    comparisons, _ = reproduce(args.target, out, args.seed, shots, noise,
                               args.workers or 1)
    for c in comparisons:
        print(c.line())
    failed = [c for c in comparisons if c.passed is False]
    print(f"{args.target}: {len(failed)} failed check(s); outputs in {out}")
    return 1 if failed else 0


def cmd_validate(args) -> int:
    from .checks import run_checks

    if args.config or args.noise is not None:
        build_config(args)
    results = run_checks(quick=args.quick, report=print)
    failed = [c.name for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _common(p: argparse.ArgumentParser, with_run: bool = True) -> None:
    p.add_argument("--config", help="JSON or TOML experiment config")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--shots", type=int,
                   help=f"shots per measurement setting (default {DEFAULT_SHOTS}; 0 = infinite)")
    p.add_argument("--noise", choices=("off", "garnet", "custom"))
    p.add_argument("--noise-config", help="noise model JSON for --noise custom")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<name>)")
    p.add_argument("--workers", type=int, help="worker processes for grid sweeps")
    if with_run:
        p.add_argument("--n", type=int, help="number of sites")
        p.add_argument("--j", type=float, help="coupling J > 0")
        p.add_argument("--ansatz", choices=("hea", "exchange", "expressive"))
        p.add_argument("--layers", type=int)
        p.add_argument("--grid", help="sweep grid start:end:points, e.g. 0:pi:50")
        p.add_argument("--execution", choices=("exact", "sampled", "noisy"))
        p.add_argument("--hamiltonian", help="observable file, one '<coeff> <axes>' per line")
        p.add_argument("--dump-circuit", help="write the ansatz circuit JSON here")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinvqe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact ground energy and sector report")
    p.add_argument("--n", type=int, help="number of sites (default 2)")
    p.add_argument("--j", type=float, help="coupling (default 1)")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sweep", help="grid sweep over ansatz parameters")
    _common(p)
    p.add_argument("--batch", action="store_true", help="run through the batch interface")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="coordinate-wise optimizer, exact execution")
    _common(p)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-evals", type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", help="scaling table and landscapes from results.json files")
    p.add_argument("results", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    from .reproduce import TARGETS

    p = sub.add_parser("reproduce", help="run a preconfigured table or figure")
    p.add_argument("target", choices=TARGETS)
    _common(p, with_run=False)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("validate", help="invariant battery")
    _common(p)
    p.add_argument("--quick", action="store_true", help="fast subset")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
