# src/main.py
"""Command-line entry point: generate, solve, bench, estimate-runtime, report."""

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from src.core.config import settings
from src.core.exceptions import AppError, ConfigError
from src.core.logging import get_logger, setup_logging
from src.core.schemas import BenchConfig, FigureKind, SolverKind, SolverSpec
from src.services.bench import (
    EXIT_OK,
    EXIT_PARTIAL,
    BenchResult,
    RuntimeConstants,
    aggregate_runs,
    emit_plot_series,
    load_bench_config,
    load_runs,
    optimal_value,
    rescore_overlap,
    run_bench,
    solve,
    write_results,
)
from src.services.hwmodel import (
    default_device,
    estimate_circuit,
    export_schedule,
    load_device,
    total_runtime,
)
from src.services.instance import generate_instance, resolve_instance, save_instance
from src.services.qubo import compile_qubo, dump_qubo
from src.services.variational import make_ansatz

logger = get_logger("main")


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from e
    return lo, hi


def _layers(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knapsack-bench", description="Multi-knapsack QUBO solver benchmark")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--json-logs", action="store_true", default=settings.is_json_logging, help="JSON log lines")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="Write a random instance file")
    generate.add_argument("--items", type=int, required=True)
    generate.add_argument("--knapsacks", type=int, required=True)
    generate.add_argument("--weights", type=_range, default=(1, 5), metavar="LO:HI")
    generate.add_argument("--values", type=_range, default=(1, 5), metavar="LO:HI")
    generate.add_argument("--capacities", type=_range, default=(4, 7), metavar="LO:HI")
    generate.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    generate.add_argument("--name", default=None)
    generate.add_argument("--out", required=True, help="Instance file to write")
    generate.add_argument("--qubo", default=None, help="Also dump the compiled QUBO to this path")

    single = commands.add_parser("solve", help="One solver run on one instance")
    single.add_argument("instance", help="Instance path or scenario:<name>")
    single.add_argument("--solver", type=SolverKind, choices=list(SolverKind), default=SolverKind.QAOA)
    single.add_argument("--layers", type=int, default=1)
    single.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    single.add_argument("--shots", type=int, default=settings.DEFAULT_SHOTS)
    single.add_argument("--out", default=None, help="Write the run report JSON here instead of stdout")

    bench = commands.add_parser("bench", help="Run a solver x instance x repeats grid")
    bench.add_argument("--config", default=None, help="Bench config file")
    bench.add_argument("--instance", action="append", default=None, help="Instance path or scenario:<name>")
    bench.add_argument("--solver", type=SolverKind, choices=list(SolverKind), action="append", default=None)
    bench.add_argument("--layers", type=_layers, default=None, help="Comma-separated layer counts")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--shots", type=int, default=None)
    bench.add_argument("--repeats", type=int, default=None)
    bench.add_argument("--cx-jitter-seed", type=int, default=None, help="Per-edge CX durations within the spread")
    bench.add_argument("--out", default=None, help="Output directory, defaults to BENCH_OUTPUT_DIR")

    estimate = commands.add_parser("estimate-runtime", help="Native depth, t_circ and runtime of an ansatz")
    estimate.add_argument("instance")
    estimate.add_argument("--solver", type=SolverKind, choices=list(SolverKind), default=SolverKind.QAOA)
    estimate.add_argument("--layers", type=int, default=1)
    estimate.add_argument("--device", default=None, help="Device YAML, defaults to the shipped 65-qubit map")
    estimate.add_argument("--n-iter", type=int, default=100)
    estimate.add_argument("--shots", type=int, default=settings.DEFAULT_SHOTS)
    estimate.add_argument("--seed", type=int, default=0)
    estimate.add_argument("--schedule", default=None, help="Write the per-gate schedule CSV here")
    estimate.add_argument("--cx-jitter-seed", type=int, default=None, help="Per-edge CX durations within the spread")

    report = commands.add_parser("report", help="Re-aggregate run dumps into results and plot series")
    report.add_argument("runs", nargs="+", help="runs.json files")
    report.add_argument("--out", default=None)
    report.add_argument("--figure", type=FigureKind, choices=list(FigureKind), action="append", default=[])
    report.add_argument(
        "--c-lim", type=float, default=None, help="Recompute o90 at this threshold from dumped distributions"
    )
    report.add_argument("--instance", action="append", default=[], help="Instances of the runs, needed with --c-lim")

    return parser


# --- Commands ---


def cmd_generate(args: argparse.Namespace) -> int:
    instance = generate_instance(
        args.items, args.knapsacks, args.weights, args.values, args.capacities, args.seed, name=args.name
    )
    path = save_instance(instance, args.out)
    logger.info(f"Instance written to {path}", extra={"scenario": instance.name, "seed": args.seed})
    if args.qubo:
        model = compile_qubo(instance)
        dump_qubo(model, args.qubo)
        logger.info(f"QUBO written to {args.qubo}", extra={"num_qubits": model.num_vars})
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    instance = resolve_instance(args.instance)
    model = compile_qubo(instance)
    spec = SolverSpec(kind=args.solver, layers=[args.layers])
    device = default_device()
    circuit = None
    if spec.kind.is_variational:
        ansatz = make_ansatz(model, spec.kind, args.layers, relaxation_seed=args.seed)
        circuit = estimate_circuit(model, ansatz, device, seed=args.seed)
    report = solve(
        instance,
        model,
        spec,
        spec.layers[0],
        seed=args.seed,
        shots=args.shots,
        v_opt=optimal_value(instance),
        runtime=RuntimeConstants.resolve(None, device),
        circuit=circuit,
    )
    payload = report.model_dump_json(indent=2, exclude={"distribution"})
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        print(payload)
    return EXIT_PARTIAL if report.failed else EXIT_OK


def bench_config_from_args(args: argparse.Namespace) -> BenchConfig:
    """Config file first, then every flag given on the command line."""
    if args.config:
        config = load_bench_config(args.config)
    elif args.instance and args.solver:
        config = BenchConfig(
            instances=args.instance,
            solvers=[SolverSpec(kind=kind) for kind in args.solver],
            seed=settings.DEFAULT_SEED,
            shots=settings.DEFAULT_SHOTS,
            repeats=settings.DEFAULT_REPEATS,
            workers=settings.BENCH_WORKERS,
        )
    else:
        raise ConfigError("bench needs --config, or both --instance and --solver")

    update: dict = {}
    if args.instance:
        update["instances"] = args.instance
    solvers = config.solvers
    if args.solver:
        by_kind = {spec.kind: spec for spec in solvers}
        solvers = [by_kind.get(kind, SolverSpec(kind=kind)) for kind in args.solver]
    if args.layers:
        solvers = [
            spec.model_copy(update={"layers": args.layers}) if spec.kind.is_variational else spec for spec in solvers
        ]
    update["solvers"] = solvers
    for flag in ("seed", "workers", "shots", "repeats", "cx_jitter_seed"):
        value = getattr(args, flag)
        if value is not None:
            update[flag] = value
    if args.out:
        update["output_dir"] = args.out

    try:
        return BenchConfig.model_validate({**config.model_dump(), **update})
    except ValueError as e:
        raise ConfigError(f"invalid bench options: {e}") from e


def cmd_bench(args: argparse.Namespace) -> int:
    config = bench_config_from_args(args)
    out_dir = Path(config.output_dir or settings.BENCH_OUTPUT_DIR)
    result = run_bench(config)
    write_results(result, out_dir, dump_distributions=config.dump_distributions)
    for figure in config.figures:
        emit_plot_series(result.rows, figure, out_dir / "series")
    return result.exit_code


def cmd_estimate_runtime(args: argparse.Namespace) -> int:
    if not args.solver.is_variational:
        raise ConfigError(f"{args.solver.value} has no circuit to estimate")
    instance = resolve_instance(args.instance)
    model = compile_qubo(instance)
    device = load_device(args.device) if args.device else default_device()
    if args.cx_jitter_seed is not None:
        device = device.with_cx_jitter(args.cx_jitter_seed)
    ansatz = make_ansatz(model, args.solver, args.layers, relaxation_seed=args.seed)
    scheduled = estimate_circuit(model, ansatz, device, seed=args.seed)
    constants = RuntimeConstants.resolve(None, device)
    runtime = total_runtime(
        args.n_iter,
        args.shots,
        scheduled.t_circ_ns * 1e-9,
        constants.t_meas_s,
        constants.t_opt_s,
        constants.t_comm_s,
    )
    if args.schedule:
        export_schedule(scheduled, args.schedule)
    summary = {
        "scenario": instance.name,
        "num_qubits": model.num_vars,
        "solver": args.solver.value,
        "layers": args.layers,
        "device": device.name,
        "depth": scheduled.depth,
        "swap_count": scheduled.swap_count,
        "t_circ_ns": scheduled.t_circ_ns,
        "n_iter": args.n_iter,
        "shots": args.shots,
        "runtime_qpu_s": runtime,
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    runs = load_runs(args.runs)
    c_lim = 0.90
    if args.c_lim is not None:
        if not 0 < args.c_lim <= 1:
            raise ConfigError(f"--c-lim must lie in (0, 1], got {args.c_lim}")
        c_lim = args.c_lim
        runs = rescore_overlap(runs, [resolve_instance(ref) for ref in args.instance], c_lim)
    result = BenchResult(rows=aggregate_runs(runs, c_lim), runs=runs)
    out_dir = Path(args.out or settings.BENCH_OUTPUT_DIR)
    write_results(result, out_dir, dump_distributions=any(r.distribution is not None for r in runs))
    for figure in args.figure:
        emit_plot_series(result.rows, figure, out_dir / "series")
    return result.exit_code


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "estimate-runtime": cmd_estimate_runtime,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level, json_format=args.json_logs, app_name=settings.APP_NAME)

    try:
        return COMMANDS[args.command](args)
    except AppError as exc:
        logger.error(exc.message, extra={"code": exc.code, "details": exc.details})
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
