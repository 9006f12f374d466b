# src/services/bench.py
"""Benchmark grid runner, result tables and plot series."""

import json
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from src.core.config import settings
from src.core.exceptions import AppError, BudgetError, ConfigError, ParameterError, SolverError
from src.core.logging import get_logger
from src.core.schemas import (
    BenchConfig,
    FigureKind,
    GenerateSpec,
    ResultRow,
    RunReport,
    SolverKind,
    SolverSpec,
)
from src.services.annealing import ihs, simulated_annealing
from src.services.exact import branch_and_bound
from src.services.hwmodel import (
    DeviceModel,
    ScheduledCircuit,
    default_device,
    estimate_circuit,
    load_device,
    total_runtime,
)
from src.services.instance import KnapsackInstance, generate_instance, resolve_instance
from src.services.metrics import RunQuality, SampleDistribution, aggregate, mean_std, overlap_90, score_run
from src.services.qubo import QuboModel, compile_qubo, energy
from src.services.seeds import derive_seed
from src.services.variational import AnsatzSpec, make_ansatz, run_variational

logger = get_logger("bench")

RESULTS_FILE = "results.csv"
RUNS_FILE = "runs.json"
TIMINGS_FILE = "timings.csv"
TIMING_COLUMNS = (
    "scenario",
    "solver",
    "layers",
    "run_index",
    "wall_seconds",
    "sim_seconds_per_eval",
    "runtime_sim_s",
)

EXIT_OK = 0
EXIT_PARTIAL = 2


@dataclass(frozen=True)
class RuntimeConstants:
    """Per-shot measurement, per-iteration optimizer and communication times, in seconds."""

    t_meas_s: float
    t_opt_s: float
    t_comm_s: float

    @classmethod
    def resolve(cls, config: BenchConfig | None, device: DeviceModel) -> "RuntimeConstants":
        t_meas_ns = config.t_meas_ns if config is not None and config.t_meas_ns is not None else device.t_meas_ns
        t_opt = config.t_opt_s if config is not None and config.t_opt_s is not None else settings.T_OPT_S
        t_comm = config.t_comm_s if config is not None and config.t_comm_s is not None else settings.T_COMM_S
        return cls(t_meas_s=t_meas_ns * 1e-9, t_opt_s=t_opt, t_comm_s=t_comm)


@dataclass
class Cell:
    """One (instance, solver, layers) point of the grid."""

    index: int
    instance: KnapsackInstance
    model: QuboModel
    v_opt: int | None
    solver: SolverSpec
    layers: int
    circuit: ScheduledCircuit | None = None


@dataclass
class BenchResult:
    rows: list[ResultRow]
    runs: list[RunReport] = field(default_factory=list)

    @property
    def failed_runs(self) -> list[RunReport]:
        return [r for r in self.runs if r.failed]

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failed_runs else EXIT_OK


# --- Configuration ---


def load_bench_config(path: str | Path) -> BenchConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read bench config {path}: {e}") from e
    try:
        return BenchConfig.model_validate(raw or {})
    except ValidationError as e:
        raise ConfigError(f"invalid bench config {path}", details={"errors": e.errors(include_url=False)}) from e


def resolve_instances(config: BenchConfig) -> list[KnapsackInstance]:
    instances = []
    for ref in config.instances:
        try:
            if isinstance(ref, GenerateSpec):
                instances.append(
                    generate_instance(
                        ref.num_items,
                        ref.num_knapsacks,
                        ref.weight_range,
                        ref.value_range,
                        ref.capacity_range,
                        ref.seed,
                        name=ref.name,
                    )
                )
            else:
                instances.append(resolve_instance(ref))
        except AppError as e:
            raise ConfigError(f"unresolvable instance {ref!r}: {e.message}", details=e.details) from e
    return instances


def optimal_value(instance: KnapsackInstance) -> int | None:
    try:
        return branch_and_bound(instance).optimal_value
    except BudgetError:
        logger.warning("Instance too large for branch-and-bound, metrics disabled", extra={"scenario": instance.name})
        return None


# --- Single runs ---


def _circuit_spec(model: QuboModel, kind: SolverKind, layers: int) -> AnsatzSpec:
    c_star = np.full(model.num_vars, 0.5) if kind.is_warm_started else None
    return AnsatzSpec(kind=kind, layers=layers, num_qubits=model.num_vars, c_star=c_star)


def solve(
    instance: KnapsackInstance,
    model: QuboModel,
    solver: SolverSpec,
    layers: int,
    seed: int,
    shots: int,
    v_opt: int | None,
    runtime: RuntimeConstants,
    circuit: ScheduledCircuit | None = None,
    c_lim: float = 0.90,
    run_index: int = 0,
    keep_distribution: bool = False,
) -> RunReport:
    """One solver run, scored against v_opt. Failures are recorded in the report."""
    kind = solver.kind
    report = RunReport(
        scenario=instance.name,
        num_qubits=model.num_vars,
        solver=solver.name,
        layers=layers,
        run_index=run_index,
        seed=seed,
        v_opt=v_opt,
    )
    if circuit is not None:
        report.depth, report.swap_count, report.t_circ_ns = circuit.depth, circuit.swap_count, circuit.t_circ_ns

    started = time.perf_counter()
    try:
        if v_opt is None or v_opt <= 0:
            raise ParameterError("no positive optimum available to score against", field="v_opt")
        shots = solver.shots or shots
        if kind.is_variational:
            spec = make_ansatz(model, kind, layers, relaxation_seed=derive_seed(seed, 3))
            distribution, trace = run_variational(model, spec, solver.optimizer_config(), shots, seed)
            report.n_iter, report.n_evaluations = trace.iterations, trace.evaluations
            report.converged = trace.converged
            report.energy_trace = [float(v) for v in trace.best_so_far()]
            report.sim_seconds_per_eval = trace.mean_eval_seconds
            report.runtime_sim_s = total_runtime(
                trace.iterations, 1, trace.mean_eval_seconds, 0.0, runtime.t_opt_s, runtime.t_comm_s
            )
            if circuit is not None:
                report.runtime_qpu_s = total_runtime(
                    trace.iterations,
                    shots,
                    circuit.t_circ_ns * 1e-9,
                    runtime.t_meas_s,
                    runtime.t_opt_s,
                    runtime.t_comm_s,
                )
        elif kind is SolverKind.SA:
            distribution = simulated_annealing(model, solver.anneal.model_copy(update={"seed": seed}))
        elif kind is SolverKind.IHS:
            outcome = ihs(model, solver.ihs, seed)
            distribution = SampleDistribution({outcome.best_bitstring: 1})
            report.n_iter = outcome.iterations
            report.energy_trace = outcome.energy_trace
        else:
            distribution = SampleDistribution({branch_and_bound(instance).best_bitstring: 1})

        quality = score_run(distribution, model, v_opt, c_lim)
        report.best_bitstring = quality.best_bitstring
        report.best_energy = energy(model, quality.best_bitstring)
        report.valid, report.v_tot = quality.valid, quality.v_tot
        report.c_opt, report.o90 = quality.c_opt, quality.o90
        if keep_distribution:
            report.distribution = dict(sorted(distribution.counts.items()))
    except AppError as e:
        error = SolverError(solver.name, e.message, details=e.details)
        report.error = f"{error.code}: {error.message}"
        logger.error("Run failed", extra={"scenario": instance.name, "solver": solver.name, "error": str(e)})
    except Exception as e:
        report.error = f"{type(e).__name__}: {e}"
        logger.exception("Run crashed", extra={"scenario": instance.name, "solver": solver.name})

    report.wall_seconds = time.perf_counter() - started
    logger.info(
        "Run finished",
        extra={
            "scenario": instance.name,
            "solver": solver.name,
            "layers": layers,
            "run_index": run_index,
            "seed": seed,
            "n_iter": report.n_iter,
            "duration_ms": round(report.wall_seconds * 1000, 2),
        },
    )
    return report


# --- Grid ---


def build_cells(config: BenchConfig, instances: list[KnapsackInstance], device: DeviceModel) -> list[Cell]:
    cells = []
    for instance in instances:
        try:
            model = compile_qubo(instance)
        except AppError as e:
            raise ConfigError(f"instance {instance.name}: {e.message}", details=e.details) from e
        v_opt = optimal_value(instance)
        for solver in config.solvers:
            for layers in solver.layers:
                cell = Cell(len(cells), instance, model, v_opt, solver, layers)
                if solver.kind.is_variational:
                    try:
                        cell.circuit = estimate_circuit(
                            model, _circuit_spec(model, solver.kind, layers), device, seed=cell.index
                        )
                    except AppError as e:
                        logger.warning(f"No circuit estimate: {e.message}", extra={"scenario": instance.name})
                cells.append(cell)
    return cells


def bench_device(config: BenchConfig) -> DeviceModel:
    device = load_device(config.device) if config.device else default_device()
    if config.cx_jitter_seed is not None:
        device = device.with_cx_jitter(config.cx_jitter_seed)
    return device


def run_bench(config: BenchConfig) -> BenchResult:
    """Run every cell `repeats` times. Run seeds derive from the master seed and the run's grid index."""
    device = bench_device(config)
    runtime = RuntimeConstants.resolve(config, device)
    cells = build_cells(config, resolve_instances(config), device)

    tasks = [(cell, r, cell.index * config.repeats + r) for cell in cells for r in range(config.repeats)]
    logger.info(f"Bench started: {len(cells)} cells, {len(tasks)} runs", extra={"seed": config.seed})

    def execute(task: tuple[Cell, int, int]) -> RunReport:
        cell, r, grid_index = task
        return solve(
            cell.instance,
            cell.model,
            cell.solver,
            cell.layers,
            seed=derive_seed(config.seed, grid_index),
            shots=config.shots,
            v_opt=cell.v_opt,
            runtime=runtime,
            circuit=cell.circuit,
            c_lim=config.c_lim,
            run_index=r,
            keep_distribution=config.dump_distributions,
        )

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        runs = list(pool.map(execute, tasks))

    result = BenchResult(rows=aggregate_runs(runs, config.c_lim), runs=runs)
    if result.failed_runs:
        logger.warning(f"{len(result.failed_runs)} of {len(runs)} runs failed")
    return result


def aggregate_runs(runs: list[RunReport], c_lim: float = 0.90) -> list[ResultRow]:
    """One row per (scenario, solver, layers), sorted by that key."""
    groups: dict[tuple[str, str, int], list[RunReport]] = defaultdict(list)
    for run in runs:
        groups[(run.scenario, run.solver, run.layers)].append(run)

    rows = []
    for (scenario, solver, layers), members in sorted(groups.items()):
        done = sorted((r for r in members if not r.failed), key=lambda r: r.run_index)
        first = members[0]
        row = ResultRow(
            scenario=scenario,
            num_qubits=first.num_qubits,
            solver=solver,
            layers=layers,
            v_opt=first.v_opt,
            n_run=len(members),
            n_valid=0,
            n_failed=len(members) - len(done),
            depth=first.depth,
            swap_count=first.swap_count,
            t_circ_ns=first.t_circ_ns,
        )
        if done:
            report = aggregate(
                [
                    RunQuality(r.best_bitstring or "", r.valid, r.v_tot, r.c_opt, r.o90 or 0.0)
                    for r in done
                ],
                c_lim,
            )
            row.n_valid = report.n_valid
            row.c_opt_mean, row.c_opt_std = report.c_opt_mean, report.c_opt_std
            row.o90_mean, row.o90_std = report.o90_mean, report.o90_std
            row.n_iter_mean = mean_std([r.n_iter for r in done])[0]
            runtimes = [r.runtime_qpu_s for r in done if r.runtime_qpu_s is not None]
            row.runtime_qpu_mean_s, row.runtime_qpu_std_s = mean_std(runtimes)
        rows.append(row)
    return rows


def rescore_overlap(runs: list[RunReport], instances: list[KnapsackInstance], c_lim: float) -> list[RunReport]:
    """Recompute o90 of every finished run from its dumped distribution at a new threshold."""
    models = {instance.name: compile_qubo(instance) for instance in instances}
    rescored = []
    for run in runs:
        if run.failed:
            rescored.append(run)
            continue
        if run.distribution is None:
            raise ConfigError(
                f"run {run.scenario}/{run.solver}/p{run.layers}#{run.run_index} has no dumped distribution",
                details={"hint": "rerun the bench with dump_distributions: true"},
            )
        model = models.get(run.scenario)
        if model is None:
            raise ConfigError(f"no instance given for scenario {run.scenario!r}")
        o90 = overlap_90(SampleDistribution(run.distribution), model, run.v_opt, c_lim)
        rescored.append(run.model_copy(update={"o90": o90}))
    logger.info("Overlap rescored", extra={"runs": len(rescored), "c_lim": c_lim})
    return rescored


# --- Files ---


def write_results(result: BenchResult, out_dir: str | Path, dump_distributions: bool = False) -> dict[str, Path]:
    """results.csv (deterministic), runs.json (full dump) and timings.csv (wall clock)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results_path = out / RESULTS_FILE
    frame = pd.DataFrame([row.model_dump() for row in result.rows], columns=list(ResultRow.model_fields))
    frame.to_csv(results_path, index=False)

    runs_path = out / RUNS_FILE
    exclude = None if dump_distributions else {"distribution"}
    payload = [run.model_dump(exclude=exclude) for run in result.runs]
    runs_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")

    timings_path = out / TIMINGS_FILE
    pd.DataFrame(
        [{column: getattr(r, column) for column in TIMING_COLUMNS} for r in result.runs],
        columns=list(TIMING_COLUMNS),
    ).to_csv(timings_path, index=False)

    logger.info(f"Results written to {out}")
    return {"results": results_path, "runs": runs_path, "timings": timings_path}


def read_results(path: str | Path) -> list[ResultRow]:
    frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False, na_values=[""])
    rows = []
    for record in frame.to_dict(orient="records"):
        cleaned = {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in record.items()}
        rows.append(ResultRow.model_validate(cleaned))
    return rows


def load_runs(paths: list[str | Path]) -> list[RunReport]:
    runs = []
    for path in paths:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            runs.extend(RunReport.model_validate(item) for item in data)
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise ConfigError(f"cannot read run dump {path}: {e}") from e
    return runs


# --- Plot series ---

_SERIES_COLUMNS: dict[FigureKind, tuple[str, str | None]] = {
    FigureKind.OVERLAP: ("o90_mean", "o90_std"),
    FigureKind.CLOSENESS: ("c_opt_mean", "c_opt_std"),
    FigureKind.DEPTH: ("depth", None),
    FigureKind.CIRCUIT_TIME: ("t_circ_ns", None),
    FigureKind.RUNTIME: ("runtime_qpu_mean_s", "runtime_qpu_std_s"),
    FigureKind.ITERATIONS: ("n_iter_mean", None),
    FigureKind.AGGREGATED_OVERLAP: ("o90_mean", "o90_std"),
    FigureKind.AGGREGATED_CLOSENESS: ("c_opt_mean", "c_opt_std"),
}


def _write_series(path: Path, points: list[tuple[float, float, float]], header: str) -> Path:
    lines = [f"# {header}", "# x y y_err"]
    lines += [f"{x:g} {y!r} {err!r}" for x, y, err in sorted(points)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def emit_plot_series(rows: list[ResultRow], figure: FigureKind | str, out_dir: str | Path) -> list[Path]:
    """
    One whitespace-delimited file per (solver, p) with columns x (qubits), y, y_err.
    Aggregated kinds write one file per solver, averaging over layer counts.
    Cells without data are left out and listed in `<figure>_index.txt`.
    """
    if not rows:
        raise ParameterError("no result rows to plot", field="rows")
    figure = FigureKind(figure)
    y_col, err_col = _SERIES_COLUMNS[figure]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    notes: list[str] = []
    aggregated = figure in (FigureKind.AGGREGATED_OVERLAP, FigureKind.AGGREGATED_CLOSENESS)

    groups: dict[tuple, list[ResultRow]] = defaultdict(list)
    for row in rows:
        groups[(row.solver,) if aggregated else (row.solver, row.layers)].append(row)

    for key, members in sorted(groups.items()):
        label = key[0] if aggregated else f"{key[0]}_p{key[1]}"
        if aggregated:
            by_scenario: dict[tuple[str, int], list[ResultRow]] = defaultdict(list)
            for row in members:
                by_scenario[(row.scenario, row.num_qubits)].append(row)
            points = []
            for (_, qubits), cell_rows in by_scenario.items():
                ys = [getattr(r, y_col) for r in cell_rows if getattr(r, y_col) is not None]
                errs = [getattr(r, err_col) or 0.0 for r in cell_rows if getattr(r, y_col) is not None]
                if ys:
                    points.append((float(qubits), float(np.mean(ys)), float(np.mean(errs))))
        else:
            points = [
                (
                    float(r.num_qubits),
                    float(getattr(r, y_col)),
                    float(getattr(r, err_col) or 0.0) if err_col else 0.0,
                )
                for r in members
                if getattr(r, y_col) is not None
            ]

        if not points:
            notes.append(f"{label}: omitted, no {y_col} values")
            continue
        written.append(_write_series(out / f"{figure.value}_{label}.dat", points, f"{figure.value} {label}"))

    index = out / f"{figure.value}_index.txt"
    index.write_text("\n".join([p.name for p in written] + notes) + "\n", encoding="utf-8")
    return written
