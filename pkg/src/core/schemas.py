# src/core/schemas.py
"""Pydantic schemas for solver configuration, bench configuration and results."""

from enum import Enum

from pydantic import BaseModel, Field, model_validator


class SolverKind(str, Enum):
    """Solver families the bench can run."""

    QAOA = "qaoa"
    WS_QAOA = "ws_qaoa"
    WS_INIT_QAOA = "ws_init_qaoa"
    VQE = "vqe"
    SA = "sa"
    IHS = "ihs"
    EXACT = "exact"

    @property
    def is_variational(self) -> bool:
        return self in (SolverKind.QAOA, SolverKind.WS_QAOA, SolverKind.WS_INIT_QAOA, SolverKind.VQE)

    @property
    def is_warm_started(self) -> bool:
        return self in (SolverKind.WS_QAOA, SolverKind.WS_INIT_QAOA)


class OptimizerMethod(str, Enum):
    NELDER_MEAD = "Nelder-Mead"
    COBYLA = "COBYLA"
    SLSQP = "SLSQP"


class ObjectiveMode(str, Enum):
    """How the classical loop evaluates the energy of a parameter vector."""

    EXACT = "exact"
    SHOTS = "shots"


class InnerSolver(str, Enum):
    BRUTE_FORCE = "brute_force"
    SA = "sa"


class FigureKind(str, Enum):
    """Plot series the harness can emit."""

    OVERLAP = "overlap"
    CLOSENESS = "closeness"
    DEPTH = "depth"
    CIRCUIT_TIME = "t_circ"
    RUNTIME = "runtime"
    ITERATIONS = "iterations"
    AGGREGATED_OVERLAP = "aggregated_overlap"
    AGGREGATED_CLOSENESS = "aggregated_closeness"


# --- Solver configuration ---


class OptimizerConfig(BaseModel):
    """Classical optimizer settings for the variational loop."""

    method: OptimizerMethod = Field(default=OptimizerMethod.NELDER_MEAD, description="scipy.optimize.minimize method")
    max_iter: int = Field(default=10_000, ge=1, description="Iteration cap")
    tolerance: float = Field(default=1e-6, gt=0, description="Convergence tolerance")
    objective: ObjectiveMode = Field(default=ObjectiveMode.EXACT, description="Exact expectation or shot estimate")
    shots_per_eval: int = Field(default=1024, ge=1, description="Shots per evaluation when objective is 'shots'")


class AnnealConfig(BaseModel):
    """Simulated annealing schedule. Inverse temperatures default to values derived from the model."""

    num_reads: int = Field(default=1000, ge=1)
    sweeps_per_read: int = Field(default=1000, ge=1)
    beta_min: float | None = Field(default=None, gt=0)
    beta_max: float | None = Field(default=None, gt=0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_schedule(self) -> "AnnealConfig":
        if self.beta_min is not None and self.beta_max is not None and self.beta_min >= self.beta_max:
            raise ValueError("beta_min must be smaller than beta_max")
        return self


class IhsConfig(BaseModel):
    """Iterative heuristic solver loop over random sub-problems."""

    subproblem_size: int = Field(default=12, ge=1)
    max_iterations: int = Field(default=50, ge=1)
    stall_limit: int | None = Field(default=None, ge=1, description="Early-stop window, off when unset")
    inner_solver: InnerSolver = InnerSolver.SA
    inner_reads: int = Field(default=100, ge=1)
    inner_sweeps: int = Field(default=200, ge=1)
    seed: int = Field(default=0, ge=0)


# --- Bench configuration ---


class GenerateSpec(BaseModel):
    """Random instance recipe used in place of an instance file."""

    name: str
    num_items: int = Field(ge=1)
    num_knapsacks: int = Field(ge=1)
    weight_range: tuple[int, int] = (1, 5)
    value_range: tuple[int, int] = (1, 5)
    capacity_range: tuple[int, int] = (4, 7)
    seed: int = 0


class SolverSpec(BaseModel):
    """One solver entry of a bench configuration."""

    kind: SolverKind
    layers: list[int] = Field(default_factory=lambda: [1], description="Layer counts swept for variational kinds")
    label: str | None = Field(default=None, description="Column label, defaults to the kind")
    optimizer: OptimizerConfig | None = None
    shots: int | None = Field(default=None, ge=1)
    anneal: AnnealConfig = Field(default_factory=AnnealConfig)
    ihs: IhsConfig = Field(default_factory=IhsConfig)

    @model_validator(mode="after")
    def check_layers(self) -> "SolverSpec":
        if any(p < 1 for p in self.layers):
            raise ValueError("layers must be >= 1")
        if not self.kind.is_variational:
            self.layers = [0]
        return self

    @property
    def name(self) -> str:
        return self.label or self.kind.value

    def optimizer_config(self) -> OptimizerConfig:
        if self.optimizer is not None:
            return self.optimizer
        if self.kind is SolverKind.VQE:
            return OptimizerConfig(method=OptimizerMethod.COBYLA)
        return OptimizerConfig()


class BenchConfig(BaseModel):
    """Full bench run: instances x solvers x layers x repeats."""

    instances: list[str | GenerateSpec] = Field(description="Instance paths, 'scenario:<name>' or recipes")
    solvers: list[SolverSpec]
    repeats: int = Field(default=20, ge=1)
    seed: int = 7
    shots: int = Field(default=10_000, ge=1)
    workers: int = Field(default=1, ge=1)
    output_dir: str | None = None
    device: str | None = Field(default=None, description="Device YAML, defaults to the shipped 65-qubit map")
    cx_jitter_seed: int | None = Field(default=None, description="Draw per-edge CX durations within the device spread")
    c_lim: float = Field(default=0.90, gt=0, le=1)
    t_meas_ns: float | None = None
    t_opt_s: float | None = None
    t_comm_s: float | None = None
    figures: list[FigureKind] = Field(default_factory=list)
    dump_distributions: bool = False


# --- Results ---


class RunReport(BaseModel):
    """Outcome of one solver run on one instance."""

    scenario: str
    num_qubits: int
    solver: str
    layers: int = 0
    run_index: int = 0
    seed: int = 0
    v_opt: int | None = None
    best_bitstring: str | None = None
    best_energy: float | None = None
    valid: bool = False
    v_tot: int | None = None
    c_opt: float | None = Field(default=None, description="Closeness to optimum, None when excluded")
    o90: float | None = Field(default=None, description="Overlap with the near-optimal subspace")
    n_iter: int = 0
    n_evaluations: int = 0
    converged: bool | None = None
    energy_trace: list[float] = Field(default_factory=list)
    depth: int | None = None
    swap_count: int | None = None
    t_circ_ns: float | None = None
    runtime_qpu_s: float | None = None
    sim_seconds_per_eval: float | None = None
    runtime_sim_s: float | None = Field(
        default=None, description="Runtime formula with the simulator evaluation time as t_circ"
    )
    wall_seconds: float = 0.0
    error: str | None = None
    distribution: dict[str, int] | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class ResultRow(BaseModel):
    """Aggregated metrics of one (instance, solver, layers) cell."""

    scenario: str
    num_qubits: int
    solver: str
    layers: int
    v_opt: int | None = None
    n_run: int
    n_valid: int
    n_failed: int = 0
    c_opt_mean: float | None = None
    c_opt_std: float | None = None
    o90_mean: float | None = None
    o90_std: float | None = None
    n_iter_mean: float | None = None
    depth: int | None = None
    swap_count: int | None = None
    t_circ_ns: float | None = None
    runtime_qpu_mean_s: float | None = None
    runtime_qpu_std_s: float | None = None

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.scenario, self.solver, self.layers)


# --- Device files ---


class DeviceFile(BaseModel):
    """Coupling map and gate durations of a modelled device."""

    name: str = "device"
    num_physical_qubits: int = Field(ge=1)
    edges: list[tuple[int, int]]
    gate_durations_ns: dict[str, float] = Field(
        default_factory=lambda: {"RZ": 0.0, "SX": 35.56, "X": 35.56, "CX": 370.0}
    )
    cx_spread_ns: float = Field(default=80.0, ge=0)
    t_meas_ns: float | None = Field(default=None, ge=0, description="Defaults to the T_MEAS_NS setting")

    @model_validator(mode="after")
    def check_edges(self) -> "DeviceFile":
        for p, q in self.edges:
            if p == q or not (0 <= p < self.num_physical_qubits and 0 <= q < self.num_physical_qubits):
                raise ValueError(f"edge ({p}, {q}) is not a pair of distinct device qubits")
        if any(d < 0 for d in self.gate_durations_ns.values()):
            raise ValueError("gate durations must be non-negative")
        return self
