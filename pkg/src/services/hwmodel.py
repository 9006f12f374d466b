# src/services/hwmodel.py
"""
Gate-level runtime model: decomposition into the native gate set, greedy
SWAP routing on a coupling map, ASAP scheduling and the total runtime formula.
"""

from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from src.core.config import settings
from src.core.exceptions import DeviceError, ParameterError
from src.core.logging import get_logger
from src.core.schemas import DeviceFile, SolverKind
from src.services.qubo import QuboModel
from src.services.simulator import (
    SX_MATRIX,
    X_MATRIX,
    StateVector,
    apply_cx,
    apply_gate,
    rx_matrix,
    ry_matrix,
    rz_matrix,
    warm_start_angle,
)
from src.services.variational import AnsatzSpec

logger = get_logger("hwmodel")

DEVICE_DIR = Path(__file__).resolve().parent.parent / "core" / "devices"
DEFAULT_DEVICE = DEVICE_DIR / "brooklyn.yaml"

NATIVE_GATES = frozenset({"RZ", "SX", "X", "CX"})


@dataclass(frozen=True)
class Gate:
    """
    Abstract gates: RY, RX, RZ (angle), Z_PHASE (exp(-i phi Z)),
    ZZ_PHASE (exp(-i phi Z Z)), CX (control, target), SX, X.
    """

    name: str
    qubits: tuple[int, ...]
    param: float = 0.0


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def add(self, name: str, *qubits: int, param: float = 0.0) -> None:
        self.gates.append(Gate(name, tuple(qubits), param))

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name)


# --- Abstract circuits ---


def ising_terms(model: QuboModel) -> tuple[np.ndarray, dict[tuple[int, int], float], float]:
    """Substitute x = (1 - z) / 2: E = const + sum h_l z_l + sum J_pq z_p z_q."""
    h = -0.5 * model.linear.copy()
    couplings: dict[tuple[int, int], float] = {}
    const = model.offset + 0.5 * float(model.linear.sum())
    for (p, q), b in model.quadratic.items():
        h[p] -= 0.25 * b
        h[q] -= 0.25 * b
        couplings[(p, q)] = 0.25 * b
        const += 0.25 * b
    return h, couplings, const


def qaoa_circuit(model: QuboModel, spec: AnsatzSpec, gammas: np.ndarray, betas: np.ndarray) -> Circuit:
    """Gate-level form of the QAOA-family state, equal to the simulator's up to global phase."""
    n = spec.num_qubits
    circuit = Circuit(n)
    h, couplings, _ = ising_terms(model)
    thetas = [warm_start_angle(c) for c in spec.c_star] if spec.kind.is_warm_started else [np.pi / 2] * n

    for q in range(n):
        circuit.add("RY", q, param=thetas[q])
    for gamma, beta in zip(gammas, betas, strict=True):
        for q in range(n):
            if h[q] != 0.0:
                circuit.add("Z_PHASE", q, param=gamma * h[q])
        for (p, q), coupling in couplings.items():
            circuit.add("ZZ_PHASE", p, q, param=gamma * coupling)
        for q in range(n):
            if spec.kind is SolverKind.WS_QAOA:
                circuit.add("RY", q, param=-thetas[q])
                circuit.add("RZ", q, param=-2.0 * beta)
                circuit.add("RY", q, param=thetas[q])
            else:
                circuit.add("RX", q, param=2.0 * beta)
    return circuit


def vqe_circuit(spec: AnsatzSpec, thetas: np.ndarray) -> Circuit:
    n = spec.num_qubits
    circuit = Circuit(n)
    for layer in range(spec.layers + 1):
        for q in range(n):
            circuit.add("RY", q, param=thetas[layer * n + q])
        if layer < spec.layers:
            for q in range(n - 1):
                circuit.add("CX", q, q + 1)
    return circuit


def ansatz_circuit(model: QuboModel, spec: AnsatzSpec, params: np.ndarray) -> Circuit:
    if spec.kind is SolverKind.VQE:
        return vqe_circuit(spec, params)
    return qaoa_circuit(model, spec, params[: spec.layers], params[spec.layers :])


def run_circuit(circuit: Circuit, state: StateVector) -> StateVector:
    """Apply a circuit to a state on the statevector simulator."""
    for gate in circuit.gates:
        q = gate.qubits
        match gate.name:
            case "RY":
                state = apply_gate(state, ry_matrix(gate.param), q[0])
            case "RX":
                state = apply_gate(state, rx_matrix(gate.param), q[0])
            case "RZ":
                state = apply_gate(state, rz_matrix(gate.param), q[0])
            case "Z_PHASE":
                state = apply_gate(state, rz_matrix(2.0 * gate.param), q[0])
            case "SX":
                state = apply_gate(state, SX_MATRIX, q[0])
            case "X":
                state = apply_gate(state, X_MATRIX, q[0])
            case "CX":
                state = apply_cx(state, q[0], q[1])
            case "ZZ_PHASE":
                idx = np.arange(1 << state.num_qubits, dtype=np.int64)
                parity = ((idx >> q[0]) ^ (idx >> q[1])) & 1
                zz = 1.0 - 2.0 * parity
                state = StateVector(state.amplitudes * np.exp(-1j * gate.param * zz))
            case _:
                raise DeviceError(f"unsupported gate {gate.name}")
    return state


# --- Decomposition ---


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite into {RZ, SX, X, CX}, equal up to global phase."""
    native = Circuit(circuit.num_qubits)
    for gate in circuit.gates:
        q = gate.qubits
        match gate.name:
            case "RZ" | "SX" | "X" | "CX":
                native.gates.append(gate)
            case "Z_PHASE":
                native.add("RZ", q[0], param=2.0 * gate.param)
            case "RY":
                # RY(t) = RZ(pi) SX RZ(t + pi) SX RZ(0), rightmost first
                native.add("RZ", q[0], param=0.0)
                native.add("SX", q[0])
                native.add("RZ", q[0], param=gate.param + np.pi)
                native.add("SX", q[0])
                native.add("RZ", q[0], param=np.pi)
            case "RX":
                native.add("RZ", q[0], param=np.pi / 2)
                native.add("SX", q[0])
                native.add("RZ", q[0], param=gate.param + np.pi)
                native.add("SX", q[0])
                native.add("RZ", q[0], param=np.pi / 2)
            case "ZZ_PHASE":
                native.add("CX", q[0], q[1])
                native.add("RZ", q[1], param=2.0 * gate.param)
                native.add("CX", q[0], q[1])
            case _:
                raise DeviceError(f"gate {gate.name} has no native decomposition")
    return native


# --- Devices ---


@dataclass(frozen=True, eq=False)
class DeviceModel:
    name: str
    num_physical_qubits: int
    edges: frozenset[tuple[int, int]]
    gate_durations: dict[str, float]
    cx_spread_ns: float = 80.0
    t_meas_ns: float = 1000.0
    cx_edge_durations: dict[tuple[int, int], float] | None = None

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_physical_qubits))
        graph.add_edges_from(self.edges)
        return graph

    def coupled(self, p: int, q: int) -> bool:
        return self.graph.has_edge(p, q)

    def duration(self, gate: Gate) -> float:
        if gate.name == "CX" and self.cx_edge_durations is not None:
            key = tuple(sorted(gate.qubits))
            if key in self.cx_edge_durations:
                return self.cx_edge_durations[key]
        try:
            return self.gate_durations[gate.name]
        except KeyError as e:
            raise DeviceError(f"device has no duration for gate {gate.name}") from e

    def with_cx_jitter(self, seed: int) -> "DeviceModel":
        """Per-edge CX durations drawn once, uniform within the spread around the mean."""
        rng = np.random.default_rng(seed)
        mean = self.gate_durations["CX"]
        durations = {
            edge: float(max(0.0, mean + rng.uniform(-self.cx_spread_ns, self.cx_spread_ns)))
            for edge in sorted(self.edges)
        }
        return replace(self, cx_edge_durations=durations)


def device_from_file(data: DeviceFile) -> DeviceModel:
    return DeviceModel(
        name=data.name,
        num_physical_qubits=data.num_physical_qubits,
        edges=frozenset(tuple(sorted(e)) for e in data.edges),
        gate_durations=dict(data.gate_durations_ns),
        cx_spread_ns=data.cx_spread_ns,
        t_meas_ns=data.t_meas_ns if data.t_meas_ns is not None else settings.T_MEAS_NS,
    )


def load_device(path: str | Path) -> DeviceModel:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        return device_from_file(DeviceFile.model_validate(raw))
    except (OSError, yaml.YAMLError, ValidationError) as e:
        raise DeviceError(f"cannot load device file {path}: {e}") from e


@lru_cache(maxsize=1)
def default_device() -> DeviceModel:
    return load_device(DEFAULT_DEVICE)


def line_device(num_qubits: int, name: str = "line") -> DeviceModel:
    return device_from_file(
        DeviceFile(name=name, num_physical_qubits=num_qubits, edges=[(q, q + 1) for q in range(num_qubits - 1)])
    )


def line_layout(device: DeviceModel, num_logical: int) -> list[int]:
    """
    Physical qubits for logical 0..n-1 along a greedy simple path, so that
    nearest-neighbour CX chains need no SWAPs. Falls back to BFS order once
    the path is exhausted.
    """
    if num_logical > device.num_physical_qubits:
        raise DeviceError(
            f"{num_logical} logical qubits do not fit on {device.num_physical_qubits} physical qubits",
        )
    graph = device.graph
    leaves = sorted(v for v in graph.nodes if graph.degree(v) == 1)
    start = leaves[0] if leaves else min(graph.nodes)

    path, seen = [start], {start}
    while len(path) < num_logical:
        options = sorted(v for v in graph.neighbors(path[-1]) if v not in seen)
        if not options:
            break
        onward = [v for v in options if any(u not in seen and u != v for u in graph.neighbors(v))]
        nxt = (onward or options)[0]
        path.append(nxt)
        seen.add(nxt)

    if len(path) < num_logical:
        for v in nx.bfs_tree(graph, start):
            if v not in seen:
                path.append(v)
                seen.add(v)
            if len(path) == num_logical:
                break
    if len(path) < num_logical:
        raise DeviceError("disconnected coupling map: not enough reachable qubits")
    return path[:num_logical]


# --- Routing ---


@dataclass
class RoutedCircuit:
    circuit: Circuit
    initial_layout: list[int]
    final_layout: list[int]
    swap_count: int


def route(
    native: Circuit,
    device: DeviceModel,
    seed: int = 0,
    initial_layout: list[int] | None = None,
) -> RoutedCircuit:
    """
    Greedy SWAP insertion: a CX on uncoupled qubits moves its control along a
    shortest path (ties drawn with the seeded generator) until it neighbours
    the target. Each SWAP is emitted as three CX.
    """
    n = native.num_qubits
    l2p = list(initial_layout) if initial_layout is not None else line_layout(device, n)
    start_layout = list(l2p)
    if len(l2p) != n or len(set(l2p)) != n:
        raise DeviceError("initial layout must map every logical qubit to a distinct physical qubit")
    graph = device.graph
    component = nx.node_connected_component(graph, l2p[0])
    if any(p not in component for p in l2p):
        raise DeviceError("disconnected coupling map: used qubits are not mutually reachable")

    p2l = {p: logical for logical, p in enumerate(l2p)}
    rng = np.random.default_rng(seed)
    routed = Circuit(device.num_physical_qubits)
    swaps = 0

    def swap(u: int, v: int) -> None:
        nonlocal swaps
        routed.add("CX", u, v)
        routed.add("CX", v, u)
        routed.add("CX", u, v)
        lu, lv = p2l.pop(u, None), p2l.pop(v, None)
        if lu is not None:
            p2l[v] = lu
            l2p[lu] = v
        if lv is not None:
            p2l[u] = lv
            l2p[lv] = u
        swaps += 1

    for gate in native.gates:
        if gate.name not in NATIVE_GATES:
            raise DeviceError(f"route expects native gates, got {gate.name}")
        if gate.name != "CX":
            routed.add(gate.name, l2p[gate.qubits[0]], param=gate.param)
            continue
        control, target = gate.qubits
        pc, pt = l2p[control], l2p[target]
        if not graph.has_edge(pc, pt):
            paths = sorted(nx.all_shortest_paths(graph, pc, pt))
            path = paths[int(rng.integers(len(paths)))]
            for u, v in zip(path[:-2], path[1:-1], strict=True):
                swap(u, v)
            pc = l2p[control]
        routed.add("CX", pc, pt)

    logger.debug(f"Circuit routed with {swaps} swaps", extra={"num_qubits": n})
    return RoutedCircuit(
        circuit=routed,
        initial_layout=start_layout,
        final_layout=list(l2p),
        swap_count=swaps,
    )


# --- Scheduling ---


@dataclass(frozen=True)
class ScheduledGate:
    gate: Gate
    start_ns: float
    duration_ns: float

    @property
    def end_ns(self) -> float:
        return self.start_ns + self.duration_ns


@dataclass
class ScheduledCircuit:
    gates: list[ScheduledGate]
    depth: int
    t_circ_ns: float
    swap_count: int = 0


def schedule(circuit: Circuit | RoutedCircuit, device: DeviceModel) -> ScheduledCircuit:
    """ASAP: every gate starts when the last of its qubits is free; t_circ is the makespan."""
    swap_count = 0
    if isinstance(circuit, RoutedCircuit):
        swap_count = circuit.swap_count
        circuit = circuit.circuit

    ready: dict[int, float] = defaultdict(float)
    level: dict[int, int] = defaultdict(int)
    scheduled = []
    for gate in circuit.gates:
        start = max(ready[q] for q in gate.qubits)
        duration = device.duration(gate)
        lvl = max(level[q] for q in gate.qubits) + 1
        for q in gate.qubits:
            ready[q] = start + duration
            level[q] = lvl
        scheduled.append(ScheduledGate(gate, start, duration))

    return ScheduledCircuit(
        gates=scheduled,
        depth=max(level.values(), default=0),
        t_circ_ns=max((g.end_ns for g in scheduled), default=0.0),
        swap_count=swap_count,
    )


def export_schedule(scheduled: ScheduledCircuit, path: str | Path) -> Path:
    """Per-gate CSV: gate, qubits, start_ns, duration_ns."""
    path = Path(path)
    frame = pd.DataFrame(
        {
            "gate": [g.gate.name for g in scheduled.gates],
            "qubits": [" ".join(str(q) for q in g.gate.qubits) for g in scheduled.gates],
            "start_ns": [g.start_ns for g in scheduled.gates],
            "duration_ns": [g.duration_ns for g in scheduled.gates],
        }
    )
    frame.to_csv(path, index=False)
    return path


def total_runtime(
    n_iter: int,
    n_samp: int,
    t_circ: float,
    t_meas: float,
    t_opt: float,
    t_comm: float,
) -> float:
    """T = n_iter * [n_samp * (t_circ + t_meas) + t_opt + t_comm], all times in one unit."""
    inputs = {"n_iter": n_iter, "n_samp": n_samp, "t_circ": t_circ, "t_meas": t_meas, "t_opt": t_opt, "t_comm": t_comm}
    for name, value in inputs.items():
        if value < 0:
            raise ParameterError(f"{name} must be non-negative", field=name)
    return n_iter * (n_samp * (t_circ + t_meas) + t_opt + t_comm)


def estimate_circuit(
    model: QuboModel,
    spec: AnsatzSpec,
    device: DeviceModel | None = None,
    seed: int = 0,
) -> ScheduledCircuit:
    """Schedule the ansatz on the device. Angles are random, the gate structure is not."""
    device = device or default_device()
    rng = np.random.default_rng(seed)
    lo, hi = spec.param_range
    params = rng.uniform(lo, hi, size=spec.num_params)
    routed = route(decompose(ansatz_circuit(model, spec, params)), device, seed)
    scheduled = schedule(routed, device)
    logger.info(
        "Circuit scheduled",
        extra={
            "solver": spec.kind.value,
            "layers": spec.layers,
            "num_qubits": spec.num_qubits,
            "duration_ms": scheduled.t_circ_ns / 1e6,
        },
    )
    return scheduled
