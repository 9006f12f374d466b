# src/services/instance.py
"""Multi-knapsack instances, qubit layout and instance files."""

import json
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, StrictInt, ValidationError, model_validator

from src.core.exceptions import InstanceParseError, ParameterError
from src.core.logging import get_logger

logger = get_logger("instance")

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "core" / "scenarios"
SCENARIO_PREFIX = "scenario:"

Bits = str | Sequence[int] | np.ndarray


class KnapsackInstance(BaseModel):
    """N items, M knapsacks, item weights, per-knapsack values and capacities."""

    model_config = ConfigDict(frozen=True)

    name: str
    weights: tuple[StrictInt, ...]
    values: tuple[tuple[StrictInt, ...], ...]
    capacities: tuple[StrictInt, ...]

    @model_validator(mode="after")
    def check_shape(self) -> "KnapsackInstance":
        if not self.weights:
            raise ValueError("weights: at least one item is required")
        if not self.capacities:
            raise ValueError("capacities: at least one knapsack is required")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if any(c < 1 for c in self.capacities):
            raise ValueError("capacities must be >= 1")
        if len(self.values) != len(self.capacities):
            raise ValueError("values must have one row per knapsack")
        for row in self.values:
            if len(row) != len(self.weights):
                raise ValueError("values rows must have one entry per item")
            if any(v < 0 for v in row):
                raise ValueError("values must be non-negative")
        return self

    @property
    def num_items(self) -> int:
        return len(self.weights)

    @property
    def num_knapsacks(self) -> int:
        return len(self.capacities)

    @property
    def max_value(self) -> int:
        return max(max(row) for row in self.values)

    def packing_value(self, assignment: Sequence[int | None]) -> int:
        """Total value of an item -> knapsack assignment (None = unpacked)."""
        return sum(self.values[i][j] for j, i in enumerate(assignment) if i is not None)

    def is_feasible(self, assignment: Sequence[int | None]) -> bool:
        loads = [0] * self.num_knapsacks
        for j, i in enumerate(assignment):
            if i is not None:
                loads[i] += self.weights[j]
        return all(load <= cap for load, cap in zip(loads, self.capacities, strict=True))


def slack_bits(capacity: int) -> int:
    """floor(log2 c) + 1 bits, enough to encode any slack in [0, c]."""
    return capacity.bit_length()


@dataclass(frozen=True)
class QubitLayout:
    """
    Variable ordering: decision bits x[i, j] row-major by knapsack then item,
    then slack bits y[i, b] grouped per knapsack with ascending bit index.
    """

    num_items: int
    num_knapsacks: int
    slack_counts: tuple[int, ...]

    @property
    def decision_count(self) -> int:
        return self.num_items * self.num_knapsacks

    @property
    def total_qubits(self) -> int:
        return self.decision_count + sum(self.slack_counts)

    @cached_property
    def _slack_offsets(self) -> tuple[int, ...]:
        offsets, start = [], self.decision_count
        for count in self.slack_counts:
            offsets.append(start)
            start += count
        return tuple(offsets)

    def index_of_decision(self, knapsack: int, item: int) -> int:
        if not (0 <= knapsack < self.num_knapsacks and 0 <= item < self.num_items):
            raise ParameterError(f"no decision variable x[{knapsack},{item}]", field="index")
        return knapsack * self.num_items + item

    def index_of_slack(self, knapsack: int, bit: int) -> int:
        if not (0 <= knapsack < self.num_knapsacks and 0 <= bit < self.slack_counts[knapsack]):
            raise ParameterError(f"no slack variable y[{knapsack},{bit}]", field="index")
        return self._slack_offsets[knapsack] + bit

    def label(self, index: int) -> str:
        if index < self.decision_count:
            return f"x[{index // self.num_items},{index % self.num_items}]"
        for i, start in enumerate(self._slack_offsets):
            if start <= index < start + self.slack_counts[i]:
                return f"y[{i},{index - start}]"
        raise ParameterError(f"index {index} outside layout", field="index")

    def decode(self, bits: Bits) -> tuple[np.ndarray, np.ndarray]:
        """Return the M x N decision matrix and the per-knapsack slack values."""
        x = as_bits(bits, self.total_qubits).astype(np.int64)
        decisions = x[: self.decision_count].reshape(self.num_knapsacks, self.num_items)
        slack = np.array(
            [
                sum(int(x[start + b]) << b for b in range(count))
                for start, count in zip(self._slack_offsets, self.slack_counts, strict=True)
            ],
            dtype=np.int64,
        )
        return decisions, slack

    def encode_packing(self, instance: KnapsackInstance, assignment: Sequence[int | None]) -> str:
        """Bitstring of a packing with every slack register set to the unused capacity."""
        bits = np.zeros(self.total_qubits, dtype=np.uint8)
        loads = [0] * self.num_knapsacks
        for j, i in enumerate(assignment):
            if i is None:
                continue
            bits[self.index_of_decision(i, j)] = 1
            loads[i] += instance.weights[j]
        for i, (load, cap) in enumerate(zip(loads, instance.capacities, strict=True)):
            free = cap - load
            if free < 0:
                raise ParameterError(f"knapsack {i} over capacity", field="assignment")
            for b in range(self.slack_counts[i]):
                bits[self.index_of_slack(i, b)] = (free >> b) & 1
        return render_bits(bits)


def layout(instance: KnapsackInstance) -> QubitLayout:
    return QubitLayout(
        num_items=instance.num_items,
        num_knapsacks=instance.num_knapsacks,
        slack_counts=tuple(slack_bits(c) for c in instance.capacities),
    )


# --- Bitstrings (qubit 0 is the leftmost character) ---


def as_bits(bits: Bits, length: int) -> np.ndarray:
    if isinstance(bits, str):
        if any(ch not in "01" for ch in bits):
            raise ParameterError("bitstring may only contain '0' and '1'", field="bitstring")
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ParameterError(f"bitstring length {arr.shape[-1] if arr.ndim else 0} != {length}", field="bitstring")
    return arr.astype(np.uint8)


def render_bits(bits: Sequence[int] | np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def index_to_bits(index: int, length: int) -> str:
    return "".join(str((index >> q) & 1) for q in range(length))


# --- Generation ---


def _check_range(name: str, bounds: tuple[int, int], minimum: int = 0) -> None:
    lo, hi = bounds
    if lo > hi:
        raise ParameterError(f"{name}: lower bound {lo} > upper bound {hi}", field=name)
    if lo < minimum:
        raise ParameterError(f"{name}: lower bound must be >= {minimum}", field=name)


def generate_instance(
    num_items: int,
    num_knapsacks: int,
    weight_range: tuple[int, int],
    value_range: tuple[int, int],
    capacity_range: tuple[int, int],
    seed: int,
    name: str | None = None,
) -> KnapsackInstance:
    """Random instance, a pure function of the arguments."""
    if num_items < 1 or num_knapsacks < 1:
        raise ParameterError("num_items and num_knapsacks must be >= 1", field="shape")
    _check_range("weight_range", weight_range)
    _check_range("value_range", value_range)
    _check_range("capacity_range", capacity_range, minimum=1)

    rng = np.random.default_rng(seed)
    weights = rng.integers(weight_range[0], weight_range[1] + 1, size=num_items)
    values = rng.integers(value_range[0], value_range[1] + 1, size=(num_knapsacks, num_items))
    capacities = rng.integers(capacity_range[0], capacity_range[1] + 1, size=num_knapsacks)

    return KnapsackInstance(
        name=name or f"random_n{num_items}_m{num_knapsacks}_s{seed}",
        weights=tuple(int(w) for w in weights),
        values=tuple(tuple(int(v) for v in row) for row in values),
        capacities=tuple(int(c) for c in capacities),
    )


# --- Files ---


def instance_to_dict(instance: KnapsackInstance) -> dict:
    return {
        "name": instance.name,
        "weights": list(instance.weights),
        "values": [list(row) for row in instance.values],
        "capacities": list(instance.capacities),
    }


def save_instance(instance: KnapsackInstance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(instance_to_dict(instance), indent=2) + "\n", encoding="utf-8")
    logger.debug("Instance saved", extra={"scenario": instance.name})
    return path


def _line_of(text: str, field: str) -> int | None:
    for number, line in enumerate(text.splitlines(), start=1):
        if f'"{field}"' in line or line.lstrip().startswith(f"{field}:"):
            return number
    return None


def parse_instance(text: str, source: str = "<string>") -> KnapsackInstance:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise InstanceParseError(
            f"{source}: not a valid instance document",
            line=mark.line + 1 if mark is not None else None,
            path=source,
        ) from e

    if not isinstance(data, dict):
        raise InstanceParseError(f"{source}: instance must be an object with named fields", path=source)

    try:
        return KnapsackInstance.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first["loc"] else None
        if first["type"] == "missing":
            message = f"{source}: missing field '{field}'"
        else:
            message = f"{source}: invalid field '{field}': {first['msg']}" if field else f"{source}: {first['msg']}"
        raise InstanceParseError(
            message,
            field=field,
            line=_line_of(text, field) if field else None,
            path=source,
        ) from e


def load_instance(path: str | Path) -> KnapsackInstance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceParseError(f"cannot read instance file: {e}", path=str(path)) from e
    return parse_instance(text, source=str(path))


def list_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


def load_scenario(name: str) -> KnapsackInstance:
    path = SCENARIO_DIR / f"{name}.json"
    if not path.exists():
        raise ParameterError(f"unknown scenario '{name}', known: {', '.join(list_scenarios())}", field="scenario")
    return load_instance(path)


def resolve_instance(ref: str) -> KnapsackInstance:
    """Load 'scenario:<name>' from the shipped set, anything else as a file path."""
    if ref.startswith(SCENARIO_PREFIX):
        return load_scenario(ref[len(SCENARIO_PREFIX) :])
    return load_instance(ref)
