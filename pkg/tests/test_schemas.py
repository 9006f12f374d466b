# tests/test_schemas.py
"""
Tests for Pydantic schemas.
"""

import pytest
from pydantic import ValidationError

from src.core.schemas import (
    AnnealConfig,
    BenchConfig,
    DeviceFile,
    GenerateSpec,
    OptimizerMethod,
    ResultRow,
    RunReport,
    SolverKind,
    SolverSpec,
)


@pytest.mark.unit
class TestSolverKind:
    """Tests for solver kind classification."""

    def test_variational_kinds(self) -> None:
        """Test which kinds run a circuit."""
        assert SolverKind.QAOA.is_variational
        assert SolverKind.VQE.is_variational
        assert not SolverKind.SA.is_variational
        assert not SolverKind.EXACT.is_variational

    def test_warm_started_kinds(self) -> None:
        """Test which kinds need a relaxation."""
        assert SolverKind.WS_QAOA.is_warm_started
        assert SolverKind.WS_INIT_QAOA.is_warm_started
        assert not SolverKind.QAOA.is_warm_started


@pytest.mark.unit
class TestSolverSpec:
    """Tests for SolverSpec schema."""

    def test_default_layers(self) -> None:
        """Test default layer sweep."""
        assert SolverSpec(kind="qaoa").layers == [1]

    def test_non_variational_layers_collapse(self) -> None:
        """Test that annealers get a single layer-0 cell."""
        assert SolverSpec(kind="sa", layers=[1, 2, 3]).layers == [0]

    def test_invalid_layers(self) -> None:
        """Test that layer counts below one are rejected."""
        with pytest.raises(ValidationError):
            SolverSpec(kind="qaoa", layers=[0])

    def test_optimizer_defaults(self) -> None:
        """Test COBYLA for VQE and Nelder-Mead otherwise."""
        assert SolverSpec(kind="vqe").optimizer_config().method is OptimizerMethod.COBYLA
        assert SolverSpec(kind="ws_qaoa").optimizer_config().method is OptimizerMethod.NELDER_MEAD

    def test_label(self) -> None:
        """Test column label fallback."""
        assert SolverSpec(kind="qaoa").name == "qaoa"
        assert SolverSpec(kind="qaoa", label="qaoa_slsqp").name == "qaoa_slsqp"

    def test_unknown_kind(self) -> None:
        """Test that unknown kinds are rejected."""
        with pytest.raises(ValidationError):
            SolverSpec(kind="grover")


@pytest.mark.unit
class TestAnnealConfig:
    """Tests for AnnealConfig schema."""

    def test_defaults(self) -> None:
        """Test default read and sweep counts."""
        config = AnnealConfig()
        assert config.num_reads == 1000
        assert config.sweeps_per_read == 1000

    def test_inverted_schedule(self) -> None:
        """Test that beta_min must be below beta_max."""
        with pytest.raises(ValidationError):
            AnnealConfig(beta_min=5.0, beta_max=1.0)


@pytest.mark.unit
class TestBenchConfig:
    """Tests for BenchConfig schema."""

    def test_mixed_instance_references(self) -> None:
        """Test file references and generator recipes side by side."""
        config = BenchConfig(
            instances=["scenario:scenario_1", {"name": "g", "num_items": 3, "num_knapsacks": 1}],
            solvers=[{"kind": "sa"}],
        )
        assert config.instances[0] == "scenario:scenario_1"
        assert isinstance(config.instances[1], GenerateSpec)
        assert config.repeats == 20
        assert config.c_lim == 0.90

    def test_repeats_at_least_one(self) -> None:
        """Test N_run >= 1."""
        with pytest.raises(ValidationError):
            BenchConfig(instances=["scenario:scenario_1"], solvers=[{"kind": "sa"}], repeats=0)


@pytest.mark.unit
class TestResults:
    """Tests for run and row models."""

    def test_run_report_failed(self) -> None:
        """Test failure flag."""
        report = RunReport(scenario="s", num_qubits=2, solver="qaoa")
        assert not report.failed
        report.error = "SOLVER_ERROR: boom"
        assert report.failed

    def test_result_row_key(self) -> None:
        """Test cell key."""
        row = ResultRow(scenario="s", num_qubits=12, solver="qaoa", layers=2, n_run=3, n_valid=3)
        assert row.key == ("s", "qaoa", 2)


@pytest.mark.unit
class TestDeviceFile:
    """Tests for DeviceFile schema."""

    def test_default_durations(self) -> None:
        """Test published gate durations."""
        device = DeviceFile(num_physical_qubits=2, edges=[(0, 1)])
        assert device.gate_durations_ns["CX"] == 370.0
        assert device.gate_durations_ns["SX"] == 35.56
        assert device.gate_durations_ns["RZ"] == 0.0
        assert device.t_meas_ns is None

    def test_edge_out_of_range(self) -> None:
        """Test that edges must join distinct device qubits."""
        with pytest.raises(ValidationError):
            DeviceFile(num_physical_qubits=2, edges=[(0, 2)])
        with pytest.raises(ValidationError):
            DeviceFile(num_physical_qubits=2, edges=[(1, 1)])

    def test_negative_duration(self) -> None:
        """Test that durations must be non-negative."""
        with pytest.raises(ValidationError):
            DeviceFile(num_physical_qubits=2, edges=[(0, 1)], gate_durations_ns={"CX": -1.0})
