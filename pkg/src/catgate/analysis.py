"""Gate-level results: truth tables, fidelities, logical gates and convergence checks."""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from catgate.errors import (
    LogicalExtractionError,
    NumericalError,
    ParameterError,
    TruncationError,
)
from catgate.hilbert import QUTRIT_DIM, SpaceSpec
from catgate.numkernel import ComplexMatrix
from catgate.scenario import (
    FidelityKind,
    FidelityStrategy,
    GateMode,
    Scenario,
    evolve_logical_kets,
    final_density,
    logical_response,
    step_size,
)
from catgate.states import (
    LOGICAL_LABELS,
    TAIL_TOLERANCE,
    CatSpec,
    DensityMatrix,
    LogicalAngles,
    Parity,
    cat_tail_mass,
    ideal_output,
    logical_basis,
    logical_coefficients,
)
from catgate.workers import map_ordered

logger = logging.getLogger(__name__)

NEGATIVE_OVERLAP_TOLERANCE = 1e-9
CONVERGENCE_THRESHOLD = 1e-4
DEFAULT_MAX_LEAKAGE = 0.05

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


def to_jsonable(value: Any) -> Any:
    """Convert arrays and complex numbers for JSON; complex values become [re, im]."""
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, complex | np.complexfloating):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.floating | np.integer):
        return value.item()
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    return value


def export_json(payload: dict[str, Any], path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
    target.write_text(text + "\n", encoding="utf-8", newline="\n")
    return target


@dataclass(slots=True, frozen=True)
class TruthTable:
    """Logical-basis amplitudes T[i, j] = <L_i|U|L_j> with the mean population lost."""

    matrix: ComplexMatrix
    leakage: float

    @property
    def conditional_phase(self) -> float:
        """arg(T33 T00 / (T11 T22)), pi for a CP gate."""
        m = self.matrix
        return float(np.angle(m[3, 3] * m[0, 0] / (m[1, 1] * m[2, 2])))

    def is_unitary(self, tolerance: float = 1e-9) -> bool:
        product = self.matrix.conj().T @ self.matrix
        return bool(np.allclose(product, np.eye(4), atol=tolerance, rtol=0.0))

    def to_dict(self) -> dict[str, Any]:
        return {"labels": list(LOGICAL_LABELS), "matrix": self.matrix, "leakage": self.leakage}

    def format(self, precision: int = 4) -> str:
        """Plain-text table with one row per output label."""
        width = 2 * precision + 12
        lines = ["".ljust(10) + "".join(label.rjust(width) for label in LOGICAL_LABELS)]
        for label, row in zip(LOGICAL_LABELS, self.matrix, strict=True):
            cells = "".join(
                f"{z.real:+.{precision}f}{z.imag:+.{precision}f}j".rjust(width) for z in row
            )
            lines.append(label.ljust(10) + cells)
        lines.append(f"leakage = {self.leakage:.3e}")
        return "\n".join(lines)


@dataclass(slots=True, frozen=True)
class LogicalChannel:
    """The gate channel restricted to the logical subspace.

    ``response[k, l, i, j]`` is <L_k| E(|L_i><L_j|) |L_l>.
    """

    response: npt.NDArray[np.complex128]
    trace_drift: float = 0.0

    def output(self, coefficients: npt.NDArray[np.complex128]) -> ComplexMatrix:
        """Logical block of the output for the input sum_j c_j |L_j>."""
        return np.einsum("klij,i,j->kl", self.response, coefficients, coefficients.conj())

    def populations(self) -> npt.NDArray[np.float64]:
        """Logical population kept for each basis input."""
        return np.real(np.einsum("kkjj->j", self.response))

    def truth_table(self, max_leakage: float = DEFAULT_MAX_LEAKAGE) -> TruthTable:
        """Amplitudes recovered with the gauge T00 real and positive."""
        t00 = math.sqrt(max(float(np.real(self.response[0, 0, 0, 0])), 0.0))
        if t00 == 0:
            raise LogicalExtractionError("|L0> is fully lost; no phase reference for the table")
        matrix = self.response[:, 0, :, 0] / t00
        leakage = float(max(0.0, 1.0 - np.mean(self.populations())))
        return _checked(TruthTable(matrix=matrix, leakage=leakage), max_leakage)


@dataclass(slots=True, frozen=True)
class FidelityResult:
    """Fidelity samples on the quadrature grid, indexed [theta, phi]."""

    mean_fidelity: float
    grid: npt.NDArray[np.float64]
    quadrature_n: int
    kind: FidelityKind = FidelityKind.SQRT
    leakage: float = 0.0
    trace_drift: float = 0.0

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.grid))

    @property
    def max_fidelity(self) -> float:
        return float(np.max(self.grid))

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_fidelity": self.mean_fidelity,
            "quadrature_n": self.quadrature_n,
            "kind": self.kind.value,
            "angles": quadrature_angles(self.quadrature_n),
            "grid": self.grid,
            "leakage": self.leakage,
            "trace_drift": self.trace_drift,
        }


@dataclass(slots=True, frozen=True)
class ConvergenceReport:
    """Fidelity changes under a halved step and enlarged truncations."""

    base_fidelity: float
    dt_fidelity: float
    truncation_fidelity: float
    tail_mass: float
    threshold: float = CONVERGENCE_THRESHOLD
    failures: tuple[str, ...] = field(default_factory=tuple)

    @property
    def dt_delta(self) -> float:
        return abs(self.dt_fidelity - self.base_fidelity)

    @property
    def truncation_delta(self) -> float:
        return abs(self.truncation_fidelity - self.base_fidelity)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "base_fidelity": self.base_fidelity,
            "dt_fidelity": self.dt_fidelity,
            "truncation_fidelity": self.truncation_fidelity,
            "dt_delta": self.dt_delta,
            "truncation_delta": self.truncation_delta,
            "tail_mass": self.tail_mass,
            "threshold": self.threshold,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def _checked(table: TruthTable, max_leakage: float) -> TruthTable:
    if table.leakage > max_leakage:
        raise LogicalExtractionError(
            f"leakage {table.leakage:.3e} exceeds {max_leakage}; logical extraction is invalid"
        )
    return table


def truth_table(
    evolved: ComplexMatrix,
    cat_amp: float,
    space: SpaceSpec,
    max_leakage: float = DEFAULT_MAX_LEAKAGE,
) -> TruthTable:
    """Project evolved logical states onto the logical basis.

    ``evolved`` is a (dim, 4) matrix of final states, a full-space propagator,
    or a two-mode cavity propagator acting with the qutrit in |g>.
    """
    arr = np.asarray(evolved, dtype=np.complex128)
    basis = logical_basis(cat_amp, space)
    if arr.shape == (space.dim, 4):
        finals = arr
    elif arr.shape == (space.dim, space.dim):
        finals = arr @ basis
    elif arr.shape == (space.cavity_dim, space.cavity_dim):
        finals = np.kron(np.eye(QUTRIT_DIM), arr) @ basis
    else:
        raise ParameterError(f"cannot read a truth table from an array of shape {arr.shape}")
    matrix = basis.conj().T @ finals
    leakage = float(max(0.0, 1.0 - np.sum(np.abs(matrix) ** 2) / 4.0))
    return _checked(TruthTable(matrix=matrix, leakage=leakage), max_leakage)


def logical_channel(scenario: Scenario) -> LogicalChannel:
    response, drift = logical_response(scenario)
    return LogicalChannel(response=response, trace_drift=drift)


def scenario_truth_table(scenario: Scenario) -> TruthTable:
    """Truth table of a scenario in any mode."""
    if scenario.is_open:
        return logical_channel(scenario).truth_table(scenario.max_leakage)
    return truth_table(
        evolve_logical_kets(scenario),
        scenario.params.cat_amplitude,
        scenario.space,
        scenario.max_leakage,
    )


def _fidelity_from_overlap(overlap: float, kind: FidelityKind) -> float:
    if overlap < -NEGATIVE_OVERLAP_TOLERANCE:
        raise NumericalError(f"negative overlap {overlap:.3e}: density matrix is not positive")
    overlap = max(overlap, 0.0)
    return math.sqrt(overlap) if kind is FidelityKind.SQRT else overlap


def fidelity_pointwise(
    rho_final: DensityMatrix,
    angles: LogicalAngles,
    cat_amp: float,
    space: SpaceSpec,
    kind: FidelityKind = FidelityKind.SQRT,
) -> float:
    """sqrt(<psi_id|rho|psi_id>) against the ideal CP output (or the overlap itself)."""
    psi = ideal_output(angles, cat_amp, space)
    overlap = float(np.real(np.vdot(psi, rho_final @ psi)))
    return _fidelity_from_overlap(overlap, FidelityKind(kind))


def quadrature_angles(n: int) -> npt.NDArray[np.float64]:
    """Midpoints (i + 1/2) 2 pi / n of a uniform grid on [0, 2 pi)."""
    if n < 2:
        raise ParameterError(f"quadrature_n must be >= 2, got {n}")
    return (np.arange(n) + 0.5) * (2.0 * math.pi / n)


def fidelity_average(scenario: Scenario, quadrature_n: int | None = None) -> FidelityResult:
    """Midpoint-rule average of the pointwise fidelity over (theta, phi) in [0, 2 pi)^2."""
    n = scenario.quadrature_n if quadrature_n is None else quadrature_n
    angles = quadrature_angles(n)
    points = [LogicalAngles(float(theta), float(phi)) for theta in angles for phi in angles]
    kind = scenario.fidelity_kind

    if not scenario.is_open or scenario.strategy is FidelityStrategy.LOGICAL_BASIS:
        channel = logical_channel(scenario)
        samples = []
        for point in points:
            block = channel.output(logical_coefficients(point))
            ideal = logical_coefficients(point, ideal=True)
            overlap = float(np.real(np.vdot(ideal, block @ ideal)))
            kept = float(np.real(np.trace(block)))
            samples.append((_fidelity_from_overlap(overlap, kind), 1.0 - kept, channel.trace_drift))
    else:
        cat_amp, space = scenario.params.cat_amplitude, scenario.space
        basis = logical_basis(cat_amp, space)

        def run(point: LogicalAngles) -> tuple[float, float, float]:
            rho, drift = final_density(scenario, point)
            kept = float(np.real(np.trace(basis.conj().T @ rho @ basis)))
            return fidelity_pointwise(rho, point, cat_amp, space, kind), 1.0 - kept, drift

        logger.info("averaging over %d open-system runs", len(points))
        samples = map_ordered(run, points, scenario.workers)

    values = np.array(samples, dtype=float)
    grid = values[:, 0].reshape(n, n)
    result = FidelityResult(
        mean_fidelity=float(np.mean(grid)),
        grid=grid,
        quadrature_n=n,
        kind=kind,
        leakage=float(max(0.0, np.mean(values[:, 1]))),
        trace_drift=float(np.max(values[:, 2])),
    )
    logger.debug("mean fidelity %.8f over a %dx%d grid", result.mean_fidelity, n, n)
    return result


def logical_gates() -> tuple[ComplexMatrix, ComplexMatrix]:
    """Ideal logical CP = diag(1, 1, 1, -1) and CNOT = (I x H) CP (I x H)."""
    cp = np.diag([1.0, 1.0, 1.0, -1.0]).astype(np.complex128)
    h_target = np.kron(np.eye(2), HADAMARD)
    return cp, h_target @ cp @ h_target


def entangled_state_check(
    scenario: Scenario | None = None, *, gate: ComplexMatrix | None = None
) -> float:
    """|<target|result>| for CNOT on (|0> + |1>)|cat>/sqrt 2, target (|0,cat> + |1,~cat>)/sqrt 2.

    The CP inside the CNOT is ``gate`` when given, the scenario's truth table
    when a scenario is given, and the ideal CP otherwise.
    """
    if gate is None:
        gate = logical_gates()[0] if scenario is None else scenario_truth_table(scenario).matrix
    gate = np.asarray(gate, dtype=np.complex128)
    if gate.shape != (4, 4):
        raise ParameterError(f"logical gate must be 4x4, got {gate.shape}")
    h_target = np.kron(np.eye(2), HADAMARD)
    circuit = h_target @ gate @ h_target
    initial = np.array([1.0, 0.0, 1.0, 0.0], dtype=np.complex128) / math.sqrt(2.0)
    target = np.array([1.0, 0.0, 0.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)
    return float(abs(np.vdot(target, circuit @ initial)))


def convergence_probe(
    scenario: Scenario, threshold: float = CONVERGENCE_THRESHOLD
) -> ConvergenceReport:
    """Re-run with dt/2 and with truncations (N1 + 2, N2 + 4) and compare fidelities."""
    space = scenario.space
    amplitude = scenario.params.cat_amplitude
    tail = max(
        cat_tail_mass(CatSpec(amplitude, parity, space.n2_trunc))
        for parity in ((Parity.EVEN, Parity.ODD) if amplitude > 0 else (Parity.EVEN,))
    )
    if tail > TAIL_TOLERANCE:
        failure = f"truncation: N2 = {space.n2_trunc} drops {tail:.3e} of the cat norm"
        logger.info("convergence check failed: %s", failure)
        return ConvergenceReport(math.nan, math.nan, math.nan, tail, threshold, (failure,))

    failures: list[str] = []
    base = fidelity_average(scenario).mean_fidelity
    if scenario.mode is GateMode.CLOSED_FORM:
        dt_fidelity = base
        pinned = scenario
    else:
        dt = step_size(scenario)
        pinned = scenario.with_propagation(dt=dt)
        dt_fidelity = fidelity_average(scenario.with_propagation(dt=0.5 * dt)).mean_fidelity
    try:
        enlarged = pinned.with_space(space.enlarged(2, 4))
        truncation_fidelity = fidelity_average(enlarged).mean_fidelity
    except TruncationError as exc:
        truncation_fidelity = math.nan
        failures.append(f"truncation: {exc}")

    report = ConvergenceReport(base, dt_fidelity, truncation_fidelity, tail, threshold)
    if not report.dt_delta < threshold:
        failures.append(f"time step: fidelity moved by {report.dt_delta:.3e} when dt was halved")
    if not report.truncation_delta < threshold and not math.isnan(truncation_fidelity):
        failures.append(
            f"truncation: fidelity moved by {report.truncation_delta:.3e} at (N1+2, N2+4)"
        )
    report = ConvergenceReport(
        base, dt_fidelity, truncation_fidelity, tail, threshold, tuple(failures)
    )
    logger.info(
        "convergence check %s: dt delta %.3e, truncation delta %.3e",
        "passed" if report.passed else "failed",
        report.dt_delta,
        report.truncation_delta,
    )
    return report
