"""Gate scenarios and the simulation pipeline shared by analysis, convergence checks and sweeps.

A :class:`Scenario` fixes everything a gate run needs: parameters, design
index k, which Hamiltonian (or the closed-form unitary), the decoherence
channels, integration settings and how the result is compared with the ideal
gate. The functions below turn a scenario into evolved states.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from catgate.dynamics import (
    ChannelSet,
    PropagationConfig,
    Trajectory,
    evolve_lindblad,
    evolve_unitary,
    observe,
    step_plan,
)
from catgate.errors import ParameterError
from catgate.hamiltonians import (
    CouplingEnvelope,
    FrameCorrection,
    HamiltonianModel,
    PhaseProfile,
    TimeDependentHamiltonian,
    build_h_eff_stage2,
    build_model_hamiltonian,
    closed_form_gate_unitary,
    diagonal_levels,
    dressed_levels,
    frame_correction,
)
from catgate.hilbert import QUTRIT_DIM, SpaceSpec
from catgate.models import DEFAULT_K, DecoherenceParams, DerivedQuantities, SystemParams, derive
from catgate.numkernel import ComplexMatrix
from catgate.states import (
    DensityMatrix,
    LogicalAngles,
    density_from_pure,
    logical_basis,
    logical_input,
)
from catgate.workers import map_ordered

logger = logging.getLogger(__name__)

# Mean of sin^8 across one ramp: chi scales with the fourth power of the couplings.
RAMP_CROSS_KERR_MEAN = 35.0 / 128.0


class GateMode(Enum):
    """How the gate is evolved."""

    CLOSED_FORM = "closed-form"
    CLOSED = "closed"
    OPEN = "open"


class FidelityKind(Enum):
    """``sqrt``: square root of the overlap (published convention). ``squared``: the overlap."""

    SQRT = "sqrt"
    SQUARED = "squared"


class FidelityStrategy(Enum):
    """Open-system averaging: one run per grid point, or 16 runs assembled by linearity."""

    PER_POINT = "per-point"
    LOGICAL_BASIS = "logical-basis"


class GateTime(Enum):
    """Gate duration from the design formula pi/chi or from the accumulated dressed phase."""

    DESIGN = "design"
    DRESSED = "dressed"


@dataclass(slots=True, frozen=True)
class Scenario:
    """A fully specified gate simulation.

    ``ramp`` is the sin^2 switching time of the bare couplings in ns; it only acts
    on the full and interaction models. The defaults here describe a sharp switch
    with no correction; the shipped config turns on the ramp and the dressed
    correction.
    """

    params: SystemParams
    k: int = DEFAULT_K
    mode: GateMode = GateMode.OPEN
    model: HamiltonianModel = HamiltonianModel.FULL
    decoherence: DecoherenceParams = field(default_factory=DecoherenceParams)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    quadrature_n: int = 8
    fidelity_kind: FidelityKind = FidelityKind.SQRT
    strategy: FidelityStrategy = FidelityStrategy.PER_POINT
    frame_correction: FrameCorrection = FrameCorrection.NONE
    gate_time: GateTime = GateTime.DESIGN
    ramp: float = 0.0
    max_leakage: float = 0.05
    workers: int = 1

    def __post_init__(self) -> None:
        for name, kind in (
            ("mode", GateMode),
            ("model", HamiltonianModel),
            ("fidelity_kind", FidelityKind),
            ("strategy", FidelityStrategy),
            ("frame_correction", FrameCorrection),
            ("gate_time", GateTime),
        ):
            try:
                object.__setattr__(self, name, kind(getattr(self, name)))
            except ValueError as exc:
                raise ParameterError(f"unknown {name}: {getattr(self, name)!r}") from exc
        if self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k}")
        if self.quadrature_n < 2:
            raise ParameterError(f"quadrature_n must be >= 2, got {self.quadrature_n}")
        if not 0 < self.max_leakage <= 1:
            raise ParameterError(f"max_leakage must lie in (0, 1], got {self.max_leakage}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        if self.ramp < 0:
            raise ParameterError(f"ramp must be >= 0 ns, got {self.ramp}")

    @property
    def space(self) -> SpaceSpec:
        return self.params.space

    @property
    def is_open(self) -> bool:
        return self.mode is GateMode.OPEN

    @property
    def uses_couplings(self) -> bool:
        """True when the run integrates the bare couplings."""
        return self.mode is not GateMode.CLOSED_FORM and self.model.has_couplings

    @property
    def coupling_ramp(self) -> float:
        """Ramp time actually applied, in ns."""
        return self.ramp if self.uses_couplings else 0.0

    def derived(self) -> DerivedQuantities:
        return derive(self.params, self.k)

    def duration(self) -> float:
        """Gate time in ns."""
        if self.propagation.t_final is not None:
            return self.propagation.t_final
        if self.gate_time is GateTime.DRESSED:
            return gate_profile(self).conditional_gate_time()
        return self.derived().t_gate + 2 * self.coupling_ramp * (1 - RAMP_CROSS_KERR_MEAN)

    def with_space(self, space: SpaceSpec) -> "Scenario":
        return replace(self, params=self.params.with_space(space))

    def with_propagation(self, **changes: object) -> "Scenario":
        return replace(self, propagation=replace(self.propagation, **changes))

    def with_decoherence(self, decoherence: DecoherenceParams) -> "Scenario":
        return replace(self, decoherence=decoherence)


def build_hamiltonian(scenario: Scenario) -> TimeDependentHamiltonian:
    hamiltonian = build_model_hamiltonian(
        scenario.model, scenario.params, scenario.space, scenario.derived()
    )
    if scenario.coupling_ramp > 0:
        envelope = CouplingEnvelope(scenario.coupling_ramp, scenario.duration())
        return hamiltonian.with_envelope(envelope)
    return hamiltonian


def build_channels(scenario: Scenario) -> ChannelSet:
    """Channels of an open run; empty for closed modes."""
    if not scenario.is_open:
        return ChannelSet(scenario.space)
    return ChannelSet.from_decoherence(scenario.decoherence, scenario.space)


def gate_profile(scenario: Scenario) -> PhaseProfile:
    """Dressed phases of every |g,n1,n2> under the chosen model.

    Coupling models follow the exact eigenvalues along the ramp; the effective
    models read the stage-2 diagonal.
    """
    if scenario.uses_couplings:

        def levels_at(scale: float) -> np.ndarray:
            return dressed_levels(
                scenario.params,
                scenario.space,
                include_unwanted=scenario.model is HamiltonianModel.FULL,
                scale=scale,
            )

        profile = PhaseProfile.ramped(levels_at, scenario.coupling_ramp)
    else:
        stage2 = build_h_eff_stage2(scenario.params, scenario.space, scenario.derived())
        profile = PhaseProfile.constant(diagonal_levels(stage2, scenario.space))
    shifts = profile.shifts
    logger.debug(
        "gate phase rates (rad/ns): mode1=%.6g mode2=%.6g cross=%.6g",
        shifts.mode1,
        shifts.mode2,
        shifts.cross,
    )
    return profile


def correction_phases(scenario: Scenario, t: float) -> np.ndarray | None:
    """Diagonal of the frame correction after a gate of t ns, or None when disabled."""
    if scenario.frame_correction is FrameCorrection.NONE:
        return None
    correction = frame_correction(
        gate_profile(scenario).at(t), scenario.space, scenario.frame_correction
    )
    return np.diag(correction).copy()


def step_size(scenario: Scenario) -> float:
    """The RK4 step a run of this scenario uses, in ns."""
    _, dt = step_plan(
        build_hamiltonian(scenario),
        scenario.propagation,
        scenario.duration(),
        build_channels(scenario),
    )
    return dt


def evolve_logical_kets(scenario: Scenario) -> ComplexMatrix:
    """Final states of the four logical inputs as the columns of a (dim, 4) matrix.

    Only for closed modes; open runs go through :func:`simulate` and :func:`logical_response`.
    """
    if scenario.is_open:
        raise ParameterError("open-system scenarios evolve density matrices, not kets")
    space = scenario.space
    basis = logical_basis(scenario.params.cat_amplitude, space)
    t = scenario.duration()
    if scenario.mode is GateMode.CLOSED_FORM:
        unitary = closed_form_gate_unitary(scenario.derived(), space, t)
        finals = np.kron(np.eye(QUTRIT_DIM), unitary) @ basis
    else:
        finals = evolve_unitary(build_hamiltonian(scenario), basis, scenario.propagation, t).final
    phases = correction_phases(scenario, t)
    return finals if phases is None else phases[:, None] * finals


def simulate(scenario: Scenario, angles: LogicalAngles) -> Trajectory:
    """One gate run from the logical input at ``angles``, with samples recorded.

    The final entry is a density matrix for open runs and a ket otherwise.
    """
    space = scenario.space
    psi0 = logical_input(angles, scenario.params.cat_amplitude, space)
    t = scenario.duration()
    match scenario.mode:
        case GateMode.OPEN:
            trajectory = evolve_lindblad(
                build_hamiltonian(scenario),
                density_from_pure(psi0),
                build_channels(scenario),
                scenario.propagation,
                t,
            )
            phases = correction_phases(scenario, t)
            if phases is not None:
                trajectory.final = trajectory.final * np.outer(phases, phases.conj())
        case GateMode.CLOSED:
            trajectory = evolve_unitary(
                build_hamiltonian(scenario), psi0, scenario.propagation, t, space
            )
            phases = correction_phases(scenario, t)
            if phases is not None:
                trajectory.final = phases * trajectory.final
        case GateMode.CLOSED_FORM:
            unitary = np.kron(
                np.eye(QUTRIT_DIM), closed_form_gate_unitary(scenario.derived(), space, t)
            )
            phases = correction_phases(scenario, t)
            final = unitary @ psi0 if phases is None else phases * (unitary @ psi0)
            trajectory = Trajectory(final=final, steps=1, dt=t)
            for time_ns, state in ((0.0, psi0), (t, final)):
                trajectory.times.append(time_ns)
                trajectory.states.append(state)
                trajectory.samples.append(observe(np.outer(state, state.conj()), space, time_ns))
    return trajectory


def final_density(scenario: Scenario, angles: LogicalAngles) -> tuple[DensityMatrix, float]:
    """Density matrix after the gate and the trace drift of the run."""
    trajectory = simulate(scenario, angles)
    final = trajectory.final
    if final.ndim == 1:
        return np.outer(final, final.conj()), trajectory.trace_drift
    return final, trajectory.trace_drift


def _spanning_inputs(basis: ComplexMatrix) -> list[tuple[tuple[int, int, str], ComplexMatrix]]:
    """Pure inputs whose channel images span every logical coherence."""
    inputs = [((i, i, "diag"), basis[:, i]) for i in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            inputs.append(((i, j, "plus"), (basis[:, i] + basis[:, j]) / math.sqrt(2.0)))
            inputs.append(((i, j, "plus_i"), (basis[:, i] + 1j * basis[:, j]) / math.sqrt(2.0)))
    return inputs


def logical_response(scenario: Scenario) -> tuple[np.ndarray, float]:
    """Tensor R[k, l, i, j] = <L_k| E(|L_i><L_j|) |L_l> and the largest trace drift.

    Closed modes read it off the evolved kets. Open runs propagate 16 pure
    input states and combine them:
    E(|i><j|) = E(P+) + i E(P+i) - (1 + i)/2 (E(|i><i|) + E(|j><j|)).
    """
    space = scenario.space
    basis = logical_basis(scenario.params.cat_amplitude, space)
    if not scenario.is_open:
        amplitudes = basis.conj().T @ evolve_logical_kets(scenario)
        return np.einsum("ki,lj->klij", amplitudes, amplitudes.conj()), 0.0

    hamiltonian = build_hamiltonian(scenario)
    channels = build_channels(scenario)
    t = scenario.duration()
    phases = correction_phases(scenario, t)
    inputs = _spanning_inputs(basis)

    def run(state: ComplexMatrix) -> tuple[ComplexMatrix, float]:
        trajectory = evolve_lindblad(
            hamiltonian,
            density_from_pure(state),
            channels,
            scenario.propagation,
            t,
            record_space=False,
        )
        rho = trajectory.final
        if phases is not None:
            rho = rho * np.outer(phases, phases.conj())
        return basis.conj().T @ rho @ basis, trajectory.trace_drift

    logger.info("propagating %d logical input states", len(inputs))
    results = map_ordered(run, [state for _, state in inputs], scenario.workers)
    images = {key: block for (key, _), (block, _) in zip(inputs, results, strict=True)}
    drift = max(d for _, d in results)

    response = np.zeros((4, 4, 4, 4), dtype=np.complex128)
    for i in range(4):
        response[:, :, i, i] = images[(i, i, "diag")]
    for i in range(4):
        for j in range(i + 1, 4):
            coherence = (
                images[(i, j, "plus")]
                + 1j * images[(i, j, "plus_i")]
                - 0.5 * (1 + 1j) * (images[(i, i, "diag")] + images[(j, j, "diag")])
            )
            response[:, :, i, j] = coherence
            response[:, :, j, i] = coherence.conj().T
    return response, drift
