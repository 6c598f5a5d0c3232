"""Fixed-step RK4 propagation of state vectors and of the Lindblad master equation."""

import csv
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from catgate.errors import NormalizationError, ParameterError, PositivityError, StepSizeError
from catgate.hamiltonians import TimeDependentHamiltonian
from catgate.hilbert import QutritOp, SpaceSpec, embed, mode_annihilation, qutrit_matrix
from catgate.models import DecoherenceParams
from catgate.numkernel import ComplexMatrix, min_eigenvalue_hermitian
from catgate.states import DensityMatrix, StateVector, purity

logger = logging.getLogger(__name__)

MAX_PHASE_PER_STEP = 0.3
DEFAULT_PHASE_STEP = 0.05
DEFAULT_MAX_DT = 1.0  # ns
NORM_TOLERANCE = 1e-8
TOP_FOCK_WARNING = 1e-8
PER_US_TO_PER_NS = 1e-3

TRAJECTORY_COLUMNS = (
    "t_ns",
    "trace",
    "purity",
    "p_e",
    "p_f",
    "n1_mean",
    "n2_mean",
    "top_fock_population",
)


@dataclass(slots=True, frozen=True)
class PropagationConfig:
    """Integration settings; times in ns.

    ``dt=None`` picks the step so the fastest rate advances ``max_phase_step``
    radians per step. ``t_final=None`` leaves the duration to the caller
    (the gate time in a scenario).
    """

    t_final: float | None = None
    dt: float | None = None
    max_phase_step: float = DEFAULT_PHASE_STEP
    record_stride: int = 0
    renormalize: bool = False
    positivity_check_stride: int = 1000
    positivity_tolerance: float = 1e-6
    trace_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.dt is not None and self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.t_final is not None and self.t_final < 0:
            raise ParameterError(f"t_final must be >= 0, got {self.t_final}")
        if not 0 < self.max_phase_step <= MAX_PHASE_PER_STEP:
            raise ParameterError(
                f"max_phase_step must lie in (0, {MAX_PHASE_PER_STEP}], got {self.max_phase_step}"
            )
        if self.record_stride < 0 or self.positivity_check_stride < 1:
            raise ParameterError("record_stride must be >= 0 and positivity_check_stride >= 1")


@dataclass(slots=True, frozen=True)
class Channel:
    """Collapse operator sqrt(rate) * local, acting on one tensor slot; rate in 1/ns."""

    label: str
    rate: float
    slot: int
    local: ComplexMatrix


@dataclass(slots=True, frozen=True)
class ChannelSet:
    """Decay and dephasing channels of the master equation on one space."""

    space: SpaceSpec
    channels: tuple[Channel, ...] = ()
    _decay: ComplexMatrix = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        decay = np.zeros((self.space.dim, self.space.dim), dtype=np.complex128)
        for channel in self.channels:
            if channel.rate < 0:
                raise ParameterError(f"rate of {channel.label} must be >= 0")
            local = channel.local.conj().T @ channel.local
            decay += channel.rate * embed(self.space, channel.slot, local)
        object.__setattr__(self, "_decay", decay)

    @classmethod
    def from_decoherence(cls, decoherence: DecoherenceParams, space: SpaceSpec) -> "ChannelSet":
        """Cavity decay, qutrit relaxation and dephasing; rates converted from 1/us to 1/ns."""
        a1 = mode_annihilation(space.n1_trunc)
        a2 = mode_annihilation(space.n2_trunc)
        specs = (
            ("kappa1", decoherence.kappa1, 1, a1),
            ("kappa2", decoherence.kappa2, 2, a2),
            ("gamma_eg", decoherence.gamma_eg, 0, qutrit_matrix(QutritOp.SIGMA_EG_MINUS)),
            ("gamma_fe", decoherence.gamma_fe, 0, qutrit_matrix(QutritOp.SIGMA_FE_MINUS)),
            ("gamma_fg", decoherence.gamma_fg, 0, qutrit_matrix(QutritOp.SIGMA_FG_MINUS)),
            ("gamma_phi_e", decoherence.gamma_phi_e, 0, qutrit_matrix(QutritOp.PROJ_E)),
            ("gamma_phi_f", decoherence.gamma_phi_f, 0, qutrit_matrix(QutritOp.PROJ_F)),
        )
        return cls(
            space=space,
            channels=tuple(
                Channel(label, rate * PER_US_TO_PER_NS, slot, local)
                for label, rate, slot, local in specs
                if rate > 0
            ),
        )

    @property
    def decay_operator(self) -> ComplexMatrix:
        """Sum of rate * c^dagger c."""
        return self._decay

    @property
    def total_rate(self) -> float:
        return sum(channel.rate for channel in self.channels)

    def jumps(self, rho: DensityMatrix) -> DensityMatrix:
        """Sum of rate * c rho c^dagger, applied slot-wise on the reshaped density matrix."""
        dims = self.space.shape
        tensor = rho.reshape(dims + dims)
        out = np.zeros_like(tensor)
        for channel in self.channels:
            s = channel.slot
            x = np.moveaxis(np.tensordot(channel.local, tensor, axes=([1], [s])), 0, s)
            x = np.moveaxis(np.tensordot(x, channel.local.conj(), axes=([3 + s], [1])), -1, 3 + s)
            out += channel.rate * x
        return out.reshape(rho.shape)


@dataclass(slots=True)
class Sample:
    """Observables recorded along a trajectory."""

    t_ns: float
    trace: float
    purity: float
    p_e: float
    p_f: float
    n1_mean: float
    n2_mean: float
    top_fock_population: float

    def as_row(self) -> list[str]:
        return [repr(getattr(self, name)) for name in TRAJECTORY_COLUMNS]


@dataclass(slots=True)
class Trajectory:
    """Result of a propagation."""

    final: ComplexMatrix
    steps: int
    dt: float
    times: list[float] = field(default_factory=list)
    states: list[ComplexMatrix] = field(default_factory=list)
    samples: list[Sample] = field(default_factory=list)
    trace_drift: float = 0.0
    min_eigenvalue: float = math.inf


def rates_from_T(T: float) -> DecoherenceParams:
    """Qutrit rates in 1/us for the scale T in us: 1/(5T), 1/(2T), 1/T, 1/T, 1/T."""
    if T <= 0:
        raise ParameterError(f"T must be positive, got {T}")
    if math.isinf(T):
        return DecoherenceParams()
    return DecoherenceParams(
        gamma_eg=1.0 / (5.0 * T),
        gamma_fe=1.0 / (2.0 * T),
        gamma_fg=1.0 / T,
        gamma_phi_e=1.0 / T,
        gamma_phi_f=1.0 / T,
    )


def step_plan(
    hamiltonian: TimeDependentHamiltonian,
    cfg: PropagationConfig,
    t_final: float,
    channels: ChannelSet | None = None,
) -> tuple[int, float]:
    """Number of steps and the step landing exactly on ``t_final``.

    Raises StepSizeError when the step advances an oscillating term by more than
    0.3 rad.
    """
    phase_rate = hamiltonian.max_phase_rate
    if cfg.dt is None:
        static_scale = float(np.max(np.sum(np.abs(hamiltonian.at(0.0)), axis=1), initial=0.0))
        scale = max(phase_rate, static_scale, channels.total_rate if channels else 0.0)
        dt = min(DEFAULT_MAX_DT, cfg.max_phase_step / scale) if scale > 0 else DEFAULT_MAX_DT
    else:
        dt = cfg.dt
    if dt * phase_rate > MAX_PHASE_PER_STEP * (1 + 1e-12):
        raise StepSizeError(
            f"dt = {dt:.4g} ns advances a {phase_rate:.4g} rad/ns term by "
            f"{dt * phase_rate:.3f} rad per step (limit {MAX_PHASE_PER_STEP})"
        )
    if t_final == 0:
        return 0, dt
    steps = max(1, math.ceil(t_final / dt - 1e-9))
    return steps, t_final / steps


def _rk4(
    rhs: Callable[[float, ComplexMatrix], ComplexMatrix],
    t: float,
    y: ComplexMatrix,
    dt: float,
) -> ComplexMatrix:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _duration(cfg: PropagationConfig, t_final: float | None) -> float:
    duration = cfg.t_final if t_final is None else t_final
    if duration is None:
        raise ParameterError("propagation needs a final time")
    if duration < 0:
        raise ParameterError(f"final time must be >= 0, got {duration}")
    return duration


def observe(rho: DensityMatrix, space: SpaceSpec, t: float) -> Sample:
    """Trace, purity, excited-level populations, photon numbers and top-Fock weight."""
    populations = np.real(np.diag(rho)).reshape(space.shape)
    n1 = np.arange(space.n1_trunc)
    n2 = np.arange(space.n2_trunc)
    top = populations[:, -1, :].sum() + populations[:, :, -1].sum() - populations[:, -1, -1].sum()
    return Sample(
        t_ns=t,
        trace=float(populations.sum()),
        purity=purity(rho),
        p_e=float(populations[1].sum()),
        p_f=float(populations[2].sum()),
        n1_mean=float(np.einsum("qij,i->", populations, n1)),
        n2_mean=float(np.einsum("qij,j->", populations, n2)),
        top_fock_population=float(top),
    )


def _record(
    trajectory: Trajectory, t: float, y: ComplexMatrix, space: SpaceSpec | None, pure: bool
) -> None:
    trajectory.times.append(t)
    trajectory.states.append(y.copy())
    if space is not None and (not pure or y.ndim == 1):
        rho = np.outer(y, y.conj()) if pure else y
        trajectory.samples.append(observe(rho, space, t))


def _warn_top_fock(trajectory: Trajectory) -> None:
    worst = max((sample.top_fock_population for sample in trajectory.samples), default=0.0)
    if worst > TOP_FOCK_WARNING:
        logger.warning("top Fock level reached population %.3e; truncation may be short", worst)


def evolve_unitary(
    hamiltonian: TimeDependentHamiltonian,
    psi0: StateVector,
    cfg: PropagationConfig,
    t_final: float | None = None,
    space: SpaceSpec | None = None,
) -> Trajectory:
    """RK4 on d psi/dt = -i H(t) psi for one state or a (dim, m) batch of states."""
    psi = np.array(psi0, dtype=np.complex128)
    norms = np.linalg.norm(psi, axis=0)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        raise NormalizationError(f"initial state norms {norms} are not 1")
    duration = _duration(cfg, t_final)
    steps, dt = step_plan(hamiltonian, cfg, duration)
    logger.debug("unitary propagation: %d steps of %.4g ns", steps, dt)

    def rhs(t: float, y: ComplexMatrix) -> ComplexMatrix:
        return -1j * hamiltonian.apply(t, y)

    trajectory = Trajectory(final=psi, steps=steps, dt=dt)
    stride = cfg.record_stride
    _record(trajectory, 0.0, psi, space, pure=True)
    for step in range(steps):
        t = step * dt
        psi = _rk4(rhs, t, psi, dt)
        if cfg.renormalize:
            psi = psi / np.linalg.norm(psi, axis=0)
        if stride and (step + 1) % stride == 0 and step + 1 < steps:
            _record(trajectory, (step + 1) * dt, psi, space, pure=True)
    if steps:
        _record(trajectory, steps * dt, psi, space, pure=True)
    trajectory.final = psi
    trajectory.trace_drift = float(np.max(np.abs(np.linalg.norm(psi, axis=0) ** 2 - 1.0)))
    _warn_top_fock(trajectory)
    return trajectory


def evolve_lindblad(
    hamiltonian: TimeDependentHamiltonian,
    rho0: DensityMatrix,
    channels: ChannelSet,
    cfg: PropagationConfig,
    t_final: float | None = None,
    record_space: bool = True,
) -> Trajectory:
    """RK4 on the master equation with Hermitian symmetrization after every step.

    Uses d rho/dt = A + A^dagger + J(rho) with A = -i (H - i Gamma/2) rho, which
    equals the commutator plus anticommutator form for Hermitian rho.
    """
    rho = np.array(rho0, dtype=np.complex128)
    if rho.shape != (channels.space.dim, channels.space.dim):
        raise ParameterError(f"density matrix shape {rho.shape} does not fit the channel space")
    duration = _duration(cfg, t_final)
    steps, dt = step_plan(hamiltonian, cfg, duration, channels)
    space = channels.space if record_space else None
    half_decay = 0.5j * channels.decay_operator
    initial_trace = float(np.real(np.trace(rho)))
    logger.debug(
        "master equation: %d steps of %.4g ns, %d channels", steps, dt, len(channels.channels)
    )

    def generator(h: ComplexMatrix, y: DensityMatrix) -> DensityMatrix:
        a = -1j * ((h - half_decay) @ y)
        return a + a.conj().T + channels.jumps(y)

    trajectory = Trajectory(final=rho, steps=steps, dt=dt)
    _record(trajectory, 0.0, rho, space, pure=False)
    stride = cfg.record_stride
    h_now = hamiltonian.at(0.0)
    drift = 0.0
    min_eig = math.inf
    for step in range(steps):
        t = step * dt
        h_mid = hamiltonian.at(t + 0.5 * dt)
        h_next = hamiltonian.at(t + dt)
        k1 = generator(h_now, rho)
        k2 = generator(h_mid, rho + 0.5 * dt * k1)
        k3 = generator(h_mid, rho + 0.5 * dt * k2)
        k4 = generator(h_next, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        h_now = h_next
        current = float(np.real(np.trace(rho)))
        drift = max(drift, abs(current - initial_trace))
        if cfg.renormalize:
            rho = rho * (initial_trace / current)
        done = step + 1
        if done % cfg.positivity_check_stride == 0 or done == steps:
            min_eig = min(min_eig, _check_positivity(rho, done * dt, cfg.positivity_tolerance))
        if stride and done % stride == 0 and done < steps:
            _record(trajectory, done * dt, rho, space, pure=False)
    if steps:
        _record(trajectory, steps * dt, rho, space, pure=False)
    if drift > cfg.trace_tolerance:
        logger.warning("trace drifted by %.3e over %d steps", drift, steps)
    trajectory.final = rho
    trajectory.trace_drift = drift
    trajectory.min_eigenvalue = min_eig
    _warn_top_fock(trajectory)
    return trajectory


def _check_positivity(rho: DensityMatrix, t: float, tolerance: float) -> float:
    value = min_eigenvalue_hermitian(rho)
    logger.debug("positivity check at t=%.4g ns: min eigenvalue %.3e", t, value)
    if value < -tolerance:
        raise PositivityError(
            f"density matrix lost positivity at t = {t:.4g} ns: min eigenvalue {value:.3e}"
        )
    return value


def dump_trajectory_csv(trajectory: Trajectory, path: Path | str) -> Path:
    """Write recorded samples as CSV (UTF-8, LF line endings, header row)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for sample in trajectory.samples:
            writer.writerow(sample.as_row())
    return target
