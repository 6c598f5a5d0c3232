"""Interaction-picture, effective and lab-frame Hamiltonians plus the closed-form gate.

Every matrix here is in angular units (rad/ns). Time-dependent Hamiltonians are
kept as a static part plus terms ``operator * exp(i * phase_rate * t) + h.c.``
so that evaluation at a time is one weighted sum over a precomputed stack.
"""

import dataclasses
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt
import scipy.linalg

from catgate.errors import ParameterError
from catgate.hilbert import (
    QutritLevel,
    QutritOp,
    SpaceSpec,
    annihilation,
    basis_index,
    creation,
    decode_index,
    excitation_number,
    number,
    qutrit_op,
)
from catgate.models import DerivedQuantities, SystemParams, angular, derive
from catgate.numkernel import ComplexMatrix, is_hermitian

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

RAMP_NODES = 12


class HamiltonianModel(Enum):
    """Which member of the Hamiltonian hierarchy drives a simulation."""

    FULL = "full"
    INTERACTION = "interaction"
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    REDUCED = "reduced"

    @property
    def has_couplings(self) -> bool:
        """True for the models that carry the bare cavity-qutrit couplings."""
        return self in (HamiltonianModel.FULL, HamiltonianModel.INTERACTION)


class FrameCorrection(Enum):
    """Phase correction applied to the cavities after the gate.

    ``LINEAR`` removes the single-photon phase of each mode. ``DRESSED`` removes
    every accumulated |g,n1,n2> phase except the bilinear conditional part.
    """

    NONE = "none"
    LINEAR = "linear"
    DRESSED = "dressed"


@dataclass(slots=True, frozen=True)
class CouplingEnvelope:
    """sin^2 switch-on over ``rise`` ns, flat top, mirrored switch-off at ``duration``."""

    rise: float
    duration: float

    def __post_init__(self) -> None:
        if self.rise < 0:
            raise ParameterError(f"coupling ramp must be >= 0 ns, got {self.rise}")
        if self.duration < 2 * self.rise:
            raise ParameterError(
                f"a {self.duration:.4g} ns gate cannot hold two {self.rise:.4g} ns ramps"
            )

    def __call__(self, t: float) -> float:
        if self.rise == 0:
            return 1.0
        edge = min(t, self.duration - t)
        if edge >= self.rise:
            return 1.0
        if edge <= 0:
            return 0.0
        return math.sin(0.5 * math.pi * edge / self.rise) ** 2


def ramp_nodes(nodes: int = RAMP_NODES) -> tuple[FloatArray, FloatArray]:
    """Envelope values and weights (summing to 1) at Gauss-Legendre nodes of one ramp."""
    if nodes < 1:
        raise ParameterError(f"ramp quadrature needs >= 1 node, got {nodes}")
    x, w = np.polynomial.legendre.leggauss(nodes)
    return np.sin(0.25 * np.pi * (x + 1.0)) ** 2, 0.5 * w


@dataclass(slots=True, frozen=True)
class HamiltonianTerm:
    """One oscillating coupling: ``operator * exp(i * phase_rate * t)`` (+ h.c.)."""

    operator: ComplexMatrix
    phase_rate: float
    includes_hc: bool = True

    def at(self, t: float) -> ComplexMatrix:
        value = self.operator * np.exp(1j * self.phase_rate * t)
        return value + value.conj().T if self.includes_hc else value




@dataclass(slots=True, frozen=True)
class TimeDependentHamiltonian:
    """Static Hermitian part plus oscillating terms.

    An ``envelope`` scales every oscillating term, leaving the static part untouched.
    """

    static: ComplexMatrix
    terms: tuple[HamiltonianTerm, ...] = ()
    envelope: CouplingEnvelope | None = None
    _stack: ComplexMatrix = field(init=False, repr=False, compare=False)
    _rates: npt.NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        matrices = [np.asarray(self.static, dtype=np.complex128)]
        rates = [0.0]
        for term in self.terms:
            if term.operator.shape != matrices[0].shape:
                raise ParameterError(
                    f"term shape {term.operator.shape} does not match {matrices[0].shape}"
                )
            matrices.append(term.operator)
            rates.append(term.phase_rate)
            if term.includes_hc:
                matrices.append(term.operator.conj().T)
                rates.append(-term.phase_rate)
        object.__setattr__(self, "_stack", np.ascontiguousarray(np.stack(matrices)))
        object.__setattr__(self, "_rates", np.asarray(rates, dtype=float))

    @classmethod
    def constant(cls, matrix: npt.ArrayLike) -> "TimeDependentHamiltonian":
        return cls(static=np.asarray(matrix, dtype=np.complex128))

    @classmethod
    def zero(cls, dim: int) -> "TimeDependentHamiltonian":
        return cls(static=np.zeros((dim, dim), dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    @property
    def max_phase_rate(self) -> float:
        """Largest |phase rate| among the oscillating terms, in rad/ns."""
        return float(np.max(np.abs(self._rates)))

    @property
    def is_static(self) -> bool:
        return not self.terms

    def with_envelope(self, envelope: CouplingEnvelope | None) -> "TimeDependentHamiltonian":
        return dataclasses.replace(self, envelope=envelope)

    def _coefficients(self, t: float) -> npt.NDArray[np.complex128]:
        coefficients = np.exp(1j * self._rates * t)
        if self.envelope is not None:
            coefficients[1:] *= self.envelope(t)
        return coefficients

    def at(self, t: float) -> ComplexMatrix:
        """The Hermitian matrix H(t)."""
        return np.tensordot(self._coefficients(t), self._stack, axes=1)

    def apply(self, t: float, vectors: ComplexMatrix) -> ComplexMatrix:
        """H(t) @ vectors without assembling H(t)."""
        return np.tensordot(self._coefficients(t), self._stack @ vectors, axes=1)

    def is_hermitian_at(self, t: float, rtol: float = 1e-12) -> bool:
        return is_hermitian(self.at(t), rtol)

    def __add__(self, other: "TimeDependentHamiltonian") -> "TimeDependentHamiltonian":
        return TimeDependentHamiltonian(
            self.static + other.static, self.terms + other.terms, self.envelope
        )


def conditional_part(table: FloatArray) -> float:
    """E11 - E10 - E01 + E00 of a table indexed [n1, n2]."""
    return float(table[1, 1] - table[1, 0] - table[0, 1] + table[0, 0])


@dataclass(slots=True, frozen=True)
class DressedShifts:
    """Exact energy shifts of the logical Fock states in rad/ns.

    ``mode1`` and ``mode2`` are the single-photon shifts of |g,1,0> and
    |g,0,1>, ``cross`` the conditional part of the |g,1,1> shift.
    """

    mode1: float
    mode2: float
    cross: float

    @classmethod
    def from_levels(cls, e00: float, e10: float, e01: float, e11: float) -> "DressedShifts":
        return cls(mode1=e10 - e00, mode2=e01 - e00, cross=e11 - e10 - e01 + e00)

    @classmethod
    def from_table(cls, table: FloatArray) -> "DressedShifts":
        return cls.from_levels(
            float(table[0, 0]), float(table[1, 0]), float(table[0, 1]), float(table[1, 1])
        )

    @property
    def conditional_gate_time(self) -> float:
        """Time in ns at which the conditional phase reaches pi."""
        if self.cross == 0:
            raise ParameterError("no conditional phase: cross-Kerr shift vanishes")
        return float(np.pi / abs(self.cross))


@dataclass(slots=True, frozen=True)
class PhaseProfile:
    """Phases gathered by every |g,n1,n2> during a gate, indexed [n1, n2].

    ``plateau`` holds the level shifts at full coupling in rad/ns and ``ramps``
    the phase in rad gathered across both ``rise`` ns switching ramps.
    """

    plateau: FloatArray
    ramps: FloatArray
    rise: float = 0.0

    @classmethod
    def constant(cls, levels: FloatArray) -> "PhaseProfile":
        return cls(plateau=levels, ramps=np.zeros_like(levels))

    @classmethod
    def ramped(
        cls,
        levels_at: Callable[[float], FloatArray],
        rise: float,
        nodes: int = RAMP_NODES,
    ) -> "PhaseProfile":
        """Integrate ``levels_at(s)`` over the sin^2 envelope, assuming adiabatic following."""
        plateau = levels_at(1.0)
        if rise == 0:
            return cls.constant(plateau)
        scales, weights = ramp_nodes(nodes)
        ramps = np.zeros_like(plateau)
        for scale, weight in zip(scales, weights, strict=True):
            ramps += weight * levels_at(float(scale))
        return cls(plateau=plateau, ramps=2.0 * rise * ramps, rise=rise)

    @property
    def shifts(self) -> DressedShifts:
        return DressedShifts.from_table(self.plateau)

    def at(self, t: float) -> FloatArray:
        """Accumulated phase table after a gate of ``t`` ns."""
        if t < 2 * self.rise:
            raise ParameterError(f"gate time {t:.4g} ns is shorter than its two ramps")
        return self.ramps + (t - 2 * self.rise) * self.plateau

    def conditional_gate_time(self) -> float:
        """Gate time in ns at which the accumulated conditional phase reaches pi."""
        rate = conditional_part(self.plateau)
        if rate == 0:
            raise ParameterError("no conditional phase: cross-Kerr shift vanishes")
        remaining = np.pi - conditional_part(self.ramps) * np.sign(rate)
        if remaining < 0:
            raise ParameterError(
                f"two {self.rise:.4g} ns ramps alone exceed a conditional phase of pi"
            )
        return float(2 * self.rise + remaining / abs(rate))


def _space(params: SystemParams, space: SpaceSpec | None) -> SpaceSpec:
    return params.space if space is None else space


def build_h_interaction(
    params: SystemParams, space: SpaceSpec | None = None
) -> TimeDependentHamiltonian:
    """Wanted couplings: g1 a1^+ sigma_fg^- at -delta1 and g2 a2^+ sigma_fe^- at -delta2."""
    space = _space(params, space)
    sigma_fg = qutrit_op(space, QutritOp.SIGMA_FG_MINUS)
    sigma_fe = qutrit_op(space, QutritOp.SIGMA_FE_MINUS)
    return TimeDependentHamiltonian(
        static=np.zeros((space.dim, space.dim), dtype=np.complex128),
        terms=(
            HamiltonianTerm(
                angular(params.g1) * creation(space, 1) @ sigma_fg, -angular(params.delta1)
            ),
            HamiltonianTerm(
                angular(params.g2) * creation(space, 2) @ sigma_fe, -angular(params.delta2)
            ),
        ),
    )


def build_delta_h(params: SystemParams, space: SpaceSpec | None = None) -> TimeDependentHamiltonian:
    """Unwanted couplings: cavity 1 on f<->e at -delta1~, cavity 2 on f<->g at -delta2~."""
    space = _space(params, space)
    sigma_fg = qutrit_op(space, QutritOp.SIGMA_FG_MINUS)
    sigma_fe = qutrit_op(space, QutritOp.SIGMA_FE_MINUS)
    return TimeDependentHamiltonian(
        static=np.zeros((space.dim, space.dim), dtype=np.complex128),
        terms=(
            HamiltonianTerm(
                angular(params.g1_tilde) * creation(space, 1) @ sigma_fe,
                -angular(params.delta1_tilde),
            ),
            HamiltonianTerm(
                angular(params.g2_tilde) * creation(space, 2) @ sigma_fg,
                -angular(params.delta2_tilde),
            ),
        ),
    )


def build_h_full(params: SystemParams, space: SpaceSpec | None = None) -> TimeDependentHamiltonian:
    """H_I + delta H."""
    return build_h_interaction(params, space) + build_delta_h(params, space)


def _stark_diagonal(derived: DerivedQuantities, space: SpaceSpec) -> ComplexMatrix:
    l1, l2 = angular(derived.lambda1), angular(derived.lambda2)
    n1, n2 = number(space, 1), number(space, 2)
    proj_g = qutrit_op(space, QutritOp.PROJ_G)
    proj_e = qutrit_op(space, QutritOp.PROJ_E)
    proj_f = qutrit_op(space, QutritOp.PROJ_F)
    ident = np.eye(space.dim, dtype=np.complex128)
    return (
        -l1 * n1 @ proj_g
        - l2 * n2 @ proj_e
        + ((l1 + l2) * ident + l1 * n1 + l2 * n2) @ proj_f
    )


def _cross_kerr_diagonal(derived: DerivedQuantities, space: SpaceSpec) -> ComplexMatrix:
    chi = angular(derived.chi)
    n1, n2 = number(space, 1), number(space, 2)
    ident = np.eye(space.dim, dtype=np.complex128)
    return (
        -chi * n1 @ (ident + n2) @ qutrit_op(space, QutritOp.PROJ_G)
        + chi * (ident + n1) @ n2 @ qutrit_op(space, QutritOp.PROJ_E)
    )


def _derived_for(params: SystemParams, derived: DerivedQuantities | None) -> DerivedQuantities:
    return derive(params) if derived is None else derived


def build_h_eff_stage1(
    params: SystemParams,
    space: SpaceSpec | None = None,
    derived: DerivedQuantities | None = None,
) -> TimeDependentHamiltonian:
    """Stark shifts plus the cavity-assisted e<->g exchange oscillating at +Delta."""
    space = _space(params, space)
    derived = _derived_for(params, derived)
    exchange = (
        creation(space, 1)
        @ annihilation(space, 2)
        @ qutrit_op(space, QutritOp.SIGMA_EG_MINUS)
    )
    return TimeDependentHamiltonian(
        static=_stark_diagonal(derived, space),
        terms=(
            HamiltonianTerm(
                -angular(derived.lambda_exchange) * exchange, angular(derived.big_delta)
            ),
        ),
    )


def build_h_eff_stage2(
    params: SystemParams,
    space: SpaceSpec | None = None,
    derived: DerivedQuantities | None = None,
) -> ComplexMatrix:
    """Static diagonal Hamiltonian: Stark shifts plus cross-Kerr terms on |g> and |e>."""
    space = _space(params, space)
    derived = _derived_for(params, derived)
    return _stark_diagonal(derived, space) + _cross_kerr_diagonal(derived, space)


def build_h_eff_reduced(
    params: SystemParams,
    space: SpaceSpec | None = None,
    derived: DerivedQuantities | None = None,
) -> ComplexMatrix:
    """The |g> block of the stage-2 Hamiltonian: -lambda1 n1 - chi n1 (1 + n2)."""
    space = _space(params, space)
    derived = _derived_for(params, derived)
    proj_g = qutrit_op(space, QutritOp.PROJ_G)
    return proj_g @ build_h_eff_stage2(params, space, derived) @ proj_g


def effective_two_mode_hamiltonian(
    derived: DerivedQuantities, n1_trunc: int, n2_trunc: int
) -> ComplexMatrix:
    """-eta n1 - chi n1 n2 on cavity 1 x cavity 2."""
    n1 = np.repeat(np.arange(n1_trunc, dtype=float), n2_trunc)
    n2 = np.tile(np.arange(n2_trunc, dtype=float), n1_trunc)
    diagonal = -angular(derived.eta) * n1 - angular(derived.chi) * n1 * n2
    return np.diag(diagonal).astype(np.complex128)


def closed_form_gate_unitary(
    derived: DerivedQuantities, space: SpaceSpec, t: float
) -> ComplexMatrix:
    """exp(i eta n1 t) exp(i chi n1 n2 t) on cavity 1 x cavity 2, built diagonally."""
    if t < 0:
        raise ParameterError(f"evolution time must be >= 0, got {t}")
    n1 = np.repeat(np.arange(space.n1_trunc, dtype=float), space.n2_trunc)
    n2 = np.tile(np.arange(space.n2_trunc, dtype=float), space.n1_trunc)
    phase = (angular(derived.eta) * n1 + angular(derived.chi) * n1 * n2) * t
    return np.diag(np.exp(1j * phase))


def build_model_hamiltonian(
    model: HamiltonianModel,
    params: SystemParams,
    space: SpaceSpec | None = None,
    derived: DerivedQuantities | None = None,
) -> TimeDependentHamiltonian:
    """Any member of the hierarchy as a time-dependent Hamiltonian."""
    match HamiltonianModel(model):
        case HamiltonianModel.FULL:
            return build_h_full(params, space)
        case HamiltonianModel.INTERACTION:
            return build_h_interaction(params, space)
        case HamiltonianModel.STAGE1:
            return build_h_eff_stage1(params, space, derived)
        case HamiltonianModel.STAGE2:
            return TimeDependentHamiltonian.constant(build_h_eff_stage2(params, space, derived))
        case HamiltonianModel.REDUCED:
            return TimeDependentHamiltonian.constant(build_h_eff_reduced(params, space, derived))


def build_h_lab(
    params: SystemParams,
    space: SpaceSpec | None = None,
    include_unwanted: bool = True,
    scale: float = 1.0,
) -> ComplexMatrix:
    """Static Hamiltonian H0 + scale * V whose interaction picture w.r.t. H0 is H_I (+ delta H)."""
    space = _space(params, space)
    h0 = (
        angular(params.omega_c1) * number(space, 1)
        + angular(params.omega_c2) * number(space, 2)
        + angular(params.omega_eg) * qutrit_op(space, QutritOp.PROJ_E)
        + angular(params.omega_fg) * qutrit_op(space, QutritOp.PROJ_F)
    )
    builder = build_h_full if include_unwanted else build_h_interaction
    coupling = builder(params, space)
    return h0 + scale * coupling.at(0.0)


def dressed_levels(
    params: SystemParams,
    space: SpaceSpec | None = None,
    include_unwanted: bool = True,
    scale: float = 1.0,
) -> FloatArray:
    """Shift in rad/ns of every |g,n1,n2> under H0 + scale * V, indexed [n1, n2].

    The couplings conserve the excitation number, so each sector is diagonalized
    once and every bare |g> state is matched to the eigenvector it overlaps most.
    """
    space = _space(params, space)
    h_lab = build_h_lab(params, space, include_unwanted, scale)
    bare = np.real(np.diag(h_lab))
    sectors = np.rint(np.real(np.diag(excitation_number(space)))).astype(int)
    levels = np.zeros((space.n1_trunc, space.n2_trunc))
    for sector in np.unique(sectors):
        members = np.flatnonzero(sectors == sector)
        energies, vectors = scipy.linalg.eigh(h_lab[np.ix_(members, members)])
        for local, index in enumerate(members):
            level, n1, n2 = decode_index(space, int(index))
            if level != QutritLevel.G:
                continue
            best = int(np.argmax(np.abs(vectors[local, :])))
            levels[n1, n2] = energies[best] - bare[index]
    return levels


def dressed_shifts(
    params: SystemParams, space: SpaceSpec | None = None, include_unwanted: bool = True
) -> DressedShifts:
    """Shifts of |g,1,0>, |g,0,1> and |g,1,1> from exact diagonalization."""
    shifts = DressedShifts.from_table(dressed_levels(params, space, include_unwanted))
    logger.debug(
        "dressed shifts (rad/ns): mode1=%.6g mode2=%.6g cross=%.6g",
        shifts.mode1,
        shifts.mode2,
        shifts.cross,
    )
    return shifts


def diagonal_levels(hamiltonian: ComplexMatrix, space: SpaceSpec) -> FloatArray:
    """The |g,n1,n2> diagonal of a Hamiltonian, indexed [n1, n2]."""
    indices = [
        [basis_index(space, QutritLevel.G, n1, n2) for n2 in range(space.n2_trunc)]
        for n1 in range(space.n1_trunc)
    ]
    return np.real(np.diag(hamiltonian))[np.asarray(indices)]


def diagonal_shifts(hamiltonian: ComplexMatrix, space: SpaceSpec) -> DressedShifts:
    """Shifts of the logical Fock states read off a diagonal Hamiltonian."""
    return DressedShifts.from_table(diagonal_levels(hamiltonian, space))


def frame_correction(
    phases: FloatArray,
    space: SpaceSpec,
    kind: FrameCorrection = FrameCorrection.DRESSED,
) -> ComplexMatrix:
    """Diagonal cavity unitary exp(i r(n1, n2)) on every qutrit level.

    ``phases`` is the accumulated phase table of the |g,n1,n2> states. ``r`` is
    the part of it the correction removes: the single-photon phases for
    ``LINEAR``, everything but -n1 n2 times the conditional phase for ``DRESSED``.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (space.n1_trunc, space.n2_trunc):
        raise ParameterError(
            f"phase table shape {phases.shape} does not match "
            f"({space.n1_trunc}, {space.n2_trunc})"
        )
    n1 = np.arange(space.n1_trunc, dtype=float)[:, None]
    n2 = np.arange(space.n2_trunc, dtype=float)[None, :]
    relative = phases - phases[0, 0]
    match FrameCorrection(kind):
        case FrameCorrection.NONE:
            removed = np.zeros_like(relative)
        case FrameCorrection.LINEAR:
            removed = relative[1, 0] * n1 + relative[0, 1] * n2
        case FrameCorrection.DRESSED:
            removed = relative - conditional_part(relative) * n1 * n2
    cavity = np.exp(1j * removed).ravel()
    return np.diag(np.tile(cavity, space.qutrit_dim))
