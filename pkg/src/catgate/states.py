"""State preparation: Fock, coherent and cat states, logical inputs and ideal outputs."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt
from scipy.special import gammaln

from catgate.errors import NormalizationError, ParameterError, TruncationError
from catgate.hilbert import QutritLevel, SpaceSpec
from catgate.numkernel import ComplexMatrix

StateVector = npt.NDArray[np.complex128]
DensityMatrix = ComplexMatrix

TAIL_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-8
TWO_PI = 2.0 * math.pi

# Logical basis order: index = 2 * control + target.
LOGICAL_LABELS = ("|0,cat>", "|0,~cat>", "|1,cat>", "|1,~cat>")


class Parity(Enum):
    """Cat-state parity: even is |cat>, odd is |~cat>."""

    EVEN = "even"
    ODD = "odd"

    @property
    def offset(self) -> int:
        return 0 if self is Parity.EVEN else 1


@dataclass(slots=True, frozen=True)
class CatSpec:
    """Cat state M(|alpha> +/- |-alpha>) with real amplitude alpha."""

    amplitude: float
    parity: Parity = Parity.EVEN
    trunc: int = 12

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ParameterError(f"cat amplitude must be >= 0, got {self.amplitude}")
        if self.parity is Parity.ODD and self.amplitude == 0:
            raise ParameterError("odd cat state is undefined for amplitude 0")
        if self.trunc < 1:
            raise ParameterError(f"Fock truncation must be positive, got {self.trunc}")


@dataclass(slots=True, frozen=True)
class LogicalAngles:
    """Superposition angles of the two-qubit input state, in radians."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        for name in ("theta", "phi"):
            value = getattr(self, name)
            if not 0.0 <= value < TWO_PI:
                raise ParameterError(f"{name} must lie in [0, 2*pi), got {value}")


def fock_state(n: int, trunc: int) -> StateVector:
    """Fock state |n> in a basis truncated at ``trunc`` levels."""
    if not 0 <= n < trunc:
        raise TruncationError(f"Fock state |{n}> does not fit truncation {trunc}")
    state = np.zeros(trunc, dtype=np.complex128)
    state[n] = 1.0
    return state


def _log_poisson_weights(amplitude: float, n: npt.NDArray[np.int64]) -> npt.NDArray[np.float64]:
    """log of e^{-|a|^2} |a|^{2n} / n!."""
    return -(amplitude**2) + 2.0 * n * math.log(amplitude) - gammaln(n + 1)


def coherent_state(alpha: complex, trunc: int) -> StateVector:
    """Truncated coherent state e^{-|a|^2/2} sum a^n / sqrt(n!) |n> (not renormalized)."""
    n = np.arange(trunc)
    modulus = abs(alpha)
    if modulus == 0:
        return fock_state(0, trunc)
    log_mod = 0.5 * _log_poisson_weights(modulus, n)
    phase = np.exp(1j * np.angle(alpha) * n)
    return (np.exp(log_mod) * phase).astype(np.complex128)


def cat_tail_mass(spec: CatSpec) -> float:
    """Fraction of the untruncated cat norm that lies at Fock indices >= trunc."""
    if spec.amplitude == 0:
        return 0.0
    mass = spec.amplitude**2
    total = math.exp(-mass) * (math.cosh(mass) if spec.parity is Parity.EVEN else math.sinh(mass))
    start = spec.trunc + ((spec.trunc + spec.parity.offset) % 2)
    stop = start + 2 * (int(4 * mass) + 60)
    n = np.arange(start, stop, 2)
    tail = float(np.sum(np.exp(_log_poisson_weights(spec.amplitude, n))))
    return tail / total


def cat_state(spec: CatSpec, tail_tolerance: float = TAIL_TOLERANCE) -> StateVector:
    """Even or odd cat state on the truncated Fock basis, renormalized.

    Coefficients are real and positive for a positive amplitude and vanish
    exactly on Fock states of the wrong parity.
    """
    tail = cat_tail_mass(spec)
    if tail > tail_tolerance:
        raise TruncationError(
            f"truncation {spec.trunc} drops {tail:.3e} of the cat norm "
            f"(amplitude {spec.amplitude}, tolerance {tail_tolerance:.0e})"
        )
    coeffs = coherent_state(spec.amplitude, spec.trunc)
    coeffs[(np.arange(spec.trunc) + spec.parity.offset) % 2 == 1] = 0.0
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise TruncationError(f"truncation {spec.trunc} holds no {spec.parity.value} Fock state")
    return coeffs / norm


def logical_basis_cavities(cat_amp: float, n1_trunc: int, n2_trunc: int) -> ComplexMatrix:
    """Logical kets on cavity 1 x cavity 2 as the columns of an (N1*N2, 4) matrix."""
    cats = (
        cat_state(CatSpec(cat_amp, Parity.EVEN, n2_trunc)),
        cat_state(CatSpec(cat_amp, Parity.ODD, n2_trunc)),
    )
    columns = [
        np.kron(fock_state(control, n1_trunc), cats[target])
        for control in (0, 1)
        for target in (0, 1)
    ]
    return np.stack(columns, axis=1)


def logical_basis(cat_amp: float, space: SpaceSpec) -> ComplexMatrix:
    """Logical kets |g>|control>|cat/~cat> as the columns of a (dim, 4) matrix."""
    ground = np.zeros(space.qutrit_dim, dtype=np.complex128)
    ground[QutritLevel.G] = 1.0
    cavities = logical_basis_cavities(cat_amp, space.n1_trunc, space.n2_trunc)
    return np.kron(ground[:, None], cavities)


def logical_coefficients(angles: LogicalAngles, ideal: bool = False) -> StateVector:
    """Amplitudes of the input superposition, or of the ideal CP output when ``ideal``."""
    c_t, s_t = math.cos(angles.theta), math.sin(angles.theta)
    c_p, s_p = math.cos(angles.phi), math.sin(angles.phi)
    last = -s_t * s_p if ideal else s_t * s_p
    return np.array([c_t * c_p, c_t * s_p, s_t * c_p, last], dtype=np.complex128)


def logical_input(angles: LogicalAngles, cat_amp: float, space: SpaceSpec) -> StateVector:
    """Input state of the gate with the qutrit in |g>."""
    return logical_basis(cat_amp, space) @ logical_coefficients(angles)


def ideal_output(angles: LogicalAngles, cat_amp: float, space: SpaceSpec) -> StateVector:
    """Ideal CP output: the |1,~cat> component changes sign."""
    return logical_basis(cat_amp, space) @ logical_coefficients(angles, ideal=True)


def density_from_pure(psi: StateVector, tolerance: float = NORM_TOLERANCE) -> DensityMatrix:
    """Projector |psi><psi| of a normalized state."""
    vec = np.asarray(psi, dtype=np.complex128).reshape(-1)
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > tolerance:
        raise NormalizationError(f"state norm {norm:.12f} differs from 1 by more than {tolerance}")
    return np.outer(vec, vec.conj())


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2)."""
    return float(np.real(np.vdot(rho, rho)))
