"""Tensor-product space qutrit x cavity 1 x cavity 2 and its embedded operators."""

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from catgate.errors import ParameterError
from catgate.numkernel import ComplexMatrix, kron_all

QUTRIT_DIM = 3


class QutritLevel(IntEnum):
    """Qutrit levels in tensor-slot order."""

    G = 0
    E = 1
    F = 2


class QutritOp(Enum):
    """Single-qutrit operators used by the Hamiltonians and dissipators."""

    PROJ_G = "proj_g"
    PROJ_E = "proj_e"
    PROJ_F = "proj_f"
    SIGMA_FG_MINUS = "sigma_fg_minus"
    SIGMA_FE_MINUS = "sigma_fe_minus"
    SIGMA_EG_MINUS = "sigma_eg_minus"


# (row, column) of the single unit entry of each qutrit operator.
_QUTRIT_ENTRY = {
    QutritOp.PROJ_G: (QutritLevel.G, QutritLevel.G),
    QutritOp.PROJ_E: (QutritLevel.E, QutritLevel.E),
    QutritOp.PROJ_F: (QutritLevel.F, QutritLevel.F),
    QutritOp.SIGMA_FG_MINUS: (QutritLevel.G, QutritLevel.F),
    QutritOp.SIGMA_FE_MINUS: (QutritLevel.E, QutritLevel.F),
    QutritOp.SIGMA_EG_MINUS: (QutritLevel.G, QutritLevel.E),
}


@dataclass(slots=True, frozen=True)
class SpaceSpec:
    """Truncated space qutrit (g, e, f) x cavity 1 Fock x cavity 2 Fock."""

    n1_trunc: int = 6
    n2_trunc: int = 12
    qutrit_dim: int = QUTRIT_DIM

    def __post_init__(self) -> None:
        if self.qutrit_dim != QUTRIT_DIM:
            raise ParameterError(f"qutrit_dim must be {QUTRIT_DIM}, got {self.qutrit_dim}")
        if self.n1_trunc < 2 or self.n2_trunc < 2:
            raise ParameterError(
                f"cavity truncations must be >= 2, got ({self.n1_trunc}, {self.n2_trunc})"
            )

    @property
    def dim(self) -> int:
        """Total dimension 3 * N1 * N2."""
        return self.qutrit_dim * self.n1_trunc * self.n2_trunc

    @property
    def cavity_dim(self) -> int:
        """Dimension of the two-mode cavity space N1 * N2."""
        return self.n1_trunc * self.n2_trunc

    @property
    def shape(self) -> tuple[int, int, int]:
        """Slot dimensions in Kronecker order."""
        return (self.qutrit_dim, self.n1_trunc, self.n2_trunc)

    def enlarged(self, extra_n1: int, extra_n2: int) -> "SpaceSpec":
        """Return a copy with larger cavity truncations."""
        return SpaceSpec(self.n1_trunc + extra_n1, self.n2_trunc + extra_n2)


def mode_annihilation(trunc: int) -> ComplexMatrix:
    """Single-mode annihilation operator with <n-1|a|n> = sqrt(n)."""
    if trunc < 1:
        raise ParameterError(f"Fock truncation must be positive, got {trunc}")
    return np.diag(np.sqrt(np.arange(1, trunc, dtype=float)), k=1).astype(np.complex128)


def qutrit_matrix(kind: QutritOp) -> ComplexMatrix:
    """The unembedded 3x3 matrix of a qutrit operator."""
    try:
        row, col = _QUTRIT_ENTRY[QutritOp(kind)]
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"unknown qutrit operator: {kind!r}") from exc
    mat = np.zeros((QUTRIT_DIM, QUTRIT_DIM), dtype=np.complex128)
    mat[row, col] = 1.0
    return mat


def embed(space: SpaceSpec, slot: int, local: ComplexMatrix) -> ComplexMatrix:
    """Embed a single-slot operator (slot 0 = qutrit, 1 = cavity 1, 2 = cavity 2)."""
    dims = space.shape
    if slot not in (0, 1, 2):
        raise ParameterError(f"slot must be 0, 1 or 2, got {slot}")
    if local.shape != (dims[slot], dims[slot]):
        raise ParameterError(f"operator shape {local.shape} does not fit slot {slot}")
    factors = [np.eye(d, dtype=np.complex128) for d in dims]
    factors[slot] = local
    return kron_all(*factors)


def _cavity_slot(cavity: int) -> int:
    if cavity not in (1, 2):
        raise ParameterError(f"cavity index must be 1 or 2, got {cavity}")
    return cavity


def annihilation(space: SpaceSpec, cavity: int) -> ComplexMatrix:
    """Annihilation operator of cavity 1 or 2 embedded in the full space."""
    slot = _cavity_slot(cavity)
    return embed(space, slot, mode_annihilation(space.shape[slot]))


def creation(space: SpaceSpec, cavity: int) -> ComplexMatrix:
    """Creation operator of cavity 1 or 2 embedded in the full space."""
    return annihilation(space, cavity).conj().T


def number(space: SpaceSpec, cavity: int) -> ComplexMatrix:
    """Photon-number operator a^dagger a, diagonal with entries 0..N-1."""
    slot = _cavity_slot(cavity)
    counts = np.arange(space.shape[slot], dtype=float).astype(np.complex128)
    return embed(space, slot, np.diag(counts))


def qutrit_op(space: SpaceSpec, kind: QutritOp | str) -> ComplexMatrix:
    """Qutrit projector or lowering operator embedded at the qutrit slot."""
    return embed(space, 0, qutrit_matrix(kind))


def identity(space: SpaceSpec) -> ComplexMatrix:
    """Identity on the full space."""
    return np.eye(space.dim, dtype=np.complex128)


def excitation_number(space: SpaceSpec) -> ComplexMatrix:
    """n1 + n2 + |f><f|, conserved by the wanted and unwanted couplings.

    Every coupling trades one photon against f -> g or f -> e, so |e> carries
    no excitation of its own.
    """
    return number(space, 1) + number(space, 2) + qutrit_op(space, QutritOp.PROJ_F)


def basis_index(space: SpaceSpec, qutrit_level: int, n1: int, n2: int) -> int:
    """Flat index of |level, n1, n2> in the Kronecker ordering."""
    if not 0 <= qutrit_level < space.qutrit_dim:
        raise ParameterError(f"qutrit level {qutrit_level} out of range")
    if not 0 <= n1 < space.n1_trunc:
        raise ParameterError(f"cavity 1 photon number {n1} out of range")
    if not 0 <= n2 < space.n2_trunc:
        raise ParameterError(f"cavity 2 photon number {n2} out of range")
    return (int(qutrit_level) * space.n1_trunc + n1) * space.n2_trunc + n2


def decode_index(space: SpaceSpec, index: int) -> tuple[int, int, int]:
    """Inverse of :func:`basis_index`."""
    if not 0 <= index < space.dim:
        raise ParameterError(f"basis index {index} out of range")
    level, rest = divmod(index, space.cavity_dim)
    n1, n2 = divmod(rest, space.n2_trunc)
    return level, n1, n2
