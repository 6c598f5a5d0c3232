"""Dense complex-matrix substrate shared by every other module.

Matrices are plain ``numpy`` arrays of ``complex128``. Angular frequencies are
stored in rad/ns and times in ns throughout the package.
"""

import math
from functools import reduce

import numpy as np
import numpy.typing as npt
import scipy.linalg

from catgate.errors import ParameterError

ComplexMatrix = npt.NDArray[np.complex128]

HERMITIAN_RTOL = 1e-12

# Scaling-and-squaring thresholds for the Pade degrees 3, 5, 7, 9 and 13.
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ),
    13: (
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ),
}


def as_complex(a: npt.ArrayLike) -> ComplexMatrix:
    """Return ``a`` as a 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ParameterError(f"expected a matrix, got an array with {arr.ndim} dimensions")
    return arr


def _require_square(a: ComplexMatrix, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {a.shape}")


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    """Kronecker product; entry ``[i*rb + k, j*cb + l]`` equals ``a[i, j] * b[k, l]``."""
    return np.kron(as_complex(a), as_complex(b))


def kron_all(*factors: npt.ArrayLike) -> ComplexMatrix:
    """Kronecker product of several factors, left to right."""
    if not factors:
        raise ParameterError("kron_all needs at least one factor")
    return reduce(kron, factors[1:], as_complex(factors[0]))


def dagger(a: npt.ArrayLike) -> ComplexMatrix:
    """Conjugate transpose."""
    return as_complex(a).conj().T


def trace(a: npt.ArrayLike) -> complex:
    """Matrix trace."""
    arr = as_complex(a)
    _require_square(arr)
    return complex(np.trace(arr))


def frobenius_distance(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Frobenius norm of ``a - b``."""
    arr_a = as_complex(a)
    arr_b = as_complex(b)
    if arr_a.shape != arr_b.shape:
        raise ParameterError(f"dimension mismatch: {arr_a.shape} vs {arr_b.shape}")
    return float(np.linalg.norm(arr_a - arr_b))


def hermitian_part(a: npt.ArrayLike) -> ComplexMatrix:
    """Return ``(a + a^dagger) / 2``."""
    arr = as_complex(a)
    _require_square(arr)
    return 0.5 * (arr + arr.conj().T)


def is_hermitian(a: npt.ArrayLike, rtol: float = HERMITIAN_RTOL) -> bool:
    """True when ``max|a - a^dagger| <= rtol * max|a|``."""
    arr = as_complex(a)
    _require_square(arr)
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    return float(np.max(np.abs(arr - arr.conj().T), initial=0.0)) <= rtol * scale


def min_eigenvalue_hermitian(a: npt.ArrayLike) -> float:
    """Smallest eigenvalue of the Hermitian part of ``a``."""
    herm = hermitian_part(a)
    return float(scipy.linalg.eigvalsh(herm, subset_by_index=[0, 0])[0])


def _pade_approximant(a: ComplexMatrix, degree: int) -> tuple[ComplexMatrix, ComplexMatrix]:
    """Odd part ``u`` and even part ``v`` of the diagonal Pade approximant."""
    b = _PADE_COEFFS[degree]
    ident = np.eye(a.shape[0], dtype=np.complex128)
    a2 = a @ a
    if degree == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (
            a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
            + b[7] * a6
            + b[5] * a4
            + b[3] * a2
            + b[1] * ident
        )
        v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2
        v = v + b[0] * ident
        return u, v

    u_sum = b[1] * ident
    v = b[0] * ident
    power = ident
    for j in range(1, degree // 2 + 1):
        power = power @ a2
        u_sum = u_sum + b[2 * j + 1] * power
        v = v + b[2 * j] * power
    return a @ u_sum, v


def matexp(a: npt.ArrayLike, scale: complex = 1.0) -> ComplexMatrix:
    """Matrix exponential ``exp(scale * a)`` by Pade scaling and squaring.

    Picks the smallest Pade degree whose threshold covers the 1-norm, otherwise
    scales the matrix by a power of two, uses degree 13 and squares back.
    """
    arr = as_complex(a)
    _require_square(arr, "matexp input")
    x = scale * arr
    if x.shape[0] == 0:
        return x.copy()

    norm = float(np.linalg.norm(x, 1))
    for degree in (3, 5, 7, 9):
        if norm <= _THETA[degree]:
            u, v = _pade_approximant(x, degree)
            return np.linalg.solve(v - u, v + u)

    squarings = max(0, math.ceil(math.log2(norm / _THETA[13]))) if norm > 0 else 0
    x = x / (2.0**squarings)
    u, v = _pade_approximant(x, 13)
    result = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        result = result @ result
    return result
