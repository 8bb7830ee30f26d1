"""Dense 3x3 (and 9x9 auxiliary) real linear algebra kernels.

Everything operates on plain ``numpy`` arrays of 64-bit floats.  The
vectorisation convention is column stacking throughout the repository:
``vec(M)[3*c + r] == M[r, c]``, so that ``kron(a, b) @ vec(m) == vec(b @ m @ a.T)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import MatExpRangeError

__all__ = [
    "MAT_EXP_NORM_BOUND",
    "Svd3",
    "vec",
    "unvec",
    "svd3",
    "mat_exp",
    "rot_log",
    "dexp_frechet",
    "dexp_jacobian",
    "commutation_matrix",
    "kron",
]

#: Largest Frobenius norm accepted by :func:`mat_exp`.  Far below the double
#: overflow threshold; inputs arising from the geometry here stay below ~5.
MAT_EXP_NORM_BOUND = 100.0

_ROT_LOG_SMALL_ANGLE = 1e-4
_ROT_LOG_NEAR_PI = np.pi - 1e-4


def _as_mat3(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    return m


def vec(m: np.ndarray) -> np.ndarray:
    """Stack the columns of ``m`` into a vector."""
    return np.asarray(m, dtype=float).flatten(order="F")


def unvec(v: np.ndarray, n: int = 3) -> np.ndarray:
    """Inverse of :func:`vec` for an ``n`` x ``n`` matrix."""
    return np.asarray(v, dtype=float).reshape((n, n), order="F")


@dataclass(frozen=True)
class Svd3:
    """SVD of a 3x3 matrix: ``u @ diag(sigma) @ v.T`` with sigma descending."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def svd3(m: np.ndarray) -> Svd3:
    """Singular value decomposition of a 3x3 matrix.

    Deterministic for identical inputs; ``sigma`` is sorted descending and
    non-negative.
    """
    m = _as_mat3(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("svd3 requires finite entries")
    u, s, vt = np.linalg.svd(m)
    return Svd3(u=u, sigma=s, v=vt.T)


def mat_exp(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of a square matrix.

    Rejects inputs with Frobenius norm above :data:`MAT_EXP_NORM_BOUND`.
    ``mat_exp(0)`` is the identity exactly.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("mat_exp requires finite entries")
    nrm = np.linalg.norm(m)
    if nrm > MAT_EXP_NORM_BOUND:
        raise MatExpRangeError(
            f"matrix norm {nrm:.3g} exceeds the supported bound {MAT_EXP_NORM_BOUND}"
        )
    if nrm == 0.0:
        return np.eye(m.shape[0])
    return expm(m)


def rot_log(p: np.ndarray) -> np.ndarray:
    """Principal logarithm of a rotation matrix, a skew-symmetric 3x3.

    The returned matrix is ``theta * [n]_x`` with the rotation angle
    ``theta`` in ``[0, pi]`` and unit axis ``n``.  The antisymmetric-part
    formula degenerates at both ends of the angle range, so a series is used
    below 1e-4 rad and an axis extraction from ``(p + I)/2`` above
    ``pi - 1e-4``.
    """
    p = _as_mat3(p)
    if np.linalg.norm(p.T @ p - np.eye(3)) > 1e-8 or abs(np.linalg.det(p) - 1.0) > 1e-8:
        raise ValueError("rot_log requires an orthogonal matrix with determinant +1")

    skew = (p - p.T) / 2.0
    s_vec = np.array([skew[2, 1], skew[0, 2], skew[1, 0]])  # == sin(theta) * axis
    sin_theta = float(np.linalg.norm(s_vec))
    cos_theta = (np.trace(p) - 1.0) / 2.0
    # atan2 stays well-conditioned where arccos of the trace is not
    theta = float(np.arctan2(sin_theta, cos_theta))

    if theta < _ROT_LOG_SMALL_ANGLE:
        # theta / sin(theta) expanded to O(theta^4)
        return (1.0 + theta**2 / 6.0 + 7.0 * theta**4 / 360.0) * skew
    if theta > _ROT_LOG_NEAR_PI:
        # Near a half turn the skew part vanishes; recover n n^T from the
        # symmetric part, read the axis off its strongest column, and fix
        # the sign against the residual skew part (arbitrary at exactly pi).
        sym = (p + p.T) / 2.0
        nnt = (sym - cos_theta * np.eye(3)) / (1.0 - cos_theta)
        col = int(np.argmax(np.diag(nnt)))
        axis = nnt[:, col] / np.sqrt(nnt[col, col])
        if np.dot(axis, s_vec) < 0.0:
            axis = -axis
        k = np.array(
            [
                [0.0, -axis[2], axis[1]],
                [axis[2], 0.0, -axis[0]],
                [-axis[1], axis[0], 0.0],
            ]
        )
        return theta * k
    return theta / sin_theta * skew


def dexp_frechet(a: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Directional (Frechet) derivative of :func:`mat_exp` at ``a`` along ``e``.

    Uses the block-triangular identity
    ``exp([[a, e], [0, a]]) = [[exp(a), L(a, e)], [0, exp(a)]]``.
    """
    a = _as_mat3(a)
    e = _as_mat3(e)
    if np.linalg.norm(a) > MAT_EXP_NORM_BOUND:
        raise MatExpRangeError("matrix norm exceeds the supported bound")
    block = np.zeros((6, 6))
    block[:3, :3] = a
    block[3:, 3:] = a
    block[:3, 3:] = e
    return expm(block)[:3, 3:]


def dexp_jacobian(a: np.ndarray) -> np.ndarray:
    """9x9 Jacobian ``J`` of the exponential: ``J @ vec(e) == vec(dexp_frechet(a, e))``.

    Assembled from an integral representation rather than column by column:
    with ``N @ vec(e) = vec(a @ e - e @ a)``,

        ``J = kron(exp(a).T, I) @ phi1(N)``,   ``phi1(N) = sum_k N^k / (k+1)!``

    and ``phi1`` is read off the top-right block of ``exp([[N, I], [0, 0]])``.
    """
    a = _as_mat3(a)
    if np.linalg.norm(a) > MAT_EXP_NORM_BOUND:
        raise MatExpRangeError("matrix norm exceeds the supported bound")
    eye3 = np.eye(3)
    n = np.kron(eye3, a) - np.kron(a.T, eye3)
    block = np.zeros((18, 18))
    block[:9, :9] = n
    block[:9, 9:] = np.eye(9)
    phi1 = expm(block)[:9, 9:]
    return np.kron(mat_exp(a).T, eye3) @ phi1


def commutation_matrix() -> np.ndarray:
    """The 9x9 permutation ``K`` with ``K @ vec(m) == vec(m.T)``; ``K @ K == I``."""
    k = np.zeros((9, 9))
    for r in range(3):
        for c in range(3):
            k[3 * c + r, 3 * r + c] = 1.0
    return k


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two 3x3 matrices; ``kron(a, b) @ vec(m) == vec(b @ m @ a.T)``."""
    return np.kron(_as_mat3(a), _as_mat3(b))
