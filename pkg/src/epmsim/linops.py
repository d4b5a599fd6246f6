"""Dense complex linear algebra for the 2x2 states and 4x4 superoperators.

Vectorization is column-stacking throughout: col[rho] = (rho00, rho10,
rho01, rho11)^T, so that vec(A rho B) = (B^T kron A) vec(rho).
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularFixedPoint

HERMITIAN_TOL = 1e-10
RANK_TOL = 1e-10


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(matrix, dtype=complex).reshape(-1, order="F")


def unvec(vector: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(vector, dtype=complex).ravel()
    dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DomainError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((dim, dim), order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (thin wrapper, kept for a single point of convention)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def hermiticity_defect(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - dagger(m))))


def require_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    defect = hermiticity_defect(m)
    if defect > tol:
        raise DomainError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + dagger(m))


def _jacobi_rotation(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] with a complex Jacobi rotation, updating a and v in place."""
    apq = a[p, q]
    absa = abs(apq)
    if absa == 0.0:
        return
    phase = apq / absa
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * absa)
    if tau >= 0.0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # 2x2 unitary J with columns mixing p and q:
    #   J[p,p]=c, J[p,q]=s, J[q,p]=-s*conj(phase), J[q,q]=c*conj(phase)
    col_p = a[:, p] * c - a[:, q] * (s * np.conj(phase))
    col_q = a[:, p] * s + a[:, q] * (c * np.conj(phase))
    a[:, p] = col_p
    a[:, q] = col_q
    row_p = a[p, :] * c - a[q, :] * (s * phase)
    row_q = a[p, :] * s + a[q, :] * (c * phase)
    a[p, :] = row_p
    a[q, :] = row_q
    a[p, q] = 0.0
    a[q, p] = 0.0
    vcol_p = v[:, p] * c - v[:, q] * (s * np.conj(phase))
    vcol_q = v[:, p] * s + v[:, q] * (c * np.conj(phase))
    v[:, p] = vcol_p
    v[:, q] = vcol_q


def hermitian_eig(m: np.ndarray, tol: float = HERMITIAN_TOL):
    """Eigendecomposition of a small Hermitian matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns, so that
    m = V diag(w) V^dagger.
    """
    a = require_hermitian(m, tol)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(100):
        off = np.sqrt(sum(abs(a[i, j]) ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _jacobi_rotation(a, v, p, q)
    w = np.real(np.diag(a))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def psd_sqrt_and_invsqrt(m: np.ndarray, rank_tol: float = RANK_TOL, inverse: bool = True):
    """Principal square root (and optionally inverse square root) of a PSD matrix.

    Eigenvalues in (-rank_tol, 0) are clamped to zero; anything more
    negative is a domain violation. The inverse square root requires the
    smallest eigenvalue to exceed rank_tol.
    """
    w, v = hermitian_eig(m)
    if np.min(w) < -rank_tol:
        raise DomainError(f"matrix is not PSD (min eigenvalue {np.min(w):.3e})")
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ dagger(v)
    if not inverse:
        return root, None
    if np.min(w) <= rank_tol:
        raise SingularFixedPoint(
            f"matrix is singular (min eigenvalue {np.min(w):.3e} <= {rank_tol:.1e})"
        )
    inv_root = (v / np.sqrt(w)) @ dagger(v)
    return root, inv_root
