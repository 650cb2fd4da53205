"""Small dense linear-algebra helpers used throughout the package.

Everything here operates on modest complex matrices (fibers of dimension
<= 8, Gram matrices of a few hundred rows), so plain LAPACK calls via
numpy are the right tool.
"""

from __future__ import annotations

import numpy as np

from .errors import StructuralError

__all__ = [
    "frob",
    "hermitize",
    "hermiticity_defect",
    "eig_margin",
    "mgs_orthonormalize",
    "relative_rank",
    "smallest_singular_value",
]


def frob(a: np.ndarray) -> float:
    """Frobenius norm, as a plain float."""
    return float(np.linalg.norm(np.asarray(a)))


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a*) / 2."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def hermiticity_defect(a: np.ndarray) -> float:
    """Frobenius norm of a - a*, relative to max(1, ||a||)."""
    a = np.asarray(a)
    return frob(a - a.conj().T) / max(1.0, frob(a))


def eig_margin(a: np.ndarray, herm_tol: float = 1e-10) -> float:
    """Smallest eigenvalue of the Hermitianized matrix.

    Raises
    ------
    StructuralError
        If `a` is not Hermitian within `herm_tol` (relative to
        max(1, ||a||)); a broken symmetry means the caller assembled the
        matrix from an inconsistent source and an eigenvalue margin would
        be meaningless.
    """
    defect = hermiticity_defect(a)
    if defect > herm_tol:
        raise StructuralError(
            f"matrix is not Hermitian: relative defect {defect:.3e} > {herm_tol:.1e}"
        )
    return float(np.linalg.eigvalsh(hermitize(a))[0])


def smallest_singular_value(a: np.ndarray) -> tuple[float, float]:
    """Return (sigma_min, sigma_max) of a rectangular matrix.

    sigma_min is the k-th singular value where k = min(shape), i.e. the
    margin against rank deficiency.
    """
    s = np.linalg.svd(np.asarray(a), compute_uv=False)
    if s.size == 0:
        return 0.0, 0.0
    return float(s[-1]), float(s[0])


def relative_rank(a: np.ndarray, tol: float = 1e-10) -> int:
    """Numerical rank with a threshold relative to the largest singular value."""
    s = np.linalg.svd(np.asarray(a), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s >= tol * s[0]))


def mgs_orthonormalize(
    a: np.ndarray,
    inner: np.ndarray | None = None,
    drop_tol: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Orthonormalizes the columns of `a` with respect to the inner product
    (u, v) -> v* @ inner @ u (Euclidean if `inner` is None).  The returned
    triangular factor has real positive diagonal, which pins the phase of
    each column; this keeps frames computed at nearby points smoothly
    comparable.

    Returns
    -------
    (q, r) with a = q @ r, q*-inner-q = identity.

    Raises
    ------
    StructuralError
        If a column is linearly dependent on the previous ones
        (relative norm below `drop_tol`).
    """
    a = np.array(a, dtype=complex)
    n, k = a.shape
    g = np.eye(n) if inner is None else np.asarray(inner)
    q = np.zeros((n, k), dtype=complex)
    r = np.zeros((k, k), dtype=complex)
    col_scale = max(float(np.max(np.abs(a))), 1e-300)
    for i in range(k):
        v = a[:, i].copy()
        for _ in range(2):  # second pass restores orthogonality to ~1e-15
            for l in range(i):
                c = q[:, l].conj() @ (g @ v)
                r[l, i] += c
                v = v - c * q[:, l]
        nrm = np.sqrt(abs(v.conj() @ (g @ v)))
        if nrm <= drop_tol * col_scale:
            raise StructuralError(
                f"column {i} is linearly dependent (residual norm {nrm:.3e})"
            )
        r[i, i] = nrm
        q[:, i] = v / nrm
    return q, r
