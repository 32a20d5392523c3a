"""Small dense symmetric linear-algebra kernels.

All routines operate on square symmetric matrices of modest order (the
solver and bound calculators never need more than order k + 2 = 5, and
nothing here is intended beyond order 16).  Contracts are expressed as
residual bounds, not method choices.
"""

import numpy as np

from .errors import SingularMatrixError

# Relative symmetry tolerance for input validation.
SYMMETRY_TOL = 1e-12

# Cholesky pivots are compared against this fraction of the largest
# diagonal entry; kilometer-scale coordinates raised to fourth powers
# still leave ample double-precision headroom at 1e-12.
PIVOT_TOL = 1e-12


def check_symmetric(a, tol=SYMMETRY_TOL):
    """Validate that ``a`` is a square symmetric array and return it as float.

    Raises ValueError when the input is not square or the asymmetry exceeds
    ``tol`` relative to the largest absolute entry.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale > 0 and np.max(np.abs(a - a.T)) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return a


def sym_eig(a):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns, so that ``a @ V = V @ diag(w)``.
    """
    a = check_symmetric(a)
    w, v = np.linalg.eigh(a)
    return w, v


def solve_spd(a, b):
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    Uses an unpivoted Cholesky factorization; a pivot at or below
    ``PIVOT_TOL`` times the largest diagonal entry raises
    SingularMatrixError naming the pivot index.
    """
    a = check_symmetric(a)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"rhs length {b.shape[0]} does not match order {n}")
    tol = PIVOT_TOL * np.max(np.diag(a)) if n else 0.0
    lower = np.zeros((n, n))
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not pivot > tol:
            raise SingularMatrixError(
                f"matrix is not positive definite: pivot {j} is {pivot:.3e}"
                f" (tolerance {tol:.3e})",
                pivot_index=j,
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    y = np.zeros_like(b, dtype=float)
    for i in range(n):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    x = np.zeros_like(y)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def inv_sqrt_sym(a, tol=PIVOT_TOL):
    """Inverse symmetric square root of a positive definite matrix.

    The result S satisfies ``S @ a @ S = I``.  An eigenvalue at or below
    ``tol`` times the largest eigenvalue raises SingularMatrixError.
    """
    w, v = sym_eig(a)
    cutoff = tol * w[-1] if w.size else 0.0
    bad = np.nonzero(w <= cutoff)[0]
    if bad.size:
        raise SingularMatrixError(
            f"matrix is singular within tolerance: eigenvalue {bad[0]}"
            f" is {w[bad[0]]:.3e}",
            pivot_index=int(bad[0]),
        )
    return (v * w**-0.5) @ v.T
