"""Dense real linear algebra for the projection fit.

Provides the three operations the embedding fit needs: matrix products,
symmetric eigendecomposition, and a Sylvester-equation solver specialized to
symmetric positive-semidefinite coefficients. The solver diagonalizes both
coefficient matrices (a = U diag(lam) U^T, b = V diag(mu) V^T) and divides
the rotated right-hand side entrywise by lam_i + mu_j, which is the
eigendecomposition form of the classical Schur-based approach and is exact
for the symmetric PSD systems produced by the fit's normal equations.

Matrices are plain float64 numpy arrays; ``validation.as_matrix`` enforces
the construction invariants (2-D, finite) at every public entry point.
Products are delegated to numpy. The eigensolver is a cyclic Jacobi
iteration: sweep cap 100, off-diagonal Frobenius threshold 1e-11 relative
to the input's Frobenius norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceError, NumericalError, ShapeError,
                     SingularSystemError, ValidationError)
from .validation import as_matrix

MAX_JACOBI_SWEEPS = 100
OFFDIAG_TOL = 1e-11
SYMMETRY_ATOL = 1e-10
PAIR_SUM_FLOOR = 1e-8


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition of a symmetric matrix.

    Attributes
    ----------
    values : ndarray of shape (n,)
        Eigenvalues in ascending order.
    vectors : ndarray of shape (n, n)
        Orthogonal matrix whose columns are the matching unit eigenvectors,
        so ``vectors @ diag(values) @ vectors.T`` reconstructs the input.
    """

    values: np.ndarray
    vectors: np.ndarray


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with shape and finiteness checks."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}",
            a_shape=tuple(map(int, a.shape)), b_shape=tuple(map(int, b.shape)))
    out = a @ b
    if out.size and not np.all(np.isfinite(out)):
        raise NumericalError("matrix product overflowed to non-finite values")
    return out


def _check_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > SYMMETRY_ATOL:
        raise ValidationError(
            f"{name} is not symmetric: max |a - a^T| = {asym:.3e} > {SYMMETRY_ATOL}",
            name=name, asymmetry=asym)
    return 0.5 * (a + a.T)


def sym_eigen(a, tol: float = OFFDIAG_TOL) -> SymEigen:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : array_like of shape (n, n)
        Symmetric within 1e-10 max-abs asymmetry; symmetrized internally.
    tol : float
        Convergence threshold on the off-diagonal Frobenius norm, relative
        to ``max(1, ||a||_F)``.

    Returns
    -------
    SymEigen
        Ascending eigenvalues and the matching orthonormal eigenvectors.

    Raises
    ------
    ValidationError
        If ``a`` is not square or not symmetric within tolerance.
    ConvergenceError
        If the off-diagonal norm is still above threshold after 100 sweeps.
    """
    a = as_matrix(a, "a", square=True)
    work = _check_symmetric(a, "a")
    n = work.shape[0]
    if n == 0:
        return SymEigen(np.empty(0), np.empty((0, 0)))
    vectors = np.eye(n)
    if n == 1:
        return SymEigen(work.diagonal().copy(), vectors)

    scale = max(1.0, float(np.linalg.norm(work)))
    threshold = tol * scale
    # rotations below this leave the off-diagonal norm untouched at threshold
    pivot_floor = threshold / (n * n)

    for _ in range(MAX_JACOBI_SWEEPS):
        off = _offdiag_norm(work)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= pivot_floor:
                    continue
                c, s = _jacobi_rotation(work[p, p], work[q, q], apq)
                _apply_rotation(work, vectors, p, q, c, s)
    else:
        residual = _offdiag_norm(work)
        if residual > threshold:
            raise ConvergenceError(
                f"Jacobi sweep cap ({MAX_JACOBI_SWEEPS}) reached, "
                f"off-diagonal residual {residual:.3e} > {threshold:.3e}",
                residual=float(residual), threshold=float(threshold))

    values = work.diagonal().copy()
    order = np.argsort(values, kind="stable")
    return SymEigen(values[order], np.ascontiguousarray(vectors[:, order]))


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(a.diagonal())
    return float(np.linalg.norm(off))


def _jacobi_rotation(app: float, aqq: float, apq: float) -> tuple[float, float]:
    # classic two-sided rotation zeroing a[p, q] (Golub & Van Loan 8.5)
    tau = (aqq - app) / (2.0 * apq)
    if tau >= 0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c


def _apply_rotation(a: np.ndarray, v: np.ndarray, p: int, q: int,
                    c: float, s: float) -> None:
    col_p = c * a[:, p] - s * a[:, q]
    a[:, q] = s * a[:, p] + c * a[:, q]
    a[:, p] = col_p
    row_p = c * a[p, :] - s * a[q, :]
    a[q, :] = s * a[p, :] + c * a[q, :]
    a[p, :] = row_p
    a[p, q] = 0.0
    a[q, p] = 0.0
    vec_p = c * v[:, p] - s * v[:, q]
    v[:, q] = s * v[:, p] + c * v[:, q]
    v[:, p] = vec_p


def _check_psd(eig: SymEigen, name: str) -> np.ndarray:
    values = eig.values
    if values.size == 0:
        return values
    tol = 1e-8 * max(1.0, float(np.max(np.abs(values))))
    lowest = float(values[0])
    if lowest < -tol:
        raise ValidationError(
            f"{name} is not positive semidefinite: min eigenvalue {lowest:.3e}",
            name=name, min_eigenvalue=lowest)
    # round-off can leave tiny negatives; clamp so denominators stay >= 0
    return np.maximum(values, 0.0)


def sylvester_solve(a, b, c, ridge: float = 0.0) -> np.ndarray:
    """Solve ``a @ w + w @ b = c`` for symmetric PSD ``a`` (k x k), ``b`` (n x n).

    Both coefficients are diagonalized and the equation is solved entrywise
    in the rotated basis: ``w_hat[i, j] = c_hat[i, j] / (lam[i] + mu[j])``.
    When the smallest eigenvalue-pair sum falls below 1e-8 the system is
    numerically singular; with ``ridge > 0`` the denominators become
    ``lam[i] + mu[j] + ridge`` (ridge-regularized solution), otherwise a
    :class:`SingularSystemError` is raised.

    Raises
    ------
    ShapeError
        If the shapes do not conform.
    ValidationError
        If ``a`` or ``b`` is asymmetric or not PSD within tolerance.
    SingularSystemError
        If the system is singular and ``ridge`` is 0.
    """
    a = as_matrix(a, "a", square=True)
    b = as_matrix(b, "b", square=True)
    c = as_matrix(c, "c", rows=a.shape[0], cols=b.shape[0])
    if ridge < 0:
        raise ValidationError(f"ridge must be >= 0, got {ridge}", ridge=ridge)

    ea = sym_eigen(a)
    eb = sym_eigen(b)
    lam = _check_psd(ea, "a")
    mu = _check_psd(eb, "b")

    if c.size == 0:
        return np.zeros_like(c)

    min_pair = float(lam[0] + mu[0]) if lam.size and mu.size else 0.0
    denom = lam[:, None] + mu[None, :]
    if min_pair < PAIR_SUM_FLOOR:
        if ridge <= 0.0:
            raise SingularSystemError(
                f"Sylvester system is singular: smallest eigenvalue-pair sum "
                f"{min_pair:.3e} < {PAIR_SUM_FLOOR}; pass ridge > 0 to regularize",
                min_pair_sum=min_pair, floor=PAIR_SUM_FLOOR)
        denom = denom + ridge

    c_hat = ea.vectors.T @ c @ eb.vectors
    w_hat = c_hat / denom
    w = ea.vectors @ w_hat @ eb.vectors.T
    if not np.all(np.isfinite(w)):
        raise NumericalError("Sylvester solution contains non-finite values")
    return w


def sylvester_residual(a, b, c, w) -> float:
    """Relative residual ``||a w + w b - c||_F / max(1, ||c||_F)``."""
    a = as_matrix(a, "a", square=True)
    b = as_matrix(b, "b", square=True)
    c = as_matrix(c, "c", rows=a.shape[0], cols=b.shape[0])
    w = as_matrix(w, "w", rows=a.shape[0], cols=b.shape[0])
    num = float(np.linalg.norm(a @ w + w @ b - c))
    return num / max(1.0, float(np.linalg.norm(c)))
