"""Shifted-Laplacian solves and the Helmholtz differential filter.

Everything here is built on one symmetric positive definite kernel: the
interior-node system

    (I + theta * (-lap_h)) x = b,    theta >= 0,

where ``-lap_h`` is the centered 3-point (1D) or 5-point (2D) stencil with
zero Dirichlet ghost values.  The filter pair is

    A = I + delta**2 * (-lap_h)        (sharpening / inverse-filter operator)
    G = A**-1                          (low-pass differential filter)

``G`` is never formed: applying it means solving the ``theta = delta**2``
system.  The downstream deconvolution schemes multiply their equations
through by ``A`` so that every step reduces to one shifted solve.

1D systems are tridiagonal and solved by direct banded elimination; 2D
systems use conjugate gradient with a relative-residual tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .fields import Field, Grid, _check_same_grid

CG_TOL = 1e-12


class SolverError(RuntimeError):
    """Linear solve did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def _neg_lap_array(values: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    """Apply -lap_h to raw interior values with zero ghost nodes."""
    if values.ndim == 1:
        p = np.pad(values, 1)
        return (2.0 * values - p[:-2] - p[2:]) / h[0] ** 2
    p = np.pad(values, 1)
    out = (2.0 * values - p[:-2, 1:-1] - p[2:, 1:-1]) / h[0] ** 2
    out += (2.0 * values - p[1:-1, :-2] - p[1:-1, 2:]) / h[1] ** 2
    return out


def neg_laplacian(field: Field) -> Field:
    """Negative discrete Laplacian (3-point/5-point centered stencil)."""
    return Field(field.grid, _neg_lap_array(field.values, field.grid.h))


def _solve_tridiagonal(theta: float, h: float, rhs: np.ndarray) -> np.ndarray:
    m = rhs.shape[0]
    off = -theta / h**2
    ab = np.zeros((3, m))
    ab[0, 1:] = off
    ab[1, :] = 1.0 + 2.0 * theta / h**2
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)


def _solve_cg(theta: float, h: tuple[float, ...], rhs: np.ndarray,
              tol: float, max_iter: int) -> np.ndarray:
    """Conjugate gradient for (I + theta*(-lap_h)) x = rhs, x0 = 0."""
    rhs_norm = float(np.sqrt(np.sum(rhs * rhs)))
    x = np.zeros_like(rhs)
    if rhs_norm == 0.0:
        return x
    limit = tol * rhs_norm
    r = rhs.copy()
    p = r.copy()
    rr = float(np.sum(r * r))
    for k in range(max_iter):
        if np.sqrt(rr) <= limit:
            return x
        ap = p + theta * _neg_lap_array(p, h)
        step = rr / float(np.sum(p * ap))
        x += step * p
        r -= step * ap
        rr_next = float(np.sum(r * r))
        p = r + (rr_next / rr) * p
        rr = rr_next
    if np.sqrt(rr) <= limit:
        return x
    rel = float(np.sqrt(rr)) / rhs_norm
    raise SolverError(
        f"conjugate gradient stalled after {max_iter} iterations "
        f"(relative residual {rel:.3e}, tolerance {tol:.1e})",
        residual=rel,
        iterations=max_iter,
    )


def solve_shifted(grid: Grid, theta: float, rhs: Field,
                  tol: float = CG_TOL, max_iter: int | None = None) -> Field:
    """Solve (I + theta*(-lap_h)) x = rhs on the interior nodes.

    theta = delta**2 applies the filter; theta = 0 is the identity.  Raises
    SolverError (with the final residual attached) if the 2D iterative path
    fails to converge.
    """
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    if rhs.grid != grid:
        raise ValueError("rhs does not live on the given grid")
    if theta == 0.0:
        return Field(grid, rhs.values)
    if grid.dim == 1:
        return Field(grid, _solve_tridiagonal(theta, grid.h[0], rhs.values))
    if max_iter is None:
        max_iter = 20 * (max(grid.n) + 1)
    return Field(grid, _solve_cg(theta, grid.h, rhs.values, tol, max_iter))


@dataclass(frozen=True)
class HelmholtzFilter:
    """Differential filter of radius delta on a grid: A = I + delta^2*(-lap_h), G = A^-1."""

    grid: Grid
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"filter radius must be positive, got {self.delta}")


def apply_A(filt: HelmholtzFilter, field: Field) -> Field:
    """Sharpen: field + delta^2 * (-lap_h) field."""
    if field.grid != filt.grid:
        raise ValueError("field does not live on the filter's grid")
    lap = _neg_lap_array(field.values, filt.grid.h)
    return Field(filt.grid, field.values + filt.delta**2 * lap)


def apply_filter(filt: HelmholtzFilter, field: Field) -> Field:
    """Smooth: solve A x = field, i.e. apply G."""
    if field.grid != filt.grid:
        raise ValueError("field does not live on the filter's grid")
    return solve_shifted(filt.grid, filt.delta**2, field)


def _dense_lap_1d(m: int, h: float) -> np.ndarray:
    lap = 2.0 * np.eye(m)
    idx = np.arange(m - 1)
    lap[idx, idx + 1] = -1.0
    lap[idx + 1, idx] = -1.0
    return lap / h**2


DENSE_CAP = 4096


def dense_matrices(grid: Grid, delta: float):
    """Dense (-lap_h, A, G) on the flattened interior nodes (test oracle).

    2D fields flatten in row-major (i, j) order.  G is the exact dense
    inverse of A.  Capped at 4096 interior nodes.
    """
    if grid.interior_count > DENSE_CAP:
        raise ValueError(
            f"dense matrices capped at {DENSE_CAP} interior nodes, "
            f"grid has {grid.interior_count}"
        )
    if grid.dim == 1:
        lap = _dense_lap_1d(grid.interior_shape[0], grid.h[0])
    else:
        mx, my = grid.interior_shape
        lap = np.kron(_dense_lap_1d(mx, grid.h[0]), np.eye(my))
        lap += np.kron(np.eye(mx), _dense_lap_1d(my, grid.h[1]))
    a_mat = np.eye(grid.interior_count) + delta**2 * lap
    g_mat = np.linalg.inv(a_mat)
    return lap, a_mat, g_mat
