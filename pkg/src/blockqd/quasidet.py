"""Quasi-determinants over the ring of real p x p matrices.

A quasi-grid is a ``(rows, cols, p, p)`` array of blocks; plain 2-d arrays are
accepted as scalar grids (p = 1). Indices are 0-based throughout.

The quasi-determinant boxed at ``(i, j)`` is the Schur complement

    |A|_{i,j} = a_{ij} - r_i^j (A^{i,j})^{-1} c_j^i

and is computed with one dense pivoted solve against the flattened minor.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .blockmat import DEFAULT_RCOND_FLOOR, block_frobenius, block_inverse, lu_checked, lu_solve
from .errors import DimensionError, SingularMinor


def as_quasigrid(a) -> np.ndarray:
    g = np.asarray(a, dtype=float)
    if g.ndim == 2:
        g = g[:, :, None, None]
    if g.ndim != 4 or g.shape[2] != g.shape[3]:
        raise DimensionError(f"quasi-grid must be (rows, cols, p, p), got {g.shape}")
    return g


def flatten(g: np.ndarray) -> np.ndarray:
    r, c, p, _ = g.shape
    return g.transpose(0, 2, 1, 3).reshape(r * p, c * p)


def quasidet(a, i: int, j: int, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> np.ndarray:
    """Quasi-determinant of a square quasi-grid boxed at ``(i, j)``."""
    g = as_quasigrid(a)
    rows, cols, p, _ = g.shape
    if rows != cols:
        raise DimensionError(f"quasi-determinant needs a square grid, got {rows}x{cols}")
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"boxed position ({i}, {j}) outside a {rows}x{cols} grid")
    keep_r = [k for k in range(rows) if k != i]
    keep_c = [k for k in range(cols) if k != j]
    if not keep_r:
        return g[i, j].copy()
    minor = flatten(g[np.ix_(keep_r, keep_c)])
    row = flatten(g[np.ix_([i], keep_c)])
    col = flatten(g[np.ix_(keep_r, [j])])
    factors, _ = lu_checked(minor, rcond_floor, exc=SingularMinor)
    return g[i, j] - row @ lu_solve(factors, col)


def _sub(g: np.ndarray, rows, cols) -> np.ndarray:
    return g[np.ix_(list(rows), list(cols))]


def jacobi_sides(a, rcond_floor: float = DEFAULT_RCOND_FLOOR):
    """Both sides of the non-commutative Sylvester identity.

    The grid is read as ``[[A, B, C], [D, f, g], [E, h, i]]`` where ``A`` is the
    leading ``(k-2) x (k-2)`` part and ``f, g, h, i`` are single blocks.
    """
    g = as_quasigrid(a)
    k = g.shape[0]
    if k < 2 or g.shape[1] != k:
        raise DimensionError("Sylvester identity needs a square grid of order >= 2")
    head = range(k - 2)
    r_d, r_e = k - 2, k - 1
    last = k - 1
    lhs = quasidet(g, last, last, rcond_floor)
    ac_ei = quasidet(_sub(g, [*head, r_e], [*head, k - 1]), last - 1, last - 1, rcond_floor)
    ab_eh = quasidet(_sub(g, [*head, r_e], [*head, k - 2]), last - 1, last - 1, rcond_floor)
    ab_df = quasidet(_sub(g, [*head, r_d], [*head, k - 2]), last - 1, last - 1, rcond_floor)
    ac_dg = quasidet(_sub(g, [*head, r_d], [*head, k - 1]), last - 1, last - 1, rcond_floor)
    rhs = ac_ei - ab_eh @ block_inverse(ab_df, rcond_floor) @ ac_dg
    return lhs, rhs


def check_jacobi_identity(a, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> float:
    lhs, rhs = jacobi_sides(a, rcond_floor)
    return block_frobenius(lhs - rhs)


def homological_sides(a, rcond_floor: float = DEFAULT_RCOND_FLOOR):
    """Left/right sides of the two homological relations, as two ``(lhs, rhs)`` pairs.

    Row relation: moving the box from the corner one step left equals the corner
    quasi-determinant times the grid whose last row is ``(0, .., 0, [0], I)``.
    Column relation: moving the box one step up equals the grid whose last
    column is ``(0, .., [0], I)`` times the corner quasi-determinant.
    """
    g = as_quasigrid(a)
    k, p = g.shape[0], g.shape[2]
    if k < 2 or g.shape[1] != k:
        raise DimensionError("homological relations need a square grid of order >= 2")
    corner = quasidet(g, k - 1, k - 1, rcond_floor)
    eye = np.eye(p)

    row_mod = g.copy()
    row_mod[k - 1] = 0.0
    row_mod[k - 1, k - 1] = eye
    row_pair = (
        quasidet(g, k - 1, k - 2, rcond_floor),
        corner @ quasidet(row_mod, k - 1, k - 2, rcond_floor),
    )

    col_mod = g.copy()
    col_mod[:, k - 1] = 0.0
    col_mod[k - 1, k - 1] = eye
    col_pair = (
        quasidet(g, k - 2, k - 1, rcond_floor),
        quasidet(col_mod, k - 2, k - 1, rcond_floor) @ corner,
    )
    return row_pair, col_pair


def check_homological(a, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> tuple[float, float]:
    (l1, r1), (l2, r2) = homological_sides(a, rcond_floor)
    return block_frobenius(l1 - r1), block_frobenius(l2 - r2)


def inverse_column(a, j: int, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> list[np.ndarray]:
    """Block column ``j`` of ``A^{-1}``, built from the boxed quasi-determinant ``|A|_{j,j}``.

    The diagonal entry is ``|A|_{j,j}^{-1}``; the others are
    ``-[(A^{j,j})^{-1} c_j^j]_i |A|_{j,j}^{-1}``, which by the homological relations
    equal ``|A|_{j,i}^{-1}`` whenever that quasi-determinant exists.
    """
    g = as_quasigrid(a)
    n, p = g.shape[0], g.shape[2]
    pivot_inv = block_inverse(quasidet(g, j, j, rcond_floor), rcond_floor)
    keep = [k for k in range(n) if k != j]
    out = [None] * n
    out[j] = pivot_inv
    if keep:
        factors, _ = lu_checked(flatten(g[np.ix_(keep, keep)]), rcond_floor, exc=SingularMinor)
        w = -lu_solve(factors, flatten(g[np.ix_(keep, [j])])) @ pivot_inv
        for pos, k in enumerate(keep):
            out[k] = w[pos * p:(pos + 1) * p]
    return out


def solve_left(a, rhs: Sequence, rcond_floor: float = DEFAULT_RCOND_FLOOR, refine: int = 2) -> list[np.ndarray]:
    """Solve ``sum_j a_ij x_j = xi_i`` as ``x_i = sum_j |A|_{j,i}^{-1} xi_j``.

    Right-hand blocks may be rectangular ``p x k``. A principal minor can be far
    worse conditioned than ``A`` itself, so the result is polished with
    ``refine`` rounds of iterative refinement through the same inverse.
    """
    g = as_quasigrid(a)
    n, p = g.shape[0], g.shape[2]
    if g.shape[1] != n or len(rhs) != n:
        raise DimensionError("system must be square with one right-hand block per row")
    xi = [np.asarray(b, dtype=float).reshape(p, -1) for b in rhs]
    cols = [inverse_column(g, j, rcond_floor) for j in range(n)]

    def apply(v):
        return [sum(cols[j][i] @ v[j] for j in range(n)) for i in range(n)]

    x = apply(xi)
    for _ in range(refine):
        r = [xi[i] - sum(g[i, j] @ x[j] for j in range(n)) for i in range(n)]
        x = [xk + dk for xk, dk in zip(x, apply(r))]
    return x
