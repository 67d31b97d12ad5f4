"""Dense p x p block algebra and the structured block matrices of the qd iteration.

A *block* is just a square float ``ndarray``. A :class:`BlockGrid` stores an
``n x n`` array of blocks as a 4-d array of shape ``(n, n, p, p)``; the bidiagonal
factors only keep their nonzero blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import DimensionError, Singular

DEFAULT_RCOND_FLOOR = 1e-12


def as_block(a, p: int | None = None) -> np.ndarray:
    b = np.array(a, dtype=float)
    if b.ndim == 0:
        b = b.reshape(1, 1)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DimensionError(f"block must be square, got shape {b.shape}")
    if p is not None and b.shape[0] != p:
        raise DimensionError(f"expected a {p}x{p} block, got {b.shape[0]}x{b.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise ValueError("block entries must be finite")
    return b


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def block_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise DimensionError(f"block orders differ: {a.shape} vs {b.shape}")
    return a @ b


def lu_checked(a: np.ndarray, rcond_floor: float = DEFAULT_RCOND_FLOOR, exc=Singular):
    """Pivoted LU of ``a`` plus an infinity-norm reciprocal condition estimate.

    Raises ``exc`` if the estimate is below ``rcond_floor``.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return (a, np.zeros(0, dtype=np.int32)), 1.0
    anorm = np.abs(a).sum(axis=1).max()
    if anorm == 0.0 or not np.all(np.isfinite(a)):
        raise exc("matrix is zero or non-finite", 0.0)
    lu, piv, info = lapack.dgetrf(a)
    if info > 0:
        raise exc("matrix is exactly singular", 0.0)
    rcond, _ = lapack.dgecon(lu, anorm, norm="I")
    if not rcond >= rcond_floor:
        raise exc(f"reciprocal condition {rcond:.3e} below floor {rcond_floor:.1e}", rcond)
    return (lu, piv), float(rcond)


def lu_solve(factors, b: np.ndarray) -> np.ndarray:
    lu, piv = factors
    if lu.size == 0:
        return np.zeros_like(b, dtype=float)
    return scipy.linalg.lu_solve((lu, piv), b)


def block_inverse(a: np.ndarray, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> np.ndarray:
    """Inverse by pivoted elimination; :class:`Singular` if rcond < ``rcond_floor``."""
    factors, _ = lu_checked(a, rcond_floor)
    return lu_solve(factors, np.eye(a.shape[0]))


def block_frobenius(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.square(a))))


@dataclass(frozen=True)
class BlockGrid:
    """Square grid of p x p blocks, dense storage ``(n, n, p, p)``."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=float)
        if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2] != b.shape[3]:
            raise DimensionError(f"grid must have shape (n, n, p, p), got {b.shape}")
        object.__setattr__(self, "blocks", _freeze(b))

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def p(self) -> int:
        return self.blocks.shape[2]

    def __getitem__(self, ij) -> np.ndarray:
        return self.blocks[ij]

    def to_dense(self) -> np.ndarray:
        n, p = self.n, self.p
        return self.blocks.transpose(0, 2, 1, 3).reshape(n * p, n * p).copy()

    @classmethod
    def from_dense(cls, a: np.ndarray, p: int) -> "BlockGrid":
        a = np.asarray(a, dtype=float)
        if a.shape[0] != a.shape[1] or a.shape[0] % p:
            raise DimensionError(f"{a.shape} is not a square multiple of p={p}")
        n = a.shape[0] // p
        return cls(a.reshape(n, p, n, p).transpose(0, 2, 1, 3))

    @classmethod
    def identity(cls, n: int, p: int) -> "BlockGrid":
        return cls.from_dense(np.eye(n * p), p)

    def __matmul__(self, other: "BlockGrid") -> "BlockGrid":
        if (self.n, self.p) != (other.n, other.p):
            raise DimensionError("grid shapes differ")
        return BlockGrid.from_dense(self.to_dense() @ other.to_dense(), self.p)


@dataclass(frozen=True)
class LowerFactor:
    """Unit block lower bidiagonal factor with ``e_1 .. e_{n-1}`` on the subdiagonal."""

    n: int
    p: int
    e: tuple

    def __post_init__(self):
        if len(self.e) != self.n - 1:
            raise DimensionError(f"lower factor of order {self.n} needs {self.n - 1} blocks")
        object.__setattr__(self, "e", tuple(_freeze(as_block(b, self.p)) for b in self.e))

    def to_grid(self) -> BlockGrid:
        g = np.zeros((self.n, self.n, self.p, self.p))
        g[np.arange(self.n), np.arange(self.n)] = np.eye(self.p)
        for m, b in enumerate(self.e):
            g[m + 1, m] = b
        return BlockGrid(g)


@dataclass(frozen=True)
class UpperFactor:
    """Block upper bidiagonal factor: ``q_1 .. q_n`` on the diagonal, identities above."""

    n: int
    p: int
    q: tuple

    def __post_init__(self):
        if len(self.q) != self.n:
            raise DimensionError(f"upper factor of order {self.n} needs {self.n} blocks")
        object.__setattr__(self, "q", tuple(_freeze(as_block(b, self.p)) for b in self.q))

    def to_grid(self) -> BlockGrid:
        g = np.zeros((self.n, self.n, self.p, self.p))
        for m, b in enumerate(self.q):
            g[m, m] = b
            if m + 1 < self.n:
                g[m, m + 1] = np.eye(self.p)
        return BlockGrid(g)


def assemble_j(lowers: Sequence[LowerFactor], upper: UpperFactor) -> BlockGrid:
    """Dense product ``L^(0) L^(1) ... L^(theta-1) R``.

    The result is block lower Hessenberg: identity blocks on the first
    superdiagonal, zero blocks more than ``theta`` places below the diagonal.
    """
    if len(lowers) < 1:
        raise DimensionError("need at least one lower factor (theta >= 1)")
    for low in lowers:
        if (low.n, low.p) != (upper.n, upper.p):
            raise DimensionError("factors disagree on n or p")
    acc = lowers[0].to_grid().to_dense()
    for low in lowers[1:]:
        acc = acc @ low.to_grid().to_dense()
    return BlockGrid.from_dense(acc @ upper.to_grid().to_dense(), upper.p)


def grid_trace(g: BlockGrid) -> float:
    return float(np.trace(g.to_dense()))
