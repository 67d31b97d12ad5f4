"""Truncated discrete non-commutative hungry Toda lattices.

Toda-II (the qd side) carries ``q`` at level ``alpha`` and ``theta`` layers of
``e`` at levels ``alpha .. alpha+theta-1``. One step consumes the oldest e-layer
and appends level ``alpha+theta``::

    q_m^(a+1)   = q_m^(a) + e_m^(a) - e_{m-1}^(a+theta)
    e_m^(a+th)  = q_{m+1}^(a) e_m^(a) (q_m^(a+1))^-1

Toda-I has the level shifts the other way round (omega advances by theta,
eps by one), so its state carries ``theta`` omega-layers and a single eps layer.
Boundary blocks ``e_0`` and ``e_n`` are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmat import (
    DEFAULT_RCOND_FLOOR,
    BlockGrid,
    LowerFactor,
    UpperFactor,
    as_block,
    assemble_j,
    lu_checked,
    lu_solve,
)
from .errors import Breakdown, DimensionError, Singular
from .moments import MomentTable, coefficient_e, coefficient_eps, coefficient_omega, coefficient_q


def _blocks(seq, p):
    out = []
    for b in seq:
        b = as_block(b, p).copy()
        b.setflags(write=False)
        out.append(b)
    return tuple(out)


def _right_inverse_product(a: np.ndarray, pivot: np.ndarray, index: int, rcond_floor: float, layer=None):
    """``a @ pivot^{-1}``, raising :class:`Breakdown` on a singular pivot."""
    try:
        factors, _ = lu_checked(pivot.T, rcond_floor)
    except Singular as exc:
        raise Breakdown(index, exc.rcond, layer) from None
    return lu_solve(factors, a.T).T


@dataclass(frozen=True)
class TodaIIState:
    theta: int
    q: tuple
    e: tuple
    alpha: int = 0

    def __post_init__(self):
        if self.theta < 1:
            raise ValueError("theta must be >= 1")
        if len(self.q) < 1:
            raise DimensionError("need at least one q block")
        p = as_block(self.q[0]).shape[0]
        q = _blocks(self.q, p)
        if len(self.e) != self.theta:
            raise DimensionError(f"need {self.theta} e-layers, got {len(self.e)}")
        e = tuple(_blocks(layer, p) for layer in self.e)
        for layer in e:
            if len(layer) != len(q) - 1:
                raise DimensionError(f"each e-layer needs {len(q) - 1} blocks")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "e", e)

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def p(self) -> int:
        return self.q[0].shape[0]

    def lower(self, layer: int) -> LowerFactor:
        return LowerFactor(self.n, self.p, self.e[layer])

    def upper(self) -> UpperFactor:
        return UpperFactor(self.n, self.p, self.q)

    def assemble(self) -> BlockGrid:
        """``J^(alpha) = L^(alpha) ... L^(alpha+theta-1) R^(alpha)``."""
        return assemble_j([self.lower(i) for i in range(self.theta)], self.upper())


def toda2_step(s: TodaIIState, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> TodaIIState:
    n, p = s.n, s.p
    zero = np.zeros((p, p))
    e_old = s.e[0]
    q_new, e_new = [], []
    for m in range(n):
        below = e_old[m] if m < n - 1 else zero
        above = e_new[m - 1] if m > 0 else zero
        q_new.append(s.q[m] + below - above)
        if m < n - 1:
            e_new.append(_right_inverse_product(s.q[m + 1] @ e_old[m], q_new[m], m + 1, rcond_floor))
    return TodaIIState(s.theta, tuple(q_new), s.e[1:] + (tuple(e_new),), s.alpha + 1)


def check_compatibility(s: TodaIIState, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> float:
    """``|R^(a) L^(a) - L^(a+theta) R^(a+1)|_F`` using one Toda-II step."""
    nxt = toda2_step(s, rcond_floor)
    lhs = s.upper().to_grid() @ s.lower(0).to_grid()
    rhs = nxt.lower(s.theta - 1).to_grid() @ nxt.upper().to_grid()
    return float(np.linalg.norm(lhs.to_dense() - rhs.to_dense()))


@dataclass(frozen=True)
class TodaIState:
    theta: int
    omega: tuple
    eps: tuple
    alpha: int = 0

    def __post_init__(self):
        if len(self.omega) != self.theta:
            raise DimensionError(f"need {self.theta} omega-layers, got {len(self.omega)}")
        p = as_block(self.omega[0][0]).shape[0]
        omega = tuple(_blocks(layer, p) for layer in self.omega)
        n = len(omega[0])
        if any(len(layer) != n for layer in omega):
            raise DimensionError("omega layers differ in length")
        eps = _blocks(self.eps, p)
        if len(eps) != n - 1:
            raise DimensionError(f"need {n - 1} eps blocks")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "eps", eps)

    @property
    def n(self) -> int:
        return len(self.omega[0])

    @property
    def p(self) -> int:
        return self.omega[0][0].shape[0]


def toda1_step(s: TodaIState, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> TodaIState:
    """Advance ``(omega^(a), eps^(a))`` to ``(omega^(a+theta), eps^(a+1))``::

        omega_m^(a+th) = omega_m^(a) + eps_m^(a) - eps_{m-1}^(a+1)
        eps_m^(a+1)    = omega_{m+1}^(a) eps_m^(a) (omega_m^(a+th))^-1
    """
    n, p = s.n, s.p
    zero = np.zeros((p, p))
    w = s.omega[0]
    w_new, eps_new = [], []
    for m in range(n):
        below = s.eps[m] if m < n - 1 else zero
        above = eps_new[m - 1] if m > 0 else zero
        w_new.append(w[m] + below - above)
        if m < n - 1:
            eps_new.append(_right_inverse_product(w[m + 1] @ s.eps[m], w_new[m], m + 1, rcond_floor))
    return TodaIState(s.theta, s.omega[1:] + (tuple(w_new),), tuple(eps_new), s.alpha + 1)


def toda1_residual(before: TodaIState, after: TodaIState) -> float:
    """Max over m of ``|omega_{m+1}^(a) eps_m^(a) - eps_m^(a+1) omega_m^(a+theta)|_F``."""
    w, w_th = before.omega[0], after.omega[-1]
    res = 0.0
    for m in range(before.n - 1):
        r = w[m + 1] @ before.eps[m] - after.eps[m] @ w_th[m]
        res = max(res, float(np.linalg.norm(r)))
    return res


def toda2_state_from_moments(n: int, alpha: int, t: MomentTable) -> TodaIIState:
    """Moment-derived ``q^(alpha)`` and e-layers ``alpha .. alpha+theta-1``."""
    q = [coefficient_q(m, alpha, t) for m in range(1, n + 1)]
    e = [[coefficient_e(m, alpha + i, t) for m in range(1, n)] for i in range(t.theta)]
    return TodaIIState(t.theta, q, e, alpha)


def toda1_state_from_moments(n: int, alpha: int, t: MomentTable) -> TodaIState:
    omega = [[coefficient_omega(m, alpha + i, t) for m in range(1, n + 1)] for i in range(t.theta)]
    eps = [coefficient_eps(m, alpha, t) for m in range(1, n)]
    return TodaIState(t.theta, omega, eps, alpha)
