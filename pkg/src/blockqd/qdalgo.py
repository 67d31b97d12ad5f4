"""The generalized block qd-algorithm.

One sweep runs the hungry Toda-II recursion once per e-layer, in place::

    for each layer i:
        q_1 += e_1
        for m = 2..n:
            e_{m-1} = q_m e_{m-1} q_{m-1}^{-1}     # q_{m-1} already updated
            q_m     += e_m - e_{m-1}               # e_n = 0

It is an LR-type similarity on the assembled block Hessenberg matrix. When the
e-blocks vanish the matrix is block upper triangular and the spectrum is the
union of the eigenvalues of the diagonal q-blocks.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .blockmat import DEFAULT_RCOND_FLOOR, BlockGrid, lu_checked, lu_solve
from .eigs import small_eigenvalues, smallest_singular_value
from .errors import Breakdown, Singular
from .lattice import TodaIIState

DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 1000


@dataclass(frozen=True)
class HungryState:
    lattice: TodaIIState
    sweep: int = 0

    @classmethod
    def from_blocks(cls, theta: int, q, e) -> "HungryState":
        return cls(TodaIIState(theta, q, e))

    @property
    def theta(self) -> int:
        return self.lattice.theta

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def p(self) -> int:
        return self.lattice.p

    @property
    def q(self) -> tuple:
        return self.lattice.q

    @property
    def e(self) -> tuple:
        return self.lattice.e

    @property
    def level(self) -> int:
        """Level of the q-blocks, ``theta * sweep`` for a state built at level 0."""
        return self.lattice.alpha

    def assemble(self) -> BlockGrid:
        return self.lattice.assemble()

    def max_e_norm(self) -> float:
        return max((float(np.linalg.norm(b)) for layer in self.e for b in layer), default=0.0)


def sweep(s: HungryState, rcond_floor: float = DEFAULT_RCOND_FLOOR) -> HungryState:
    """One outer iteration: ``theta`` in-place layer updates."""
    n, p = s.n, s.p
    zero = np.zeros((p, p))
    q = [b.copy() for b in s.q]
    layers = [[b.copy() for b in layer] for layer in s.e]
    for i, e in enumerate(layers):
        if n > 1:
            q[0] = q[0] + e[0]
        for m in range(1, n):
            try:
                factors, _ = lu_checked(q[m - 1].T, rcond_floor)
            except Singular as exc:
                raise Breakdown(m, exc.rcond, layer=i) from None
            e[m - 1] = lu_solve(factors, (q[m] @ e[m - 1]).T).T
            nxt = e[m] if m < n - 1 else zero
            q[m] = q[m] + nxt - e[m - 1]
    lat = TodaIIState(s.theta, tuple(q), tuple(tuple(layer) for layer in layers), s.level + s.theta)
    return HungryState(lat, s.sweep + 1)


class ConvergenceStatus(enum.Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not_converged"
    BREAKDOWN = "breakdown"


@dataclass
class SweepTrace:
    """Frobenius norms of every q- and e-block after each completed sweep."""

    n: int
    theta: int
    rows: list = field(default_factory=list)
    breakdown: Breakdown | None = None

    def record(self, s: HungryState) -> None:
        qn = [float(np.linalg.norm(b)) for b in s.q]
        en = [float(np.linalg.norm(b)) for layer in s.e for b in layer]
        self.rows.append((s.sweep, qn, en))

    def __len__(self) -> int:
        return len(self.rows)

    def header(self) -> list[str]:
        cols = ["sweep"] + [f"q_{m}" for m in range(1, self.n + 1)]
        cols += [f"e_{i}_{m}" for i in range(self.theta) for m in range(1, self.n)]
        return cols

    def q_norms(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows]).reshape(len(self.rows), self.n)

    def e_norms(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows]).reshape(len(self.rows), self.theta * (self.n - 1))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for k, qn, en in self.rows:
            buf.write(",".join([str(k)] + [repr(v) for v in qn + en]) + "\n")
        return buf.getvalue()


class RunResult(NamedTuple):
    state: HungryState
    trace: SweepTrace
    status: ConvergenceStatus


def run(
    s: HungryState,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    rcond_floor: float = DEFAULT_RCOND_FLOOR,
) -> RunResult:
    """Sweep until every e-block is below ``tol`` in Frobenius norm.

    At least one sweep is always performed, so a state with vanishing e-layers
    comes back unchanged and converged after one sweep. ``max_sweeps=0`` returns
    the input untouched as not converged. A breakdown stops the loop; the state
    returned is the last one completed and ``trace.breakdown`` holds the error.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_sweeps < 0:
        raise ValueError("max_sweeps must be non-negative")
    trace = SweepTrace(s.n, s.theta)
    cur = s
    for _ in range(max_sweeps):
        try:
            cur = sweep(cur, rcond_floor)
        except Breakdown as exc:
            trace.breakdown = exc
            return RunResult(cur, trace, ConvergenceStatus.BREAKDOWN)
        trace.record(cur)
        if cur.max_e_norm() < tol:
            return RunResult(cur, trace, ConvergenceStatus.CONVERGED)
    return RunResult(cur, trace, ConvergenceStatus.NOT_CONVERGED)


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def to_records(self) -> list[dict]:
        return [
            {"re": float(v.real), "im": float(v.imag), "residual": float(r)}
            for v, r in zip(self.values, self.residuals)
        ]


def sort_spectrum(values, rel: float = 1e-10) -> np.ndarray:
    """Ascending modulus; values whose moduli agree to ``rel`` are ordered by imaginary part."""
    vals = sorted(np.asarray(values, dtype=complex), key=abs)
    out, group = [], []
    for v in vals:
        if group and not math.isclose(abs(v), abs(group[0]), rel_tol=rel, abs_tol=rel):
            out.extend(sorted(group, key=lambda z: z.imag))
            group = []
        group.append(v)
    out.extend(sorted(group, key=lambda z: z.imag))
    return np.array(out, dtype=complex)


def spectrum_residuals(values, reference: np.ndarray) -> np.ndarray:
    """``sigma_min(J - lam I) / |J|_F`` for each value."""
    scale = max(float(np.linalg.norm(reference)), np.finfo(float).tiny)
    return np.array([smallest_singular_value(reference, v) / scale for v in values])


def extract_spectrum(s: HungryState, tol: float = 1e-10, reference: np.ndarray | None = None) -> Spectrum:
    """Eigenvalues of the diagonal q-blocks, certified against ``reference``.

    ``reference`` is a dense matrix similar to the input (normally the assembled
    starting grid); the current assembled grid is used when omitted.
    """
    vals = sort_spectrum(np.concatenate([small_eigenvalues(b, tol) for b in s.q]))
    ref = s.assemble().to_dense() if reference is None else np.asarray(reference, dtype=float)
    return Spectrum(vals, spectrum_residuals(vals, ref))
