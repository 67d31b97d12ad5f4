"""Seeded randomized identity suites.

Every trial draws its own generator from ``(seed, trial)`` so a failure can be
replayed in isolation. Residuals are relative: each is divided by the sum of
the norms of the terms that enter the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .blockmat import block_frobenius
from .lattice import (
    TodaIIState,
    check_compatibility,
    toda1_state_from_moments,
    toda1_step,
    toda2_state_from_moments,
    toda2_step,
)
from .moments import (
    DiscreteMeasure,
    MomentTable,
    bimodule_residuals,
    build_family,
    check_biorthogonality,
    quasi_symmetry_residual,
    recurrence_residuals,
    tau_identity_residual,
    transformation_residuals,
)
from .qdalgo import HungryState, sweep
from .quasidet import flatten, homological_sides, jacobi_sides

DEFAULT_TOL = 1e-10
# residuals track roughly 1e-15 times the equilibrated condition of the moment grids
COND_CAP = 1e5
NODE_RANGE = (0.5, 2.0)
SUITES = ("quasidet", "moments", "lattice")


@dataclass
class IdentityResult:
    name: str
    worst: float = 0.0
    worst_trial: int | None = None
    count: int = 0
    tol: float = DEFAULT_TOL

    def update(self, value: float, trial: int) -> None:
        self.count += 1
        v = float(value) if np.isfinite(value) else np.inf
        if self.worst_trial is None or v > self.worst:
            self.worst = v
            self.worst_trial = trial

    @property
    def passed(self) -> bool:
        return self.count > 0 and bool(np.isfinite(self.worst)) and self.worst <= self.tol


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def random_quasigrid(rng: np.random.Generator, k: int, p: int, boost: float = 3.0) -> np.ndarray:
    """Gaussian ``k x k`` grid of ``p x p`` blocks with ``boost * I`` added on the block diagonal."""
    g = rng.standard_normal((k, k, p, p))
    for i in range(k):
        g[i, i] += boost * np.eye(p)
    return g


def random_spd(rng: np.random.Generator, p: int) -> np.ndarray:
    a = rng.standard_normal((p, p))
    return a @ a.T / p + 0.5 * np.eye(p)


def random_measure(
    rng: np.random.Generator, nodes: int, p: int, lo: float = NODE_RANGE[0], hi: float = NODE_RANGE[1]
) -> DiscreteMeasure:
    """Nodes with magnitude in ``[lo, hi]`` and random sign, SPD weights.

    Mixed signs keep the Hankel-type moment grids far better conditioned than
    nodes confined to the positive axis.
    """
    gap = 0.25 * (hi - lo) / nodes
    while True:
        x = np.sort(rng.uniform(lo, hi, nodes) * rng.choice([-1.0, 1.0], nodes))
        if nodes == 1 or np.min(np.diff(x)) > gap:
            break
    return DiscreteMeasure(x, np.array([random_spd(rng, p) for _ in range(nodes)]))


def equilibrated_cond(g: np.ndarray) -> float:
    """2-norm condition of a flattened grid after symmetric diagonal scaling."""
    a = flatten(g)
    d = 1.0 / np.sqrt(np.maximum(np.abs(np.diag(a)), np.finfo(float).tiny))
    return float(np.linalg.cond(d[:, None] * a * d[None, :]))


def conditioned_table(
    rng: np.random.Generator,
    nodes: int,
    p: int,
    theta: int,
    order: int,
    alphas,
    cap: float = COND_CAP,
    attempts: int = 2000,
) -> MomentTable:
    """Redraw measures until every moment grid of ``order`` at the given shifts is below ``cap``."""
    for _ in range(attempts):
        t = MomentTable(random_measure(rng, nodes, p), theta)
        if all(equilibrated_cond(t.grid(a, order)) <= cap for a in alphas):
            return t
    raise RuntimeError(f"no measure with condition <= {cap:g} after {attempts} draws")


def random_poly(rng: np.random.Generator, deg: int, p: int) -> np.ndarray:
    return rng.standard_normal((deg + 1, p, p))


def _rel(diff: float, *norms: float) -> float:
    return diff / max(sum(norms), np.finfo(float).tiny)


def _state_gap(a, b) -> float:
    """Relative distance between two lattice states, over all blocks together."""
    fa = np.concatenate([np.ravel(x) for x in a])
    fb = np.concatenate([np.ravel(x) for x in b])
    return float(np.linalg.norm(fa - fb) / max(np.linalg.norm(fb), np.finfo(float).tiny))


def _flat_toda2(s: TodaIIState):
    return list(s.q) + [b for layer in s.e for b in layer]


def _flat_toda1(s):
    return [b for layer in s.omega for b in layer] + list(s.eps)


def quasidet_trial(rng: np.random.Generator) -> dict[str, float]:
    k = int(rng.integers(2, 6))
    p = int(rng.integers(1, 4))
    g = random_quasigrid(rng, k, p)
    lhs, rhs = jacobi_sides(g)
    (l1, r1), (l2, r2) = homological_sides(g)
    n = block_frobenius
    return {
        "jacobi": _rel(n(lhs - rhs), n(lhs), n(rhs)),
        "homological_row": _rel(n(l1 - r1), n(l1), n(r1)),
        "homological_col": _rel(n(l2 - r2), n(l2), n(r2)),
    }


def moments_trial(rng: np.random.Generator) -> dict[str, float]:
    p = int(rng.integers(1, 3))
    theta = int(rng.integers(1, 4))
    # recurrences reach degree n + theta; keep it at most 4
    n = int(rng.integers(1, 5 - theta)) if theta < 4 else 1
    alpha = int(rng.integers(0, 3))
    top = n + theta
    t = conditioned_table(rng, top + 2, p, theta, top, range(alpha, alpha + theta + 2))
    out: dict[str, float] = {}
    P = build_family("P", n + 1, alpha, t)
    Q = build_family("Q", n + 1, alpha, t)
    out["biorthogonality"] = check_biorthogonality(P, Q, t)
    f, g = random_poly(rng, 2, p), random_poly(rng, 2, p)
    out["quasi_symmetry"] = quasi_symmetry_residual(f, g, alpha, t)
    mats = [rng.standard_normal((p, p)) for _ in range(4)]
    polys = [random_poly(rng, int(rng.integers(0, 3)), p) for _ in range(4)]
    out["bimodule_left"], out["bimodule_right"] = bimodule_residuals(*polys, mats, alpha, t)
    for key, val in transformation_residuals(n, alpha, t).items():
        out[key] = val
    out["recurrence_p"], out["recurrence_q"] = recurrence_residuals(n, alpha, t)
    out["tau_identity"] = tau_identity_residual(n, alpha, t)
    return out


def lattice_trial(rng: np.random.Generator) -> dict[str, float]:
    p = int(rng.integers(1, 3))
    theta = int(rng.integers(1, 4))
    n = int(rng.integers(1, 5))
    alpha = int(rng.integers(0, 3))
    # exactly n atoms make e_n and eps_n vanish, so the truncated lattice is exact
    t = conditioned_table(rng, n, p, theta, n, range(alpha, alpha + theta + 3))
    out: dict[str, float] = {}
    s = toda2_state_from_moments(n, alpha, t)
    out["toda2_step"] = _state_gap(_flat_toda2(toda2_step(s)), _flat_toda2(toda2_state_from_moments(n, alpha + 1, t)))
    w = toda1_state_from_moments(n, alpha, t)
    out["toda1_step"] = _state_gap(_flat_toda1(toda1_step(w)), _flat_toda1(toda1_state_from_moments(n, alpha + 1, t)))
    ru = s.upper().to_grid() @ s.lower(0).to_grid()
    out["compatibility"] = check_compatibility(s) / max(float(np.linalg.norm(ru.to_dense())), np.finfo(float).tiny)

    # in-place sweep against theta functional steps on a random diagonally boosted state
    m = int(rng.integers(1, 6))
    q = [rng.standard_normal((p, p)) + 4.0 * np.eye(p) for _ in range(m)]
    e = [[0.5 * rng.standard_normal((p, p)) for _ in range(m - 1)] for _ in range(theta)]
    h = HungryState.from_blocks(theta, q, e)
    ref = h.lattice
    for _ in range(theta):
        ref = toda2_step(ref)
    out["sweep_vs_steps"] = _state_gap(_flat_toda2(sweep(h).lattice), _flat_toda2(ref))
    return out


TRIALS: dict[str, Callable[[np.random.Generator], dict[str, float]]] = {
    "quasidet": quasidet_trial,
    "moments": moments_trial,
    "lattice": lattice_trial,
}


def run_suite(name: str, trials: int = 200, seed: int = 0, tol: float = DEFAULT_TOL) -> list[IdentityResult]:
    if name not in TRIALS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    results: dict[str, IdentityResult] = {}
    for k in range(trials):
        for key, val in TRIALS[name](trial_rng(seed, k)).items():
            results.setdefault(key, IdentityResult(key, tol=tol)).update(val, k)
    return list(results.values())
