"""Theta-deformed bilinear form over a discrete matrix measure.

Everything here is a finite sum over the atoms ``(x_i, W_i)`` of a
:class:`DiscreteMeasure`, so every identity can be checked to rounding error.
Matrix polynomials are ``(deg + 1, p, p)`` arrays of coefficients in ascending
powers.

Lattice variables come out of the normalization factors ``H_n^(a)`` as block
ratios; the transposes are applied exactly where the Q-side transformations
need them::

    q_{n+1}^(a)^T = (H_n^(a))^-1 H_n^(a+theta)
    e_n^(a)^T     = (H_{n-1}^(a+1))^-1 H_n^(a)
    w_{n+1}^(a)   = H_n^(a+1) (H_n^(a))^-1
    eps_n^(a)     = H_n^(a) (H_{n-1}^(a+theta))^-1
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .blockmat import DEFAULT_RCOND_FLOOR, as_block, block_frobenius, lu_checked, lu_solve
from .errors import DimensionError, SingularMinor
from .quasidet import quasidet, solve_left


@dataclass(frozen=True)
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 1:
            w = w[:, None, None]
        if w.ndim != 3 or w.shape[0] != x.size or w.shape[1] != w.shape[2]:
            raise DimensionError("need one square weight block per node")
        if x.size == 0 or not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise ValueError("nodes and weights must be finite and non-empty")
        if np.unique(x).size != x.size:
            raise ValueError("nodes must be distinct")
        for k, wk in enumerate(w):
            if not np.allclose(wk, wk.T, rtol=1e-13, atol=1e-13 * np.abs(wk).max()):
                raise ValueError(f"weight {k} is not symmetric")
            try:
                np.linalg.cholesky(wk)
            except np.linalg.LinAlgError:
                raise ValueError(f"weight {k} is not positive definite") from None
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @property
    def p(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def from_dict(cls, d: dict) -> tuple["DiscreteMeasure", int]:
        """Parse ``{"p", "theta", "nodes", "weights"}``; returns ``(measure, theta)``."""
        m = cls(d["nodes"], d["weights"])
        if int(d["p"]) != m.p:
            raise DimensionError(f"declared p={d['p']} but weights are {m.p}x{m.p}")
        theta = int(d["theta"])
        if theta < 1:
            raise ValueError("theta must be a positive integer")
        return m, theta

    @classmethod
    def load(cls, path) -> tuple["DiscreteMeasure", int]:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class MomentTable:
    """Moments ``m_g = sum_i x_i^g W_i`` and normalization factors, cached lazily."""

    def __init__(self, measure: DiscreteMeasure, theta: int, rcond_floor: float = DEFAULT_RCOND_FLOOR):
        if int(theta) != theta or theta < 1:
            raise ValueError("theta must be a positive integer")
        self.measure = measure
        self.theta = int(theta)
        self.rcond_floor = rcond_floor
        self._moments: dict[int, np.ndarray] = {}
        self._h: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def p(self) -> int:
        return self.measure.p

    def moment(self, gamma: int) -> np.ndarray:
        if gamma < 0:
            raise ValueError("moment order must be non-negative")
        m = self._moments.get(gamma)
        if m is None:
            x, w = self.measure.nodes, self.measure.weights
            m = np.einsum("i,ijk->jk", x ** gamma, w)
            m.setflags(write=False)
            with self._lock:
                m = self._moments.setdefault(gamma, m)
        return m

    def grid(self, alpha: int, rows: int, cols: int | None = None) -> np.ndarray:
        """Block grid with entries ``m_{alpha + i + j*theta}``."""
        cols = rows if cols is None else cols
        p = self.p
        g = np.empty((rows, cols, p, p))
        for i in range(rows):
            for j in range(cols):
                g[i, j] = self.moment(alpha + i + j * self.theta)
        return g

    def h(self, n: int, alpha: int) -> np.ndarray:
        key = (n, alpha)
        val = self._h.get(key)
        if val is None:
            try:
                val = quasidet(self.grid(alpha, n + 1), n, n, self.rcond_floor)
            except SingularMinor as exc:
                raise SingularMinor(
                    f"moment condition violated at n={n}, alpha={alpha}: {exc}", exc.rcond
                ) from None
            val.setflags(write=False)
            with self._lock:
                val = self._h.setdefault(key, val)
        return val


def moment(gamma: int, t: MomentTable) -> np.ndarray:
    return t.moment(gamma)


def normalization_h(n: int, alpha: int, t: MomentTable) -> np.ndarray:
    """Corner quasi-determinant of the ``(n+1) x (n+1)`` grid ``m_{alpha+i+j*theta}``."""
    if n < 0 or alpha < 0:
        raise ValueError("need n >= 0 and alpha >= 0")
    return t.h(n, alpha)


def polyval(coeffs: np.ndarray, x: float) -> np.ndarray:
    acc = np.zeros(coeffs.shape[1:])
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def monomial(k: int, p: int) -> np.ndarray:
    c = np.zeros((k + 1, p, p))
    c[k] = np.eye(p)
    return c


def shift(coeffs: np.ndarray, k: int = 1) -> np.ndarray:
    """Multiply a matrix polynomial by ``x^k``."""
    p = coeffs.shape[1]
    return np.concatenate([np.zeros((k, p, p)), coeffs])


def bilinear(f: np.ndarray, g: np.ndarray, alpha: int, t: MomentTable) -> np.ndarray:
    """``<f, g>^alpha = sum_i f(x_i) x_i^alpha W_i g(x_i^theta)^T``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    out = np.zeros((t.p, t.p))
    for x, w in zip(t.measure.nodes, t.measure.weights):
        out += polyval(f, x) @ (x ** alpha * w) @ polyval(g, x ** t.theta).T
    return out


def polyabs(coeffs: np.ndarray, x: float) -> float:
    """``sum_k |c_k|_F |x|^k``: the magnitude of the arithmetic behind ``polyval``."""
    return float(sum(block_frobenius(c) * abs(x) ** k for k, c in enumerate(coeffs)))


def bilinear_scale(f: np.ndarray, g: np.ndarray, alpha: int, t: MomentTable) -> float:
    """``sum_i |f|(x_i) |x_i^alpha W_i| |g|(x_i^theta)``, the size of the terms in ``<f, g>``."""
    tot = 0.0
    for x, w in zip(t.measure.nodes, t.measure.weights):
        tot += polyabs(f, x) * block_frobenius(x ** alpha * w) * polyabs(g, x ** t.theta)
    return tot


def _rel(residual: np.ndarray, *terms: np.ndarray) -> float:
    scale = sum(block_frobenius(a) for a in terms)
    return block_frobenius(residual) / max(scale, np.finfo(float).tiny)


def _term(c, f: np.ndarray, x: float) -> tuple[np.ndarray, float]:
    """``c f(x)`` with its magnitude ``|c| |f|(x)``; ``c`` is a scalar or a block."""
    c = np.asarray(c, dtype=float)
    return c @ polyval(f, x) if c.ndim else c * polyval(f, x), block_frobenius(c) * polyabs(f, x)


def _balance(lhs: tuple, *terms: tuple) -> float:
    """Relative residual of ``lhs = sum(terms)`` for ``(value, magnitude)`` pairs."""
    r = lhs[0] - sum(v for v, _ in terms)
    scale = lhs[1] + sum(m for _, m in terms)
    return block_frobenius(r) / max(scale, np.finfo(float).tiny)


@dataclass(frozen=True)
class PolynomialFamily:
    """Monic polynomials of degrees ``0..n`` for the weight ``x^alpha W``."""

    kind: str
    alpha: int
    polys: tuple = field(repr=False)

    @property
    def degree(self) -> int:
        return len(self.polys) - 1

    def __getitem__(self, k: int) -> np.ndarray:
        return self.polys[k]

    def __call__(self, k: int, x: float) -> np.ndarray:
        return polyval(self.polys[k], x)


def _family_member(kind: str, n: int, alpha: int, t: MomentTable) -> np.ndarray:
    p = t.p
    coeffs = monomial(n, p)
    if n == 0:
        return coeffs
    gram = t.grid(alpha, n)  # gram[k, i] = <x^k, x^i>^alpha
    if kind == "P":
        # <P_n, x^i> = 0: sum_k c_k gram[k, i] = -m_{alpha+n+i*theta}; transpose to a left system.
        a = gram.transpose(1, 0, 3, 2)
        rhs = [-t.moment(alpha + n + i * t.theta).T for i in range(n)]
        sol = solve_left(a, rhs, t.rcond_floor)
        lower = [s.T for s in sol]
    elif kind == "Q":
        # <x^i, Q_n> = 0: sum_k gram[i, k] d_k^T = -m_{alpha+i+n*theta}.
        rhs = [-t.moment(alpha + i + n * t.theta) for i in range(n)]
        sol = solve_left(gram, rhs, t.rcond_floor)
        lower = [s.T for s in sol]
    else:
        raise ValueError(f"kind must be 'P' or 'Q', got {kind!r}")
    coeffs[:n] = np.array(lower)
    return coeffs


def build_family(kind: str, n: int, alpha: int, t: MomentTable) -> PolynomialFamily:
    """Monic bi-orthogonal family up to degree ``n`` from the orthogonality conditions."""
    if n < 0 or alpha < 0:
        raise ValueError("need n >= 0 and alpha >= 0")
    polys = tuple(_family_member(kind, k, alpha, t) for k in range(n + 1))
    return PolynomialFamily(kind, alpha, polys)


def quasidet_member(kind: str, n: int, alpha: int, t: MomentTable, x: float) -> np.ndarray:
    """Evaluate ``P_n^(alpha)(x)`` or ``Q_n^(alpha)(x)`` by expanding its quasi-determinant.

    Independent of :func:`build_family`; the Q expression yields ``Q_n(x)^T``
    and is transposed back.
    """
    p = t.p
    powers = [x ** k * np.eye(p) for k in range(n + 1)]
    if kind == "P":
        g = np.empty((n + 1, n + 1, p, p))
        g[:, :n] = t.grid(alpha, n + 1, n)
        g[:, n] = powers
        return quasidet(g, n, n, t.rcond_floor)
    if kind == "Q":
        g = np.empty((n + 1, n + 1, p, p))
        g[:n] = t.grid(alpha, n, n + 1)
        g[n] = powers
        return quasidet(g, n, n, t.rcond_floor).T
    raise ValueError(f"kind must be 'P' or 'Q', got {kind!r}")


def check_biorthogonality(P: PolynomialFamily, Q: PolynomialFamily, t: MomentTable) -> float:
    """Largest relative violation of ``<P_n, Q_m> = delta_nm H_n``.

    Each pairing is measured against :func:`bilinear_scale` of its arguments.
    """
    if P.alpha != Q.alpha:
        raise ValueError("families belong to different alpha")
    a = P.alpha
    worst = 0.0
    for n in range(P.degree + 1):
        for m in range(Q.degree + 1):
            val = bilinear(P[n], Q[m], a, t)
            target = t.h(n, a) if n == m else np.zeros_like(val)
            scale = max(bilinear_scale(P[n], Q[m], a, t), block_frobenius(target), np.finfo(float).tiny)
            worst = max(worst, block_frobenius(val - target) / scale)
    return worst


class LatticeCoefficients(NamedTuple):
    q: np.ndarray
    e: np.ndarray
    omega: np.ndarray
    eps: np.ndarray


def _left_div(a: np.ndarray, b: np.ndarray, t: MomentTable) -> np.ndarray:
    """``a^{-1} b`` with the table's rcond floor."""
    factors, _ = lu_checked(a, t.rcond_floor)
    return lu_solve(factors, b)


def _right_div(a: np.ndarray, b: np.ndarray, t: MomentTable) -> np.ndarray:
    """``a b^{-1}``."""
    return _left_div(b.T, a.T, t).T


def coefficient_q(n: int, alpha: int, t: MomentTable) -> np.ndarray:
    return _left_div(t.h(n - 1, alpha), t.h(n - 1, alpha + t.theta), t).T


def coefficient_e(n: int, alpha: int, t: MomentTable) -> np.ndarray:
    if n == 0:
        return np.zeros((t.p, t.p))
    return _left_div(t.h(n - 1, alpha + 1), t.h(n, alpha), t).T


def coefficient_omega(n: int, alpha: int, t: MomentTable) -> np.ndarray:
    return _right_div(t.h(n - 1, alpha + 1), t.h(n - 1, alpha), t)


def coefficient_eps(n: int, alpha: int, t: MomentTable) -> np.ndarray:
    if n == 0:
        return np.zeros((t.p, t.p))
    return _right_div(t.h(n, alpha), t.h(n - 1, alpha + t.theta), t)


def lattice_coefficients(n: int, alpha: int, t: MomentTable) -> LatticeCoefficients:
    """``(q_n, e_n, omega_n, eps_n)`` at level ``alpha`` for ``n >= 1``."""
    if n < 1:
        raise ValueError("lattice coefficients are indexed from n = 1")
    return LatticeCoefficients(
        coefficient_q(n, alpha, t),
        coefficient_e(n, alpha, t),
        coefficient_omega(n, alpha, t),
        coefficient_eps(n, alpha, t),
    )


@dataclass(frozen=True)
class RecurrenceCoefficients:
    """``kappa[j]`` for ``n-1 <= j <= n+theta-1`` and ``ell[j]`` for ``max(0, n-theta) <= j <= n``."""

    n: int
    alpha: int
    kappa: dict
    ell: dict


def recurrence_coefficients(n: int, alpha: int, t: MomentTable) -> RecurrenceCoefficients:
    th = t.theta
    P = build_family("P", n + th, alpha, t)
    Q = build_family("Q", n + th, alpha, t)
    kappa = {}
    for j in range(max(0, n - 1), n + th):
        kappa[j] = _right_div(bilinear(P[n], shift(Q[j]), alpha, t), t.h(j, alpha), t)
    ell = {}
    for j in range(max(0, n - th), n + 1):
        # <P_j, x Q_n> = H_j ell_{n,j}^T
        ell[j] = _left_div(t.h(j, alpha), bilinear(P[j], shift(Q[n]), alpha, t), t).T
    return RecurrenceCoefficients(n, alpha, kappa, ell)


def recurrence_residuals(n: int, alpha: int, t: MomentTable) -> tuple[float, float]:
    """Max node-wise relative residuals of the P (x^theta) and Q (x) recurrences."""
    th = t.theta
    rc = recurrence_coefficients(n, alpha, t)
    P = build_family("P", n + th, alpha, t)
    Q = build_family("Q", n + th, alpha, t)
    rp = rq = 0.0
    for x in t.measure.nodes:
        terms = [_term(1.0, P[n + th], x)] + [_term(k, P[j], x) for j, k in rc.kappa.items()]
        rp = max(rp, _balance(_term(x ** th, P[n], x), *terms))
        terms = [_term(1.0, Q[n + 1], x)] + [_term(ell, Q[j], x) for j, ell in rc.ell.items()]
        rq = max(rq, _balance(_term(x, Q[n], x), *terms))
    return rp, rq


def recurrence_matrix(n: int, alpha: int, t: MomentTable) -> np.ndarray:
    """Dense ``n p x n p`` matrix of the truncated Q recurrence ``x Psi = J Psi``."""
    p = t.p
    out = np.zeros((n, n, p, p))
    for r in range(n):
        if r + 1 < n:
            out[r, r + 1] = np.eye(p)
        for j, ell in recurrence_coefficients(r, alpha, t).ell.items():
            out[r, j] = ell
    return out.transpose(0, 2, 1, 3).reshape(n * p, n * p)


def transformation_residuals(n: int, alpha: int, t: MomentTable) -> dict[str, float]:
    """Node-wise relative residuals of the Christoffel and Geronimus transformations at degree ``n``.

    Keys: ``christoffel_p``, ``geronimus_p``, ``christoffel_q``, ``geronimus_q``.
    """
    th = t.theta
    fam = {}

    def member(kind, deg, a):
        key = (kind, a)
        if key not in fam or fam[key].degree < deg:
            fam[key] = build_family(kind, n + 1, a, t)
        return fam[key][deg]

    w = coefficient_omega(n + 1, alpha, t)
    q = coefficient_q(n + 1, alpha, t)
    out = dict.fromkeys(("christoffel_p", "geronimus_p", "christoffel_q", "geronimus_q"), 0.0)
    for x in t.measure.nodes:
        term = lambda c, kind, deg, a: _term(c, member(kind, deg, a), x)  # noqa: E731

        def note(key, lhs, *terms):
            out[key] = max(out[key], _balance(lhs, *terms))

        note("christoffel_p", term(x, "P", n, alpha + 1), term(1.0, "P", n + 1, alpha), term(w, "P", n, alpha))
        note("christoffel_q", term(x, "Q", n, alpha + th), term(1.0, "Q", n + 1, alpha), term(q, "Q", n, alpha))
        if n >= 1:
            eps = coefficient_eps(n, alpha, t)
            e = coefficient_e(n, alpha, t)
            note("geronimus_p", term(1.0, "P", n, alpha), term(1.0, "P", n, alpha + th), term(eps, "P", n - 1, alpha + th))
            note("geronimus_q", term(1.0, "Q", n, alpha), term(1.0, "Q", n, alpha + 1), term(e, "Q", n - 1, alpha + 1))
    return out


def tau_identity_sides(n: int, alpha: int, t: MomentTable, printed_order: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the bilinear identity satisfied by ``H_n^(alpha)`` (``n >= 1``)::

        H_{n+1}^(a) = H_n^(a+th+1) + H_n^(a+1) [(H_{n-1}^(a+th+1))^-1 - (H_n^(a))^-1] H_n^(a+th)

    With ``printed_order=True`` the two outer factors are swapped; the two forms
    agree only when ``theta == 1`` or ``p == 1``.
    """
    th = t.theta
    h = t.h
    inv = lambda a: _left_div(a, np.eye(t.p), t)  # noqa: E731
    left, right = h(n, alpha + 1), h(n, alpha + th)
    if printed_order:
        left, right = right, left
    lhs = h(n + 1, alpha)
    rhs = h(n, alpha + th + 1) + left @ (inv(h(n - 1, alpha + th + 1)) - inv(h(n, alpha))) @ right
    return lhs, rhs


def tau_identity_residual(n: int, alpha: int, t: MomentTable, printed_order: bool = False) -> float:
    """Relative gap between the two sides of :func:`tau_identity_sides`.

    The scale is the sum of the norms of the three terms on the right.
    """
    th = t.theta
    h = t.h
    inv = lambda a: _left_div(a, np.eye(t.p), t)  # noqa: E731
    left, right = h(n, alpha + 1), h(n, alpha + th)
    if printed_order:
        left, right = right, left
    terms = (
        h(n, alpha + th + 1),
        left @ inv(h(n - 1, alpha + th + 1)) @ right,
        -left @ inv(h(n, alpha)) @ right,
    )
    lhs = h(n + 1, alpha)
    return _rel(lhs - sum(terms), lhs, *terms)


def quasi_symmetry_residual(f: np.ndarray, g: np.ndarray, alpha: int, t: MomentTable) -> float:
    """``|<x^theta f, g> - <f, x g>|_F`` relative to the size of the summed terms."""
    r = bilinear(shift(f, t.theta), g, alpha, t) - bilinear(f, shift(g), alpha, t)
    scale = bilinear_scale(shift(f, t.theta), g, alpha, t)
    return block_frobenius(r) / max(scale, np.finfo(float).tiny)


def bimodule_residuals(f1, f2, g1, g2, mats, alpha: int, t: MomentTable) -> tuple[float, float]:
    """Left and right linearity residuals for constant blocks ``mats = (L1, L2, R1, R2)``.

    Both are relative to the norms of the expanded right-hand sides' terms.
    """
    l1, l2, r1, r2 = (as_block(m) for m in mats)
    lmul = lambda c, f: np.einsum("ij,kjl->kil", c, f)  # noqa: E731
    pad = max(len(f1), len(f2), len(g1), len(g2))

    def padded(f):
        return np.concatenate([f, np.zeros((pad - len(f),) + f.shape[1:])])

    f1, f2, g1, g2 = map(padded, (f1, f2, g1, g2))
    a, b = l1 @ bilinear(f1, g1, alpha, t), l2 @ bilinear(f2, g1, alpha, t)
    left = bilinear(lmul(l1, f1) + lmul(l2, f2), g1, alpha, t)
    c, d = bilinear(f1, g1, alpha, t) @ r1.T, bilinear(f1, g2, alpha, t) @ r2.T
    right = bilinear(f1, lmul(r1, g1) + lmul(r2, g2), alpha, t)
    return _rel(left - a - b, left, a, b), _rel(right - c - d, right, c, d)
