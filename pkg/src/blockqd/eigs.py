"""Eigenvalues of a single small real block.

p = 1 and p = 2 are closed form. Larger blocks are balanced, reduced to upper
Hessenberg form with Householder reflectors and finished with the Francis
double-shift QR iteration (real arithmetic, complex pairs from 2x2 bumps).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NoConvergence

_RADIX = 2.0


def balance(a: np.ndarray) -> np.ndarray:
    """Diagonal similarity (powers of two) equalising row and column norms."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    sqrdx = _RADIX * _RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / _RADIX
            f = 1.0
            s = c + r
            while c < g:
                f *= _RADIX
                c *= sqrdx
            g = r * _RADIX
            while c > g:
                f /= _RADIX
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity transforms."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _hqr(h: np.ndarray, max_its: int = 30) -> np.ndarray:
    """Francis double-shift QR on an upper Hessenberg matrix (destroys ``h``).

    Indices run 1..n to keep the deflation bookkeeping readable.
    """
    n = h.shape[0]
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = h
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    anorm = sum(abs(a[i, j]) for i in range(1, n + 1) for j in range(max(i - 1, 1), n + 1))
    nn = n
    t = 0.0
    x = y = w = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) + s == s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == max_its:
                raise NoConvergence(f"QR iteration did not converge after {max_its} sweeps")
            if its in (10, 20):
                # exceptional shift
                t += x
                for i in range(1, nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
            if l >= nn - 1:
                break
    return wr[1:] + 1j * wi[1:]


def _eig2(b: np.ndarray) -> np.ndarray:
    half_tr = 0.5 * (b[0, 0] + b[1, 1])
    det = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    # discriminant without forming half_tr**2 - det (cancellation)
    d = 0.25 * (b[0, 0] - b[1, 1]) ** 2 + b[0, 1] * b[1, 0]
    if d >= 0.0:
        big = half_tr + math.copysign(math.sqrt(d), half_tr)
        small = det / big if big != 0.0 else half_tr - math.copysign(math.sqrt(d), half_tr)
        return np.array([big, small], dtype=complex)
    im = math.sqrt(-d)
    return np.array([half_tr - 1j * im, half_tr + 1j * im])


def smallest_singular_value(a: np.ndarray, lam: complex) -> float:
    m = np.asarray(a, dtype=complex) - lam * np.eye(a.shape[0])
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def small_eigenvalues(b, tol: float = 1e-10) -> np.ndarray:
    """All eigenvalues of a real square block, certified by ``sigma_min(b - lam I) <= tol |b|_F``."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("expected a square block")
    if not np.all(np.isfinite(b)):
        raise ValueError("block entries must be finite")
    p = b.shape[0]
    if p == 1:
        vals = np.array([complex(b[0, 0])])
    elif p == 2:
        vals = _eig2(b)
    else:
        vals = _hqr(hessenberg(balance(b)))
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    for lam in vals:
        if smallest_singular_value(b, lam) > tol * scale:
            raise NoConvergence(f"eigenvalue {lam} fails the residual certificate")
    return vals
