"""Constraint systems of the Lame curve Y_n and Newton charts on it.

A configuration ``a`` lies on ``Y_n`` when

    g^i(a) = sum_{j != i} zeta(a_i - a_j) + zeta(a_j) - zeta(a_i) = 0,

for ``i = 1..n-1`` (the n equations sum to zero).  On ``Y_n`` the numbers
``B = (2n-1) sum wp(a_i)`` and ``C = wp'(a_i) prod_{j != i} (wp(a_i) - wp(a_j))``
satisfy ``C^2 = l_n(B)``; ``C`` is the local coordinate used by the Newton chart.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import Lattice, sigma_w, torus_distance, wp, wp_and_prime, zeta_w
from .errors import DegenerateError, InconsistencyError, PoleError, UnsupportedError
from .green import Configuration, as_config
from .newton import damped_newton

__all__ = [
    "CurvePointData",
    "constraint_zeta",
    "constraint_fc7",
    "constraint_fc8",
    "constraint_jacobian",
    "complex_jacobian_minor",
    "C_values",
    "B_of",
    "C_of",
    "C_gradient",
    "lame_poly",
    "lame_poly_factored",
    "curve_relation_defect",
    "hermite_halphen",
    "hh_log_derivative",
    "lame_residual",
    "lame_relative_residual",
    "wronskian",
    "newton_on_curve",
    "continue_on_curve",
    "project_to_curve",
]

NEWTON_TOL = 1e-10
C_SPREAD_TOL = 1e-9


@dataclass(frozen=True)
class CurvePointData:
    config: Configuration
    B: complex
    C: complex
    residual: float
    iterations: int = 0


def _arr(a) -> np.ndarray:
    return as_config(a).a


def constraint_zeta(a, L: Lattice, *, full: bool = False) -> np.ndarray:
    """``(g^1, ..., g^{n-1})``; with ``full=True`` all n equations."""
    a = _arr(a)
    n = a.size
    rows = n if full else n - 1
    za = zeta_w(a, L)
    out = np.zeros(rows, dtype=complex)
    for i in range(rows):
        for j in range(n):
            if j != i:
                out[i] += zeta_w(a[i] - a[j], L) + za[j] - za[i]
    return out


def _distinct_wp(pa: np.ndarray, tol: float = 1e-12):
    n = pa.size
    sc = max(1.0, float(np.max(np.abs(pa), initial=0.0)))
    for i in range(n):
        for j in range(i):
            if abs(pa[i] - pa[j]) <= tol * sc:
                raise DegenerateError(f"wp(a_{j + 1}) = wp(a_{i + 1})")


def constraint_fc7(a, L: Lattice) -> np.ndarray:
    """``sum_{j != i} (wp'(a_i) + wp'(a_j)) / (wp(a_i) - wp(a_j))`` for each i."""
    a = _arr(a)
    pa, dpa = wp_and_prime(a, L)
    _distinct_wp(pa)
    n = a.size
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        for j in range(n):
            if j != i:
                out[i] += (dpa[i] + dpa[j]) / (pa[i] - pa[j])
    return out


def constraint_fc8(a, L: Lattice) -> np.ndarray:
    """Power sums ``sum_i wp'(a_i) wp(a_i)^l`` for ``0 <= l <= n-2``."""
    a = _arr(a)
    pa, dpa = wp_and_prime(a, L)
    _distinct_wp(pa)
    return np.array([np.sum(dpa * pa**k) for k in range(a.size - 1)], dtype=complex)


def constraint_jacobian(a, L: Lattice, *, full: bool = False) -> np.ndarray:
    """Complex Jacobian ``d g^i / d a_j``, shape ``(n-1, n)`` (``(n, n)`` if ``full``)."""
    a = _arr(a)
    n = a.size
    rows = n if full else n - 1
    pa = wp(a, L)
    out = np.zeros((rows, n), dtype=complex)
    for i in range(rows):
        for k in range(n):
            if k == i:
                continue
            pik = wp(a[i] - a[k], L)
            out[i, i] += pa[i] - pik
            out[i, k] = pik - pa[k]
    return out


def complex_jacobian_minor(a, L: Lattice, omit: int | None = None) -> np.ndarray:
    """``(n-1) x (n-1)`` minor of :func:`constraint_jacobian` without column ``omit``.

    ``omit`` is 0-based and defaults to the last index.  For n = 1 the
    result is the empty matrix (determinant 1).
    """
    a = _arr(a)
    n = a.size
    if omit is None:
        omit = n - 1
    jac = constraint_jacobian(a, L)
    keep = [k for k in range(n) if k != omit]
    return jac[:, keep]


def C_values(a, L: Lattice) -> np.ndarray:
    """``C`` computed from every index ``i``."""
    a = _arr(a)
    pa, dpa = wp_and_prime(a, L)
    n = a.size
    out = np.empty(n, dtype=complex)
    for i in range(n):
        prod = 1.0 + 0j
        for j in range(n):
            if j != i:
                prod *= pa[i] - pa[j]
        out[i] = dpa[i] * prod
    return out


def B_of(a, L: Lattice) -> complex:
    a = _arr(a)
    return complex((2 * a.size - 1) * np.sum(wp(a, L)))


def C_of(a, L: Lattice, *, tol: float = C_SPREAD_TOL, residual_tol: float = NEWTON_TOL) -> complex:
    """Mean of :func:`C_values`.

    Raises ``InconsistencyError`` when the constraint residual says ``a`` is on
    the curve but the per-index values disagree by more than ``tol`` relative
    to ``max(1, |C|, s^(n+1/2))`` with ``s = max|e_k|`` (C has weight 2n+1).
    """
    vals = C_values(a, L)
    spread = float(np.max(np.abs(vals - vals[0]))) if vals.size > 1 else 0.0
    mean = complex(np.mean(vals))
    if spread > tol * max(float(np.max(np.abs(vals))), _c_scale(L, vals.size)):
        res = np.max(np.abs(constraint_zeta(a, L)), initial=0.0)
        if res < residual_tol:
            raise InconsistencyError(f"C(a) depends on the index (spread {spread:.3e}) on the curve")
    return mean


def C_gradient(a, L: Lattice, index: int | None = None) -> np.ndarray:
    """Complex gradient of ``C`` computed from ``index`` (default: mean over all)."""
    a = _arr(a)
    n = a.size
    pa, dpa = wp_and_prime(a, L)
    ppa = 6.0 * pa * pa - L.g2 / 2.0
    idx = range(n) if index is None else [index]
    grad = np.zeros(n, dtype=complex)
    for i in idx:
        others = [j for j in range(n) if j != i]
        diffs = {j: pa[i] - pa[j] for j in others}
        prod = np.prod([diffs[j] for j in others]) if others else 1.0
        dsum = 0j
        for j in others:
            rest = np.prod([diffs[m] for m in others if m != j]) if len(others) > 1 else 1.0
            dsum += rest
            grad[j] += -dpa[i] * dpa[j] * rest
        grad[i] += ppa[i] * prod + dpa[i] * dpa[i] * dsum
    return grad / len(idx)


# --------------------------------------------------------------------------
# spectral polynomial


def lame_poly(n: int, L: Lattice) -> np.ndarray:
    """Coefficients of ``l_n(B)`` in descending powers (n = 1, 2)."""
    g2, g3 = L.g2, L.g3
    if n == 1:
        return np.array([4.0, 0.0, -g2, -g3], dtype=complex)
    if n == 2:
        return np.array([4.0 / 81.0, 0.0, -7.0 / 27.0 * g2, g3 / 3.0, g2 * g2 / 3.0, -g2 * g3], dtype=complex)
    raise UnsupportedError(f"l_n(B) is only available for n = 1, 2 (got n = {n})")


def lame_poly_factored(n: int, B, L: Lattice):
    """``4 prod (B - e_i)`` for n = 1, ``(4/81)(B^2 - 3 g2) prod (B + 3 e_i)`` for n = 2."""
    B = np.asarray(B, dtype=complex)
    e1, e2, e3 = L.e
    if n == 1:
        return 4.0 * (B - e1) * (B - e2) * (B - e3)
    if n == 2:
        return 4.0 / 81.0 * (B * B - 3.0 * L.g2) * (B + 3 * e1) * (B + 3 * e2) * (B + 3 * e3)
    raise UnsupportedError(f"l_n(B) is only available for n = 1, 2 (got n = {n})")


def curve_relation_defect(a, L: Lattice) -> float:
    """``|C^2 - l_n(B)| / max(1, |l_n(B)|)`` for n <= 2."""
    a = _arr(a)
    B = B_of(a, L)
    C = C_of(a, L)
    ell = complex(np.polyval(lame_poly(a.size, L), B))
    return abs(C * C - ell) / max(1.0, abs(ell))


# --------------------------------------------------------------------------
# Hermite-Halphen solutions


def _check_away(z, a, L: Lattice, radius: float = 1e-6):
    if torus_distance(z, 0.0, L) < radius or any(torus_distance(z, ai, L) < radius for ai in a):
        raise PoleError("z too close to 0 or to a configuration point")


def hermite_halphen(a, z, L: Lattice) -> complex:
    """``y_a(z) = exp(z sum zeta(a_i)) prod sigma(z - a_i) / sigma(z)^n``."""
    a = _arr(a)
    z = complex(z)
    _check_away(z, a, L)
    zsum = complex(np.sum(zeta_w(a, L)))
    num = np.prod(sigma_w(z - a, L))
    return complex(np.exp(z * zsum) * num / sigma_w(z, L) ** a.size)


def hh_log_derivative(a, z, L: Lattice) -> tuple[complex, complex]:
    """First and second derivatives of ``log y_a`` at ``z``."""
    a = _arr(a)
    z = complex(z)
    _check_away(z, a, L)
    n = a.size
    d1 = complex(np.sum(zeta_w(a, L)) + np.sum(zeta_w(z - a, L)) - n * zeta_w(z, L))
    d2 = complex(-np.sum(wp(z - a, L)) + n * wp(z, L))
    return d1, d2


def lame_residual(a, z, L: Lattice, B: complex | None = None) -> complex:
    """``y_a'' - (n(n+1) wp(z) + B) y_a`` with ``B = B_a`` unless given."""
    a = _arr(a)
    n = a.size
    if B is None:
        B = B_of(a, L)
    y = hermite_halphen(a, z, L)
    d1, d2 = hh_log_derivative(a, z, L)
    return complex(y * (d2 + d1 * d1 - n * (n + 1) * wp(z, L) - B))


def lame_relative_residual(a, z, L: Lattice, B: complex | None = None) -> float:
    """``|y''/y - (n(n+1) wp + B)|`` relative to ``max(1, |n(n+1) wp| + |B|)``."""
    a = _arr(a)
    n = a.size
    if B is None:
        B = B_of(a, L)
    d1, d2 = hh_log_derivative(a, z, L)
    pz = wp(z, L)
    return abs(d2 + d1 * d1 - n * (n + 1) * pz - B) / max(1.0, abs(n * (n + 1) * pz) + abs(B))


def wronskian(a, b, z, L: Lattice, *, relative: bool = True):
    """Wronskian of ``(y_a, y_b)`` at ``z``; relative to ``|y_a y_b| max(1, |(log y_a)'|)``."""
    ya, yb = hermite_halphen(a, z, L), hermite_halphen(b, z, L)
    la, _ = hh_log_derivative(a, z, L)
    lb, _ = hh_log_derivative(b, z, L)
    w = ya * yb * (lb - la)
    if not relative:
        return complex(w)
    return abs(w) / (abs(ya * yb) * max(1.0, abs(la)))


# --------------------------------------------------------------------------
# Newton charts


def _c_scale(L: Lattice, n: int) -> float:
    return max(1.0, L.scale) ** (n + 0.5)


def newton_on_curve(
    seed,
    target_C: complex,
    L: Lattice,
    *,
    tol: float = NEWTON_TOL,
    maxiter: int = 50,
) -> CurvePointData:
    """Solve ``g^1 = ... = g^{n-1} = 0, C(a) = target_C`` starting from ``seed``.

    The ``C`` row is divided by ``max(1, max|e_k|)^(n + 1/2)`` so both blocks
    have comparable size in the line search.
    """
    a0 = _arr(seed)
    n = a0.size
    target_C = complex(target_C)
    sc = _c_scale(L, n)

    def F(x):
        as_config(x).validate(L)
        return np.concatenate([constraint_zeta(x, L), [(np.mean(C_values(x, L)) - target_C) / sc]])

    def J(x):
        return np.vstack([constraint_jacobian(x, L), C_gradient(x, L)[None, :] / sc])

    def converged(x, fx):
        return bool(np.all(np.abs(fx[:-1]) < tol) and abs(fx[-1]) * sc < tol * max(1.0, abs(target_C), sc))

    res = damped_newton(F, J, a0, converged=converged, maxiter=maxiter)
    a = res.x
    return CurvePointData(
        config=Configuration(a),
        B=B_of(a, L),
        C=complex(np.mean(C_values(a, L))),
        residual=float(np.max(np.abs(constraint_zeta(a, L)), initial=0.0)),
        iterations=res.iterations,
    )


def continue_on_curve(seed, C_path, L: Lattice, **kw) -> list[CurvePointData]:
    """Follow ``C`` along ``C_path``, seeding each solve with the previous point.

    The first seed is extrapolated linearly from the two previous solutions
    once they exist.
    """
    out: list[CurvePointData] = []
    prev = _arr(seed)
    for C in C_path:
        guess = prev
        if len(out) >= 2 and out[-1].C != out[-2].C:
            slope = (out[-1].config.a - out[-2].config.a) / (out[-1].C - out[-2].C)
            guess = out[-1].config.a + slope * (C - out[-1].C)
        pt = newton_on_curve(guess, C, L, **kw)
        out.append(pt)
        prev = pt.config.a
    return out


def project_to_curve(seed, L: Lattice, *, fixed: int = -1, tol: float = NEWTON_TOL, maxiter: int = 50) -> CurvePointData:
    """Solve ``g = 0`` for all points but ``a[fixed]``, which stays put."""
    a0 = _arr(seed).copy()
    n = a0.size
    if n < 2:
        return CurvePointData(Configuration(a0), B_of(a0, L), C_of(a0, L), 0.0)
    fixed = fixed % n
    free = [k for k in range(n) if k != fixed]

    def full(x):
        a = a0.copy()
        a[free] = x
        return a

    def F(x):
        a = full(x)
        as_config(a).validate(L)
        return constraint_zeta(a, L)

    def J(x):
        return constraint_jacobian(full(x), L)[:, free]

    res = damped_newton(
        F, J, a0[free], converged=lambda x, fx: bool(np.all(np.abs(fx) < tol)), maxiter=maxiter
    )
    a = full(res.x)
    return CurvePointData(Configuration(a), B_of(a, L), C_of(a, L), res.residual, res.iterations)
