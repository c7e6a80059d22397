"""Weierstrass functions for the lattice Z + Z*tau.

Everything is evaluated through the odd Jacobi theta function
``theta1(v | q)``, ``q = exp(i*pi*tau)``, on the reduced argument
``z0 = z - m - n*tau`` (``r, s`` in ``[-1/2, 1/2)``); quasi-periodicity
restores zeta and sigma at the original point.  Lattice sums are never
used on the evaluation path.

Conventions: ``omega = (1, tau, 1 + tau)``, ``e_k = wp(omega_k / 2)`` and
``eta_i = zeta(z + omega_i) - zeta(z)``, so that
``eta1 * tau - eta2 = 2*pi*i``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateError, PoleError

__all__ = [
    "Lattice",
    "TorusPoint",
    "make_lattice",
    "reduce",
    "torus_distance",
    "wp",
    "wp_prime",
    "wp_pp",
    "wp_deriv",
    "zeta_w",
    "sigma_w",
    "addition_defect",
    "lattice_residuals",
]

POLE_RADIUS = 1e-3
TAIL_TOL = 1e-16
SLOW_NOME = 0.9


@dataclass(frozen=True, eq=False)
class Lattice:
    """Precomputed data of the torus ``C / (Z + Z*tau)``.

    ``green_shift`` is the additive constant carried by the Green function;
    it is 0 by default and exists so that normalization independence can be
    exercised end to end.
    """

    tau: complex
    omega: tuple[complex, complex, complex]
    g2: complex
    g3: complex
    e: tuple[complex, complex, complex]
    eta1: complex
    eta2: complex
    nome_cutoff: int
    area: float
    q: complex
    theta1_prime0: complex
    green_shift: float = 0.0
    _theta_freq: np.ndarray = field(repr=False, default=None)
    _theta_coef: np.ndarray = field(repr=False, default=None)

    @property
    def b(self) -> float:
        return self.tau.imag

    @property
    def half_periods(self) -> tuple[complex, complex, complex]:
        return tuple(w / 2 for w in self.omega)

    @property
    def scale(self) -> float:
        """Magnitude scale ``max_k |e_k|`` used for relative tolerances."""
        return max(abs(x) for x in self.e)

    def with_green_shift(self, kappa: float) -> "Lattice":
        return replace(self, green_shift=float(kappa))


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus with lattice coordinates ``z = r + s*tau``."""

    z: complex
    r: float
    s: float

    def __complex__(self) -> complex:
        return complex(self.z)


def _cutoff(q_abs: float) -> int:
    if q_abs == 0.0:
        return 1
    return max(1, math.ceil(math.log(TAIL_TOL) / (2.0 * math.log(q_abs))))


def make_lattice(tau: complex, nome_cutoff: int | None = None, green_shift: float = 0.0) -> Lattice:
    """Build the lattice data for modulus ``tau``.

    Parameters
    ----------
    tau : complex
        Modulus with ``Im tau > 0``.  No SL(2, Z) reduction is applied.
    nome_cutoff : int, optional
        Override for the truncation order ``N`` of the q-series.  By default
        the smallest ``N`` with ``|q|**(2N) < 1e-16``.
    green_shift : float
        Additive constant for the Green function (see :class:`Lattice`).
    """
    tau = complex(tau)
    if not tau.imag > 0:
        raise ValueError(f"tau must lie in the upper half plane, got {tau!r}")
    q = np.exp(1j * np.pi * tau)
    if abs(q) > SLOW_NOME:
        warnings.warn(f"|q| = {abs(q):.3f} > {SLOW_NOME}: q-series converge slowly", RuntimeWarning, stacklevel=2)
    N = _cutoff(abs(q)) if nome_cutoff is None else int(nome_cutoff)
    if N < 1:
        raise ValueError("nome_cutoff must be positive")

    # theta1(v) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) v); the sine form
    # keeps full relative accuracy near v = 0.  Two guard terms keep the tail
    # negligible when |Im v| is as large as pi*Im(tau)/2.
    ns = np.arange(0, N + 2)
    freq = (2 * ns + 1).astype(float)
    coef = 2.0 * np.where(ns % 2 == 0, 1.0, -1.0) * np.exp(1j * np.pi * tau * (ns + 0.5) ** 2)

    th1p0 = complex(np.sum(coef * freq))
    th1ppp0 = complex(-np.sum(coef * freq**3))
    eta1 = -(np.pi**2) * th1ppp0 / (3.0 * th1p0)
    eta2 = eta1 * tau - 2j * np.pi

    m = np.arange(-(N + 2), N + 3)
    th2 = complex(2.0 * np.sum(np.exp(1j * np.pi * tau * (ns + 0.5) ** 2)))
    th3 = complex(np.sum(np.exp(1j * np.pi * tau * m**2)))
    th4 = complex(np.sum(np.where(m % 2 == 0, 1.0, -1.0) * np.exp(1j * np.pi * tau * m**2)))
    c = np.pi**2 / 3.0
    e1 = c * (th3**4 + th4**4)
    e2 = -c * (th2**4 + th3**4)
    e3 = c * (th2**4 - th4**4)
    g2 = 2.0 * (e1 * e1 + e2 * e2 + e3 * e3)
    g3 = 4.0 * e1 * e2 * e3

    return Lattice(
        tau=tau,
        omega=(1.0 + 0j, tau, 1.0 + tau),
        g2=complex(g2),
        g3=complex(g3),
        e=(complex(e1), complex(e2), complex(e3)),
        eta1=complex(eta1),
        eta2=complex(eta2),
        nome_cutoff=N,
        area=tau.imag,
        q=complex(q),
        theta1_prime0=th1p0,
        green_shift=float(green_shift),
        _theta_freq=freq,
        _theta_coef=coef,
    )


# --------------------------------------------------------------------------
# reduction and distances


def _lattice_coords(z, L: Lattice):
    z = np.asarray(z, dtype=complex)
    s = z.imag / L.b
    r = z.real - s * L.tau.real
    return r, s


def _reduce_parts(z, L: Lattice):
    """Split ``z = z0 + m + n*tau`` with the coordinates of ``z0`` in [-1/2, 1/2)."""
    r, s = _lattice_coords(z, L)
    m = np.floor(r + 0.5)
    n = np.floor(s + 0.5)
    r0 = r - m
    s0 = s - n
    z0 = r0 + s0 * L.tau
    return z0, m, n, r0, s0


def reduce(z, L: Lattice) -> TorusPoint:
    """Fundamental-cell representative of ``z``."""
    z = complex(z)
    z0, _, _, r0, s0 = _reduce_parts(z, L)
    return TorusPoint(complex(z0), float(r0), float(s0))


_NEIGHBOURS = np.array([a + b * 1j for a in (-1, 0, 1) for b in (-1, 0, 1)])


def _dist_to_lattice(z0, L: Lattice):
    """Distance from a reduced point to the nearest lattice point."""
    shifts = _NEIGHBOURS.real + _NEIGHBOURS.imag * L.tau
    z0 = np.asarray(z0, dtype=complex)
    return np.min(np.abs(z0[..., None] - shifts), axis=-1)


def torus_distance(z, w, L: Lattice):
    """Flat distance between ``z`` and ``w`` on the torus."""
    z0 = _reduce_parts(np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex), L)[0]
    d = _dist_to_lattice(z0, L)
    return float(d) if np.ndim(d) == 0 else d


def _check_pole(z0, L: Lattice, radius: float):
    d = _dist_to_lattice(z0, L)
    if np.any(d < radius):
        raise PoleError(f"argument within {radius:g} of a lattice point (distance {np.min(d):.3e})")


# --------------------------------------------------------------------------
# theta kernel


_CHUNK = 8192


def _theta1_derivs(v, L: Lattice, order: int):
    """theta1 and its first ``order`` derivatives in ``v`` (flattened input)."""
    v = np.ravel(np.asarray(v, dtype=complex))
    freq, coef = L._theta_freq, L._theta_coef
    # d-th derivative of sin(kv) is k^d * (sin, cos, -sin, -cos)[d % 4]
    weights = [coef * freq**d * (1.0 if d % 4 < 2 else -1.0) for d in range(order + 1)]
    out = [np.empty(v.shape, dtype=complex) for _ in range(order + 1)]
    for start in range(0, v.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        kv = np.multiply.outer(v[sl], freq)
        sin_kv = np.sin(kv)
        cos_kv = np.cos(kv) if order >= 1 else None
        for d in range(order + 1):
            out[d][sl] = (sin_kv if d % 2 == 0 else cos_kv) @ weights[d]
    return out


def _log_derivs(z0, L: Lattice, order: int):
    """Derivatives of ``log theta1(pi z)`` with respect to ``z`` up to ``order``."""
    th = _theta1_derivs(np.pi * z0, L, order)
    t0 = th[0]
    res = []
    l1 = th[1] / t0
    res.append(np.pi * l1)
    if order >= 2:
        l2 = th[2] / t0
        res.append(np.pi**2 * (l2 - l1 * l1))
    if order >= 3:
        l3 = th[3] / t0
        res.append(np.pi**3 * (l3 - 3.0 * l2 * l1 + 2.0 * l1**3))
    return t0, res


def _shape(z, arr):
    return complex(arr[0]) if np.ndim(z) == 0 else arr.reshape(np.shape(z))


def _wp_raw(z, L: Lattice, check: bool = True, radius: float = POLE_RADIUS):
    z = np.asarray(z, dtype=complex)
    z0 = _reduce_parts(z, L)[0].ravel()
    if check:
        _check_pole(z0, L, radius)
    _, (_, d2) = _log_derivs(z0, L, 2)
    return -L.eta1 - d2


def wp(z, L: Lattice, *, check: bool = True):
    """Weierstrass ``wp(z)``; scalar or array input."""
    return _shape(z, _wp_raw(z, L, check))


def wp_prime(z, L: Lattice, *, check: bool = True):
    """Derivative ``wp'(z)``."""
    z0 = _reduce_parts(np.asarray(z, dtype=complex), L)[0].ravel()
    if check:
        _check_pole(z0, L, POLE_RADIUS)
    _, (_, _, d3) = _log_derivs(z0, L, 3)
    return _shape(z, -d3)


def wp_and_prime(z, L: Lattice, *, check: bool = True):
    """``(wp(z), wp'(z))`` from a single theta evaluation."""
    z0 = _reduce_parts(np.asarray(z, dtype=complex), L)[0].ravel()
    if check:
        _check_pole(z0, L, POLE_RADIUS)
    _, (_, d2, d3) = _log_derivs(z0, L, 3)
    return _shape(z, -L.eta1 - d2), _shape(z, -d3)


def wp_pp(z, L: Lattice, *, check: bool = True):
    """Second derivative via the differentiated cubic ``6 wp^2 - g2/2``."""
    p = wp(z, L, check=check)
    return 6.0 * p * p - L.g2 / 2.0


def wp_deriv(z, L: Lattice, k: int, *, check: bool = True):
    """k-th derivative of wp, ``k >= 0``.

    Uses ``wp'' = 6 wp^2 - g2/2`` and Leibniz:
    ``wp^(j+2) = 6 * sum_m C(j, m) wp^(m) wp^(j-m)`` for ``j >= 1``.
    """
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    p, dp = wp_and_prime(z, L, check=check)
    ders = [p, dp]
    while len(ders) <= k:
        j = len(ders) - 2
        if j == 0:
            ders.append(6.0 * p * p - L.g2 / 2.0)
        else:
            ders.append(6.0 * sum(math.comb(j, m) * ders[m] * ders[j - m] for m in range(j + 1)))
    return ders[k]


def zeta_w(z, L: Lattice, *, check: bool = True):
    """Weierstrass zeta, quasi-periodic: ``zeta(z + m + n tau) = zeta(z) + m eta1 + n eta2``."""
    za = np.asarray(z, dtype=complex)
    z0, m, n, _, _ = _reduce_parts(za, L)
    z0, m, n = z0.ravel(), m.ravel(), n.ravel()
    if check:
        _check_pole(z0, L, POLE_RADIUS)
    _, (d1,) = _log_derivs(z0, L, 1)
    val = L.eta1 * z0 + d1 + m * L.eta1 + n * L.eta2
    return _shape(z, val)


def sigma_w(z, L: Lattice):
    """Weierstrass sigma; entire, exactly 0 at lattice points."""
    za = np.asarray(z, dtype=complex)
    z0, m, n, r0, s0 = _reduce_parts(za, L)
    z0, m, n = z0.ravel(), m.ravel(), n.ravel()
    t0 = _theta1_derivs(np.pi * z0, L, 0)[0]
    val = np.exp(L.eta1 * z0 * z0 / 2.0) * t0 / (np.pi * L.theta1_prime0)
    w = m + n * L.tau
    eta_w = m * L.eta1 + n * L.eta2
    sign = np.where(((m + n + m * n) % 2) == 0, 1.0, -1.0)
    val = sign * np.exp(eta_w * (z0 + w / 2.0)) * val
    on_lattice = (np.abs(r0.ravel()) == 0.0) & (np.abs(s0.ravel()) == 0.0)
    val = np.where(on_lattice, 0.0, val)
    return _shape(z, val)


def addition_defect(u, v, L: Lattice) -> complex:
    """``zeta(u+v) - zeta(u) - zeta(v) - (wp'(u) - wp'(v)) / (2 (wp(u) - wp(v)))``."""
    pu, dpu = wp_and_prime(u, L)
    pv, dpv = wp_and_prime(v, L)
    denom = pu - pv
    if abs(denom) <= 1e-12 * max(1.0, abs(pu), abs(pv)):
        raise DegenerateError("wp(u) = wp(v): addition formula undefined")
    lhs = zeta_w(u + v, L) - zeta_w(u, L) - zeta_w(v, L)
    return complex(lhs - 0.5 * (dpu - dpv) / denom)


def lattice_residuals(L: Lattice) -> dict[str, float]:
    """Residuals of the Lattice invariants (trace, invariants, Legendre)."""
    e1, e2, e3 = L.e
    sc = L.scale
    # eta2 measured directly from the theta quotient across one tau-period
    # (both arguments have |s| <= 1/2, no reduction involved)
    z = 0.2 - 0.5 * L.tau
    _, (d_lo,) = _log_derivs(np.array([z]), L, 1)
    _, (d_hi,) = _log_derivs(np.array([z + L.tau]), L, 1)
    eta2 = L.eta1 * L.tau + complex(d_hi[0] - d_lo[0])
    return {
        "trace": abs(e1 + e2 + e3) / sc,
        "g2": abs(L.g2 + 4.0 * (e1 * e2 + e2 * e3 + e3 * e1)) / max(abs(L.g2), sc**2),
        "g3": abs(L.g3 - 4.0 * e1 * e2 * e3) / max(abs(L.g3), sc**3),
        "legendre": abs(L.eta1 * L.omega[1] - eta2 * L.omega[0] - 2j * np.pi),
    }
