"""Green function of the flat torus and the multiple Green function G_n.

    G(z) = -(1/2pi) log|theta1(pi z)| + (Im z)^2 / (2 Im tau) + shift

solves ``-Lap G = delta_0 - 1/|E|``; the additive constant is not the
zero-mean one (``shift`` defaults to 0) since nothing downstream depends
on it.  The gradient comes from

    -4 pi G_z = zeta(z) - eta1 z + 2 pi i Im(z)/Im(tau),

with ``G_z = (G_x - i G_y) / 2``.  Writing ``w = (log theta)_zz = -(wp + eta1)``
the Hessian is ``(1/2pi) [[-Re w, Im w], [Im w, Re w + 2pi/b]]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import (
    POLE_RADIUS,
    Lattice,
    _check_pole,
    _log_derivs,
    _reduce_parts,
    _theta1_derivs,
)
from .errors import PoleError

__all__ = [
    "GreenHessian",
    "Configuration",
    "as_config",
    "green",
    "green_z",
    "green_grad",
    "green_hess",
    "regular_part",
    "regular_part_diagonal",
    "multiple_green",
    "multiple_green_grad",
]

TWO_PI = 2.0 * np.pi
DIAGONAL_TOL = 1e-8


@dataclass(frozen=True)
class GreenHessian:
    """Symmetric 2x2 matrix of second partials ``G_xx, G_xy, G_yy``."""

    m: np.ndarray

    @property
    def det(self) -> float:
        return float(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])

    @property
    def trace(self) -> float:
        return float(self.m[0, 0] + self.m[1, 1])


@dataclass(frozen=True)
class Configuration:
    """Ordered n-tuple of torus points, stored as complex representatives.

    Representatives are not reduced: solvers move them continuously and the
    lattice translate carries no meaning for any quantity built on top.
    """

    a: np.ndarray

    def __post_init__(self):
        arr = np.array(self.a, dtype=complex).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def n(self) -> int:
        return self.a.size

    def __len__(self) -> int:
        return self.a.size

    def __iter__(self):
        return iter(self.a)

    def validate(self, L: Lattice, tol: float = DIAGONAL_TOL) -> "Configuration":
        """Raise ``PoleError`` unless ``a_i != 0`` and ``a_i != a_j`` on the torus."""
        from .elliptic import torus_distance

        for i, ai in enumerate(self.a):
            if torus_distance(ai, 0.0, L) < tol:
                raise PoleError(f"a_{i + 1} is a lattice point")
            for j in range(i):
                if torus_distance(ai, self.a[j], L) < tol:
                    raise PoleError(f"a_{j + 1} = a_{i + 1} on the torus (diagonal)")
        return self


def as_config(a) -> Configuration:
    if isinstance(a, Configuration):
        return a
    if np.ndim(a) == 0:
        return Configuration(np.array([complex(a)]))
    return Configuration(np.asarray([complex(x) for x in a]))


def _points(z):
    return np.asarray(complex(z) if not isinstance(z, np.ndarray) and np.ndim(z) == 0 else z, dtype=complex)


def green(z, L: Lattice, *, check: bool = True):
    """Torus Green function (scalar or array)."""
    za = _points(z)
    z0, _, _, _, s0 = _reduce_parts(za, L)
    z0 = z0.ravel()
    if check:
        _check_pole(z0, L, 1e-12)
    th = _theta1_derivs(np.pi * z0, L, 0)[0]
    y = (s0.ravel() * L.b)
    val = -np.log(np.abs(th)) / TWO_PI + y * y / (2.0 * L.b) + L.green_shift
    return float(val[0]) if za.ndim == 0 else val.reshape(za.shape)


def green_z(z, L: Lattice, *, check: bool = True):
    """Complex derivative ``dG/dz``."""
    za = _points(z)
    z0, _, _, _, s0 = _reduce_parts(za, L)
    z0 = z0.ravel()
    if check:
        _check_pole(z0, L, POLE_RADIUS)
    _, (d1,) = _log_derivs(z0, L, 1)
    # zeta(z0) - eta1 z0 = pi theta1'/theta1
    gz = -(d1 + 2j * np.pi * s0.ravel()) / (4.0 * np.pi)
    return complex(gz[0]) if za.ndim == 0 else gz.reshape(za.shape)


def green_grad(z, L: Lattice, *, check: bool = True) -> np.ndarray:
    """Real gradient ``(G_x, G_y)``; shape ``(..., 2)`` for array input."""
    gz = np.asarray(green_z(z, L, check=check))
    return np.stack([2.0 * gz.real, -2.0 * gz.imag], axis=-1)


def _log_theta_zz(z, L: Lattice, check: bool):
    za = _points(z)
    z0 = _reduce_parts(za, L)[0].ravel()
    if check:
        _check_pole(z0, L, POLE_RADIUS)
    _, (_, d2) = _log_derivs(z0, L, 2)
    return d2.reshape(za.shape)


def green_hess_matrix(z, L: Lattice, *, check: bool = True) -> np.ndarray:
    """Hessian matrices, shape ``(..., 2, 2)``."""
    w = _log_theta_zz(z, L, check)
    out = np.empty(w.shape + (2, 2))
    out[..., 0, 0] = -w.real
    out[..., 0, 1] = w.imag
    out[..., 1, 0] = w.imag
    out[..., 1, 1] = w.real + TWO_PI / L.b
    return out / TWO_PI


def green_hess(z, L: Lattice, *, check: bool = True) -> GreenHessian:
    return GreenHessian(green_hess_matrix(complex(z), L, check=check))


def regular_part_diagonal(L: Lattice) -> float:
    """Limit of ``G(z) + (1/2pi) log|z|`` as ``z -> 0``; the same at every point."""
    return float(-np.log(np.pi * abs(L.theta1_prime0)) / TWO_PI + L.green_shift)


def regular_part(z, w, L: Lattice) -> float:
    """``G(z - w) + (1/2pi) log|z - w|``, continuous across ``z = w``.

    The log uses the representative of ``z - w`` nearest to 0, so the value
    is the one that is smooth near the diagonal.
    """
    d = complex(z) - complex(w)
    d0 = complex(_reduce_parts(d, L)[0])
    from .elliptic import _NEIGHBOURS

    shifts = _NEIGHBOURS.real + _NEIGHBOURS.imag * L.tau
    d0 = d0 - shifts[np.argmin(np.abs(d0 - shifts))]
    if abs(d0) < 1e-7:
        # Gtilde is smooth with a bounded second derivative; O(|z|^2) below 1e-7
        return regular_part_diagonal(L)
    return green(d0, L) + np.log(abs(d0)) / TWO_PI


def multiple_green(a, L: Lattice) -> float:
    """``G_n(a) = sum_{i<j} G(a_i - a_j) - n sum_i G(a_i)``."""
    a = as_config(a).validate(L).a
    n = a.size
    val = -n * float(np.sum(green(a, L)))
    for i in range(n):
        for j in range(i + 1, n):
            val += green(a[i] - a[j], L)
    return float(val)


def multiple_green_grad(a, L: Lattice) -> np.ndarray:
    """Gradient of ``G_n`` as the real vector ``(x_1, y_1, ..., x_n, y_n)``."""
    a = as_config(a).validate(L).a
    n = a.size
    grads = -n * green_grad(a, L)
    for i in range(n):
        for j in range(n):
            if i != j:
                grads[i] += green_grad(a[i] - a[j], L)
    return grads.reshape(-1)

