"""Hessian of G_n at branch points and the identity ``det D^2 G_n(p) = (-1)^n c_p D(p)``.

``c_p`` is evaluated from the complex Jacobian minor of the constraint map:

    c_p = n^2 e^-c / (4 b (2 pi)^(2n)) * |det D'g(p)|^2 / |a_k'(0)|^2,

where ``D'g`` drops column ``k`` and ``a'(0) = c/2``.  Every choice of ``k``
gives the same number, which is used as a self-check.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .branch import BranchPointData, singular_threshold
from .dinvariant import d_closed_form
from .elliptic import Lattice, wp, wp_prime
from .errors import InconsistencyError, UnsupportedError
from .green import as_config, green_hess_matrix, multiple_green_grad
from .lame import complex_jacobian_minor, constraint_zeta

__all__ = [
    "AdjunctionReport",
    "hessian_Gn",
    "det_hessian",
    "c_p",
    "c_p_all_minors",
    "verify_adjunction",
    "A_matrix",
    "g_real",
    "g_identity_defect",
    "jg_bridge_defect",
    "hessian_half_periods_closed",
    "hessian_pair_closed",
    "det_hessian_half_periods",
    "det_hessian_pair",
    "cp_half_periods",
    "cp_half_periods_unit_exponents",
    "cp_pair",
    "closed_form_defects",
]

TWO_PI = 2.0 * np.pi
MINOR_TOL = 1e-8
ILL_CONDITIONED = 1e12


@dataclass(frozen=True)
class AdjunctionReport:
    H: float
    c_p: float
    D: float
    defect: float
    det_minor: complex
    jg_defect: float
    closed_form_defects: dict = field(default_factory=dict)
    cond: float = float("nan")
    singular: bool = False

    @property
    def sign(self) -> int:
        return int(np.sign(self.H))


def hessian_Gn(a, L: Lattice) -> np.ndarray:
    """Real ``2n x 2n`` Hessian in the variables ``(x_1, y_1, ..., x_n, y_n)``.

    Block ``(i, i)`` is ``sum_{j != i} D^2G(a_i - a_j) - n D^2G(a_i)`` and block
    ``(i, j)`` is ``-D^2G(a_i - a_j)``.
    """
    a = as_config(a).validate(L).a
    n = a.size
    H = np.zeros((2 * n, 2 * n))
    single = green_hess_matrix(a, L)
    for i in range(n):
        H[2 * i:2 * i + 2, 2 * i:2 * i + 2] -= n * single[i]
    for i in range(n):
        for j in range(i + 1, n):
            m = green_hess_matrix(a[i] - a[j], L)
            H[2 * i:2 * i + 2, 2 * i:2 * i + 2] += m
            H[2 * j:2 * j + 2, 2 * j:2 * j + 2] += m
            H[2 * i:2 * i + 2, 2 * j:2 * j + 2] = -m
            H[2 * j:2 * j + 2, 2 * i:2 * i + 2] = -m
    return H


def det_hessian(a, L: Lattice, *, warn: bool = True) -> tuple[float, float]:
    """``(det D^2 G_n(a), condition number)``; LU with partial pivoting."""
    H = hessian_Gn(a, L)
    cond = float(np.linalg.cond(H))
    if warn and cond > ILL_CONDITIONED:
        warnings.warn(f"Hessian is ill-conditioned (cond = {cond:.3e})", RuntimeWarning, stacklevel=2)
    return float(np.linalg.det(H)), cond


def _cp_with_minor(bp: BranchPointData, L: Lattice, k: int) -> tuple[float, complex]:
    n = bp.n
    det = complex(np.linalg.det(complex_jacobian_minor(bp.p.a, L, omit=k))) if n > 1 else 1.0 + 0j
    ak = abs(bp.c_vec[k] / 2.0) ** 2
    val = n * n / (bp.exp_c * 4.0 * L.b * TWO_PI ** (2 * n)) * abs(det) ** 2 / ak
    return float(val), det


def c_p_all_minors(bp: BranchPointData, L: Lattice) -> np.ndarray:
    """``c_p`` from each choice of omitted column ``k = 1..n``."""
    return np.array([_cp_with_minor(bp, L, k)[0] for k in range(bp.n)])


def c_p(bp: BranchPointData, L: Lattice, *, tol: float = MINOR_TOL) -> float:
    """``c_p`` from the minor omitting the last column, checked against every other choice.

    Raises ``InconsistencyError`` when two choices differ by more than ``tol``
    relative to the largest one.
    """
    vals = c_p_all_minors(bp, L)
    top = float(np.max(vals))
    if top > 0 and float(np.max(vals) - np.min(vals)) > tol * top:
        raise InconsistencyError(f"c_p depends on the minor: {vals}")
    return float(vals[-1])


def verify_adjunction(bp: BranchPointData, L: Lattice, *, jg: bool = True, fd_step: float = 1e-5) -> AdjunctionReport:
    """Evaluate both sides of ``H = (-1)^n c_p D`` at a branch point."""
    n = bp.n
    H, cond = det_hessian(bp.p, L, warn=False)
    cp, det_minor = _cp_with_minor(bp, L, n - 1)
    c_p(bp, L)
    D = d_closed_form(bp, L)
    rhs = (-1) ** n * cp * D
    defect = abs(H - rhs) / max(abs(H), abs(cp * D), 1e-30)
    cf = closed_form_defects(bp, L) if n == 2 else {}
    jgd = jg_bridge_defect(bp.p, L, h=fd_step) if jg else float("nan")
    return AdjunctionReport(
        H=H,
        c_p=cp,
        D=D,
        defect=float(defect),
        det_minor=det_minor,
        jg_defect=jgd,
        closed_form_defects=cf,
        cond=cond,
        singular=bool(bp.singular_flag or abs(det_minor) < singular_threshold(L, n)),
    )


# --------------------------------------------------------------------------
# the J(g) bridge


def A_matrix(n: int) -> np.ndarray:
    """Constant real ``2n x 2n`` matrix with ``g = -2 pi A grad G_n``."""
    m1 = np.eye(2 * n)
    m2 = np.zeros((2 * n, 2 * n))
    for k in range(n - 1):
        m1[2 * k, 2 * n - 2] = 1.0
        m1[2 * k + 1, 2 * n - 1] = -1.0
        m2[2 * k, 2 * k] = 1.0
        m2[2 * k + 1, 2 * k + 1] = -1.0
    for k in range(n):
        m2[2 * n - 2, 2 * k] = -1.0 / n
        m2[2 * n - 1, 2 * k + 1] = -1.0 / n
    return m1 @ m2


def g_real(a, L: Lattice) -> np.ndarray:
    """Real map ``(Re g^1, Im g^1, ..., Re g^{n-1}, Im g^{n-1}, phi/2)``."""
    from .dinvariant import phi

    a = as_config(a).a
    g = constraint_zeta(a, L)
    out = np.empty(2 * a.size)
    out[0:-2:2] = g.real
    out[1:-2:2] = g.imag
    out[-2:] = 0.5 * phi(a, L)
    return out


def _fd_jacobian(f, x, h):
    """Central differences with one Richardson step."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = 1.0

        def d(step):
            return (f(x + step * e) - f(x - step * e)) / (2.0 * step)

        d1, d2 = d(h), d(h / 2.0)
        cols.append(d2 + (d2 - d1) / 3.0)
    return np.column_stack(cols)


def jg_bridge_defect(a, L: Lattice, h: float = 1e-5) -> float:
    """Relative defect of ``det Dg = (2 pi)^(2n) (-1)^(n-1) / n^2 det D^2 G_n``.

    ``det Dg`` comes from finite differences of :func:`g_real`.
    """
    a = as_config(a).validate(L).a
    n = a.size

    def f(x):
        return g_real(x[0::2] + 1j * x[1::2], L)

    x0 = np.empty(2 * n)
    x0[0::2], x0[1::2] = a.real, a.imag
    jg = float(np.linalg.det(_fd_jacobian(f, x0, h)))
    H, _ = det_hessian(a, L, warn=False)
    rhs = TWO_PI ** (2 * n) * (-1) ** (n - 1) / n**2 * H
    return abs(jg - rhs) / max(abs(jg), abs(rhs), 1e-300)


def g_identity_defect(a, L: Lattice) -> float:
    """``max |g(a) + 2 pi A grad G_n(a)|`` relative to ``max(1, |g|)``."""
    a = as_config(a).a
    g = g_real(a, L)
    other = -TWO_PI * A_matrix(a.size) @ multiple_green_grad(a, L)
    return float(np.max(np.abs(g - other)) / max(1.0, float(np.max(np.abs(g)))))


# --------------------------------------------------------------------------
# closed forms for n = 2


def _ijk(bp_or_labels):
    i, j = bp_or_labels
    k = ({0, 1, 2} - {i, j}).pop()
    return i, j, k


def _half_indices(bp: BranchPointData) -> tuple[int, int, int]:
    if bp.n != 2 or len(bp.template.half) != 2:
        raise UnsupportedError("closed form needs n = 2 and two half periods")
    return _ijk((bp.template.half[0] - 1, bp.template.half[1] - 1))


def hessian_half_periods_closed(L: Lattice, i: int, j: int) -> np.ndarray:
    """Explicit ``4 x 4`` Hessian at ``(omega_i/2, omega_j/2)`` (0-based ``i, j``)."""
    i, j, k = _ijk((i, j))
    w = [-(e + L.eta1) for e in L.e]
    u = [x.real for x in w]
    v = [x.imag for x in w]
    t = TWO_PI / L.b
    m = np.array([
        [-u[k] + 2 * u[i], v[k] - 2 * v[i], u[k], -v[k]],
        [v[k] - 2 * v[i], u[k] - 2 * u[i] - t, -v[k], -u[k] - t],
        [u[k], -v[k], -u[k] + 2 * u[j], v[k] - 2 * v[j]],
        [-v[k], -u[k] - t, v[k] - 2 * v[j], u[k] - 2 * u[j] - t],
    ])
    return m / TWO_PI


def hessian_pair_closed(L: Lattice, q: complex) -> np.ndarray:
    """Explicit ``4 x 4`` Hessian at ``(q, -q)`` with ``wp''(q) = 0``."""
    mu = complex(wp(q, L))
    u, v = mu.real, mu.imag
    s, t = L.eta1.real, L.eta1.imag
    c = TWO_PI / L.b
    m = np.array([
        [-4 * u - s, 4 * v + t, 2 * u - s, -2 * v + t],
        [4 * v + t, 4 * u + s - c, -2 * v + t, -2 * u + s - c],
        [2 * u - s, -2 * v + t, -4 * u - s, 4 * v + t],
        [-2 * v + t, -2 * u + s - c, 4 * v + t, 4 * u + s - c],
    ])
    return m / TWO_PI


def det_hessian_half_periods(L: Lattice, i: int, j: int) -> float:
    """``(4/(2pi)^4)(|X|^2 + (2pi/b) Re(3 conj(e_k) X))``, ``X = 2 e_i e_j + e_k^2 - 3 e_k eta1``."""
    i, j, k = _ijk((i, j))
    e = L.e
    X = 2 * e[i] * e[j] + e[k] ** 2 - 3 * e[k] * L.eta1
    return float(4.0 / TWO_PI**4 * (abs(X) ** 2 + TWO_PI / L.b * (3 * np.conj(e[k]) * X).real))


def det_hessian_pair(L: Lattice, q: complex) -> float:
    """``(9/pi^4)|wp(q)|^2 (|wp(q) + eta1|^2 - (2pi/b) Re(wp(q) + eta1))``."""
    mu = complex(wp(q, L))
    y = mu + L.eta1
    return float(9.0 / np.pi**4 * abs(mu) ** 2 * (abs(y) ** 2 - TWO_PI / L.b * y.real))


def cp_half_periods(L: Lattice, i: int, j: int, exp_c: float) -> float:
    """``e^-c |e_i - e_j|^4 |e_i - e_k|^2 |e_j - e_k|^2 / (4 b pi^4)``.

    Follows from ``c(p) = b e^c |N|^2`` with
    ``N = (e_i - e_j)^-2 (e_i - e_k)^-1 (e_j - e_k)^-1`` the common factor of
    ``c0`` and ``s`` at this point.
    """
    i, j, k = _ijk((i, j))
    e = L.e
    return float(abs(e[i] - e[j]) ** 4 * abs(e[i] - e[k]) ** 2 * abs(e[j] - e[k]) ** 2 / (exp_c * 4.0 * L.b * np.pi**4))


def cp_half_periods_unit_exponents(L: Lattice, i: int, j: int, exp_c: float) -> float:
    """``e^-c |e_i - e_j| |e_i - e_k| |e_j - e_k| / (4 b pi^4)`` as commonly quoted.

    Kept for comparison only; it disagrees with :func:`c_p` (see
    :func:`cp_half_periods`).
    """
    i, j, k = _ijk((i, j))
    e = L.e
    return float(abs(e[i] - e[j]) * abs(e[i] - e[k]) * abs(e[j] - e[k]) / (exp_c * 4.0 * L.b * np.pi**4))


def cp_pair(L: Lattice, q: complex, exp_c: float) -> float:
    """``9 e^-c |wp(q)|^2 |wp'(q)|^4 / (4 b pi^4)``."""
    mu = complex(wp(q, L))
    dmu = complex(wp_prime(q, L))
    return float(9.0 * abs(mu) ** 2 * abs(dmu) ** 4 / (exp_c * 4.0 * L.b * np.pi**4))


def _rel(x, y) -> float:
    return abs(x - y) / max(abs(x), abs(y), 1e-300)


def closed_form_defects(bp: BranchPointData, L: Lattice) -> dict[str, float]:
    """Relative defects of the n = 2 closed forms at ``bp``."""
    if bp.n != 2:
        raise UnsupportedError("closed forms exist for n = 2 only")
    H = hessian_Gn(bp.p, L)
    det, _ = det_hessian(bp.p, L, warn=False)
    cp = c_p(bp, L)
    if len(bp.template.half) == 2:
        i, j, _ = _half_indices(bp)
        return {
            "hessian_matrix": float(np.max(np.abs(H - hessian_half_periods_closed(L, i, j))) / max(1.0, np.max(np.abs(H)))),
            "det": _rel(det, det_hessian_half_periods(L, i, j)),
            "c_p": _rel(cp, cp_half_periods(L, i, j, bp.exp_c)),
            "c_p_unit_exponents": _rel(cp, cp_half_periods_unit_exponents(L, i, j, bp.exp_c)),
        }
    q = bp.p.a[0]
    return {
        "hessian_matrix": float(np.max(np.abs(H - hessian_pair_closed(L, q))) / max(1.0, np.max(np.abs(H)))),
        "det": _rel(det, det_hessian_pair(L, q)),
        "c_p": _rel(cp, cp_pair(L, q, bp.exp_c)),
    }
