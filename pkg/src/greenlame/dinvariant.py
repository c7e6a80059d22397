"""The invariant D(p) at a branch point, by three independent routes.

1. Closed form in the tangent data ``(c0, s)`` and ``eta1``.
2. Area form ``e^c Im(conj(chi1) chi2)`` with ``chi_i`` the periods of
   ``L_p(z) = -sum c_j zeta(z - p_j) + c0 z``.
3. Regularized quadrature of ``e^c int |P_p|^2 - sum pi mu_i / r^2`` over a
   fundamental cell with disks of radius r removed, extrapolated to r = 0.

The quadrature splits ``|P_p|^2`` with a smooth partition of unity: a bump
``chi_i`` around each ``p_i`` (1 inside ``R/2``, 0 outside ``R``).  The
remainder ``(1 - sum chi_i)|P_p|^2`` is smooth and periodic, so the
trapezoid rule on the cell converges spectrally; each bump part is done in
log-polar coordinates where the ``|z - p_i|^-4`` growth becomes mild.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .branch import BranchPointData, P_p, mu_values
from .elliptic import Lattice, torus_distance, wp, zeta_w
from .errors import DegenerateError, InconsistencyError, QuadratureBudgetError
from .green import as_config, green_grad
from .lame import newton_on_curve

__all__ = [
    "DResult",
    "QuadResult",
    "d_closed_form",
    "d_closed_form_normalized",
    "chi_closed",
    "chi_from_Lp",
    "L_p",
    "d_area_form",
    "d_quadrature",
    "d_quad_at_radius",
    "phi",
    "phi_components",
    "phi_jacobian",
    "phi_jacobian_fd",
    "compute_D",
]

CHI_TOL = 1e-9
CELL_OFFSET = 0.101 + 0.073j
QUAD_BUDGET = 4_000_000


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    radii: tuple[float, ...]
    values: tuple[float, ...]
    evaluations: int


@dataclass(frozen=True)
class DResult:
    d_closed: float
    d_area: float
    d_quad: float | None
    d_quad_err: float | None
    jacobian_phi: float
    chi1: complex
    chi2: complex


def _core(bp: BranchPointData, L: Lattice) -> complex:
    return bp.c0 - bp.c_sum * L.eta1


def d_closed_form(bp: BranchPointData, L: Lattice) -> float:
    """``b e^c (|c0 - s eta1|^2 + (2 pi/b) Re(conj(s)(c0 - s eta1)))``."""
    w = _core(bp, L)
    b = L.b
    return float(b * bp.exp_c * (abs(w) ** 2 + 2.0 * np.pi / b * (np.conj(bp.c_sum) * w).real))


def d_closed_form_normalized(bp: BranchPointData, L: Lattice) -> float:
    """The same value written as ``b e^c |s|^2 (|c0/s - eta1|^2 + (2 pi/b) Re(c0/s - eta1))``."""
    s = bp.c_sum
    if s == 0:
        raise DegenerateError("s = 0: use d_closed_form")
    u = bp.c0 / s - L.eta1
    return float(L.b * bp.exp_c * abs(s) ** 2 * (abs(u) ** 2 + 2.0 * np.pi / L.b * u.real))


def chi_closed(bp: BranchPointData, L: Lattice) -> tuple[complex, complex]:
    """``chi_i = c0 omega_i - s eta_i`` for ``omega = (1, tau)``."""
    return bp.c0 - bp.c_sum * L.eta1, bp.c0 * L.tau - bp.c_sum * L.eta2


def L_p(bp: BranchPointData, z, L: Lattice):
    """Antiderivative ``-sum c_j zeta(z - p_j) + c0 z`` of ``P_p``."""
    z = np.asarray(z, dtype=complex)
    out = bp.c0 * z
    for cj, pj in zip(bp.c_vec, bp.p.a):
        out = out - cj * zeta_w(z - pj, L)
    return out


def chi_from_Lp(bp: BranchPointData, L: Lattice, z: complex | None = None) -> tuple[complex, complex]:
    """Periods of ``L_p`` measured as differences ``L_p(z + omega_i) - L_p(z)``."""
    z = 0.1234 + 0.2345 * L.tau if z is None else complex(z)
    base = complex(L_p(bp, z, L))
    return complex(L_p(bp, z + 1.0, L)) - base, complex(L_p(bp, z + L.tau, L)) - base


def d_area_form(bp: BranchPointData, L: Lattice, *, tol: float = CHI_TOL) -> tuple[float, complex, complex]:
    """``(e^c/2) Im(conj(chi1) chi2 - chi1 conj(chi2))`` and the periods.

    Raises ``InconsistencyError`` when the periods measured from ``L_p``
    differ from ``c0 omega_i - s eta_i`` by more than ``tol`` (relative).
    """
    x1, x2 = chi_closed(bp, L)
    m1, m2 = chi_from_Lp(bp, L)
    ref = max(abs(x1), abs(x2), abs(bp.c0), abs(bp.c_sum) * abs(L.eta2), 1e-300)
    if max(abs(x1 - m1), abs(x2 - m2)) > tol * ref:
        raise InconsistencyError("periods of L_p disagree with c0 omega_i - s eta_i")
    d = 0.5 * bp.exp_c * (np.conj(x1) * x2 - x1 * np.conj(x2)).imag
    return float(d), x1, x2


# --------------------------------------------------------------------------
# quadrature


def _smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        f1 = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return f0 / (f0 + f1)


def _bump(rho, R):
    """1 for ``rho <= R/2``, 0 for ``rho >= R``."""
    return _smoothstep((R - rho) / (0.5 * R))


def _min_distance(a, L: Lattice) -> float:
    d = [abs(1.0), abs(L.tau), abs(1.0 + L.tau), abs(1.0 - L.tau)]
    d += [torus_distance(a[i], a[j], L) for i in range(a.size) for j in range(i)]
    return float(min(d))


def _nearest_offset(z, p, L: Lattice):
    """``z - p`` moved to the representative nearest 0 (vectorized)."""
    d = np.asarray(z, dtype=complex) - p
    s = np.round(d.imag / L.b)
    d = d - s * L.tau
    d = d - np.round(d.real)
    best = d.copy()
    for m in (-1, 0, 1):
        for k in (-1, 0, 1):
            cand = d + m + k * L.tau
            best = np.where(np.abs(cand) < np.abs(best), cand, best)
    return best


def _smooth_part(bp, L, R, tol, budget):
    """Trapezoid rule for ``int_T (1 - sum chi_i) |P_p|^2``; returns (value, error, evals)."""
    a = bp.p.a
    pa = wp(a, L)
    prev = None
    evals = 0
    N = 64
    # equal spacing along both edges of the cell
    aspect = max(1, int(round(abs(L.tau))))
    while True:
        M = aspect * N
        evals += N * M
        if evals > budget:
            raise QuadratureBudgetError(f"smooth part needs more than {budget} evaluations")
        t, u = np.arange(N) / N, np.arange(M) / M
        z = (CELL_OFFSET.real + CELL_OFFSET.imag * L.tau) + t[:, None] + u[None, :] * L.tau
        z = z.ravel()
        w = np.ones(z.size)
        for pj in a:
            w -= _bump(np.abs(_nearest_offset(z, pj, L)), R)
        keep = w > 0
        pz = wp(z[keep], L, check=False)
        f = np.ones(pz.shape, dtype=complex)
        for v in pa:
            f = f / (pz - v)
        val = float(np.sum(w[keep] * np.abs(f) ** 2)) * L.b / (N * M)
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(abs(val), 1e-300):
                return val, err, evals
        prev = val
        N *= 2


def _gauss_segments(edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights, seg = [], [], []
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
        seg.append(np.full(order, k))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(seg)


def _polar_parts(bp, L, i, R, radii, order, nangle):
    """``int_{r < |z - p_i| < R} chi_i |P_p|^2`` for each r in ``radii`` (decreasing)."""
    p = bp.p.a[i]
    # log-radius edges: the bump transition gets its own segments
    edges = np.log(np.concatenate([np.sort(radii), [0.5 * R, 0.75 * R, R]]))
    t, wt, seg = _gauss_segments(edges, order)
    rho = np.exp(t)
    theta = 2.0 * np.pi * (np.arange(nangle) + 0.5) / nangle
    z = p + rho[:, None] * np.exp(1j * theta)[None, :]
    f = np.abs(P_p(bp.p, z.ravel(), L, check=False).reshape(z.shape)) ** 2
    ang = f.mean(axis=1) * 2.0 * np.pi
    integrand = ang * rho * rho * _bump(rho, R) * wt
    per_seg = np.bincount(seg, weights=integrand, minlength=len(edges) - 1)
    # radii sorted ascending are edges[0..len(radii)-1]; I(r_k) sums segments from k upward
    srt = np.sort(radii)
    out = {}
    for k, r in enumerate(srt):
        out[r] = float(np.sum(per_seg[k:]))
    return np.array([out[r] for r in radii]), nangle * order * (len(edges) - 1)


def d_quad_at_radius(bp: BranchPointData, L: Lattice, radii, *, tol: float = 1e-9,
                     budget: int = QUAD_BUDGET, R: float | None = None):
    """``e^c int_{T minus disks} |P_p|^2 - sum pi mu_i / r^2`` at each radius.

    Returns (values, quadrature error estimate, evaluation count).
    """
    a = bp.p.a
    dmin = _min_distance(a, L)
    if R is None:
        R = 0.4 * dmin
    radii = np.asarray(radii, dtype=float)
    if np.any(radii >= 0.5 * R):
        raise ValueError("excised radius must be inside the bump plateau")
    S, s_err, evals = _smooth_part(bp, L, R, tol, budget)
    mu = mu_values(bp.p, L)
    total = np.full(radii.shape, S)
    p_err = 0.0
    for i in range(a.size):
        lo, n1 = _polar_parts(bp, L, i, R, radii, 24, 96)
        hi, n2 = _polar_parts(bp, L, i, R, radii, 40, 160)
        evals += n1 + n2
        if evals > budget:
            raise QuadratureBudgetError(f"polar parts exceed {budget} evaluations")
        total = total + hi
        p_err += float(np.max(np.abs(hi - lo)))
    vals = bp.exp_c * total - np.pi * float(np.sum(mu)) / radii**2
    return vals, bp.exp_c * (s_err + p_err), evals


def d_quadrature(
    bp: BranchPointData,
    L: Lattice,
    *,
    budget: int = QUAD_BUDGET,
    tol: float = 1e-9,
    model: str = "r2",
) -> QuadResult:
    """Regularized integral at ``r0, r0/2, r0/4`` (``r0 = dmin/10``) extrapolated to r = 0.

    ``P_p`` has zero residue at every ``p_i``, so the excised disks change the
    regularized integral by ``-e^c sum int_{B_r} |P_p - c_i/(z - p_i)^2|^2 =
    O(r^2)``.  The default model ``"r2"`` runs a Richardson table in ``r^2``:
    the value is the extrapolation from the two smaller radii and the error
    bar is twice its distance to the three-radius extrapolation, plus the
    quadrature error estimate.  ``model="r"`` fits a line in ``r`` through the
    two smaller radii, with the misfit at ``r0`` as error bar.
    """
    if model not in ("r", "r2"):
        raise ValueError("model must be 'r' or 'r2'")
    a = bp.p.a
    dmin = _min_distance(a, L)
    if dmin < 1e-3:
        raise DegenerateError(f"points of p nearly collide (distance {dmin:.3e})")
    r0 = 0.1 * dmin
    radii = np.array([r0, r0 / 2.0, r0 / 4.0])
    vals, qerr, evals = d_quad_at_radius(bp, L, radii, tol=tol, budget=budget)
    if model == "r":
        slope = (vals[1] - vals[2]) / (radii[1] - radii[2])
        d0 = vals[2] - slope * radii[2]
        err = abs(vals[0] - (d0 + slope * radii[0]))
    else:
        # halving r divides r^2 by 4
        r1a = (4.0 * vals[1] - vals[0]) / 3.0
        d0 = (4.0 * vals[2] - vals[1]) / 3.0
        r2 = (16.0 * d0 - r1a) / 15.0
        err = 2.0 * abs(r2 - d0)
    return QuadResult(float(d0), float(err + qerr), tuple(radii), tuple(float(v) for v in vals), evals)


# --------------------------------------------------------------------------
# phi and its Jacobian


def phi(a, L: Lattice) -> np.ndarray:
    """``-4 pi sum_i grad G(a_i)`` as a real 2-vector."""
    a = as_config(a).a
    return -4.0 * np.pi * np.sum(green_grad(a, L), axis=0)


def phi_components(a, L: Lattice) -> np.ndarray:
    """``phi`` from ``2 Re(sum zeta(a_i) - eta1 a_i)`` and ``-2 Im(...) - (4 pi/b) sum y_i``."""
    a = as_config(a).a
    w = complex(np.sum(zeta_w(a, L) - L.eta1 * a))
    return np.array([2.0 * w.real, -2.0 * w.imag - 4.0 * np.pi / L.b * float(np.sum(a.imag))])


def phi_jacobian(bp: BranchPointData, L: Lattice) -> float:
    """``det(d phi/du, d phi/dv)`` at ``C = u + iv = 0``, closed form."""
    w = _core(bp, L)
    return float(-(abs(w) ** 2 + 2.0 * np.pi / L.b * (np.conj(bp.c_sum) * w).real))


def phi_jacobian_fd(bp: BranchPointData, L: Lattice, eps: float | None = None) -> float:
    """The same determinant from ``phi(a(C))`` at ``C = +-eps, +-i eps`` (and eps/2, Richardson)."""
    from .branch import _continuation_eps

    if eps is None:
        eps = _continuation_eps(bp, L)
    p = bp.p.a
    half = bp.c_vec / 2.0

    def phi_at(C):
        return phi(newton_on_curve(p + half * C, C, L).config.a, L)

    def grads(h):
        du = (phi_at(h) - phi_at(-h)) / (2.0 * h)
        dv = (phi_at(1j * h) - phi_at(-1j * h)) / (2.0 * h)
        return du, dv

    u1, v1 = grads(eps)
    u2, v2 = grads(eps / 2.0)
    du = u2 + (u2 - u1) / 3.0
    dv = v2 + (v2 - v1) / 3.0
    return float(du[0] * dv[1] - du[1] * dv[0])


def compute_D(bp: BranchPointData, L: Lattice, *, quadrature: bool = True, budget: int = QUAD_BUDGET) -> DResult:
    d_area, x1, x2 = d_area_form(bp, L)
    q = d_quadrature(bp, L, budget=budget) if quadrature else None
    return DResult(
        d_closed=d_closed_form(bp, L),
        d_area=d_area,
        d_quad=None if q is None else q.value,
        d_quad_err=None if q is None else q.error,
        jacobian_phi=phi_jacobian(bp, L),
        chi1=x1,
        chi2=x2,
    )
