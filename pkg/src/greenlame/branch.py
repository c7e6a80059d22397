"""Branch points of Y_n and their tangent data.

A branch point is a configuration ``p`` with ``{p_i} = {-p_i}`` on the torus
solving the constraint system.  Its indices split into 2-torsion slots
(``p_i`` a half period) and pairs ``i <-> i*`` with ``p_{i*} = -p_i``.  Near
``p`` the curve is parametrized by ``C`` with ``a'(0) = c/2``, and

    P_p(z) = prod (wp(z) - wp(p_i))^-1 = sum c_j wp(z - p_j) + c_0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import Lattice, torus_distance, wp, wp_and_prime, wp_deriv, wp_prime
from .errors import ConvergenceError, DegenerateError, GreenLameError, InconsistencyError, UnsupportedError
from .green import Configuration, as_config, green, regular_part, regular_part_diagonal
from .lame import B_of, complex_jacobian_minor, constraint_jacobian, constraint_zeta, newton_on_curve
from .newton import damped_newton

__all__ = [
    "PAIR_TOL",
    "Template",
    "BranchPointData",
    "pairing",
    "enumerate_branch_points",
    "solve_branch_point",
    "tangent_vector",
    "tangent_from_continuation",
    "P_p",
    "pp_expansion_defect",
    "derivative_constraints",
    "contour_residues",
    "K_of",
    "exp_c",
    "exp_c_samples",
    "mu_values",
    "f_ai",
    "singular_threshold",
]

PAIR_TOL = 1e-8
BRANCH_TOL = 1e-10
EXPC_SPREAD = 1e-8
SINGULAR_G2 = 1e-6
SINGULAR_MINOR = 1e-4


@dataclass(frozen=True)
class Template:
    """Half-period slots (indices 1..3 into ``omega``) and a number of +- pairs."""

    half: tuple[int, ...] = ()
    pairs: int = 0

    @property
    def n(self) -> int:
        return len(self.half) + 2 * self.pairs

    @classmethod
    def parse(cls, text: str) -> "Template":
        """``"h1,h2"``, ``"pair"``, ``"h3,pair,pair"``..."""
        half, pairs = [], 0
        for tok in (t.strip().lower() for t in text.split(",") if t.strip()):
            if tok == "pair":
                pairs += 1
            elif tok in ("h1", "h2", "h3"):
                half.append(int(tok[1]))
            else:
                raise ValueError(f"bad template token {tok!r} (expected h1, h2, h3 or pair)")
        if len(set(half)) != len(half):
            raise ValueError("a half period may occupy at most one slot")
        return cls(tuple(half), pairs)

    def __str__(self) -> str:
        return ",".join([f"h{k}" for k in self.half] + ["pair"] * self.pairs)


@dataclass(frozen=True)
class BranchPointData:
    p: Configuration
    lambda2: tuple[int, ...]
    pairing: dict
    c_vec: np.ndarray
    c0: complex
    c_sum: complex
    exp_c: float
    B: complex
    singular_flag: bool
    label: str = ""
    template: Template = field(default_factory=Template)
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.p.n

    def mu(self) -> np.ndarray:
        """``mu_i = e^c |c_i|^2``."""
        return self.exp_c * np.abs(self.c_vec) ** 2


def singular_threshold(L: Lattice, n: int) -> float:
    """Threshold on ``|det D'g|`` below which ``Y_n`` is treated as singular at ``p``."""
    return SINGULAR_MINOR * max(1.0, L.scale) ** max(n - 1, 0)


def _is_half(z, L: Lattice, tol: float = PAIR_TOL) -> bool:
    return torus_distance(2 * complex(z), 0.0, L) < tol


def pairing(p, L: Lattice, tol: float = PAIR_TOL) -> tuple[tuple[int, ...], dict]:
    """Split indices into 2-torsion ones and the involution ``i -> i*``.

    Raises ``DegenerateError`` if ``{p} != {-p}``.
    """
    a = as_config(p).a
    lam, pair = [], {}
    for i, ai in enumerate(a):
        if _is_half(ai, L, tol):
            lam.append(i)
            continue
        partners = [j for j in range(a.size) if j != i and torus_distance(ai, -a[j], L) < tol]
        if len(partners) != 1:
            raise DegenerateError(f"p_{i + 1} has no unique partner -p_{i + 1} in the configuration")
        pair[i] = partners[0]
    return tuple(lam), pair


# --------------------------------------------------------------------------
# tangent data


def tangent_vector(p, L: Lattice, lambda2=None, pair=None) -> tuple[np.ndarray, complex, complex]:
    """``(c, c0, s)`` at a branch point.

    ``c_i = 2 / wp''(p_i) prod_{j != i} (wp(p_i) - wp(p_j))^-1`` on 2-torsion
    indices and ``c_i = wp'(p_i)^-2 prod_{j != i, i*} (wp(p_i) - wp(p_j))^-1``
    on paired ones; ``c0 = -sum c_j wp(p_j)``.
    """
    a = as_config(p).a
    if lambda2 is None or pair is None:
        lambda2, pair = pairing(a, L)
    pa, dpa = wp_and_prime(a, L)
    n = a.size
    c = np.empty(n, dtype=complex)
    for i in range(n):
        skip = {i} if i in lambda2 else {i, pair[i]}
        prod = np.prod([pa[i] - pa[j] for j in range(n) if j not in skip]) if n > len(skip) else 1.0
        if i in lambda2:
            d2 = 6.0 * pa[i] ** 2 - L.g2 / 2.0
            if d2 == 0:
                raise DegenerateError(f"wp''(p_{i + 1}) = 0")
            c[i] = 2.0 / (d2 * prod)
        else:
            if dpa[i] == 0:
                raise DegenerateError(f"wp'(p_{i + 1}) = 0")
            c[i] = 1.0 / (dpa[i] ** 2 * prod)
    for i, j in pair.items():
        # c_{i*} = c_i exactly; both formulas agree analytically
        if i < j:
            c[j] = c[i]
    c0 = complex(-np.sum(c * pa))
    return c, c0, complex(np.sum(c))


def _continuation_eps(bp: BranchPointData, L: Lattice) -> float:
    a = bp.p.a
    n = a.size
    d = [torus_distance(a[i], 0.0, L) for i in range(n)]
    d += [torus_distance(a[i], a[j], L) for i in range(n) for j in range(i)]
    d += [torus_distance(a[i], -a[i], L) for i in range(n) if i not in bp.lambda2]
    eps = 1e-3 * min(d) / float(np.max(np.abs(bp.c_vec) / 2.0))
    # merged branch points shrink the disc where a(C) is analytic
    return eps * 1e-2 if bp.singular_flag else eps


def tangent_from_continuation(bp: BranchPointData, L: Lattice, eps: float | None = None) -> np.ndarray:
    """``2 a'(0)`` from Newton solutions at ``C = +-eps, +-eps/2`` (Richardson)."""
    if eps is None:
        eps = _continuation_eps(bp, L)
    p = bp.p.a
    half = bp.c_vec / 2.0

    def central(h):
        ap = newton_on_curve(p + half * h, h, L).config.a
        am = newton_on_curve(p - half * h, -h, L).config.a
        return (ap - am) / (2.0 * h)

    d1, d2 = central(eps), central(eps / 2.0)
    return 2.0 * (d2 + (d2 - d1) / 3.0)


# --------------------------------------------------------------------------
# the expansion P_p


def P_p(p, z, L: Lattice, *, check: bool = True):
    """``prod_i (wp(z) - wp(p_i))^-1`` (vectorized in ``z``)."""
    a = as_config(p).a
    pz = np.asarray(wp(z, L, check=check))
    pa = wp(a, L)
    out = np.ones_like(pz, dtype=complex)
    for v in pa:
        out = out / (pz - v)
    return out


def _pp_rhs(bp: BranchPointData, z, L: Lattice, check: bool = True):
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, bp.c0, dtype=complex)
    for cj, pj in zip(bp.c_vec, bp.p.a):
        out = out + cj * wp(z - pj, L, check=check)
    return out


def pp_expansion_defect(bp: BranchPointData, z, L: Lattice) -> complex:
    """``P_p(z) - (sum c_j wp(z - p_j) + c0)``."""
    z = complex(z)
    for pj in bp.p.a:
        if torus_distance(z, pj, L) < 1e-3 or torus_distance(z, -pj, L) < 1e-3:
            from .errors import PoleError

            raise PoleError("z too close to a point of p")
    return complex(P_p(bp.p, z, L) - _pp_rhs(bp, z, L))


def derivative_constraints(bp: BranchPointData, L: Lattice) -> np.ndarray:
    """``|sum_j c_j wp^(k)(-p_j)|`` for ``k = 1..2n-1``, relative to ``max(1, sum |terms|)``."""
    n = bp.n
    out = np.empty(2 * n - 1)
    for k in range(1, 2 * n):
        terms = bp.c_vec * wp_deriv(-bp.p.a, L, k)
        out[k - 1] = abs(np.sum(terms)) / max(1.0, float(np.sum(np.abs(terms))))
    return out


def contour_residues(bp: BranchPointData, L: Lattice, radius: float = 1e-2, nodes: int = 128) -> np.ndarray:
    """Residues of ``P_p`` at each ``p_i`` by the trapezoid rule on a circle.

    The radius is reduced to a third of the distance to the nearest other
    singularity when that is below ``radius``.
    """
    a = bp.p.a
    sing = np.concatenate([a, -a, [0.0]])
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    unit = np.exp(1j * theta)
    out = np.empty(a.size, dtype=complex)
    for i, ai in enumerate(a):
        d = min(torus_distance(ai, s, L) for s in sing if torus_distance(ai, s, L) > PAIR_TOL)
        r = min(radius, d / 3.0)
        vals = P_p(a, ai + r * unit, L)
        # (1/2 pi i) oint f dz with dz = i r e^{i theta} dtheta
        out[i] = np.mean(vals * r * unit)
    return out


# --------------------------------------------------------------------------
# e^c, mu_i and the integrand


def K_of(a, z, L: Lattice):
    """``exp(8 pi sum_j G(z - a_j) - 8 pi n G(z))``."""
    a = as_config(a).a
    z = np.asarray(z, dtype=complex)
    s = -a.size * green(z, L)
    for aj in a:
        s = s + green(z - aj, L)
    return np.exp(8.0 * np.pi * s)


def _sample_points(a, L: Lattice, count: int = 12, sep: float = 0.05) -> np.ndarray:
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    pts = []
    k = 0
    while len(pts) < count:
        r = (0.137 + k * golden) % 1.0
        s = (0.291 + k * np.sqrt(2.0)) % 1.0
        z = r + s * L.tau
        k += 1
        if torus_distance(z, 0.0, L) < sep:
            continue
        if any(torus_distance(z, aj, L) < sep or torus_distance(z, -aj, L) < sep for aj in a):
            continue
        pts.append(z)
    return np.array(pts)


def exp_c_samples(p, L: Lattice, count: int = 12) -> np.ndarray:
    """``log(K(z) prod |wp(z) - wp(p_i)|^2)`` at ``count`` fixed sample points."""
    a = as_config(p).a
    z = _sample_points(a, L, count)
    logk = 8.0 * np.pi * (np.sum([green(z - aj, L) for aj in a], axis=0) - a.size * green(z, L))
    pz, pa = wp(z, L), wp(a, L)
    return logk + 2.0 * np.sum([np.log(np.abs(pz - v)) for v in pa], axis=0)


def exp_c(p, L: Lattice, tol: float = EXPC_SPREAD) -> float:
    """Constant ``e^c`` with ``K(z) = e^c prod |wp(z) - wp(p_i)|^-2``.

    Raises ``InconsistencyError`` when the sampled values spread by more
    than ``tol`` (relative), i.e. when ``p`` is not a branch point.
    """
    logs = exp_c_samples(p, L)
    spread = float(np.max(logs) - np.min(logs))
    if spread > tol:
        raise InconsistencyError(f"K(z) prod|wp - wp(p_i)|^2 is not constant (log spread {spread:.3e})")
    return float(np.exp(np.mean(logs)))


def mu_values(a, L: Lattice) -> np.ndarray:
    """``mu_i = exp(8 pi (G~(a_i, a_i) + sum_{j != i} G(a_i - a_j) - n G(a_i)))``."""
    a = as_config(a).a
    n = a.size
    diag = regular_part_diagonal(L)
    out = np.empty(n)
    for i in range(n):
        s = diag - n * green(a[i], L)
        for j in range(n):
            if j != i:
                s += green(a[i] - a[j], L)
        out[i] = np.exp(8.0 * np.pi * s)
    return out


def f_ai(a, i: int, z, L: Lattice) -> float:
    """``f_{a_i}(z)``; ``mu_i e^f / |z - a_i|^4 = K(z)``."""
    a = as_config(a).a
    n = a.size
    z = complex(z)
    s = regular_part(z, a[i], L) - regular_part_diagonal(L)
    for j in range(n):
        if j != i:
            s += green(z - a[j], L) - green(a[i] - a[j], L)
    s -= n * (green(z, L) - green(a[i], L))
    return 8.0 * np.pi * s


# --------------------------------------------------------------------------
# construction


def _complete(a, L: Lattice, *, label: str, template: Template, singular: bool | None = None) -> BranchPointData:
    a = np.asarray(a, dtype=complex)
    lam, pair = pairing(a, L)
    c, c0, s = tangent_vector(a, L, lam, pair)
    if singular is None:
        det = np.linalg.det(complex_jacobian_minor(a, L)) if a.size > 1 else 1.0
        singular = bool(abs(det) < singular_threshold(L, a.size))
    res = float(np.max(np.abs(constraint_zeta(a, L, full=True)), initial=0.0))
    return BranchPointData(
        p=Configuration(a),
        lambda2=lam,
        pairing=pair,
        c_vec=c,
        c0=c0,
        c_sum=s,
        exp_c=exp_c(a, L),
        B=B_of(a, L),
        singular_flag=singular,
        label=label,
        template=template,
        residual=res,
    )


def _q_roots(L: Lattice) -> tuple[list[complex], bool]:
    """Solutions of ``wp(q)^2 = g2/12``, one per +- pair.

    On a (numerically) singular torus the two pairs nearly coincide; only
    the root of ``wp(q) = sqrt(g2/12)`` is returned, so the merged point is
    still an exact branch point of the given lattice.
    """
    singular = abs(L.g2) < SINGULAR_G2 * max(1.0, L.scale) ** 2
    target = np.sqrt(complex(L.g2) / 12.0)
    norm = max(1.0, abs(target))

    if singular:
        def F(x):
            return np.atleast_1d(wp(x[0], L) - target)

        def J(x):
            return np.atleast_2d(wp_prime(x[0], L))
    else:
        def F(x):
            return np.atleast_1d((wp(x[0], L) ** 2 - L.g2 / 12.0) / norm)

        def J(x):
            pz, dpz = wp_and_prime(x[0], L)
            return np.atleast_2d(2.0 * pz * dpz / norm)

    roots: list[complex] = []
    for j in range(4):
        for k in range(4):
            seed = (j + 0.5) / 4.0 + (k + 0.5) / 4.0 * L.tau
            try:
                x = damped_newton(F, J, [seed], converged=lambda x, f: bool(abs(f[0]) < 1e-14)).x[0]
            except GreenLameError:
                continue
            if _is_half(x, L, 1e-6):
                continue
            if all(torus_distance(x, r, L) > 1e-6 and torus_distance(x, -r, L) > 1e-6 for r in roots):
                roots.append(complex(x))
    return roots, singular


def enumerate_branch_points(n: int, L: Lattice) -> list[BranchPointData]:
    """All branch points of ``Y_1`` (3) or ``Y_2`` (5, or 4 on a singular torus)."""
    halves = L.half_periods
    if n == 1:
        return [
            _complete([halves[k]], L, label=f"h{k + 1}", template=Template((k + 1,), 0))
            for k in range(3)
        ]
    if n != 2:
        raise UnsupportedError("enumeration is available for n = 1, 2; use solve_branch_point for larger n")
    out = [
        _complete([halves[i], halves[j]], L, label=f"h{i + 1}{j + 1}", template=Template((i + 1, j + 1), 0))
        for i, j in ((0, 1), (0, 2), (1, 2))
    ]
    roots, singular = _q_roots(L)
    if singular:
        if len(roots) != 1:
            raise ConvergenceError(f"expected one root of wp on a singular torus, found {len(roots)}")
        pt = solve_branch_point(2, Template((), 1), roots, L)
        out.append(_complete(pt.p.a, L, label="q0", template=pt.template, singular=True))
        return out
    if len(roots) != 2:
        raise ConvergenceError(f"expected two +- pairs solving wp^2 = g2/12, found {len(roots)}")
    target = np.sqrt(complex(L.g2) / 12.0)
    roots.sort(key=lambda q: abs(wp(q, L) - target))
    for q, sign in zip(roots, "+-"):
        pt = solve_branch_point(2, Template((), 1), [q], L)
        out.append(_complete(pt.p.a, L, label=f"q{sign}", template=pt.template))
    return out


def solve_branch_point(n: int, template, seeds, L: Lattice, *, tol: float = BRANCH_TOL) -> BranchPointData:
    """Newton on the full constraint system within a symmetric ansatz.

    The configuration is ``(omega_k/2 for k in template.half) + (q_1, -q_1, ...)``
    with one complex unknown ``q_m`` per pair, seeded by ``seeds``.
    """
    if isinstance(template, str):
        template = Template.parse(template)
    if template.n != n:
        raise ValueError(f"template {template} has {template.n} points, expected n = {n}")
    seeds = [complex(s) for s in seeds]
    if len(seeds) != template.pairs:
        raise ValueError(f"template {template} needs {template.pairs} seed(s), got {len(seeds)}")
    halves = np.array([L.half_periods[k - 1] for k in template.half], dtype=complex)

    def build(q):
        return np.concatenate([halves, np.ravel(np.column_stack([q, -q])) if q.size else []])

    def F(q):
        a = build(q)
        as_config(a).validate(L)
        return constraint_zeta(a, L, full=True)

    def J(q):
        a = build(q)
        full = constraint_jacobian(a, L, full=True)
        h = halves.size
        cols = [full[:, h + 2 * m] - full[:, h + 2 * m + 1] for m in range(q.size)]
        return np.column_stack(cols) if cols else np.zeros((n, 0))

    q0 = np.array(seeds, dtype=complex)
    for m, qm in enumerate(q0):
        if _is_half(qm, L, 1e-6):
            raise DegenerateError(f"seed {m + 1} is a half period; a pair would collapse")
    try:
        as_config(build(q0)).validate(L, 1e-6)
    except GreenLameError as exc:
        raise DegenerateError(f"seeds give an invalid configuration: {exc}") from exc
    if q0.size:
        res = damped_newton(F, J, q0, converged=lambda x, f: bool(np.max(np.abs(f)) < tol))
        q = res.x
    else:
        q = q0
        r = float(np.max(np.abs(F(q)), initial=0.0))
        if r >= tol:
            raise ConvergenceError(f"half-period template {template} is not a solution (residual {r:.3e})")
    a = build(q)
    for m, qm in enumerate(q):
        if _is_half(qm, L, 1e-6):
            raise DegenerateError(f"pair {m + 1} collapsed onto a half period")
    try:
        as_config(a).validate(L, 1e-6)
    except GreenLameError as exc:
        raise DegenerateError(f"template violated: {exc}") from exc
    return _complete(a, L, label=str(template), template=template)

