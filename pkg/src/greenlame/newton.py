"""Damped Newton iteration for complex systems (square or overdetermined)."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, GreenLameError, SingularJacobianError

ARMIJO = 1e-4


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    cond: float


def damped_newton(
    F: Callable[[np.ndarray], np.ndarray],
    J: Callable[[np.ndarray], np.ndarray],
    x0,
    *,
    converged: Callable[[np.ndarray, np.ndarray], bool],
    maxiter: int = 50,
    max_halvings: int = 12,
    cond_max: float = 1e13,
    polish: int = 1,
) -> NewtonResult:
    """Newton with Armijo backtracking on ``||F||``.

    ``J`` may be rectangular (more equations than unknowns), in which case
    each step is the least-squares (Gauss-Newton) step.  Trial points where
    ``F`` raises a package error (pole, diagonal) count as rejected steps.
    After convergence up to ``polish`` further full steps are taken, each
    kept only if it lowers ``||F||``.
    """
    x = np.array(x0, dtype=complex)
    fx = np.asarray(F(x), dtype=complex)
    cond = float("nan")
    for it in range(maxiter + 1):
        if converged(x, fx):
            x, fx = _polish(F, J, x, fx, polish)
            return NewtonResult(x, float(np.max(np.abs(fx), initial=0.0)), it, cond)
        if it == maxiter:
            break
        jx = np.asarray(J(x), dtype=complex)
        sv = np.linalg.svd(jx, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        if cond > cond_max:
            raise SingularJacobianError(f"Jacobian condition number {cond:.3e} at iteration {it}")
        step = _step(jx, fx)
        norm0 = np.linalg.norm(fx)
        t = 1.0
        accepted = None
        best = np.inf
        for _ in range(max_halvings + 1):
            trial = x + t * step
            try:
                ft = np.asarray(F(trial), dtype=complex)
            except GreenLameError:
                t *= 0.5
                continue
            nt = np.linalg.norm(ft)
            if nt < best:
                best, accepted = nt, (trial, ft)
            if nt <= (1.0 - ARMIJO * t) * norm0:
                break
            t *= 0.5
        if accepted is None:
            raise ConvergenceError(f"line search failed at iteration {it}")
        x, fx = accepted
    raise ConvergenceError(f"no convergence after {maxiter} iterations (|F| = {np.max(np.abs(fx)):.3e})")


def _step(jx, fx):
    if jx.shape[0] == jx.shape[1]:
        return np.linalg.solve(jx, -fx)
    return np.linalg.lstsq(jx, -fx, rcond=None)[0]


def _polish(F, J, x, fx, count):
    for _ in range(count):
        try:
            trial = x + _step(np.asarray(J(x), dtype=complex), fx)
            ft = np.asarray(F(trial), dtype=complex)
        except (GreenLameError, np.linalg.LinAlgError):
            break
        if np.linalg.norm(ft) >= np.linalg.norm(fx):
            break
        x, fx = trial, ft
    return x, fx
