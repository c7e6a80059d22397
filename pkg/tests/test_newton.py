import numpy as np
import pytest

from greenlame.errors import ConvergenceError, PoleError, SingularJacobianError
from greenlame.newton import damped_newton


def _conv(tol=1e-13):
    return lambda x, fx: bool(np.max(np.abs(fx)) < tol)


def test_square_system_quadratic_convergence():
    # z^2 = 2i, w = z + 1
    F = lambda x: np.array([x[0] ** 2 - 2j, x[1] - x[0] - 1])  # noqa: E731
    J = lambda x: np.array([[2 * x[0], 0], [-1, 1]])  # noqa: E731
    res = damped_newton(F, J, [1.5 + 0.5j, 0], converged=_conv())
    assert abs(res.x[0] - (1 + 1j)) < 1e-13
    assert abs(res.x[1] - (2 + 1j)) < 1e-13
    assert res.iterations < 10


def test_damping_recovers_from_far_seed():
    # arctan has a tiny basin for undamped Newton
    F = lambda x: np.array([np.arctan(x[0])])  # noqa: E731
    J = lambda x: np.array([[1 / (1 + x[0] ** 2)]])  # noqa: E731
    res = damped_newton(F, J, [8.0], converged=_conv())
    assert abs(res.x[0]) < 1e-12


def test_overdetermined_consistent_system():
    F = lambda x: np.array([x[0] - 1j, 2 * x[0] - 2j, x[0] ** 2 + 1])  # noqa: E731
    J = lambda x: np.array([[1], [2], [2 * x[0]]])  # noqa: E731
    res = damped_newton(F, J, [0.3 + 0.8j], converged=_conv())
    assert abs(res.x[0] - 1j) < 1e-12


def test_singular_jacobian_detected():
    F = lambda x: np.array([x[0] + x[1] - 1, 2 * x[0] + 2 * x[1] - 2.5])  # noqa: E731
    J = lambda x: np.array([[1, 1], [2, 2]])  # noqa: E731
    with pytest.raises(SingularJacobianError):
        damped_newton(F, J, [0, 0], converged=_conv())


def test_nonconvergence_raises():
    F = lambda x: np.array([x[0] ** 2 + 1.0])  # noqa: E731  no real root, real iterates
    J = lambda x: np.array([[2 * x[0]]])  # noqa: E731
    with pytest.raises(ConvergenceError):
        damped_newton(F, J, [np.float64(0.5)], converged=_conv(), maxiter=5)


def test_rejected_trials_are_halved():
    # an underestimated Jacobian sends the full step into a region where F raises
    trials = []

    def F(x):
        trials.append(complex(x[0]))
        if abs(x[0] - 4.0) < 0.5:
            raise PoleError("forbidden region")
        return np.array([x[0] - 2.0])

    res = damped_newton(F, lambda x: np.array([[0.5]]), [0.0], converged=_conv())
    assert abs(res.x[0] - 2.0) < 1e-12
    assert 4.0 in trials
