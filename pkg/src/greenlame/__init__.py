"""Green functions on flat tori, Lame branch points and the Hessian adjunction identity."""
from .adjunction import AdjunctionReport, c_p, det_hessian, hessian_Gn, verify_adjunction
from .branch import BranchPointData, Template, enumerate_branch_points, solve_branch_point
from .dinvariant import DResult, compute_D, d_area_form, d_closed_form, d_quadrature
from .elliptic import Lattice, make_lattice, sigma_w, wp, wp_prime, zeta_w
from .errors import (
    ConvergenceError,
    DegenerateError,
    GreenLameError,
    InconsistencyError,
    PoleError,
    QuadratureBudgetError,
    SingularJacobianError,
    UnsupportedError,
)
from .green import Configuration, green, green_grad, green_hess, multiple_green, multiple_green_grad
from .lame import B_of, C_of, newton_on_curve
from .reports import InvariantReport, build_report

__all__ = [
    "AdjunctionReport", "B_of", "BranchPointData", "C_of", "Configuration", "ConvergenceError", "DResult",
    "DegenerateError", "GreenLameError", "InconsistencyError", "InvariantReport", "Lattice", "PoleError",
    "QuadratureBudgetError", "SingularJacobianError", "Template", "UnsupportedError", "build_report", "c_p",
    "compute_D", "d_area_form", "d_closed_form", "d_quadrature", "det_hessian", "enumerate_branch_points",
    "green", "green_grad", "green_hess", "hessian_Gn", "make_lattice", "multiple_green", "multiple_green_grad",
    "newton_on_curve", "sigma_w", "solve_branch_point", "verify_adjunction", "wp", "wp_prime", "zeta_w",
]
