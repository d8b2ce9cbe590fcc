"""conicproj: conic projections and regularization solvers.

Projection of a point onto the intersection of a product cone (PSD,
second-order, nonnegative blocks) with an affine subspace, by geometric
schemes (alternating projections, Dykstra, ADM) and dual projection methods
(fixed-metric gradient, quasi-Newton, semismooth Newton-CG); plus proximal /
augmented-Lagrangian "regularization" solvers for standard-form linear
conic programs, with sum-of-squares and graph front ends.
"""

from .cones import (
    AffineMap,
    BlockPoint,
    ConeSpec,
    FactorizationError,
    GramFactorization,
    InputError,
    NumericalError,
    SpectralDecomp,
    cone_jacobian_apply,
    eig_sym,
    gram_factorize,
    project_affine,
    project_cone,
    project_polar,
    project_psd,
    project_soc,
    psd_jacobian_apply,
    soc_jacobian_apply,
    symmetrize,
)
from .dualproj import (
    DualEval,
    DualPoint,
    ProjectionProblem,
    eval_theta,
    nearest_correlation,
    rescale_correlation,
    solve_fixed_metric,
    solve_quasi_newton,
    solve_ssnewton,
)
from .altschemes import (
    TwoSetProblem,
    admm_projection,
    alternating_projections,
    dykstra,
)
from .regsolver import (
    IterateTriple,
    LinearConicProblem,
    RegParams,
    prox_eval,
    residuals,
    solve_regularized,
    solve_simple,
)
from .polysos import (
    Graph,
    MonomialBasis,
    Polynomial,
    build_nearcorr,
    build_polymin,
    build_sos_feasibility,
    build_theta,
    extract_certificate,
    monomials_upto,
    motzkin,
    random_polymin_instance,
    random_sos_instance,
    structured_polymin_instance,
)
from .report import SolveReport

__version__ = "0.1.0"
