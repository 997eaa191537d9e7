"""Fourth-order elliptic operators on closed manifolds and their lowest
eigenvalues."""

from .assembly import OperatorMatrices, assemble, assemble_second_order, holder_gap, quadratic_form_G, rayleigh_F
from .classify import (
    EsleesReport,
    SignPattern,
    Verdict,
    classify_operator,
    classify_second_order,
    sign_pattern,
    verify_holder,
    verify_shift_invariance,
    verify_theorem,
)
from .eigensolve import minimize_rayleigh, orthogonality_check, solve_dense, solve_minimizer
from .manifold import (
    Kind,
    ManifoldDiscretization,
    build_circle,
    build_flat_torus,
    build_icosphere,
    build_sphere,
    laplace_eigenpairs,
    load_mesh,
    second_eigenvalue,
)
from .spectrum import Method, SolveSettings, SpectrumResult
from .tensorfield import (
    TensorField,
    is_negative_semidefinite,
    pointwise_max_ratio,
    random_nsd_field,
    random_potential,
    scaled_inverse_metric,
    shifted_nsd,
)

__version__ = "0.1.0"

__all__ = [
    "OperatorMatrices",
    "assemble",
    "assemble_second_order",
    "holder_gap",
    "quadratic_form_G",
    "rayleigh_F",
    "EsleesReport",
    "SignPattern",
    "Verdict",
    "classify_operator",
    "classify_second_order",
    "sign_pattern",
    "verify_holder",
    "verify_shift_invariance",
    "verify_theorem",
    "minimize_rayleigh",
    "orthogonality_check",
    "solve_dense",
    "solve_minimizer",
    "Kind",
    "ManifoldDiscretization",
    "build_circle",
    "build_flat_torus",
    "build_icosphere",
    "build_sphere",
    "laplace_eigenpairs",
    "load_mesh",
    "second_eigenvalue",
    "Method",
    "SolveSettings",
    "SpectrumResult",
    "TensorField",
    "is_negative_semidefinite",
    "pointwise_max_ratio",
    "random_nsd_field",
    "random_potential",
    "scaled_inverse_metric",
    "shifted_nsd",
]
