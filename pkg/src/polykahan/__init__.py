"""Kahan-type discretization of polynomial ODEs and the geometry of the
resulting birational maps: exact schemes, explicit maps, Darboux polynomials,
invariant measures, first integrals, and spectra at fixed points."""

from .darboux import (
    CofactorMismatch,
    DarbouxCertificate,
    Pencil,
    find_darboux,
    first_integral,
    invariant_measure,
    jacobian_det_2d,
    pencil_compare,
    verify_darboux,
)
from .maps import (
    BirationalMap,
    NoConvergence,
    NotFixedPoint,
    Orbit,
    SingularStep,
    SpectrumReport,
    ZeroDeterminant,
    char_poly_and_roots,
    convergence_order,
    iterate,
    jacobian,
    linearize_at,
    solve_forward,
    step,
    step_back,
)
from .poly import (
    DenominatorVanished,
    Monomial,
    NotLinear,
    Polynomial,
    RationalFunction,
    Var,
    collect_linear,
    param,
    x,
)
from .scheme import (
    H,
    DegreeTooHigh,
    ImplicitScheme,
    PolyOdeSystem,
    affine_conjugate,
    check_affine_recombination,
    discretize,
    symmetrize,
    symmetrize_monomial,
)

__all__ = [
    "BirationalMap",
    "CofactorMismatch",
    "DarbouxCertificate",
    "DegreeTooHigh",
    "DenominatorVanished",
    "H",
    "ImplicitScheme",
    "Monomial",
    "NoConvergence",
    "NotFixedPoint",
    "NotLinear",
    "Orbit",
    "Pencil",
    "PolyOdeSystem",
    "Polynomial",
    "RationalFunction",
    "SingularStep",
    "SpectrumReport",
    "Var",
    "ZeroDeterminant",
    "affine_conjugate",
    "char_poly_and_roots",
    "check_affine_recombination",
    "collect_linear",
    "convergence_order",
    "discretize",
    "find_darboux",
    "first_integral",
    "invariant_measure",
    "iterate",
    "jacobian",
    "jacobian_det_2d",
    "linearize_at",
    "param",
    "pencil_compare",
    "solve_forward",
    "step",
    "step_back",
    "symmetrize",
    "symmetrize_monomial",
    "verify_darboux",
    "x",
]
