"""Numerical toolkit for non-Hermitian Hamiltonians with real spectra.

Spectra, metric operators, maps that unitarize them, canonical
position/momentum pairs and the residual checks that tie them together.
"""

__version__ = "0.1.0"

from .canonical import (
    CanonicalPair,
    HermiticityReport,
    canonical_form_residual,
    canonical_pair,
    commutator_residual,
    eigenmap_T,
    hermiticity_table,
    similarity_transform,
)
from .errors import (
    AssemblyError,
    ConditioningError,
    EigenSolveError,
    InvalidArgument,
    MetricError,
    NHQMError,
    ParseError,
    SingularMapError,
    UnsupportedInBasis,
)
from .evolution import EvolutionResult, spectral_propagate
from .expr import OperatorExpr, Term
from .hilbert import (
    InnerProduct,
    TransformMap,
    diagonal_map,
    gram_matrix,
    metric_from_spectrum,
    orthonormality_defect,
    pseudo_hermiticity_residual,
    unitarizing_map,
)
from .models import ModelSpec, bender_family, harmonic_oscillator, paper_example, parse_expression
from .numerics import (
    BasisSpec,
    GridSpec,
    Spectrum,
    eig_dense,
    gauss_hermite_rule,
    hermite_function,
    make_grid,
)
from .operators import (
    MatrixRep,
    adjoint_wrt,
    assemble_basis,
    assemble_grid,
    position_momentum_matrices,
)

__all__ = [
    "AssemblyError", "BasisSpec", "CanonicalPair", "ConditioningError", "EigenSolveError",
    "EvolutionResult", "GridSpec", "HermiticityReport", "InnerProduct", "InvalidArgument",
    "MatrixRep", "MetricError", "ModelSpec", "NHQMError", "OperatorExpr", "ParseError",
    "SingularMapError", "Spectrum", "Term", "TransformMap", "UnsupportedInBasis",
    "adjoint_wrt", "assemble_basis", "assemble_grid", "bender_family", "canonical_form_residual",
    "canonical_pair", "commutator_residual", "diagonal_map", "eig_dense", "eigenmap_T",
    "gauss_hermite_rule", "gram_matrix", "harmonic_oscillator", "hermite_function",
    "hermiticity_table", "make_grid", "metric_from_spectrum", "orthonormality_defect",
    "paper_example", "parse_expression", "position_momentum_matrices",
    "pseudo_hermiticity_residual", "similarity_transform", "spectral_propagate",
    "unitarizing_map",
]
