"""Eigenvalues and eigenvectors of equilateral hypermatrices via matrix pencils.

The package flattens a hypermatrix eigenproblem ``A·x = λ·𝓑(x)`` into a
linear matrix pencil over a Kronecker power of the unknown, classifies
eigenvalues as essential (rank-dropping) or quasi (column-rank-deficient),
and searches pencil kernels for monic decomposable eigenvectors.  It ships
semi-tensor-product and hypermatrix primitives, a monic decomposition
certificate, D-/U-eigen solvers, an alternating least-squares iteration, and
the ``hypereig`` command-line tool.
"""

from .stp_core import (
    SizeLimitError,
    basis_vector,
    kron,
    pushdown,
    stp,
    stp_all,
    stp_power,
)
from .hypermatrix import (
    FormatError,
    Hypermatrix,
    IndexPartition,
    apply,
    contract,
    eval_tensor,
    flatten,
    hmx_from_dict,
    hmx_to_dict,
    unflatten,
    vectorize,
)
from .hypervector import (
    MonicDecomposition,
    compose,
    diagonal_index,
    extract_component,
    index_join,
    index_split,
    is_diagonal,
    monic_decompose,
    monicize,
    mu,
    xi_matrix,
)
from .pencil_eigen import (
    DegeneratePencilError,
    EigenClass,
    EigenSolution,
    Pencil,
    classify,
    essential_eigenvalues_real,
    generic_rank,
    kernel_basis,
    numerical_rank,
    psi_reduction,
    solution_at,
    square_pencil_eigen,
)
from .u_eigen import (
    EigenWitness,
    IterationBreakdown,
    IterationState,
    SolveOptions,
    TypeMap,
    UEigenProblem,
    build_d_pencil,
    case_pencil,
    compose_type,
    d_solve,
    iterate_least_squares,
    lower_power_E,
    named_type,
    options_from_dict,
    problem_from_dict,
    problem_to_dict,
    raise_power,
    type_h,
    type_inner_product,
    type_markov,
    u_solve,
)

__version__ = "0.1.0"

__all__ = [
    "DegeneratePencilError",
    "EigenClass",
    "EigenSolution",
    "EigenWitness",
    "FormatError",
    "Hypermatrix",
    "IndexPartition",
    "IterationBreakdown",
    "IterationState",
    "MonicDecomposition",
    "Pencil",
    "SizeLimitError",
    "SolveOptions",
    "TypeMap",
    "UEigenProblem",
    "apply",
    "basis_vector",
    "build_d_pencil",
    "case_pencil",
    "classify",
    "compose",
    "compose_type",
    "contract",
    "d_solve",
    "diagonal_index",
    "essential_eigenvalues_real",
    "eval_tensor",
    "extract_component",
    "flatten",
    "generic_rank",
    "hmx_from_dict",
    "hmx_to_dict",
    "index_join",
    "index_split",
    "is_diagonal",
    "iterate_least_squares",
    "kernel_basis",
    "kron",
    "lower_power_E",
    "monic_decompose",
    "monicize",
    "mu",
    "named_type",
    "numerical_rank",
    "options_from_dict",
    "problem_from_dict",
    "problem_to_dict",
    "psi_reduction",
    "pushdown",
    "raise_power",
    "solution_at",
    "square_pencil_eigen",
    "stp",
    "stp_all",
    "stp_power",
    "type_h",
    "type_inner_product",
    "type_markov",
    "u_solve",
    "unflatten",
    "vectorize",
    "xi_matrix",
    "__version__",
]
