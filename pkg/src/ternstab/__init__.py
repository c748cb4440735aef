"""ternstab: a numerical workbench for finite-dimensional ternary Banach
algebras.

The package builds structure-tensor algebras and modules, checks their
axioms by brute force, solves for exact twisted ternary derivations, and
recovers them from controlled perturbations through the direct-method
doubling limit, certifying the distance bounds along the way.
"""

from .algebra import (
    AssocReport,
    BinaryReduction,
    CubicMatrix,
    TernaryAlgebra,
    check_ternary_associativity,
    cubic_product,
    odd_polynomial_algebra,
    rescale_norm_submultiplicative,
    ternary_product,
    trivial_matrix_algebra,
    verify_identity_and_reduce,
)
from .control import (
    ControlFunction,
    cauchy_tail_bound,
    custom_control,
    power_control,
    summed_majorant,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    DivergentControlError,
    EmptyDerivationSpaceError,
    IdentityCheckError,
    NonConvergenceError,
    TernstabError,
)
from .harness import (
    ExperimentConfig,
    PerturbationSpec,
    RunResult,
    load_config,
    perturb_map,
    run_experiment,
    run_sweep,
)
from .maps import (
    LIE_SIGNS,
    MIXED_SIGNS,
    LinearMap,
    SignConvention,
    jordan_residual,
    lie_derivation_residual,
    residual_on_basis,
    solve_exact_derivations,
    twisted_bracket,
    unimodular_split,
)
from .module import (
    ModuleReport,
    TernaryModule,
    check_module_axioms,
    product_abx,
    product_axb,
    product_xab,
    self_module,
)
from .stability import (
    EvaluableMap,
    HypothesisReport,
    StabilizationReport,
    check_hypothesis,
    direct_method_stabilize,
    hyers_limit,
)

__version__ = "0.1.0"

__all__ = [
    "AssocReport",
    "BinaryReduction",
    "ConfigError",
    "ControlFunction",
    "CubicMatrix",
    "DimensionMismatch",
    "DivergentControlError",
    "EmptyDerivationSpaceError",
    "EvaluableMap",
    "ExperimentConfig",
    "HypothesisReport",
    "IdentityCheckError",
    "LIE_SIGNS",
    "LinearMap",
    "MIXED_SIGNS",
    "ModuleReport",
    "NonConvergenceError",
    "PerturbationSpec",
    "RunResult",
    "SignConvention",
    "StabilizationReport",
    "TernaryAlgebra",
    "TernaryModule",
    "TernstabError",
    "cauchy_tail_bound",
    "check_hypothesis",
    "check_module_axioms",
    "check_ternary_associativity",
    "cubic_product",
    "custom_control",
    "direct_method_stabilize",
    "hyers_limit",
    "jordan_residual",
    "lie_derivation_residual",
    "load_config",
    "odd_polynomial_algebra",
    "perturb_map",
    "power_control",
    "product_abx",
    "product_axb",
    "product_xab",
    "rescale_norm_submultiplicative",
    "residual_on_basis",
    "run_experiment",
    "run_sweep",
    "self_module",
    "solve_exact_derivations",
    "summed_majorant",
    "ternary_product",
    "trivial_matrix_algebra",
    "twisted_bracket",
    "unimodular_split",
    "verify_identity_and_reduce",
]
