"""Exact arithmetic for level-m differential operators on the formal affine
line: divided-power bases, pseudo-polynomial symbol algebras, microlocal
inversion at finite order and precision, level-comparison maps, and
characteristic-variety computations for cyclic modules."""

from .charvar import (
    Bounds,
    CharVariety,
    CyclicModule,
    OrderStandardBasis,
    SupportVerdict,
    char_variety,
    micro_support_test,
    order_standard_basis,
    stability_probe,
    verify_counterexample,
)
from .diffop import (
    DiffOp,
    OrderSymbol,
    ThetaTilde,
    build_theta_tilde,
    central_level_for,
    level_map_phi,
    order_and_symbol,
    reduce_mod,
    render_diffop,
)
from .errors import (
    BoundsExhausted,
    BudgetExhausted,
    DegreeZeroLocalizer,
    ExprSyntaxError,
    IncompatibleLocalizer,
    IntegralityViolation,
    LevelMismatch,
    MicrodiffError,
    NotHomogeneous,
    NotIntegral,
    NotInvertibleAtSymbol,
    SearchBoundExceeded,
    SymbolMismatch,
    ZeroOperator,
)
from .filtered import (
    FilteredElement,
    ReesElement,
    ore_witness_search,
    principal_symbol,
    rees_multiply,
)
from .microloc import (
    ConvergenceProfile,
    InversionReport,
    MembershipVerdict,
    MicroOp,
    alpha_bound,
    change_presentation_level,
    convert_presentation,
    invert_theta_tilde,
    membership_intermediate,
    micro_multiply,
    normcalc_bounds,
    observed_a_bound,
    psi_level_lower,
    try_invert,
    validate_convergence,
)
from .padic import (
    ExactRational,
    PadicScalar,
    factorial_valuation,
    level_factorial_ratio,
    padic_binomial_constant,
    reduce_mod_precision,
)
from .polynomials import Poly
from .pseudopoly import (
    SymbolPoly,
    digit_decomposition,
    digit_form,
    digit_monomial_constant,
    digits_to_k,
    integral_digits,
    normalize,
    rational_level_change,
    theta_variants,
)

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "BoundsExhausted",
    "BudgetExhausted",
    "CharVariety",
    "ConvergenceProfile",
    "CyclicModule",
    "DegreeZeroLocalizer",
    "DiffOp",
    "ExactRational",
    "ExprSyntaxError",
    "FilteredElement",
    "IncompatibleLocalizer",
    "IntegralityViolation",
    "InversionReport",
    "LevelMismatch",
    "MembershipVerdict",
    "MicroOp",
    "MicrodiffError",
    "NotHomogeneous",
    "NotIntegral",
    "NotInvertibleAtSymbol",
    "OrderStandardBasis",
    "OrderSymbol",
    "PadicScalar",
    "Poly",
    "ReesElement",
    "SearchBoundExceeded",
    "SupportVerdict",
    "SymbolMismatch",
    "SymbolPoly",
    "ThetaTilde",
    "ZeroOperator",
    "alpha_bound",
    "build_theta_tilde",
    "central_level_for",
    "change_presentation_level",
    "char_variety",
    "convert_presentation",
    "digit_decomposition",
    "digit_form",
    "digit_monomial_constant",
    "digits_to_k",
    "factorial_valuation",
    "integral_digits",
    "invert_theta_tilde",
    "level_factorial_ratio",
    "level_map_phi",
    "membership_intermediate",
    "micro_multiply",
    "micro_support_test",
    "normalize",
    "normcalc_bounds",
    "observed_a_bound",
    "order_and_symbol",
    "order_standard_basis",
    "ore_witness_search",
    "padic_binomial_constant",
    "principal_symbol",
    "psi_level_lower",
    "rational_level_change",
    "reduce_mod",
    "reduce_mod_precision",
    "rees_multiply",
    "render_diffop",
    "stability_probe",
    "theta_variants",
    "try_invert",
    "validate_convergence",
    "verify_counterexample",
]
