"""Universal algebra presentations, word-counting derivations and the
noncommutative torus."""

from .builtins import BUILTINS, builtin_source, list_builtins, load_builtin, shipped_source
from .mc import MCResult, mc_randomized_action
from .presentation import (
    BalanceResult,
    ParseError,
    Presentation,
    PresentationError,
    balance_check,
    balanced_generators,
    parse_presentation,
)
from .torus import (
    TorusElement,
    gauge_perturb_check,
    torus_adjoint,
    torus_cocycle_element,
    torus_compressed_scalar,
    torus_mul,
)
from .words import FreeElement, Word, apply_derivation, n_count

__all__ = [
    "BUILTINS",
    "BalanceResult",
    "FreeElement",
    "MCResult",
    "ParseError",
    "Presentation",
    "PresentationError",
    "TorusElement",
    "Word",
    "apply_derivation",
    "balance_check",
    "balanced_generators",
    "builtin_source",
    "gauge_perturb_check",
    "list_builtins",
    "load_builtin",
    "mc_randomized_action",
    "n_count",
    "parse_presentation",
    "shipped_source",
    "torus_adjoint",
    "torus_cocycle_element",
    "torus_compressed_scalar",
    "torus_mul",
]
