"""Self-contained symbolic scalar engine.

Parse, differentiate, substitute, numerically evaluate, and decide
equality of expressions in chart coordinates.  All values are immutable
and all operations pure, so everything here is safe to share across
threads without synchronization.
"""

from .nodes import (
    BUILTIN_FUNCTIONS,
    Add,
    Call,
    EvalPoint,
    Expr,
    FunctionBindings,
    HALF,
    MINUS_ONE,
    Mul,
    ONE,
    Pow,
    Rat,
    Sym,
    ZERO,
    add,
    call,
    differentiate,
    div,
    evaluate,
    free_symbols,
    mul,
    neg,
    opaque_functions,
    pow_,
    rational,
    substitute,
    sym,
    syms,
    to_text,
)
from .parse import parse
from .equality import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_TOL,
    SAMPLE_RANGE,
    EqualityResult,
    Verdict,
    equal,
    is_zero,
    sample_points,
)

__all__ = [
    "BUILTIN_FUNCTIONS", "Add", "Call", "EvalPoint", "Expr",
    "FunctionBindings", "HALF", "MINUS_ONE", "Mul", "ONE", "Pow", "Rat",
    "Sym", "ZERO", "add", "call", "differentiate", "div", "evaluate",
    "free_symbols", "mul", "neg", "opaque_functions", "pow_", "rational",
    "substitute", "sym", "syms", "to_text", "parse", "DEFAULT_SAMPLES",
    "DEFAULT_SEED", "DEFAULT_TOL", "SAMPLE_RANGE", "EqualityResult",
    "Verdict", "equal", "is_zero", "sample_points",
]
