from .nodes import (
    FUNCTIONS,
    VARIABLES,
    Binary,
    Const,
    ExprError,
    Node,
    NonFiniteError,
    Param,
    Pow,
    UnboundParameterError,
    Unary,
    Var,
    add,
    compile_expr,
    const,
    diff,
    div,
    evaluate,
    free_symbols,
    gradient,
    mul,
    neg,
    power,
    sub,
    to_source,
)
from .parser import ExprLexError, ExprSyntaxError, UnknownIdentifierError, ZeroDenominatorError, parse, tokenize
from .potentials import CATALOG_NAMES, Potentials, catalog, random_polynomial

__all__ = [
    "FUNCTIONS", "VARIABLES", "Binary", "Const", "ExprError", "Node", "NonFiniteError", "Param", "Pow",
    "UnboundParameterError", "Unary", "Var", "add", "compile_expr", "const", "diff", "div", "evaluate",
    "free_symbols", "gradient", "mul", "neg", "power", "sub", "to_source", "ExprLexError", "ExprSyntaxError",
    "UnknownIdentifierError", "ZeroDenominatorError", "parse", "tokenize", "CATALOG_NAMES", "Potentials",
    "catalog", "random_polynomial",
]
