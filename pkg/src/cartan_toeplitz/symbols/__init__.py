"""Expression language for bounded symbols and their invariance classes."""
from .core import (
    CompiledSymbol,
    EvalContext,
    Group,
    InvarianceReport,
    SymbolKind,
    act,
    average_symbol,
    classify,
    compile_symbol,
    evaluate,
    invariance_check,
    static_bound,
)
from .parser import SymbolExpr, parse_symbol, tokenize, unparse

__all__ = [
    "CompiledSymbol", "EvalContext", "Group", "InvarianceReport", "SymbolKind", "SymbolExpr",
    "act", "average_symbol", "classify", "compile_symbol", "evaluate", "invariance_check",
    "parse_symbol", "static_bound", "tokenize", "unparse",
]
