"""Exact abstract-index tensor algebra: expressions, canonical forms, I/O."""

from . import coeff, symbols  # noqa: F401  (importing symbols populates REGISTRY)
from .canon import canonicalize, encoding, equals_zero, exprs_equal
from .core import (AHOL, HI, HOL, LEVI, REEB, REEB_INDEX, REGISTRY, Factor,
                   Index, Monomial, Registry, SymbolDecl, TensorExpr,
                   fresh_name, rename_dummies_fresh)
from .deriv import apply_nabla
from .parse import ParseError, index_class, parse
from .printer import latex, pretty
from .symbols import slot_names

__all__ = [
    "AHOL", "HI", "HOL", "LEVI", "REEB", "REEB_INDEX", "REGISTRY",
    "Factor", "Index", "Monomial", "ParseError", "Registry", "SymbolDecl",
    "TensorExpr", "apply_nabla", "canonicalize", "coeff", "encoding",
    "equals_zero", "exprs_equal", "fresh_name", "index_class", "latex",
    "parse", "pretty", "rename_dummies_fresh", "slot_names", "symbols",
]
