"""Tanaka--Webster covariant calculus: ordering, rewriting, identities."""

from .engine import (EXPAND_FOR_IDENTITIES, check, default_rules,
                     expand_definition, expand_expr, expansion_rule, nabla,
                     reduce, reduction_log, simplify, verify_all,
                     verify_identity)
from .matcher import Rule, apply_rule_once, match_monomial, rule_from_exprs, substitute
from .ordering import CommutatorSpec, CommutatorTable, commutator_terms, normal_order_tw
from .rules import RuleSet, load_default, load_rules

__all__ = [
    "CommutatorSpec", "CommutatorTable", "EXPAND_FOR_IDENTITIES", "Rule",
    "RuleSet", "apply_rule_once", "check", "commutator_terms", "default_rules",
    "expand_definition", "expand_expr", "expansion_rule", "load_default",
    "load_rules", "match_monomial", "nabla", "normal_order_tw", "reduce",
    "reduction_log", "rule_from_exprs", "simplify", "substitute",
    "verify_all", "verify_identity",
]
