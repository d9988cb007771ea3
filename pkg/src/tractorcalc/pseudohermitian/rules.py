"""Plain-text rule tables: commutators, rewrite rules, identity catalogue.

Format (one stanza per blank-line-separated block, ``#`` comments)::

    [commutator <class> <class>]     # classes from {h, a, 0}
    reeb   = <expr>                  # coefficient of an inserted nabla[z0]
    deriv  = <expr> @ <name> ; ...   # inserted directional derivative terms
    slot h = <expr> @ <name> ; ...   # action on a holomorphic lower index c
    slot a = <expr> @ <name> ; ...   # action on an antiholomorphic index cb
    weight = <expr>                  # density term; w/wp denote the operand weight

    [rule <name>]        / [exchange <name>]
    lhs = <pattern monomial>
    rhs = <expression>
    conjugate = no                   # suppress the automatic conjugate rule

    [identity <name>]
    lhs = <expression>
    rhs = <expression>

    [condition <name>]               # substitution sets for reduce()
    rule = <pattern> -> <expression>
    imply = <expression> -> <expression>   # oriented into a rule at load time

    [variation <symbol> <weight exponent>]
    value = <expression>             # first variation along a scale change

Reserved template index names are described in :mod:`.ordering`.  Values may
continue over indented lines.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

from ..exprcore import coeff as C
from ..exprcore.canon import canonicalize
from ..exprcore.core import AHOL, HOL, REEB, TensorExpr
from ..exprcore.parse import parse
from .matcher import Rule, rule_from_exprs
from .ordering import CommutatorSpec, CommutatorTable

_CLASS = {"h": HOL, "a": AHOL, "0": REEB}


@dataclass
class RuleSet:
    table: CommutatorTable
    rewrites: list[Rule]
    identities: dict[str, tuple[TensorExpr, TensorExpr]]
    conditions: dict[str, list[Rule]] = field(default_factory=dict)
    #: condition name -> identities to be oriented into rewrite rules by the
    #: engine once the stanza rules are available (completion step)
    implied: dict[str, list[tuple[TensorExpr, TensorExpr]]] = field(default_factory=dict)
    variations: dict[str, tuple[C.Coefficient, TensorExpr]] = field(default_factory=dict)


def _stanzas(text: str):
    current_header = None
    fields: list[tuple[str, str]] = []
    for raw in text.splitlines() + ["[end]"]:
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.lstrip().startswith("["):
            if current_header is not None:
                yield current_header, fields
            current_header = line.strip()[1:-1].split()
            fields = []
        elif line[0].isspace():
            key, val = fields[-1]
            fields[-1] = (key, val + " " + line.strip())
        else:
            key, _, val = line.partition("=")
            fields.append((key.strip(), val.strip()))


def _terms(value: str) -> list[tuple[TensorExpr, str]]:
    out = []
    for chunk in value.split(";"):
        expr_text, _, target = chunk.rpartition("@")
        out.append((parse(expr_text.strip()), target.strip()))
    return out


def _conjugate_rule(rule: Rule) -> Rule:
    lhs = TensorExpr((rule.lhs,)).conj().terms[0]
    return Rule(rule.name + "_cj", lhs, rule.rhs.conj(), rule.exchange)


def load_rules(text: str) -> RuleSet:
    table = CommutatorTable()
    rewrites: list[Rule] = []
    identities: dict[str, tuple[TensorExpr, TensorExpr]] = {}
    conditions: dict[str, list[Rule]] = {}
    implied: dict[str, list[tuple[TensorExpr, TensorExpr]]] = {}
    variations: dict[str, tuple[C.Coefficient, TensorExpr]] = {}

    for header, fields in _stanzas(text):
        kind = header[0]
        if kind == "commutator":
            cx, cy = _CLASS[header[1]], _CLASS[header[2]]
            reeb = None
            deriv: list[tuple[TensorExpr, str]] = []
            slot: dict[str, tuple] = {}
            weight = None
            for key, val in fields:
                parts = key.split()
                if parts[0] == "reeb":
                    reeb = parse(val)
                elif parts[0] == "deriv":
                    deriv.extend(_terms(val))
                elif parts[0] == "slot":
                    slot[_CLASS[parts[1]]] = tuple(_terms(val))
                elif parts[0] == "weight":
                    weight = parse(val)
                else:
                    raise ValueError(f"unknown commutator field {key!r}")
            table.add(CommutatorSpec((cx, cy), reeb, tuple(deriv), slot, weight))
        elif kind in ("rule", "exchange"):
            data = dict(fields)
            rule = rule_from_exprs(header[1], parse(data["lhs"]), parse(data["rhs"]),
                                   exchange=(kind == "exchange"))
            rewrites.append(rule)
            if data.get("conjugate", "yes") != "no":
                rewrites.append(_conjugate_rule(rule))
        elif kind == "identity":
            data = dict(fields)
            identities[header[1]] = (parse(data["lhs"]), parse(data["rhs"]))
        elif kind == "condition":
            rules = []
            seeds: list[tuple[TensorExpr, TensorExpr]] = []
            for key, val in fields:
                if key not in ("rule", "imply"):
                    raise ValueError(f"unknown condition field {key!r}")
                lhs_text, _, rhs_text = val.partition("->")
                lhs, rhs = parse(lhs_text.strip()), parse(rhs_text.strip())
                if key == "rule":
                    rules.append(rule_from_exprs(f"{header[1]}_{len(rules)}", lhs, rhs))
                else:
                    seeds.append((lhs, rhs))
            conditions[header[1]] = rules
            if seeds:
                implied[header[1]] = seeds
        elif kind == "variation":
            data = dict(fields)
            variations[header[1]] = (C.ensure(header[2]), parse(data["value"]))
        elif kind == "end":
            pass
        else:
            raise ValueError(f"unknown stanza kind {kind!r}")
    return RuleSet(table, rewrites, identities, conditions, implied, variations)


def load_default() -> RuleSet:
    text = importlib.resources.files("tractorcalc.pseudohermitian").joinpath(
        "tw.rules").read_text()
    return load_rules(text)
