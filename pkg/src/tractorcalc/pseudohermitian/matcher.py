"""Monomial pattern matching and rewriting.

A rewrite rule is a pattern monomial (unit coefficient) together with a
replacement expression.  Matching works modulo the symmetry groups of the
matched factors and dummy renaming; a derivative prefix *outside* the
pattern's own derivatives is allowed on the pattern's unique non-parallel
factor and is re-applied to the replacement via the Leibniz rule (valid
because every rule is a pointwise tensor identity).

Exchange rules fire only when the principal replacement monomial has a
strictly smaller canonical encoding than the matched monomial, which keeps
symmetric identities (used in both directions on paper) terminating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import sympy

from ..exprcore import coeff as C
from ..exprcore.canon import canonicalize, encoding
from ..exprcore.core import (REEB, REGISTRY, Factor, Index, Monomial,
                             TensorExpr, fresh_name)
from ..exprcore.deriv import apply_nabla


@dataclass(frozen=True)
class Rule:
    name: str
    lhs: Monomial              # pattern: coeff 1, no i
    rhs: TensorExpr
    exchange: bool = False

    def __post_init__(self) -> None:
        if self.lhs.coeff != 1 or self.lhs.has_i:
            raise ValueError(f"rule {self.name}: pattern must have unit real coefficient")
        nonpar = [f for f in self.lhs.factors if not REGISTRY[f.symbol].parallel]
        if len(nonpar) != 1:
            raise ValueError(f"rule {self.name}: pattern needs exactly one non-parallel factor")


def rule_from_exprs(name: str, lhs: TensorExpr, rhs: TensorExpr, exchange: bool = False) -> Rule:
    if len(lhs.terms) != 1:
        raise ValueError(f"rule {name}: pattern must be a single monomial")
    return Rule(name, lhs.terms[0], rhs, exchange)


@dataclass
class _Match:
    binding: dict[str, str]       # pattern index name -> subject index name
    matched: tuple[int, ...]      # subject factor positions
    prefix: tuple[Index, ...]     # outer derivative prefix on the non-parallel factor
    sign: int


def _bind(binding: dict, used: set, pat: Index, sub: Index) -> bool:
    if pat.cls == REEB or sub.cls == REEB:
        return pat.cls == REEB and sub.cls == REEB
    if pat.cls != sub.cls:
        return False
    prev = binding.get(pat.name)
    if prev is not None:
        return prev == sub.name
    if sub.name in used:
        return False
    binding[pat.name] = sub.name
    used.add(sub.name)
    return True


def match_monomial(subject: Monomial, pattern: Monomial) -> Iterator[_Match]:
    pf = pattern.factors
    sf = subject.factors
    pat_occ = pattern.index_occurrences()
    pat_dummies = {nm for nm, pl in pat_occ.items() if len(pl) == 2}
    sub_occ = subject.index_occurrences()

    def extend(pi: int, used_factors: tuple[int, ...], binding: dict, used: set,
               prefix: tuple[Index, ...], sign: int) -> Iterator[_Match]:
        if pi == len(pf):
            # pattern dummies may only bind subject dummies fully inside the match
            ok = True
            for pname, sname in binding.items():
                if pname not in pat_dummies:
                    continue
                places = sub_occ.get(sname, ())
                inside = sum(1 for fi, _, _ in places if fi in used_factors)
                if len(places) != 2 or inside != 2:
                    ok = False
                    break
            if ok:
                yield _Match(dict(binding), used_factors, prefix, sign)
            return
        p = pf[pi]
        pdecl = REGISTRY[p.symbol]
        allow_prefix = not pdecl.parallel
        for si, s in enumerate(sf):
            if si in used_factors or s.symbol != p.symbol:
                continue
            # derivative prefix: pattern derivs must be the innermost suffix
            if len(s.derivs) < len(p.derivs):
                continue
            cut = len(s.derivs) - len(p.derivs)
            if cut and not allow_prefix:
                continue
            this_prefix = s.derivs[:cut]
            for perm, psign in pdecl.group():
                b2 = dict(binding)
                u2 = set(used)
                ok = True
                for pd, sd in zip(p.derivs, s.derivs[cut:]):
                    if not _bind(b2, u2, pd, sd):
                        ok = False
                        break
                if ok:
                    for k in range(len(p.slots)):
                        if not _bind(b2, u2, p.slots[k], s.slots[perm[k]]):
                            ok = False
                            break
                if not ok:
                    continue
                yield from extend(pi + 1, used_factors + (si,), b2, u2,
                                  this_prefix if cut else prefix, sign * psign)

    yield from extend(0, (), {}, set(), (), 1)


def _instantiate(rhs: TensorExpr, binding: dict[str, str],
                 pattern_free: set[str]) -> TensorExpr:
    """Rename rule indices to the subject's; rhs-local dummies go fresh."""
    fresh: dict[str, str] = {}
    out = []
    for m in rhs.terms:
        mapping = {}
        for f in m.factors:
            for ix in f.derivs + f.slots:
                if ix.cls == REEB or ix.name in mapping:
                    continue
                if ix.name in binding:
                    mapping[ix.name] = binding[ix.name]
                elif ix.name in pattern_free:
                    raise ValueError(f"rhs uses unbound pattern index {ix.name!r}")
                else:
                    if ix.name not in fresh:
                        fresh[ix.name] = fresh_name()
                    mapping[ix.name] = fresh[ix.name]
        out.append(Monomial(m.coeff, m.has_i, tuple(f.map_names(mapping) for f in m.factors)))
    return TensorExpr(out)


def apply_rule_once(m: Monomial, rule: Rule) -> Optional[TensorExpr]:
    """Rewrite the first admissible match in m; None if no match fires."""
    pat_occ = rule.lhs.index_occurrences()
    pat_free = {nm for nm, pl in pat_occ.items() if len(pl) == 1}
    for match in match_monomial(m, rule.lhs):
        repl = _instantiate(rule.rhs, match.binding, pat_free)
        for d in reversed(match.prefix):
            repl = apply_nabla(repl, d)
        rest = tuple(f for fi, f in enumerate(m.factors) if fi not in match.matched)
        carrier = Monomial(C.mul(m.coeff, sympy.Integer(match.sign)), m.has_i, rest)
        candidate = TensorExpr((carrier,)) * repl
        if rule.exchange:
            # fire only when the principal (first) replacement term is
            # canonically smaller than what it replaces
            principal = (TensorExpr((carrier,)) * TensorExpr(repl.terms[:1])).terms[0]
            enc_old = encoding(m)
            enc_new = encoding(principal)
            if enc_old is None:
                return TensorExpr.zero()
            if enc_new is None or not enc_new < enc_old:
                continue
        return candidate
    return None


def substitute(e: TensorExpr, rules: list[Rule], max_steps: int = 400) -> TensorExpr:
    """Apply rules to a fixed point (with a step bound), canonicalizing as it goes."""
    e = canonicalize(e)
    for _ in range(max_steps):
        changed = False
        out: list[Monomial] = []
        for m in e.terms:
            repl = None
            for rule in rules:
                repl = apply_rule_once(m, rule)
                if repl is not None:
                    # an idempotent rewrite (result identical to the matched
                    # monomial) must not shadow later rules
                    if canonicalize(repl).terms == canonicalize(TensorExpr((m,))).terms:
                        repl = None
                        continue
                    break
            if repl is None:
                out.append(m)
            else:
                out.extend(repl.terms)
                changed = True
        e2 = canonicalize(TensorExpr(out))
        # idempotent rewrites (e.g. a trace rule hitting its own normal form)
        # count as no progress
        if not changed or e2.terms == e.terms:
            return e2
        e = e2
    raise RuntimeError("substitute: fixed-point step bound exceeded")
