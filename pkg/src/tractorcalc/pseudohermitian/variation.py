"""First variations along a one-parameter family of contact scales.

For the family of contact forms scaled by ``exp(t*Upsilon)``, each covariant
object carries a *trivialisation exponent* ``k`` and a *variation*: the
``t``-derivative at ``t = 0`` of ``exp(k*t*Upsilon)`` times the transformed
object.  Exponents and variations of the primitive symbols are recorded in
``[variation]`` stanzas of the rule table; the calculus here extends them
through products, scalar gradients and divergences of one-forms:

* product: exponents add, variations obey the Leibniz rule;
* ``nabla[lo.x](f)`` for scalar ``f``: exponent ``k`` unchanged, variation
  ``nabla[lo.x](delta f) - k*f*nabla[lo.x](Upsilon)``;
* ``nabla[up.x](omega)`` for a one-form ``omega`` of exponent ``k`` (``x``
  free in ``omega``): exponent ``k + 1``, variation
  ``(2 - k)*omega_x*nabla[up.x](Upsilon) + nabla[up.x](delta omega)``,
  and the analogous formula when the trace is written with a lowered
  derivative against a raised one-form.

:func:`linearize` parses an expression, pushes the variation through it and
adds, per top-level summand of exponent ``k_j``, the correction
``(m - k_j)*Upsilon`` times the summand, so that the result is the
``t``-derivative at ``0`` of ``exp(m*t*Upsilon)`` times the transformed
expression.  Raising a derivative or slot goes through the inverse Levi
form exactly as in the expression parser.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import sympy

from ..exprcore import coeff as C
from ..exprcore.canon import canonicalize
from ..exprcore.core import (HI, REGISTRY, Factor, Index, Monomial,
                             TensorExpr, fresh_name)
from ..exprcore.deriv import apply_nabla
from ..exprcore.parse import (ParseError, _conj, _hi_slots, _scalar_of,
                              _Tok, _tokenize, index_class)
from ..exprcore.symbols import slot_names
from .matcher import _instantiate
from .rules import RuleSet

_ZERO = TensorExpr.zero()
_UPSILON = TensorExpr((Monomial(sympy.Integer(1), False,
                                (Factor("Upsilon", (), ()),)),))

#: parallel or scale-independent symbols with fixed exponent and zero variation
_BUILTIN_EXPONENTS = {"h": sympy.Integer(-1), "hi": sympy.Integer(1),
                      "Upsilon": sympy.Integer(0)}


@dataclass
class _Lin:
    value: TensorExpr
    k: Optional[sympy.Expr]     # None for an identically zero node
    delta: TensorExpr


def _lin(value: TensorExpr, k, delta: TensorExpr) -> _Lin:
    if not value.terms and not delta.terms:
        return _Lin(value, None, delta)
    return _Lin(value, sympy.sympify(k) if k is not None else None, delta)


def _hi_expr(a: Index, b: Index) -> TensorExpr:
    return TensorExpr((Monomial(sympy.Integer(1), False,
                                (Factor(HI, (), _hi_slots(a, b)),)),))


def _variation_data(name: str, rs: RuleSet) -> tuple[sympy.Expr, TensorExpr]:
    """Exponent and variation of a registered symbol, in its own slot names."""
    if name in _BUILTIN_EXPONENTS:
        return _BUILTIN_EXPONENTS[name], _ZERO
    decl = REGISTRY[name]
    if name in rs.variations:
        kc, expr = rs.variations[name]
        return kc, expr
    cname, cmap = decl.conj
    if cname != name and cname in rs.variations:
        kc, expr = rs.variations[cname]
        partner = REGISTRY[cname]
        rename = {slot_names(partner)[cmap[j]]: nm
                  for j, nm in enumerate(slot_names(decl))}
        conj_expr = expr.conj()
        out = [Monomial(mm.coeff, mm.has_i,
                        tuple(f.map_names(rename) for f in mm.factors))
               for mm in conj_expr.terms]
        return kc, TensorExpr(out)
    raise ValueError(f"no variation data for symbol {name!r}")


class _LinParser:
    """Recursive-descent evaluator mirroring the expression grammar."""

    def __init__(self, text: str, rs: RuleSet) -> None:
        self.toks = _tokenize(text)
        self.k = 0
        self.rs = rs

    def peek(self) -> _Tok:
        return self.toks[self.k]

    def next(self) -> _Tok:
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.pos)
        return tok

    # -- combination rules ---------------------------------------------
    def _add(self, a: _Lin, b: _Lin, pos: int) -> _Lin:
        if a.k is not None and b.k is not None and sympy.expand(a.k - b.k) != 0:
            raise ParseError(
                f"summands with different scaling exponents {a.k} and {b.k}", pos)
        k = a.k if a.k is not None else b.k
        return _lin(a.value + b.value, k, a.delta + b.delta)

    def _mul(self, a: _Lin, b: _Lin) -> _Lin:
        if a.k is None or b.k is None:
            return _lin(a.value * b.value, None, _ZERO)
        return _lin(a.value * b.value, a.k + b.k,
                    a.delta * b.value + a.value * b.delta)

    # -- grammar -------------------------------------------------------
    def expr(self) -> _Lin:
        e = self.term()
        while self.peek().text in ("+", "-"):
            pos = self.peek().pos
            op = self.next().text
            rhs = self.term()
            if op == "-":
                rhs = _lin(rhs.value.scaled(-1), rhs.k, rhs.delta.scaled(-1))
            e = self._add(e, rhs, pos)
        return e

    def term(self) -> _Lin:
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self.unary()
            if op == "*":
                e = self._mul(e, rhs)
            else:
                total = _scalar_of(rhs.value)
                if total is None or C.is_zero(total):
                    raise ParseError("division only by nonzero scalars", self.peek().pos)
                e = _lin(e.value.scaled(1 / total), e.k, e.delta.scaled(1 / total))
        return e

    def unary(self) -> _Lin:
        if self.peek().text == "-":
            self.next()
            inner = self.unary()
            return _lin(inner.value.scaled(-1), inner.k, inner.delta.scaled(-1))
        e = self.atom()
        while (self.peek().text == "*" and self.toks[self.k + 1].text == "*"
               and self.toks[self.k + 1].pos == self.peek().pos + 1):
            pos = self.peek().pos
            self.next(), self.next()
            exp = self.unary()
            b, p = _scalar_of(e.value), _scalar_of(exp.value)
            if b is None or p is None or not p.is_Integer:
                raise ParseError("'**' needs a scalar base and an integer exponent", pos)
            e = _lin(TensorExpr.scalar(C.normalise(b ** int(p))), 0, _ZERO)
        return e

    def atom(self) -> _Lin:
        tok = self.next()
        if tok.kind == "num":
            return _lin(TensorExpr.scalar(sympy.Integer(int(tok.text))), 0, _ZERO)
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind != "name":
            raise ParseError(f"unexpected token {tok.text!r}", tok.pos)
        if tok.text == "n":
            return _lin(TensorExpr.scalar(C.n), 0, _ZERO)
        if tok.text == "i":
            return _lin(TensorExpr((Monomial(sympy.Integer(1), True, ()),)), 0, _ZERO)
        if tok.text == "nabla":
            return self.nabla(tok)
        return self.factor(tok)

    def slot(self) -> tuple[str, str]:
        tok = self.next()
        if tok.text == "z0":
            return ("z0", "")
        if tok.text not in ("lo", "up"):
            raise ParseError(f"expected slot, found {tok.text!r}", tok.pos)
        self.expect(".")
        name = self.next()
        if name.kind != "name":
            raise ParseError("expected index name", name.pos)
        return (tok.text, name.text)

    def nabla(self, tok: _Tok) -> _Lin:
        self.expect("[")
        variance, name = self.slot()
        self.expect("]")
        self.expect("(")
        inner = self.expr()
        self.expect(")")
        if variance == "z0":
            raise ParseError("variation along the Reeb direction is not supported",
                             tok.pos)
        cls = index_class(name)
        free = inner.value.free_names()
        if not free:
            if variance == "lo":
                return self._gradient(inner, Index(name, cls))
            dummy = Index(fresh_name(), _conj(cls))
            grad = self._gradient(inner, dummy)
            hi = _lin(_hi_expr(Index(name, cls), dummy), 1, _ZERO)
            return self._mul(hi, grad)
        if set(free) == {name} and free[name] == cls:
            return self._divergence(inner, variance, Index(name, cls), tok.pos)
        raise ParseError("derivatives of higher-rank arguments are not supported "
                         "by the variation calculus", tok.pos)

    def _gradient(self, inner: _Lin, ix: Index) -> _Lin:
        value = apply_nabla(inner.value, ix)
        if inner.k is None:
            return _lin(value, None, _ZERO)
        delta = apply_nabla(inner.delta, ix)
        if inner.k != 0:
            delta = delta + (inner.value * apply_nabla(_UPSILON, ix)).scaled(-inner.k)
        return _lin(value, inner.k, delta)

    def _divergence(self, inner: _Lin, variance: str, ix: Index, pos: int) -> _Lin:
        if inner.k is None:
            return _lin(_ZERO, None, _ZERO)
        if variance == "lo":
            # trace against a raised one-form: the bare one-form inside the
            # inverse Levi factor has exponent k - 1
            value = apply_nabla(inner.value, ix)
            delta = (inner.value * apply_nabla(_UPSILON, ix)).scaled(3 - inner.k)
            delta = delta + apply_nabla(inner.delta, ix)
            return _lin(value, inner.k, delta)
        d1 = Index(fresh_name(), _conj(ix.cls))
        value = _hi_expr(ix, d1) * apply_nabla(inner.value, d1)
        d2 = Index(fresh_name(), _conj(ix.cls))
        delta = (inner.value * (_hi_expr(ix, d2)
                                * apply_nabla(_UPSILON, d2))).scaled(2 - inner.k)
        d3 = Index(fresh_name(), _conj(ix.cls))
        delta = delta + _hi_expr(ix, d3) * apply_nabla(inner.delta, d3)
        return _lin(value, inner.k + 1, delta)

    def factor(self, tok: _Tok) -> _Lin:
        name = tok.text
        if name not in REGISTRY:
            raise ParseError(f"unknown symbol {name!r}", tok.pos)
        decl = REGISTRY[name]
        slots: list[tuple[str, str]] = []
        if self.peek().text == "[":
            self.next()
            if self.peek().text != "]":
                slots.append(self.slot())
                while self.peek().text == ",":
                    self.next()
                    slots.append(self.slot())
            self.expect("]")
        if len(slots) != len(decl.slots):
            raise ParseError(f"{name} expects {len(decl.slots)} slots, got {len(slots)}",
                             tok.pos)
        if any(v == "z0" for v, _ in slots):
            raise ParseError("Reeb slots are not supported by the variation calculus",
                             tok.pos)
        written = [(v, Index(nm, index_class(nm))) for v, nm in slots]
        if name == HI:
            if any(v != "up" for v, _ in written):
                raise ParseError("hi carries two upper slots", tok.pos)
            return _lin(_hi_expr(written[0][1], written[1][1]), 1, _ZERO)
        stored = tuple(ix.cls if v == "lo" else _conj(ix.cls) for v, ix in written)
        if stored == decl.slots:
            use, order = decl, tuple(range(len(stored)))
        else:
            if decl.conj is None:
                raise ParseError(f"slot classes {stored} do not fit {name}", tok.pos)
            cname, cmap = decl.conj
            cdecl = REGISTRY[cname]
            permuted = tuple(stored[cmap[j]] for j in range(len(cmap)))
            if permuted != cdecl.slots:
                raise ParseError(f"slot classes {stored} do not fit {name} "
                                 "or its conjugate", tok.pos)
            use, order = cdecl, cmap
        hi_factors: list[Factor] = []
        slot_indices: list[Index] = []
        for j in range(len(stored)):
            variance, ix = written[order[j]]
            if variance == "lo":
                slot_indices.append(ix)
            else:
                dummy = Index(fresh_name(), _conj(ix.cls))
                hi_factors.append(Factor(HI, (), _hi_slots(ix, dummy)))
                slot_indices.append(dummy)
        base = TensorExpr((Monomial(sympy.Integer(1), False,
                                    (Factor(use.name, (), tuple(slot_indices)),)),))
        k_base, vexpr = _variation_data(use.name, self.rs)
        binding = {nm: slot_indices[j].name
                   for j, nm in enumerate(slot_names(use))}
        delta_base = (_instantiate(vexpr, binding, set())
                      if vexpr.terms else _ZERO)
        hi_expr = TensorExpr((Monomial(sympy.Integer(1), False, tuple(hi_factors)),))
        return _lin(hi_expr * base, k_base + len(hi_factors),
                    hi_expr * delta_base)


def linearize(text: str, m: Union[int, sympy.Expr],
              rs: Optional[RuleSet] = None) -> TensorExpr:
    """Variation at ``t = 0`` of ``exp(m*t*Upsilon)`` times the transformed input.

    Each top-level summand of exponent ``k_j`` contributes its stanza-driven
    variation plus ``(m - k_j)*Upsilon`` times itself.
    """
    if rs is None:
        from .engine import default_rules
        rs = default_rules()
    mex = sympy.sympify(m)
    p = _LinParser(text, rs)
    total = _ZERO
    sign = 1
    while True:
        t = p.term()
        contribution = t.delta
        if t.k is not None:
            corr = sympy.expand(mex - t.k)
            if corr != 0:
                contribution = contribution + (_UPSILON * t.value).scaled(corr)
        total = total + (contribution if sign > 0 else contribution.scaled(-1))
        tok = p.peek()
        if tok.text == "+":
            p.next()
            sign = 1
        elif tok.text == "-":
            p.next()
            sign = -1
        elif tok.text == "":
            break
        else:
            raise ParseError(f"trailing input {tok.text!r}", tok.pos)
    out = canonicalize(total)
    out.validate()
    return out
