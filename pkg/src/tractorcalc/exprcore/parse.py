"""Parser for the expression language.

Grammar (UTF-8 text)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | atom
    atom   := NUMBER | 'n' | 'w' | 'wp' | 'i' | '(' expr ')'
            | NAME '[' slot (',' slot)* ']'
            | 'nabla' '[' slot ']' '(' expr ')'
    slot   := ('lo' | 'up') '.' NAME | 'z0'

Index names ending in ``b`` are antiholomorphic; all others holomorphic.
``up.x`` raises through an explicit inverse-Levi (``hi``) factor; when the
raised classes only fit the conjugate symbol (e.g. ``A[up.a, up.b]``), the
conjugate is substituted automatically, matching the usual abstract-index
reading.  Division is only defined by scalar (coefficient) expressions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import sympy

from . import coeff as C
from .core import (AHOL, HI, HOL, REEB, REEB_INDEX, REGISTRY, Factor, Index,
                   Monomial, TensorExpr, fresh_name)
from .deriv import apply_nabla


class ParseError(ValueError):
    def __init__(self, message: str, pos: int) -> None:
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


@dataclass
class _Tok:
    kind: str  # 'num' | 'name' | 'op'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    text = text.rstrip()
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(1):
            out.append(_Tok("num", m.group(1), m.start(1)))
        elif m.group(2):
            out.append(_Tok("name", m.group(2), m.start(2)))
        else:
            ch = m.group(3)
            if ch not in "+-*/()[],.":
                raise ParseError(f"unexpected character {ch!r}", m.start(3))
            out.append(_Tok("op", ch, m.start(3)))
        pos = m.end()
    out.append(_Tok("op", "", len(text)))
    return out


def index_class(name: str) -> str:
    return AHOL if name.endswith("b") else HOL


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.k = 0

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

    # ------------------------------------------------------------------
    def parse(self) -> TensorExpr:
        e = self.expr()
        tok = self.peek()
        if tok.text != "":
            raise ParseError(f"trailing input {tok.text!r}", tok.pos)
        return e

    def expr(self) -> TensorExpr:
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> TensorExpr:
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                e = _divide(e, rhs, self.peek().pos)
        return e

    def unary(self) -> TensorExpr:
        if self.peek().text == "-":
            self.next()
            return -self.unary()
        e = self.atom()
        # '**' (two adjacent '*' tokens): scalar power with integer exponent
        while (self.peek().text == "*" and self.toks[self.k + 1].text == "*"
               and self.toks[self.k + 1].pos == self.peek().pos + 1):
            pos = self.peek().pos
            self.next(), self.next()
            exp = self.unary()
            e = _power(e, exp, pos)
        return e

    def atom(self) -> TensorExpr:
        tok = self.next()
        if tok.kind == "num":
            return TensorExpr.scalar(sympy.Integer(int(tok.text)))
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind != "name":
            raise ParseError(f"unexpected token {tok.text!r}", tok.pos)
        if tok.text == "n":
            return TensorExpr.scalar(C.n)
        if tok.text == "w":
            return TensorExpr.scalar(C.w)
        if tok.text == "wp":
            return TensorExpr.scalar(C.wp)
        if tok.text == "i":
            return TensorExpr((Monomial(sympy.Integer(1), True, ()),))
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

    def nabla(self, tok: _Tok) -> TensorExpr:
        self.expect("[")
        variance, name = self.slot()
        self.expect("]")
        self.expect("(")
        inner = self.expr()
        self.expect(")")
        if variance == "z0":
            return apply_nabla(inner, REEB_INDEX)
        cls = index_class(name)
        if variance == "lo":
            return apply_nabla(inner, Index(name, cls))
        # nabla[up.x]: raise a derivative of the conjugate class through hi
        dummy = fresh_name()
        deriv = apply_nabla(inner, Index(dummy, _conj(cls)))
        hi_slots = _hi_slots(Index(name, cls), Index(dummy, _conj(cls)))
        hi_factor = TensorExpr((Monomial(sympy.Integer(1), False, (Factor(HI, (), hi_slots),)),))
        return hi_factor * deriv

    def factor(self, tok: _Tok) -> TensorExpr:
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
            raise ParseError(f"{name} expects {len(decl.slots)} slots, got {len(slots)}", tok.pos)
        if name == HI:
            # the inverse Levi form is written with two upper slots, stored directly
            if any(v != "up" for v, _ in slots):
                raise ParseError("hi carries two upper slots", tok.pos)
            a = Index(slots[0][1], index_class(slots[0][1]))
            b = Index(slots[1][1], index_class(slots[1][1]))
            f = Factor(HI, (), _hi_slots(a, b))
            return TensorExpr((Monomial(sympy.Integer(1), False, (f,)),))
        written = []
        for variance, ixname in slots:
            if variance == "z0":
                written.append(("lo", Index("0", REEB)))
            else:
                written.append((variance, Index(ixname, index_class(ixname))))
        # required stored class per slot: lo.x stores cls(x); up.x stores conj(cls(x))
        stored = tuple(ix.cls if v == "lo" else _conj(ix.cls)
                       for v, ix in written)
        if stored == decl.slots:
            use, order = decl, tuple(range(len(stored)))
        else:
            if decl.conj is None:
                raise ParseError(f"slot classes {stored} do not fit {name}", tok.pos)
            cname, cmap = decl.conj
            cdecl = REGISTRY[cname]
            permuted = tuple(stored[cmap[j]] for j in range(len(cmap)))
            if permuted != cdecl.slots:
                raise ParseError(f"slot classes {stored} do not fit {name} or its conjugate",
                                 tok.pos)
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
        base = Factor(use.name, (), tuple(slot_indices))
        m = Monomial(sympy.Integer(1), False, tuple(hi_factors) + (base,))
        return TensorExpr((m,))


def _conj(cls: str) -> str:
    return {HOL: AHOL, AHOL: HOL, REEB: REEB}[cls]


def _hi_slots(a: Index, b: Index) -> tuple[Index, Index]:
    """Order (holomorphic, antiholomorphic) as the hi declaration requires."""
    if a.cls == HOL and b.cls == AHOL:
        return (a, b)
    if a.cls == AHOL and b.cls == HOL:
        return (b, a)
    raise ValueError(f"hi cannot pair classes {a.cls}, {b.cls}")


def _scalar_of(e: TensorExpr):
    if any(m.factors or m.has_i for m in e.terms):
        return None
    total = sympy.Integer(0)
    for m in e.terms:
        total += m.coeff
    return total


def _power(base: TensorExpr, exp: TensorExpr, pos: int) -> TensorExpr:
    b = _scalar_of(base)
    k = _scalar_of(exp)
    if b is None or k is None or not k.is_Integer:
        raise ParseError("'**' needs a scalar base and an integer exponent", pos)
    if int(k) < 0 and C.is_zero(b):
        raise ParseError("zero raised to a negative power", pos)
    return TensorExpr.scalar(C.normalise(b ** int(k)))


def _divide(e: TensorExpr, divisor: TensorExpr, pos: int) -> TensorExpr:
    if any(m.factors or m.has_i for m in divisor.terms):
        raise ParseError("division only by scalar coefficients", pos)
    total = sympy.Integer(0)
    for m in divisor.terms:
        total += m.coeff
    if C.is_zero(total):
        raise ParseError("division by zero", pos)
    return e.scaled(C.normalise(1 / total))


def parse(text: str) -> TensorExpr:
    """Parse the expression language into a (validated) TensorExpr."""
    e = _Parser(text).parse()
    e.validate()
    return e
