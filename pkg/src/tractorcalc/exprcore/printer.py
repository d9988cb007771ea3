"""Text and LaTeX rendering of tensor expressions.

:func:`pretty` emits the same grammar the parser reads, so
``parse(pretty(e))`` reproduces ``e`` up to canonicalization.  Dummy index
names are rewritten to ``_0, _1, ...`` (with a ``b`` suffix on
antiholomorphic names) so the printed text respects the class-by-suffix
convention of the grammar.
"""

from __future__ import annotations

import sympy

from .core import AHOL, HI, HOL, REEB, Factor, Index, Monomial, TensorExpr


def _dummy_rename(m: Monomial) -> Monomial:
    occ = m.index_occurrences()
    mapping = {}
    counter = 0
    for f in m.factors:
        for ix in f.derivs + f.slots:
            if ix.cls == REEB or ix.name in mapping:
                continue
            if len(occ.get(ix.name, ())) == 2:
                suffix = "b" if ix.cls == AHOL else ""
                mapping[ix.name] = f"_{counter}{suffix}"
                counter += 1
    if not mapping:
        return m
    return Monomial(m.coeff, m.has_i, tuple(f.map_names(mapping) for f in m.factors))


def _slot_text(ix: Index, upper: bool) -> str:
    if ix.cls == REEB:
        return "z0"
    return f"up.{ix.name}" if upper else f"lo.{ix.name}"


def _factor_text(f: Factor) -> str:
    upper = f.symbol == HI
    if f.slots:
        inner = ", ".join(_slot_text(ix, upper) for ix in f.slots)
        core = f"{f.symbol}[{inner}]"
    else:
        core = f.symbol
    for ix in reversed(f.derivs):
        slot = "z0" if ix.cls == REEB else f"lo.{ix.name}"
        core = f"nabla[{slot}]({core})"
    return core


def _coeff_text(c: sympy.Expr) -> str:
    if c.is_Integer or c.is_Rational or c.is_Symbol:
        return sympy.sstr(c)
    return f"({sympy.sstr(c)})"


def _monomial_text(m: Monomial) -> tuple[str, str]:
    """Return (sign, body) with sign in {'+', '-'}."""
    coeff = m.coeff
    sign = "+"
    if coeff.could_extract_minus_sign():
        coeff = -coeff
        sign = "-"
    parts = []
    if coeff != 1 or (not m.has_i and not m.factors):
        parts.append(_coeff_text(coeff))
    if m.has_i:
        parts.append("i")
    parts.extend(_factor_text(f) for f in m.factors)
    return sign, " * ".join(parts)


def pretty(e: TensorExpr) -> str:
    if not e.terms:
        return "0"
    chunks = []
    for k, m in enumerate(e.terms):
        sign, body = _monomial_text(_dummy_rename(m))
        if k == 0:
            chunks.append(body if sign == "+" else f"-{body}")
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)


# ----------------------------------------------------------------------
# LaTeX

#: symbol name -> LaTeX head (index decorations added per slot)
LATEX_HEADS = {
    "h": "h",
    "hi": "h",
    "P2": "P",
    "Psc": "P",
    "A": "A",
    "Ab": "A",
    "T": "T",
    "Tb": "T",
    "Ssc": "S",
    "S4": "S",
    "R4": "R",
    "V": "V",
    "Vb": "V",
    "Q": "Q",
    "Qb": "Q",
    "U": "U",
    "Y": "Y",
    "Yb": "Y",
    "Upsilon": r"\Upsilon",
    "f": "f",
    "fb": r"\bar{f}",
    "sigma": r"\sigma",
    "sigmab": r"\bar{\sigma}",
}

_GREEK = {
    "a": r"\alpha", "b": r"\beta", "g": r"\gamma", "d": r"\delta",
    "e": r"\epsilon", "m": r"\mu", "nu": r"\nu", "r": r"\rho",
    "s": r"\sigma", "t": r"\tau", "p": r"\phi", "c": r"\chi",
}


def _latex_index(ix: Index) -> str:
    if ix.cls == REEB:
        return "0"
    name = ix.name
    bar = False
    if ix.cls == AHOL:
        bar = True
        if name.endswith("b"):
            name = name[:-1]
    if name.startswith("_"):
        body = rf"\rho_{{{name[1:]}}}"
    else:
        body = _GREEK.get(name, name)
    return rf"\bar{{{body}}}" if bar else body


def _latex_factor(f: Factor) -> str:
    head = LATEX_HEADS.get(f.symbol, f.symbol)
    out = ""
    for ix in f.derivs:
        out += rf"\nabla_{{{_latex_index(ix)}}}"
    out += head
    if f.slots:
        idx = "".join(_latex_index(ix) for ix in f.slots)
        out += rf"^{{{idx}}}" if f.symbol == HI else rf"_{{{idx}}}"
    return out


def latex(e: TensorExpr) -> str:
    if not e.terms:
        return "0"
    chunks = []
    for k, m in enumerate(e.terms):
        m = _dummy_rename(m)
        coeff = m.coeff
        sign = "+"
        if coeff.could_extract_minus_sign():
            coeff = -coeff
            sign = "-"
        parts = []
        if coeff != 1 or (not m.has_i and not m.factors):
            ctex = sympy.latex(coeff.subs(sympy.Symbol("wp"), sympy.Symbol("w'")))
            if coeff.is_Add:
                ctex = rf"\left({ctex}\right)"
            parts.append(ctex)
        if m.has_i:
            parts.append("i")
        parts.extend(_latex_factor(f) for f in m.factors)
        body = " ".join(parts)
        if k == 0:
            chunks.append(body if sign == "+" else f"-{body}")
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)
