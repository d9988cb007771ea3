"""Abstract-index tensor expressions.

Normal form conventions:

* every slot of a registered symbol is stored *lowered*, in the symbol's
  declared class pattern; raising is explicit via ``hi`` factors (the inverse
  Levi form), whose two slots are the only "upper" positions in a monomial;
* a dummy index name occurs exactly twice -- once in an ``hi`` slot and once
  in a lower position (a tensor slot or a covariant-derivative prefix index)
  of the same class;
* the formal unit ``i`` is a per-monomial flag (``i**2 == -1`` folds into the
  coefficient), keeping coefficients inside the real field Q(n, w, wp).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import sympy

from . import coeff as C

HOL = "h"
AHOL = "a"
REEB = "0"

CLASSES = (HOL, AHOL, REEB)

_CONJ_CLASS = {HOL: AHOL, AHOL: HOL, REEB: REEB}


@dataclass(frozen=True, order=True)
class Index:
    name: str
    cls: str

    def conj(self) -> "Index":
        return Index(self.name, _CONJ_CLASS[self.cls])

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"{self.name}:{self.cls}"


REEB_INDEX = Index("0", REEB)


@dataclass(frozen=True)
class SymbolDecl:
    name: str
    slots: tuple[str, ...]                      # slot classes
    weight: tuple[sympy.Expr, sympy.Expr]       # density weight (w, w')
    symmetries: tuple[tuple[tuple[int, ...], int], ...] = ()  # (perm, sign)
    conj: Optional[tuple[str, tuple[int, ...]]] = None        # (name, slot map)
    parallel: bool = False                      # annihilated by nabla (h, hi)
    expansion: Optional[str] = None             # defining expression, if any
    order: int = 0                              # registration rank (total order)

    def group(self) -> tuple[tuple[tuple[int, ...], int], ...]:
        """Closure of the symmetry generators as signed slot permutations."""
        return _group_closure(len(self.slots), self.symmetries)


_GROUP_CACHE: dict[tuple[int, tuple], tuple] = {}


def _group_closure(nslots, gens):
    key = (nslots, gens)
    cached = _GROUP_CACHE.get(key)
    if cached is not None:
        return cached
    identity = (tuple(range(nslots)), 1)
    elems = {identity}
    frontier = [identity]
    gen_list = list(gens) + [identity]
    while frontier:
        new = []
        for perm_a, sign_a in frontier:
            for perm_b, sign_b in gen_list:
                composed = (tuple(perm_a[j] for j in perm_b), sign_a * sign_b)
                if composed not in elems:
                    elems.add(composed)
                    new.append(composed)
        frontier = new
    result = tuple(sorted(elems))
    _GROUP_CACHE[key] = result
    return result


class Registry:
    """Startup-built, thereafter read-only table of tensor symbols."""

    def __init__(self) -> None:
        self._decls: dict[str, SymbolDecl] = {}

    def register(self, name, slots, weight=(0, 0), symmetries=(), conj=None,
                 parallel=False, expansion=None) -> SymbolDecl:
        if name in self._decls:
            raise ValueError(f"symbol {name!r} already registered")
        decl = SymbolDecl(
            name=name,
            slots=tuple(slots),
            weight=(C.ensure(weight[0]), C.ensure(weight[1])),
            symmetries=tuple((tuple(p), int(s)) for p, s in symmetries),
            conj=(conj if conj is None else (conj[0], tuple(conj[1]))),
            parallel=parallel,
            expansion=expansion,
            order=len(self._decls),
        )
        for perm, _ in decl.symmetries:
            if tuple(sorted(perm)) != tuple(range(len(decl.slots))):
                raise ValueError(f"{name}: symmetry {perm} is not a permutation")
            for j, pj in enumerate(perm):
                if decl.slots[j] != decl.slots[pj]:
                    raise ValueError(f"{name}: symmetry {perm} mixes slot classes")
        self._decls[name] = decl
        return decl

    def __getitem__(self, name: str) -> SymbolDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._decls

    def names(self):
        return list(self._decls)

    def check_conjugates(self) -> None:
        for name, decl in self._decls.items():
            if decl.conj is None:
                raise ValueError(f"{name} has no conjugate registration")
            cname, cmap = decl.conj
            cdecl = self[cname]
            if cdecl.conj is None or cdecl.conj[0] != name:
                raise ValueError(f"conjugation not involutive for {name}")
            back = cdecl.conj[1]
            composed = tuple(cmap[j] for j in back)
            if composed != tuple(range(len(decl.slots))):
                raise ValueError(f"conjugate slot maps of {name} do not invert")


#: Process-wide registry; populated once by :mod:`tractorcalc.exprcore.symbols`.
REGISTRY = Registry()

HI = "hi"   # inverse Levi form h^{alpha beta-bar}; the only upper-slot symbol
LEVI = "h"  # Levi form h_{alpha beta-bar}


@dataclass(frozen=True)
class Factor:
    symbol: str
    derivs: tuple[Index, ...] = ()   # covariant-derivative prefix, outermost first
    slots: tuple[Index, ...] = ()

    def indices(self) -> tuple[Index, ...]:
        return self.derivs + self.slots

    def map_names(self, mapping: dict[str, str]) -> "Factor":
        ren = lambda ix: Index(mapping.get(ix.name, ix.name), ix.cls)
        return Factor(self.symbol, tuple(map(ren, self.derivs)), tuple(map(ren, self.slots)))

    def conj(self) -> "Factor":
        decl = REGISTRY[self.symbol]
        if decl.conj is None:
            raise ValueError(f"symbol {self.symbol!r} has no registered conjugate")
        cname, cmap = decl.conj
        flipped = tuple(ix.conj() for ix in self.slots)
        new_slots = tuple(flipped[cmap[j]] for j in range(len(cmap)))
        new_derivs = tuple(ix.conj() for ix in self.derivs)
        return Factor(cname, new_derivs, new_slots)


@dataclass(frozen=True)
class Monomial:
    coeff: sympy.Expr
    has_i: bool
    factors: tuple[Factor, ...]

    def scaled(self, c) -> "Monomial":
        return Monomial(C.mul(self.coeff, C.ensure(c)), self.has_i, self.factors)

    def times_i(self) -> "Monomial":
        if self.has_i:
            return Monomial(C.mul(self.coeff, sympy.Integer(-1)), False, self.factors)
        return Monomial(self.coeff, True, self.factors)

    def conj(self) -> "Monomial":
        c = C.mul(self.coeff, sympy.Integer(-1)) if self.has_i else self.coeff
        return Monomial(c, self.has_i, tuple(f.conj() for f in self.factors))

    def index_occurrences(self) -> dict[str, list[tuple[int, str, int]]]:
        """name -> list of (factor position, 'd'|'s', position within)."""
        occ: dict[str, list[tuple[int, str, int]]] = {}
        for fi, f in enumerate(self.factors):
            for di, ix in enumerate(f.derivs):
                if ix.cls != REEB:
                    occ.setdefault(ix.name, []).append((fi, "d", di))
            for si, ix in enumerate(f.slots):
                if ix.cls != REEB:
                    occ.setdefault(ix.name, []).append((fi, "s", si))
        return occ

    def free_names(self) -> dict[str, str]:
        """Free index name -> class (with hi slots counting as upper positions)."""
        out = {}
        for name, places in self.index_occurrences().items():
            if len(places) == 1:
                fi, kind, pos = places[0]
                f = self.factors[fi]
                ix = f.derivs[pos] if kind == "d" else f.slots[pos]
                out[name] = ix.cls
        return out

    def validate(self) -> None:
        for f in self.factors:
            decl = REGISTRY[f.symbol]
            if len(f.slots) != len(decl.slots):
                raise ValueError(f"{f.symbol}: expected {len(decl.slots)} slots, got {len(f.slots)}")
            for ix, cls in zip(f.slots, decl.slots):
                if ix.cls != cls:
                    raise ValueError(f"{f.symbol}: slot {ix} should have class {cls}")
            if decl.parallel and f.derivs:
                raise ValueError(f"{f.symbol} is parallel; derivative prefix is meaningless")
        for name, places in self.index_occurrences().items():
            if len(places) == 1:
                continue
            if len(places) > 2:
                raise ValueError(f"index {name!r} occurs {len(places)} times")
            kinds = []
            for fi, kind, pos in places:
                f = self.factors[fi]
                upper = kind == "s" and f.symbol == HI
                kinds.append(upper)
            if sorted(kinds) != [False, True]:
                raise ValueError(f"index {name!r} is not a proper upper/lower contraction")
            classes = set()
            for fi, kind, pos in places:
                f = self.factors[fi]
                ix = f.derivs[pos] if kind == "d" else f.slots[pos]
                classes.add(ix.cls)
            if len(classes) != 1:
                raise ValueError(f"index {name!r} pairs different classes")

    def weight(self) -> tuple[sympy.Expr, sympy.Expr]:
        tw = sympy.Integer(0)
        twp = sympy.Integer(0)
        for f in self.factors:
            dw, dwp = REGISTRY[f.symbol].weight
            shift = sum(1 for ix in f.derivs if ix.cls == REEB)
            tw += dw - shift
            twp += dwp - shift
        return (C.normalise(tw), C.normalise(twp))


_FRESH = itertools.count()


def fresh_name(prefix: str = "u") -> str:
    return f"{prefix}{next(_FRESH)}"


def rename_dummies_fresh(m: Monomial) -> Monomial:
    occ = m.index_occurrences()
    mapping = {name: fresh_name() for name, places in occ.items() if len(places) == 2}
    if not mapping:
        return m
    return Monomial(m.coeff, m.has_i, tuple(f.map_names(mapping) for f in m.factors))


class TensorExpr:
    """A (not necessarily canonical) sum of tensor monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Monomial] = ()) -> None:
        self.terms: tuple[Monomial, ...] = tuple(terms)

    # -- constructors ------------------------------------------------
    @staticmethod
    def zero() -> "TensorExpr":
        return TensorExpr(())

    @staticmethod
    def scalar(c, has_i: bool = False) -> "TensorExpr":
        return TensorExpr((Monomial(C.ensure(c), has_i, ()),))

    @staticmethod
    def monomial(m: Monomial) -> "TensorExpr":
        return TensorExpr((m,))

    # -- ring operations ---------------------------------------------
    def __add__(self, other: "TensorExpr") -> "TensorExpr":
        return TensorExpr(self.terms + other.terms)

    def __sub__(self, other: "TensorExpr") -> "TensorExpr":
        return self + (-other)

    def __neg__(self) -> "TensorExpr":
        return TensorExpr(tuple(m.scaled(-1) for m in self.terms))

    def __mul__(self, other: "TensorExpr") -> "TensorExpr":
        out = []
        for a in self.terms:
            for b in other.terms:
                b2 = rename_dummies_fresh(b)
                coeff = C.mul(a.coeff, b2.coeff)
                has_i = a.has_i != b2.has_i
                if a.has_i and b2.has_i:
                    coeff = C.mul(coeff, sympy.Integer(-1))
                out.append(Monomial(coeff, has_i, a.factors + b2.factors))
        return TensorExpr(out)

    def scaled(self, c) -> "TensorExpr":
        return TensorExpr(tuple(m.scaled(c) for m in self.terms))

    def times_i(self) -> "TensorExpr":
        return TensorExpr(tuple(m.times_i() for m in self.terms))

    def conj(self) -> "TensorExpr":
        return TensorExpr(tuple(m.conj() for m in self.terms))

    def map_coeffs(self, fn) -> "TensorExpr":
        return TensorExpr(tuple(Monomial(C.normalise(fn(m.coeff)), m.has_i, m.factors)
                                for m in self.terms))

    def subs_params(self, **values) -> "TensorExpr":
        return self.map_coeffs(lambda c: C.subs_params(c, **values))

    # -- inspection ---------------------------------------------------
    def validate(self) -> None:
        frees = None
        for m in self.terms:
            m.validate()
            names = {(nm, cl) for nm, cl in m.free_names().items()}
            if frees is None:
                frees = names
            elif names != frees and not C.is_zero(m.coeff):
                raise ValueError(f"inconsistent free indices across terms: {frees} vs {names}")

    def free_names(self) -> dict[str, str]:
        for m in self.terms:
            return m.free_names()
        return {}

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        from .printer import pretty
        return pretty(self)
