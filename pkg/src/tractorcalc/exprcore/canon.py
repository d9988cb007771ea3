"""Deterministic canonical forms for tensor monomials and expressions.

Canonical labeling does a backtracking search over factor orderings and
symmetry-group images, selecting the lexicographically least signed encoding.
Dummy indices are renamed to ``_0, _1, ...`` in encoding order.  A monomial
whose least encoding is reachable with both signs is identically zero.
"""

from __future__ import annotations

from typing import Optional

import sympy

from . import coeff as C
from .core import (AHOL, HI, HOL, LEVI, REEB, REGISTRY, Factor, Index,
                   Monomial, TensorExpr)


def _simplify_levi(m: Monomial) -> Monomial:
    """Contract hi (inverse Levi) factors against h factors: traces and deltas."""
    coeff = m.coeff
    factors = list(m.factors)
    changed = True
    while changed:
        changed = False
        occ: dict[str, list[tuple[int, int]]] = {}
        for fi, f in enumerate(factors):
            for si, ix in enumerate(f.slots):
                if ix.cls != REEB:
                    occ.setdefault(ix.name, []).append((fi, si))
            for ix in f.derivs:
                if ix.cls != REEB:
                    occ.setdefault(ix.name, []).append((fi, -1))
        free = {nm for nm, pl in occ.items() if len(pl) == 1}

        def other_end(name, here):
            for place in occ[name]:
                if place != here:
                    return place
            return None

        for fi, f in enumerate(factors):
            if f.symbol != HI:
                continue
            x, y = f.slots
            px = other_end(x.name, (fi, 0))
            py = other_end(y.name, (fi, 1))
            hx = px is not None and px[1] >= 0 and factors[px[0]].symbol == LEVI
            hy = py is not None and py[1] >= 0 and factors[py[0]].symbol == LEVI
            if hx and hy and px[0] == py[0]:
                # full trace h^{xy} h_{xy} -> n
                coeff = C.mul(coeff, C.n)
                for j in sorted({fi, px[0]}, reverse=True):
                    del factors[j]
                changed = True
                break
            target = None
            if hx:
                g = factors[px[0]]
                target = (px[0], g.slots[1 - px[1]], y)   # delta^{y}_{y2}
            elif hy:
                g = factors[py[0]]
                target = (py[0], g.slots[1 - py[1]], x)   # delta^{x}_{x2}
            if target is None:
                continue
            gi, low_ix, up_ix = target
            up_partner = other_end(up_ix.name, (fi, 0 if up_ix is x else 1))
            low_partner = other_end(low_ix.name, (gi, factors[gi].slots.index(low_ix)))
            if up_partner is None and low_partner is None:
                continue  # delta with two free legs stays explicit
            if up_partner is not None:
                # rename the lower occurrence of up_ix to the surviving name
                survivor = low_ix.name
                mapping = {up_ix.name: survivor}
            else:
                survivor = up_ix.name
                mapping = {low_ix.name: survivor}
            for j in sorted({fi, gi}, reverse=True):
                del factors[j]
            factors = [fa.map_names(mapping) for fa in factors]
            changed = True
            break
    return Monomial(coeff, m.has_i, tuple(factors))


def canonical_monomial(m: Monomial):
    """Return (canonical monomial or None, encoding or None)."""
    if C.is_zero(m.coeff):
        return None, None
    m = _simplify_levi(m)
    occ = m.index_occurrences()
    dummies = {nm for nm, pl in occ.items() if len(pl) == 2}
    factors = list(m.factors)
    nf = len(factors)
    if nf == 0:
        return m, ()

    best: Optional[list] = None
    best_signs: set[int] = set()
    best_assign = None

    def label(ix: Index, dmap: dict, ctr: list):
        if ix.cls == REEB:
            return ("0",)
        if ix.name in dummies:
            k = dmap.get(ix.name)
            if k is None:
                k = ctr[0]
                dmap[ix.name] = k
                ctr[0] += 1
            return ("d", k, ix.cls)
        return ("f", ix.cls, ix.name)

    def dfs(remaining, enc, dmap, ctr, sign, chosen, tight):
        nonlocal best, best_signs, best_assign
        if not remaining:
            if best is None or enc < best:
                best = list(enc)
                best_signs = {sign}
                best_assign = (list(chosen), dict(dmap))
            elif enc == best:
                best_signs.add(sign)
            return
        min_order = min(REGISTRY[factors[j].symbol].order for j in remaining)
        pos = len(enc)
        for j in remaining:
            f = factors[j]
            decl = REGISTRY[f.symbol]
            if decl.order != min_order:
                continue
            for perm, psign in decl.group():
                dm = dict(dmap)
                ct = [ctr[0]]
                dl = tuple(label(ix, dm, ct) for ix in f.derivs)
                sl = tuple(label(f.slots[perm[k]], dm, ct) for k in range(len(perm)))
                fe = (decl.order, dl, sl)
                child_tight = tight
                if tight and best is not None and pos < len(best):
                    if fe > best[pos]:
                        continue
                    if fe < best[pos]:
                        child_tight = False
                dfs([k for k in remaining if k != j], enc + [fe], dm, ct,
                    sign * psign, chosen + [(j, perm)], child_tight)

    dfs(list(range(nf)), [], {}, [0], 1, [], True)
    assert best is not None
    if len(best_signs) == 2:
        return None, None
    order_choice, dmap = best_assign
    mapping = {name: f"_{k}" for name, k in dmap.items()}
    new_factors = []
    for j, perm in order_choice:
        f = factors[j]
        permuted = Factor(f.symbol, f.derivs, tuple(f.slots[perm[k]] for k in range(len(perm))))
        new_factors.append(permuted.map_names(mapping))
    sign = next(iter(best_signs))
    coeff = m.coeff if sign == 1 else C.mul(m.coeff, sympy.Integer(-1))
    return Monomial(coeff, m.has_i, tuple(new_factors)), tuple(best)


def encoding(m: Monomial):
    """Canonical encoding of a monomial (None if it vanishes by symmetry)."""
    _, enc = canonical_monomial(m)
    return enc


def canonicalize(e: TensorExpr) -> TensorExpr:
    buckets: dict = {}
    for m in e.terms:
        cm, _ = canonical_monomial(m)
        if cm is None:
            continue
        key = (cm.has_i, cm.factors)
        if key in buckets:
            prev = buckets[key]
            buckets[key] = Monomial(C.add(prev.coeff, cm.coeff), cm.has_i, cm.factors)
        else:
            buckets[key] = cm
    out = [m for m in buckets.values() if not C.is_zero(m.coeff)]
    out.sort(key=lambda m: (m.has_i, tuple((f.symbol, f.derivs, f.slots) for f in m.factors)))
    return TensorExpr(out)


def equals_zero(e: TensorExpr) -> bool:
    return len(canonicalize(e)) == 0


def exprs_equal(a: TensorExpr, b: TensorExpr) -> bool:
    return equals_zero(a - b)
