"""Reordering of covariant-derivative prefixes with curvature corrections.

A commutator table entry describes, for an ordered pair of derivative
classes, how the commutator acts: an optional Reeb-derivative insertion, an
optional derivative insertion (the torsion first-order part of the Reeb
commutators), an endomorphism on each affected index class, and a density
weight term.  Templates are expressions in reserved index names:

* ``x`` / ``xb``   -- the outer derivative of the commutator,
* ``y`` / ``yb``   -- the inner derivative (absent for the Reeb direction),
* ``c`` / ``cb``   -- the index the slot rule acts on,
* the substitution target (after ``@``) -- where the acted index moves.

The default ordering policy puts divergence-type derivatives (those whose
inverse-Levi partner contracts a slot of the same factor) innermost, then
orders by class, then resolves ties by canonical-encoding descent; this
makes the divergence patterns of the rewrite layer normal forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import sympy

from ..exprcore import coeff as C
from ..exprcore.canon import canonicalize, encoding
from ..exprcore.core import (AHOL, HI, HOL, REEB, REEB_INDEX, REGISTRY,
                             Factor, Index, Monomial, TensorExpr, fresh_name)
from ..exprcore.deriv import apply_nabla

_CLASS_NAME = {HOL: ("x", "y"), AHOL: ("xb", "yb")}


@dataclass(frozen=True)
class CommutatorSpec:
    """Action of [nabla_x, nabla_y] for one ordered pair of derivative classes."""
    classes: tuple[str, str]
    reeb: Optional[TensorExpr] = None                     # coeff of a nabla_0 insertion
    deriv: tuple[tuple[TensorExpr, str], ...] = ()        # (coeff, inserted index name)
    slot: dict = field(default_factory=dict)              # cls -> ((coeff, target name), ...)
    weight: Optional[TensorExpr] = None                   # coeff; w/wp stand for the operand's weight


class CommutatorTable:
    def __init__(self) -> None:
        self._specs: dict[tuple[str, str], CommutatorSpec] = {}

    def add(self, spec: CommutatorSpec) -> None:
        self._specs[spec.classes] = spec

    def lookup(self, cx: str, cy: str) -> tuple[CommutatorSpec, bool]:
        """Return (spec, flipped); flipped means the stored pair is (cy, cx)."""
        if (cx, cy) in self._specs:
            return self._specs[(cx, cy)], False
        if (cy, cx) in self._specs:
            return self._specs[(cy, cx)], True
        raise KeyError(f"no commutator rule for derivative classes ({cx}, {cy})")


def _retarget(e: TensorExpr, mapping: dict[str, str]) -> TensorExpr:
    """Rename reserved template indices; all other names go fresh."""
    fresh: dict[str, str] = {}
    out = []
    for m in e.terms:
        local = {}
        for f in m.factors:
            for ix in f.derivs + f.slots:
                if ix.cls == REEB or ix.name in local:
                    continue
                if ix.name in mapping:
                    local[ix.name] = mapping[ix.name]
                else:
                    if ix.name not in fresh:
                        fresh[ix.name] = fresh_name()
                    local[ix.name] = fresh[ix.name]
        out.append(Monomial(m.coeff, m.has_i, tuple(f.map_names(local) for f in m.factors)))
    return TensorExpr(out)


def commutator_terms(m: Monomial, fi: int, j: int, table: CommutatorTable) -> TensorExpr:
    """[nabla_{d_j}, nabla_{d_{j+1}}] correction terms for factor fi of m."""
    f = m.factors[fi]
    dx, dy = f.derivs[j], f.derivs[j + 1]
    outer, inner = f.derivs[:j], f.derivs[j + 2:]
    spec, flipped = table.lookup(dx.cls, dy.cls)
    sgn = sympy.Integer(-1 if flipped else 1)
    names: dict[str, str] = {}
    a, b = (dy, dx) if flipped else (dx, dy)
    if a.cls != REEB:
        names[_CLASS_NAME[a.cls][0]] = a.name
    if b.cls != REEB:
        names[_CLASS_NAME[b.cls][1]] = b.name

    rest = tuple(fa for k, fa in enumerate(m.factors) if k != fi)
    carrier = TensorExpr((Monomial(C.mul(m.coeff, sgn), m.has_i, rest),))

    pieces: list[TensorExpr] = []

    def emit(coeff_expr: TensorExpr, new_factor: Factor) -> None:
        term = coeff_expr * TensorExpr((Monomial(sympy.Integer(1), False, (new_factor,)),))
        for d in reversed(outer):
            term = apply_nabla(term, d)
        pieces.append(carrier * term)

    if spec.reeb is not None:
        coeff = _retarget(spec.reeb, names)
        emit(coeff, Factor(f.symbol, (REEB_INDEX,) + inner, f.slots))

    for tmpl, target in spec.deriv:
        ins = fresh_name()
        coeff = _retarget(tmpl, {**names, target: ins})
        decl_cls = _template_index_class(tmpl, target)
        emit(coeff, Factor(f.symbol, (Index(ins, decl_cls),) + inner, f.slots))

    # endomorphism action on every lower index below the commutator
    positions = [("d", k) for k in range(len(inner))] + \
                [("s", k) for k in range(len(f.slots))]
    for kind, k in positions:
        ix = inner[k] if kind == "d" else f.slots[k]
        if ix.cls == REEB:
            continue
        for tmpl, target in spec.slot.get(ix.cls, ()):
            cname = "c" if ix.cls == HOL else "cb"
            if target in names or target == cname:
                sub = names.get(target, ix.name if target == cname else target)
                coeff = _retarget(tmpl, {**names, cname: ix.name})
            else:
                sub = fresh_name()
                coeff = _retarget(tmpl, {**names, cname: ix.name, target: sub})
            new_ix = Index(sub, ix.cls)
            if kind == "d":
                nd = inner[:k] + (new_ix,) + inner[k + 1:]
                emit(coeff, Factor(f.symbol, nd, f.slots))
            else:
                ns = f.slots[:k] + (new_ix,) + f.slots[k + 1:]
                emit(coeff, Factor(f.symbol, inner, ns))

    if spec.weight is not None:
        dw, dwp = REGISTRY[f.symbol].weight
        shift = sum(1 for ixx in inner if ixx.cls == REEB)
        dw, dwp = dw - shift, dwp - shift
        coeff = _retarget(spec.weight, names).map_coeffs(
            lambda cf: cf.subs({C.w: dw, C.wp: dwp}, simultaneous=True))
        emit(coeff, Factor(f.symbol, inner, f.slots))

    total = TensorExpr.zero()
    for p in pieces:
        total = total + p
    return total


def _template_index_class(tmpl: TensorExpr, name: str) -> str:
    for m in tmpl.terms:
        for f in m.factors:
            for ix in f.derivs + f.slots:
                if ix.name == name:
                    # the slot holding the target is the raised (hi) position;
                    # the inserted lower index has the same class
                    return ix.cls
    raise ValueError(f"commutator template does not mention target index {name!r}")


# ----------------------------------------------------------------------
# ordering policy

_CLASS_RANK = {HOL: 0, AHOL: 1, REEB: 2}
_CLASS_RANK_ALT = {AHOL: 0, HOL: 1, REEB: 2}


def _divergence_flags(m: Monomial, fi: int) -> tuple[bool, ...]:
    """Which derivative indices of factor fi are divergence-type."""
    f = m.factors[fi]
    occ = m.index_occurrences()
    slot_names = {ix.name for ix in f.slots if ix.cls != REEB}
    flags = []
    for d in f.derivs:
        div = False
        if d.cls != REEB:
            for ofi, kind, pos in occ.get(d.name, ()):  # find the hi partner
                other = m.factors[ofi]
                if kind == "s" and other.symbol == HI:
                    mate = other.slots[1 - pos]
                    if mate.name in slot_names:
                        div = True
        flags.append(div)
    return tuple(flags)


def _keys(m: Monomial, fi: int, policy: str) -> tuple:
    rank = _CLASS_RANK if policy == "standard" else _CLASS_RANK_ALT
    flags = _divergence_flags(m, fi)
    f = m.factors[fi]
    return tuple((1 if flags[k] else 0, rank[d.cls]) for k, d in enumerate(f.derivs))


def _swap_main(m: Monomial, fi: int, j: int) -> Monomial:
    f = m.factors[fi]
    nd = f.derivs[:j] + (f.derivs[j + 1], f.derivs[j]) + f.derivs[j + 2:]
    nf = Factor(f.symbol, nd, f.slots)
    return Monomial(m.coeff, m.has_i, m.factors[:fi] + (nf,) + m.factors[fi + 1:])


def _find_swap(m: Monomial, policy: str) -> Optional[tuple[int, int]]:
    for fi, f in enumerate(m.factors):
        if len(f.derivs) < 2:
            continue
        keys = _keys(m, fi, policy)
        for j in range(len(f.derivs) - 1):
            if keys[j] > keys[j + 1]:
                return fi, j
            if keys[j] == keys[j + 1] and f.derivs[j] != f.derivs[j + 1]:
                old = encoding(m)
                new = encoding(_swap_main(m, fi, j))
                if old is not None and (new is None or new < old):
                    return fi, j
    return None


def normal_order_tw(e: TensorExpr, table: CommutatorTable,
                    policy: str = "standard", max_steps: int = 20000) -> TensorExpr:
    """Reorder all derivative prefixes per the policy, inserting commutators."""
    e = canonicalize(e)
    steps = 0
    while True:
        out: list[Monomial] = []
        changed = False
        for m in e.terms:
            found = _find_swap(m, policy)
            if found is None:
                out.append(m)
                continue
            fi, j = found
            out.append(_swap_main(m, fi, j))
            out.extend(commutator_terms(m, fi, j, table).terms)
            changed = True
            steps += 1
            if steps > max_steps:
                raise RuntimeError("normal_order_tw: step bound exceeded")
        e = canonicalize(TensorExpr(out))
        if not changed:
            return e
