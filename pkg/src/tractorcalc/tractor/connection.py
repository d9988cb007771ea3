"""The coupled connection on componentwise tractor expressions.

The connection acts slotwise by the base covariant derivative plus
slot-mixing correction terms.  The corrections for an unbarred tractor
index are written out once as data; the barred rules are generated from
them by conjugation, so the two families cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import sympy

from ..exprcore import coeff as C
from ..exprcore.core import (AHOL, HOL, REEB_INDEX, Index, TensorExpr,
                             fresh_name)
from ..exprcore.deriv import apply_nabla
from ..exprcore.parse import parse
from .sections import (LPoly, TracExpr, TracIndex, TractorSection, fresh_ahol,
                       fresh_hol)

__all__ = ["apply_dir", "box_up_down", "box_down_up", "connection",
           "tractor_D", "tractor_Dbar", "tractor_metric", "transform_section",
           "transform_section_inverse"]


@dataclass(frozen=True)
class CorrRule:
    tgt: str                 # slot receiving the contribution
    src: str                 # slot it is built from
    mult: TensorExpr         # multiplier, with placeholder index names
    srcmid: Optional[str]    # placeholder the source's middle index binds to
    dirname: str             # placeholder naming the derivative direction


def _co_rules() -> dict[str, list[CorrRule]]:
    R = CorrRule
    p = parse
    return {
        "h": [
            R("t", "m", p("-1"), "cd", "cd"),
            R("m", "t", p("i*A[lo.cm, lo.cd]"), None, "cd"),
            R("b", "m", p("-hi[up.cg, up.cgb]*P2[lo.cd, lo.cgb]"), "cg", "cd"),
            R("b", "t", p("T[lo.cd]"), None, "cd"),
        ],
        "a": [
            R("m", "b", p("h[lo.cm, lo.cdb]"), None, "cdb"),
            R("m", "t", p("P2[lo.cm, lo.cdb]"), None, "cdb"),
            R("b", "m", p("i*hi[up.cg, up.cgb]*Ab[lo.cdb, lo.cgb]"), "cg", "cdb"),
            R("b", "t", p("-Tb[lo.cdb]"), None, "cdb"),
        ],
        "0": [
            R("t", "t", p("(i/(n + 2))*Psc"), None, "cd"),
            R("t", "b", p("-i"), None, "cd"),
            R("m", "m", p("-i*hi[up.cg, up.cgb]*P2[lo.cm, lo.cgb]"), "cg", "cd"),
            R("m", "m", p("(i/(n + 2))*Psc"), None, "cd"),
            R("m", "t", p("2*i*T[lo.cm]"), None, "cd"),
            R("b", "b", p("(i/(n + 2))*Psc"), None, "cd"),
            R("b", "m", p("2*i*hi[up.cg, up.cgb]*Tb[lo.cgb]"), "cg", "cd"),
            R("b", "t", p("i*Ssc"), None, "cd"),
        ],
    }


def _conj_rules(rules: dict[str, list[CorrRule]]) -> dict[str, list[CorrRule]]:
    flip = {"h": "a", "a": "h", "0": "0"}
    out: dict[str, list[CorrRule]] = {}
    for cls, rl in rules.items():
        out[flip[cls]] = [CorrRule(r.tgt, r.src, r.mult.conj(), r.srcmid,
                                   r.dirname) for r in rl]
    return out


_CO_RULES = _co_rules()
_COBAR_RULES = _conj_rules(_CO_RULES)


def _dir_index(direction) -> Index:
    cls, name = direction
    if cls == "0":
        return REEB_INDEX
    return Index(name, HOL if cls == "h" else AHOL)


def apply_dir(T: TracExpr, direction) -> TracExpr:
    """Coupled covariant derivative; ``direction`` is ('h'|'a', name) or ('0',).

    The direction index becomes a new free (lowered) tangential index of
    every component.  The formal log is parallel in its own scale, so the
    base derivative acts on the log-polynomial coefficients alone.
    """
    cls = direction[0]
    name = direction[1] if cls != "0" else None
    ix = _dir_index(direction if cls != "0" else ("0", None))
    dw = (-1, -1) if cls == "0" else (0, 0)
    out = TracExpr(T.indices, T.w + dw[0], T.wp + dw[1])
    for k, v in T.comps.items():
        out.add_to(k, v.map(lambda e: apply_nabla(e, ix)))
    for j, tix in enumerate(T.indices):
        rules = (_CO_RULES if tix.kind == "co" else _COBAR_RULES)[cls]
        for r in rules:
            for k, v in T.comps.items():
                if k[j] != r.src:
                    continue
                rename = {r.dirname: name} if name else {}
                val = v
                if r.srcmid is not None:
                    # the source's middle index binds to this placeholder;
                    # when it is the direction itself no dummy is created
                    g = name if r.srcmid == r.dirname else fresh_name("c")
                    rename[r.srcmid] = g
                    gb_src, gb_new = _other_dummy(r.mult, r.srcmid)
                    if gb_src is not None:
                        rename[gb_src] = gb_new
                    val = v.map(lambda e: _rename(e, {tix.mid: g}))
                else:
                    for d in ("cg", "cgb"):
                        if _uses_name(r.mult, d):
                            rename[d] = fresh_name("c")
                if r.tgt == "m" or _uses_name(r.mult, "cm"):
                    rename["cm"] = tix.mid
                mult = _rename(r.mult, rename)
                k2 = k[:j] + (r.tgt,) + k[j + 1:]
                out.add_to(k2, val.map(lambda e, m=mult: m * e))
    return out


def _uses_name(e: TensorExpr, name: str) -> bool:
    for m in e.terms:
        if name in m.index_occurrences():
            return True
    return False


def _other_dummy(e: TensorExpr, primary: str):
    """The contraction partner dummy of the primary placeholder, if any."""
    for cand in ("cg", "cgb"):
        if cand != primary and _uses_name(e, cand):
            return cand, fresh_name("c")
    return None, None


def _rename(e: TensorExpr, mapping: dict[str, str]) -> TensorExpr:
    if not mapping:
        return e
    out = []
    for m in e.terms:
        out.append(type(m)(m.coeff, m.has_i,
                           tuple(f.map_names(mapping) for f in m.factors)))
    return TensorExpr(out)


# ----------------------------------------------------------------------
# second-order contractions and the tractor D-operator

def box_up_down(T: TracExpr) -> TracExpr:
    """nabla^b nabla_b, coupled (inner holomorphic, outer antiholomorphic)."""
    d, db = fresh_hol(), fresh_ahol()
    X = apply_dir(apply_dir(T, ("h", d)), ("a", db))
    hi = parse(f"hi[up.{d}, up.{db}]")
    return X.mul(hi, dw=-1, dwp=-1).canonical()


def box_down_up(T: TracExpr) -> TracExpr:
    """nabla_b nabla^b, coupled (inner antiholomorphic, outer holomorphic)."""
    d, db = fresh_hol(), fresh_ahol()
    X = apply_dir(apply_dir(T, ("a", db)), ("h", d))
    hi = parse(f"hi[up.{d}, up.{db}]")
    return X.mul(hi, dw=-1, dwp=-1).canonical()


def _nww(T: TracExpr) -> TracExpr:
    return T.scaled(C.n) + T.weight_op("w") + T.weight_op("wp")


def tractor_D(T: TracExpr, mid: Optional[str] = None) -> TracExpr:
    """The second-order invariant D-operator; prepends an unbarred index."""
    q = mid or fresh_hol()
    g1 = _nww(T)
    top = g1.weight_op("w")
    middle = apply_dir(g1, ("h", q))
    wT = T.weight_op("w")
    curv = T + (T.weight_op("wp") - T.weight_op("w")).scaled(1 / (C.n + 2))
    bottom = (box_up_down(T)
              + apply_dir(wT, ("0",)).times_i()
              + curv.weight_op("w").mul(parse("Psc"), dw=1, dwp=1)).scaled(-1)
    out = TracExpr((TracIndex("co", q),) + T.indices, T.w - 1, T.wp)
    for k, v in top.comps.items():
        out.add_to(("t",) + k, v)
    for k, v in middle.comps.items():
        out.add_to(("m",) + k, v)
    for k, v in bottom.comps.items():
        out.add_to(("b",) + k, v)
    return out.canonical()


def tractor_Dbar(T: TracExpr, mid: Optional[str] = None) -> TracExpr:
    """Conjugate D-operator; prepends a barred index."""
    qb = mid or fresh_ahol()
    g1 = _nww(T)
    top = g1.weight_op("wp")
    middle = apply_dir(g1, ("a", qb))
    wT = T.weight_op("wp")
    curv = T + (T.weight_op("w") - T.weight_op("wp")).scaled(1 / (C.n + 2))
    bottom = (box_down_up(T)
              - apply_dir(wT, ("0",)).times_i()
              + curv.weight_op("wp").mul(parse("Psc"), dw=1, dwp=1)).scaled(-1)
    out = TracExpr((TracIndex("cobar", qb),) + T.indices, T.w, T.wp - 1)
    for k, v in top.comps.items():
        out.add_to(("t",) + k, v)
    for k, v in middle.comps.items():
        out.add_to(("m",) + k, v)
    for k, v in bottom.comps.items():
        out.add_to(("b",) + k, v)
    return out.canonical()


# ----------------------------------------------------------------------
# the tractor metric and changes of splitting

def tractor_metric(mid_co: str = "q1", mid_cobar: str = "q2b") -> TracExpr:
    """The Hermitian tractor metric, lowered, in components."""
    T = TracExpr((TracIndex("co", mid_co), TracIndex("cobar", mid_cobar)), 0, 0)
    one = LPoly.of(parse("1"))
    T.add_to(("t", "b"), one)
    T.add_to(("b", "t"), one)
    T.add_to(("m", "m"), LPoly.of(parse(f"h[lo.{mid_co}, lo.{mid_cobar}]")))
    return T


def connection(v: TractorSection, direction) -> TractorSection:
    """Covariant derivative of a section, as a section with an extra free
    index; ``direction`` is ('h'|'a', name) or ('0',)."""
    return TractorSection.from_trac(apply_dir(v.to_trac(), direction).canonical(),
                                    v.scale_tag)


def transform_section(v: TractorSection) -> TractorSection:
    """Components after rescaling the contact form by the exponential of
    the (registered) scale function."""
    U = "Upsilon"
    sig, tau, rho, mid = v.sigma, v.tau, v.rho, v.mid
    g, gb = fresh_hol(), fresh_ahol()
    up_u = parse(f"hi[up.{g}, up.{gb}]*nabla[lo.{gb}]({U})")
    tau_g = _rename(tau, {mid: g})
    new_m = tau + parse(f"nabla[lo.{mid}]({U})") * sig
    quad = parse(f"hi[up.{g}, up.{gb}]*nabla[lo.{gb}]({U})*nabla[lo.{g}]({U})"
                 f" + i*nabla[z0]({U})")
    new_b = rho - up_u * tau_g - quad.scaled(sympy.Rational(1, 2)) * sig
    return TractorSection(sig, new_m, new_b, mid, "rescaled:" + v.scale_tag)


def transform_section_inverse(v: TractorSection) -> TractorSection:
    """Inverse change of splitting (rescaling by the negated function)."""
    U = "Upsilon"
    sig, tau, rho, mid = v.sigma, v.tau, v.rho, v.mid
    g, gb = fresh_hol(), fresh_ahol()
    up_u = parse(f"hi[up.{g}, up.{gb}]*nabla[lo.{gb}]({U})")
    new_m = tau - parse(f"nabla[lo.{mid}]({U})") * sig
    tau_g = _rename(tau, {mid: g})
    quad = parse(f"hi[up.{g}, up.{gb}]*nabla[lo.{gb}]({U})*nabla[lo.{g}]({U})"
                 f" - i*nabla[z0]({U})")
    new_b = rho + up_u * tau_g - quad.scaled(sympy.Rational(1, 2)) * sig
    return TractorSection(sig, new_m, new_b, mid, v.scale_tag.partition(":")[2]
                          or v.scale_tag)
