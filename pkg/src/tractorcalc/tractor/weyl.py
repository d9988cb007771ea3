"""The four-slot Weyl-type curvature tractor and its defining checks.

The object is assembled from the curvature components (S4, V, Q, U, Y and
the obstruction scalar) through the injector presentation: a middle slot
carries the tangential index named by the tractor index's mid, a bottom
slot carries none.  The two divergence identities that drive the
construction, the tangential trace, and the behaviour under the Einstein
reduction are each exposed as blockwise residual reports.  The companion
splitting map sends a trace-free hermitian two-tensor of generic weight
to a two-index tractor whose invariant divergence vanishes.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from ..exprcore import coeff as C
from ..exprcore.canon import equals_zero
from ..exprcore.core import TensorExpr
from ..exprcore.parse import parse
from ..exprcore.printer import pretty
from ..pseudohermitian import engine
from ..pseudohermitian.matcher import rule_from_exprs
from .connection import apply_dir, tractor_D
from .sections import (SLOTS, LPoly, TracExpr, TracIndex, fresh_ahol,
                       fresh_hol)

N = C.n

__all__ = [
    "omega_tractor", "phi_tractor", "phi_bar_tractor", "psi_tractor",
    "weyl_tractor", "trace_pair", "splitting_map",
    "omega_divergence_residuals", "omega_trace_residuals",
    "omega_double_divergence_residuals", "einstein_weyl_residuals",
    "splitting_divergence_residuals", "weyl_report",
]


def _pack(entries, indices, w, wp) -> TracExpr:
    T = TracExpr(indices, w, wp)
    for key, text in entries:
        T.add_to(key, LPoly.of(parse(text)))
    return T


def omega_tractor(alpha: str = "al", betab: str = "beb",
                  mids=("c1", "e1b")) -> TracExpr:
    """The two-tractor-index curvature with two free tangential slots."""
    c, e = mids
    return _pack([
        (("m", "m"), f"S4[lo.{alpha}, lo.{betab}, lo.{c}, lo.{e}]"),
        (("m", "b"), f"i*V[lo.{alpha}, lo.{betab}, lo.{c}]"),
        (("b", "m"), f"-i*Vb[lo.{e}, lo.{alpha}, lo.{betab}]"),
        (("b", "b"), f"U[lo.{alpha}, lo.{betab}]"),
    ], (TracIndex("co", c), TracIndex("cobar", e)), 0, 0)


def phi_tractor(alpha: str = "al", mids=("c1", "e1b")) -> TracExpr:
    """The one-free-holomorphic-slot component of the four-slot object."""
    c, e = mids
    return _pack([
        (("m", "m"), f"i*V[lo.{c}, lo.{e}, lo.{alpha}]"),
        (("m", "b"), f"i*Q[lo.{alpha}, lo.{c}]"),
        (("b", "m"), f"U[lo.{alpha}, lo.{e}]"),
        (("b", "b"), f"i*Y[lo.{alpha}]"),
    ], (TracIndex("co", c), TracIndex("cobar", e)), -1, -1)


def phi_bar_tractor(betab: str = "beb", mids=("c1", "e1b")) -> TracExpr:
    """Conjugate partner of :func:`phi_tractor`, written out slotwise."""
    c, e = mids
    return _pack([
        (("m", "m"), f"-i*Vb[lo.{e}, lo.{c}, lo.{betab}]"),
        (("b", "m"), f"-i*Qb[lo.{betab}, lo.{e}]"),
        (("m", "b"), f"U[lo.{c}, lo.{betab}]"),
        (("b", "b"), f"-i*Yb[lo.{betab}]"),
    ], (TracIndex("co", c), TracIndex("cobar", e)), -1, -1)


def psi_tractor(mids=("c1", "e1b")) -> TracExpr:
    """The scalar component of the four-slot object."""
    c, e = mids
    return _pack([
        (("m", "m"), f"(n - 1)*U[lo.{c}, lo.{e}]"),
        (("m", "b"), f"(n - 1)*i*Y[lo.{c}]"),
        (("b", "m"), f"-(n - 1)*i*Yb[lo.{e}]"),
        (("b", "b"), "Obs"),
    ], (TracIndex("co", c), TracIndex("cobar", e)), -2, -2)


def weyl_tractor(mids=("a1", "b1b", "c1", "e1b")) -> TracExpr:
    """The Weyl-type curvature tractor with four tractor indices."""
    a, b, c, e = mids
    out = TracExpr((TracIndex("co", a), TracIndex("cobar", b),
                    TracIndex("co", c), TracIndex("cobar", e)), -1, -1)
    blocks = {
        ("m", "m"): omega_tractor(a, b, (c, e)).scaled(N - 1),
        ("m", "b"): phi_tractor(a, (c, e)).scaled(N - 1),
        ("b", "m"): phi_bar_tractor(b, (c, e)).scaled(N - 1),
        ("b", "b"): psi_tractor((c, e)),
    }
    for prefix, X in blocks.items():
        for k, v in X.comps.items():
            out.add_to(prefix + k, v)
    return out


# ----------------------------------------------------------------------
# contraction of a lowered pair of tractor indices with the inverse metric

def trace_pair(T: TracExpr, i: int, j: int) -> TracExpr:
    """Contract an unbarred/barred pair of tractor slots."""
    ii, jj = T.indices[i], T.indices[j]
    if {ii.kind, jj.kind} != {"co", "cobar"}:
        raise ValueError("trace_pair needs one unbarred and one barred slot")
    co_pos = i if ii.kind == "co" else j
    cobar_pos = j if co_pos == i else i
    hi = parse(f"hi[up.{T.indices[co_pos].mid}, up.{T.indices[cobar_pos].mid}]")
    out = TracExpr(tuple(ix for p, ix in enumerate(T.indices)
                         if p not in (i, j)), T.w, T.wp)
    for k, v in T.comps.items():
        si, sj = k[co_pos], k[cobar_pos]
        rest = tuple(s for p, s in enumerate(k) if p not in (i, j))
        if (si, sj) in (("t", "b"), ("b", "t")):
            out.add_to(rest, v)
        elif (si, sj) == ("m", "m"):
            out.add_to(rest, v.mul(hi))
    return out.canonical()


# ----------------------------------------------------------------------
# blockwise residual reports for the defining identities

def _report(lhs: TracExpr, rhs: TracExpr, rs, expand=None, cond="none"):
    rs = rs or engine.default_rules()
    expand = expand if expand is not None else engine.EXPAND_FOR_IDENTITIES
    reports = []
    for k in itertools.product(SLOTS, repeat=len(lhs.indices)):
        residual = engine.check(lhs.get(k).c0, rhs.get(k).c0, rs,
                                expand=expand, cond=cond)
        ok = equals_zero(residual)
        reports.append({"block": "".join(k), "match": ok,
                        "residual": None if ok else pretty(residual)})
    return reports


def omega_divergence_residuals(rs=None):
    """First divergence: contracting the barred free slot of the derivative
    of the curvature block reproduces the one-slot component."""
    al, beb = "al", "beb"
    Om = omega_tractor(al, beb)
    g = fresh_hol()
    div = apply_dir(Om, ("h", g)).mul(
        parse(f"hi[up.{g}, up.{beb}]"), dw=-1, dwp=-1)
    return _report(div, phi_tractor(al).scaled(-(N - 1)), rs)


def omega_trace_residuals(rs=None):
    """The tangential trace of the curvature block vanishes."""
    traced = omega_tractor().mul(parse("hi[up.al, up.beb]"), dw=-1, dwp=-1)
    zero = TracExpr(traced.indices, traced.w, traced.wp)
    return _report(traced, zero, rs)


def _structured_rules(rs):
    """The catalogued divergence identities oriented into rewrites (with
    their conjugates), for residuals best cancelled before expansion."""
    extra = []
    for name in ("divV", "divbarV", "divQ", "divU"):
        lhs, rhs = rs.identities[name]
        r = rule_from_exprs("id_" + name, lhs, rhs)
        extra.append(r)
        lc = TensorExpr((r.lhs,)).conj().terms[0]
        extra.append(type(r)("id_" + name + "_cj", lc, r.rhs.conj(),
                             r.exchange))
    return replace(rs, rewrites=extra + rs.rewrites)


def omega_double_divergence_residuals(rs=None):
    """Second divergence: the curvature-corrected double divergence of the
    curvature block reproduces the scalar component.

    Since the first divergence is already certified blockwise, the
    remaining content of the double-divergence display is obtained by
    substituting it once, leaving a first-order statement: minus the
    coupled divergence of the one-slot component, plus the Schouten
    contraction of the curvature block, equals the scalar component.
    Each block is checked by expansion first and, where the expanded
    rewrite system lacks a terminating orientation, at the structured
    level using the catalogued divergence identities as rewrites.
    """
    rs = rs or engine.default_rules()
    al, beb = "al", "beb"
    gb = fresh_ahol()
    div_phi = apply_dir(phi_tractor(al), ("a", gb)).mul(
        parse(f"hi[up.{al}, up.{gb}]"), dw=-1, dwp=-1)
    lhs = div_phi.scaled(-1) + omega_tractor(al, beb).mul(
        parse("P2[up.al, up.beb]"), dw=-1, dwp=-1)
    rhs = psi_tractor()
    rs_structured = _structured_rules(rs)
    expand = engine.EXPAND_FOR_IDENTITIES + ("Obs",)
    reports = []
    for k in itertools.product(SLOTS, repeat=2):
        residual = engine.check(lhs.get(k).c0, rhs.get(k).c0, rs,
                                expand=expand)
        if not equals_zero(residual):
            residual = engine.check(lhs.get(k).c0, rhs.get(k).c0,
                                    rs_structured, expand=("Obs",))
        ok = equals_zero(residual)
        reports.append({"block": "".join(k), "match": ok,
                        "residual": None if ok else pretty(residual)})
    return reports


def einstein_weyl_residuals(rs=None):
    """Under the Einstein reduction only the doubly-middle block survives."""
    rs = rs or engine.default_rules()
    S = weyl_tractor()
    reports = []
    for k, v in sorted(S.comps.items()):
        residual = engine.simplify(v.c0, rs, cond="einstein")
        ok = equals_zero(residual)
        survivor = k == ("m", "m", "m", "m")
        reports.append({"block": "".join(k), "match": ok != survivor,
                        "residual": None if ok else pretty(residual)})
    return reports


# ----------------------------------------------------------------------
# the splitting map on trace-free hermitian two-tensors of generic weight

def splitting_map(symbol: str = "s2", mids=("a1", "b1b")) -> TracExpr:
    """Two-index tractor built from a trace-free hermitian two-tensor so
    that its invariant divergence vanishes at generic weights."""
    a, b = mids
    cw = "(n + w - 1)"
    cwp = "(n + wp - 1)"
    T = _pack([
        (("m", "m"), f"{cw}*{cwp}*{symbol}[lo.{a}, lo.{b}]"),
        (("m", "b"), f"-{cwp}*nabla[up.sb]({symbol}[lo.{a}, lo.sb])"),
        (("b", "m"), f"-{cw}*nabla[up.g]({symbol}[lo.g, lo.{b}])"),
        (("b", "b"), f"nabla[up.g](nabla[up.sb]({symbol}[lo.g, lo.sb]))"
                     f" + {cw}*P2[up.g, up.sb]*{symbol}[lo.g, lo.sb]"),
    ], (TracIndex("co", a), TracIndex("cobar", b)), C.w - 1, C.wp - 1)
    return T


def _tracefree_rules(symbol: str = "s2"):
    """Trace rules for the generic two-tensor, through second derivatives."""
    rules = []
    specs = [("h", "lo.d{j}"), ("a", "lo.d{j}b"), ("0", "z0")]
    for depth in range(3):
        for word in itertools.product(specs, repeat=depth):
            inner = f"{symbol}[lo.g0, lo.g0b]"
            for j, (_, tmpl) in enumerate(word, start=1):
                inner = f"nabla[{tmpl.format(j=j)}]({inner})"
            lhs = parse(f"hi[up.g0, up.g0b]*{inner}")
            rules.append(rule_from_exprs(
                f"tracefree_{symbol}_{len(rules)}", lhs, parse("0")))
    return rules


def splitting_divergence_residuals(rs=None, symbol: str = "s2"):
    """The invariant divergence of the splitting map, blockwise."""
    rs = rs or engine.default_rules()
    rs2 = replace(rs, rewrites=rs.rewrites + _tracefree_rules(symbol))
    M = splitting_map(symbol)
    D = tractor_D(M, mid=fresh_hol())
    div = trace_pair(D, 0, 2)
    reports = []
    for k in itertools.product(SLOTS, repeat=1):
        residual = engine.simplify(div.get(k).c0, rs2)
        ok = equals_zero(residual)
        reports.append({"block": "".join(k), "match": ok,
                        "residual": None if ok else pretty(residual)})
    return reports


def weyl_report(rs=None) -> dict:
    """All defining checks of the four-slot object, as one JSON-able map."""
    rs = rs or engine.default_rules()
    out = {}
    for name, fn in (
            ("divergence", omega_divergence_residuals),
            ("trace", omega_trace_residuals),
            ("double_divergence", omega_double_divergence_residuals),
            ("einstein", einstein_weyl_residuals),
            ("splitting_divergence", splitting_divergence_residuals)):
        reports = fn(rs)
        out[name] = {"holds": all(r["match"] for r in reports),
                     "blocks": reports}
    out["holds"] = all(v["holds"] for v in out.values())
    return out
