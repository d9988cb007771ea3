"""Composite operators on the homogeneous cone and their identities.

Builds the weight-adjusted gradient operators ``D`` out of the word
algebra, assembles the closed normal-form expansion of a Laplacian power
composed with a mixed pair of them, and verifies it by normal ordering
the difference.  Also certifies the tangentiality statements (products
whose commutator with the defining function ``r`` is left-divisible by
``r``) and the structural health of the relation table.
"""

from __future__ import annotations

import sympy

from .algebra import (DELTA, E, EB, Idx, N, OperatorPoly, RDEF, Rg, Zg,
                      attach_left, fresh_dummy, Hg, nab, normal_order,
                      product, RELATIONS, relation_roundtrip,
                      relation_weight_residual)

__all__ = [
    "D_lower", "D_upper", "D_pair", "laplacian_power", "chain_power",
    "general_expansion", "corollary_expansion", "verify_general",
    "verify_corollary", "verify_homogeneous_collapse",
    "commutator_with_r", "r_divisible_part", "verify_tangential",
    "verify_relation_table", "ambient_report",
]


def D_lower(i: Idx) -> OperatorPoly:
    """Weight-adjusted gradient with one lowered slot ``i``."""
    phi = attach_left(N + E + EB + 1, (nab(i),))
    return (OperatorPoly.from_word((nab(i),), phi)
            + OperatorPoly.from_word((Zg(i), DELTA), -1))


def D_upper(name: str) -> OperatorPoly:
    """Raised-slot version, contracted through the metric."""
    return D_lower(Idx(name, "h", True))


def D_pair(i: Idx, j: Idx) -> OperatorPoly:
    """The tangential two-Z combination ``Z_j grad_i - Z_i grad_j``."""
    return (OperatorPoly.from_word((Zg(j), nab(i)))
            - OperatorPoly.from_word((Zg(i), nab(j))))


def laplacian_power(k: int) -> OperatorPoly:
    return OperatorPoly.from_word((DELTA,) * k)


def chain_power(k: int, out_name: str, in_name: str, sign: int):
    """Expansion of ``(Delta . id +/- R#)^k`` as a list of
    ``(word, in slot replacement)`` pairs.

    The power is a chain of endomorphisms; ``out_name`` is the free
    raised-h slot of the total endomorphism and ``in_name`` the lowered-h
    slot it consumes.  Each summand is a word of ``Delta`` letters and
    chained curvature letters.  Returns a list of ``(word, coeff)`` with
    the slots already wired, coefficients ``(+/-1)^(#R letters)``.
    """
    terms = []
    for bits in range(1 << k):
        word = []
        current_out = out_name  # raised slot still to be produced
        coeff = 1
        for pos in range(k):
            if (bits >> pos) & 1:
                nxt = fresh_dummy() if word or pos < k - 1 else in_name
                word.append(("R", current_out, nxt))
                current_out = nxt
                coeff *= sign
            else:
                word.append(("D",))
        # wire the last consumed slot to in_name
        gens = []
        prev = out_name
        chain_slots = [w for w in word if w[0] == "R"]
        # rebuild with correct slot chaining outer->inner
        gens = []
        upper = out_name
        for wd in word:
            if wd[0] == "D":
                gens.append(DELTA)
            else:
                lower = wd[2]
                gens.append(Rg(Idx(lower, "h", False), Idx(upper, "a", True))
                            if False else
                            Rg(Idx(lower, "h", False),
                               Idx(upper, "h", True).rename(upper)))
                upper = lower
        # the innermost lowered slot is the input
        if chain_slots:
            last = chain_slots[-1][2]
            ren = {last: in_name}
            gens = [g.map_names(ren) for g in gens]
        else:
            pass
        terms.append((tuple(gens), sympy.Integer(coeff)))
    return terms


def _chain_poly(k: int, sign: int, out_name: str, in_name: str):
    poly = OperatorPoly.zero()
    for word, coeff in chain_power(k, out_name, in_name, sign):
        poly = poly + OperatorPoly.from_word(word, coeff)
    return poly


def general_expansion(k: int, i: Idx, j: Idx,
                      groups=range(1, 8)) -> OperatorPoly:
    """Closed normal-form expansion of ``Delta^k D_i D_j`` with ``i`` a
    lowered h-slot and ``j`` a lowered a-slot, built group by group.

    ``groups`` selects which of the seven summand families to keep; the
    full tuple reproduces the tensor identity, groups (1, 2, 3, 6) the
    scalar-operand one.
    """
    keep = set(groups)
    out = OperatorPoly.zero()
    phi1 = N + E + EB + k + 1
    phi2 = N + E + EB + k + 2
    if 1 in keep:
        out = out + OperatorPoly.from_word((Zg(i), Zg(j)) + (DELTA,) * (k + 2))
    if 2 in keep:
        for word in ((Zg(j), nab(i)), (Zg(i), nab(j)), (Hg(i, j),)):
            full = word + (DELTA,) * (k + 1)
            out = out + OperatorPoly.from_word(full, -attach_left(phi1, full))
    if 3 in keep:
        full = (nab(i), nab(j)) + (DELTA,) * k
        out = out + OperatorPoly.from_word(
            full, attach_left(phi1 * phi2, full))
    if 4 in keep:
        c, e = fresh_dummy(), fresh_dummy()
        head = OperatorPoly.from_word((Zg(i), Rg(Idx(c, "h", False), j)))
        out = out - head * _chain_poly(k, -1, c, e) * D_upper(e)
    if 5 in keep:
        for jj in range(k):
            c, e = fresh_dummy(), fresh_dummy()
            head = OperatorPoly.from_word(
                (nab(i),) + (DELTA,) * (k - 1 - jj)
                + (Rg(Idx(c, "h", False), j),))
            out = out + (head * _chain_poly(jj, -1, c, e)
                         * D_upper(e)).scaled(jj + 1)
    if 6 in keep:
        for jj in range(k):
            c, e = fresh_dummy(), fresh_dummy()
            chain = _chain_poly_lowered(jj, +1, i, c)
            mid = OperatorPoly.from_word(
                (Rg(Idx(c, "h", False), Idx(e, "h", True)),)
                + (DELTA,) * (k - 1 - jj))
            out = out - chain * mid * D_lower(Idx(e, "h", False)) * D_lower(j)
    if 7 in keep:
        for jj in range(k):
            c, e, f = fresh_dummy(), fresh_dummy(), fresh_dummy()
            chain = _chain_poly_lowered(jj, +1, i, c)
            tail = (OperatorPoly.from_word((Rg(Idx(e, "h", False), j),))
                    * _chain_poly(k - 1 - jj, -1, e, f) * D_upper(f))
            out = out + chain * D_lower(Idx(c, "h", False)) * tail
    return out


def _chain_poly_lowered(k: int, sign: int, in_low: Idx, out_name: str):
    """Chain power consuming the free lowered slot ``in_low`` on the left
    and producing a lowered dummy ``out_name`` to its right."""
    poly = OperatorPoly.zero()
    for word, coeff in chain_power(k, "__o", "__i", sign):
        ren = {"__o": in_low.name, "__i": out_name}
        w2 = []
        for g in word:
            if g.kind != "R":
                w2.append(g)
                continue
            lo, up = g.idx
            lo = lo.rename(ren.get(lo.name, lo.name))
            up = up.rename(ren.get(up.name, up.name))
            # transpose the endomorphism: the operand slot sits left now
            w2.append(Rg(Idx(up.name, "h", False) if up.name == in_low.name
                         else Idx(up.name, "h", False),
                         Idx(lo.name, "h", True)))
        # rebuild slot variance: operand (in_low) lowered, output raised
        poly = poly + OperatorPoly.from_word(tuple(w2), coeff)
    return poly


def corollary_expansion(k: int, i: Idx, j: Idx) -> OperatorPoly:
    """The scalar-operand form: only groups 1, 2, 3 and 6 survive."""
    return general_expansion(k, i, j, groups=(1, 2, 3, 6))


def lhs_operator(k: int, i: Idx, j: Idx) -> OperatorPoly:
    return laplacian_power(k) * D_lower(i) * D_lower(j)


def verify_general(k: int, context: str = "tensor", mutate=None,
                   groups=None) -> dict:
    """Normal order LHS minus expansion and report the residual.

    ``mutate`` names a deliberate defect ("drop-form") used to check
    the verifier actually detects broken identities.
    """
    i, j = Idx("A", "h", False), Idx("B", "a", False)
    if groups is None:
        groups = (1, 2, 3, 6) if context == "function" else range(1, 8)
    rhs = general_expansion(k, i, j, groups=groups)
    if mutate == "drop-form":
        rhs = OperatorPoly(
            {w: c for w, c in rhs.terms.items()
             if not any(g.kind == "H" for g in w)}, rhs.err)
    lhs = lhs_operator(k, i, j)
    diff = normal_order(lhs - rhs, context=context)
    expected = -(k + 1) if context == "tensor" else -k
    return {
        "k": k,
        "context": context,
        "holds": diff.word_count() == 0,
        "residual": diff.pretty() if diff.terms else "",
        "error_offset": diff.err,
        "error_order_ok": diff.err == expected,
        "expected_offset": expected,
    }


def verify_corollary(k: int) -> dict:
    return verify_general(k, context="function")


def verify_homogeneous_collapse(k: int) -> dict:
    """At operand weight -(n-1-k)/2 the mixed groups 2 and 3 vanish, so
    the scalar expansion collapses to the pure-Z and curvature groups."""
    i, j = Idx("A", "h", False), Idx("B", "a", False)
    w = -(N - 1 - k) / 2
    full = corollary_expansion(k, i, j).subs_weights(w, w)
    short = general_expansion(k, i, j, groups=(1, 6)).subs_weights(w, w)
    diff = (full - short).collected()
    return {"k": k, "holds": diff.word_count() == 0,
            "residual": diff.pretty() if diff.terms else ""}


# ---------------------------------------------------------------------------
# tangentiality

def commutator_with_r(p: OperatorPoly, context: str = "tensor",
                      homogeneous=None) -> OperatorPoly:
    rp = OperatorPoly.from_word((RDEF,))
    return normal_order(p * rp - rp * p, context=context,
                        homogeneous=homogeneous)


def r_divisible_part(p: OperatorPoly):
    """Split a normal-form polynomial into (r-divisible, remainder)."""
    div, rem = OperatorPoly.zero(), OperatorPoly.zero()
    for w, c in p.terms.items():
        if w and w[0].kind == "r":
            div = div + OperatorPoly.from_word(w, c)
        else:
            rem = rem + OperatorPoly.from_word(w, c)
    div.err = rem.err = p.err
    return div, rem


def verify_tangential() -> dict:
    """The three tangentiality facts, certified by normal ordering:

    * the two-Z gradient combinations commute with ``r`` exactly;
    * the commutator of a single weight-adjusted gradient with ``r``
      is left-divisible by ``r``;
    * at operand weight -(n+3-k)/2 the commutator of the k-th Laplacian
      power with ``r`` vanishes, and so does that of the curvature-chain
      sum from the scalar expansion (its residue is r-divisible).
    """
    out = {}
    i, j = Idx("A", "h", False), Idx("B", "a", False)
    jb2 = Idx("C", "h", False)

    c = commutator_with_r(D_pair(i, j)).collected()
    out["pair-mixed"] = c.word_count() == 0
    c = commutator_with_r(D_pair(i, jb2)).collected()
    out["pair-holomorphic"] = c.word_count() == 0

    c = commutator_with_r(D_lower(i)).collected()
    _, rem = r_divisible_part(c)
    out["single-gradient"] = rem.collected().word_count() == 0

    for k in (1, 2, 3):
        w = -(N + 3 - k) / 2
        c = commutator_with_r(laplacian_power(k),
                              homogeneous=(w, w)).collected()
        out[f"laplacian-power-{k}"] = c.word_count() == 0

    for k in (1, 2):
        w = -(N + 3 - k) / 2
        op = OperatorPoly.zero()
        for jj in range(k):
            cn, en = fresh_dummy(), fresh_dummy()
            chain = _chain_poly_lowered(jj, +1, i, cn)
            mid = OperatorPoly.from_word(
                (Rg(Idx(cn, "h", False), Idx(en, "h", True)),)
                + (DELTA,) * (k - 1 - jj))
            op = op + chain * mid
        c = commutator_with_r(op, homogeneous=(w, w)).collected()
        _, rem = r_divisible_part(c)
        out[f"curvature-chain-{k}"] = rem.collected().word_count() == 0
    out["holds"] = all(v for v in out.values())
    return out


# ---------------------------------------------------------------------------
# relation-table health

def verify_relation_table() -> dict:
    out = {"weights": True, "roundtrip": True, "failures": []}
    for rel in RELATIONS:
        for res in relation_weight_residual(rel):
            if res != (0, 0):
                out["weights"] = False
                out["failures"].append((rel.name, "weight", res))
        rt = relation_roundtrip(rel)
        if rt.word_count() != 0:
            out["roundtrip"] = False
            out["failures"].append((rel.name, "roundtrip", rt.pretty()))
    out["holds"] = out["weights"] and out["roundtrip"]
    return out


def ambient_report(kmax: int = 2) -> dict:
    """One-call health report across contexts, used by the CLI."""
    rep = {"table": verify_relation_table(),
           "tangential": verify_tangential(),
           "tensor": [], "function": [], "homogeneous": []}
    for k in range(kmax + 1):
        rep["tensor"].append(verify_general(k, "tensor"))
        rep["function"].append(verify_corollary(k))
        rep["homogeneous"].append(verify_homogeneous_collapse(k))
    rep["holds"] = (
        rep["table"]["holds"] and rep["tangential"]["holds"]
        and all(r["holds"] and r["error_order_ok"] for r in rep["tensor"])
        and all(r["holds"] and r["error_order_ok"] for r in rep["function"])
        and all(r["holds"] for r in rep["homogeneous"]))
    return rep
