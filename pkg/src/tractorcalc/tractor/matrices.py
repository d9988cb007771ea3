"""3x3 operator matrices of second-order tractor operators in a scale.

The composed operator D_A Dbar_B on a weighted scalar is computed from the
connection and compared blockwise against its closed-form matrix.  The two
log-interpolation matrices K and I are obtained both from the formal-log
machinery and by coefficient extraction in the weight parameter; the block
layout is (top, middle, bottom) for rows and columns alike, with all
tangential indices lowered (row index ``a0`` holomorphic, column index
``b0b`` antiholomorphic).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import sympy

from ..exprcore import coeff as C
from ..exprcore.canon import canonicalize, equals_zero
from ..exprcore.core import Factor, Monomial, TensorExpr
from ..exprcore.parse import parse
from ..exprcore.printer import pretty
from ..pseudohermitian import engine
from ..pseudohermitian.matcher import rule_from_exprs
from .connection import apply_dir, tractor_D, tractor_Dbar
from .sections import SLOTS, LPoly, TracExpr

ROW_MID, COL_MID = "a0", "b0b"

N, W = C.n, C.w
_HALF = sympy.Rational(1, 2)

__all__ = [
    "TractorMatrix", "compose_DDbar", "matrix_from_trac",
    "display_C_matrix", "display_dbard_matrix", "display_K_matrix",
    "display_I_matrix", "K_matrix", "I_matrix", "K_log_parts", "I_log_parts",
    "K_transformation_residuals", "I_transformation_residuals",
    "install_conditions", "rename_symbol",
    "holomorphic_scale_residuals", "parallel_scale_residuals",
]


# ----------------------------------------------------------------------
# extra condition sets used by the matrix lemmas

def rename_symbol(e: TensorExpr, old: str, new: str) -> TensorExpr:
    return TensorExpr(tuple(
        Monomial(m.coeff, m.has_i, tuple(
            Factor(new if f.symbol == old else f.symbol, f.derivs, f.slots)
            for f in m.factors))
        for m in e.terms))


def install_conditions(rs=None):
    """Add the scalar variants of the reduction conditions (idempotent):

    * ``pluriharmonicScalar`` -- the pluriharmonic rules stated for a
      generic unweighted scalar ``ph`` instead of the scale change;
    * ``holomorphicScale`` -- the density ``sigma`` has vanishing
      antiholomorphic gradient and its Reeb derivative is determined;
    * ``einsteinScale`` -- additionally the holomorphic gradient vanishes.
    """
    rs = rs or engine.default_rules()
    if "pluriharmonicScalar" in rs.conditions:
        return rs
    ren = lambda e: rename_symbol(e, "Upsilon", "ph")
    rules = []
    for j, r in enumerate(rs.conditions["pluriharmonic"]):
        rules.append(rule_from_exprs(f"pluriharmonicScalar_{j}",
                                     ren(TensorExpr((r.lhs,))), ren(r.rhs)))
    rs.conditions["pluriharmonicScalar"] = rules
    rs.implied["pluriharmonicScalar"] = [
        (ren(l), ren(r)) for l, r in rs.implied.get("pluriharmonic", ())]

    # distinguished scale density sigma: it trivialises its own contact
    # form (the squared modulus is the parallel unit density), which with
    # the vanishing antiholomorphic gradient kills the full gradient; the
    # Reeb derivative is then pinned by the sublaplacian identity.  The
    # same rules serve both scale propositions -- they differ only in the
    # curvature condition paired with them.
    hol = ["nabla[lo.ab](sigma) -> 0", "nabla[lo.a](sigma) -> 0",
           "nabla[z0](sigma) -> -(2*(n + 1)/(n*(n + 2)))*i*Psc*sigma",
           "nabla[lo.a](sigmab) -> 0", "nabla[lo.ab](sigmab) -> 0",
           "nabla[z0](sigmab) -> (2*(n + 1)/(n*(n + 2)))*i*Psc*sigmab"]
    ein = hol
    for cname, texts in (("holomorphicScale", hol), ("einsteinScale", ein)):
        out = []
        for j, txt in enumerate(texts):
            lhs, _, rhs = txt.partition("->")
            out.append(rule_from_exprs(f"{cname}_{j}", parse(lhs.strip()),
                                       parse(rhs.strip())))
        rs.conditions[cname] = out
    return rs


# ----------------------------------------------------------------------
# the matrix type

@dataclass
class TractorMatrix:
    """Blocks keyed by (row slot, column slot), slots from ``SLOTS``."""

    blocks: dict = field(default_factory=dict)
    row_mid: str = ROW_MID
    col_mid: str = COL_MID
    scale_tag: str = "theta"
    label: str = ""

    def block(self, r: str, c: str) -> TensorExpr:
        return self.blocks.get((r, c), TensorExpr.zero())

    def map(self, fn: Callable[[TensorExpr], TensorExpr]) -> "TractorMatrix":
        out = {}
        for k, v in self.blocks.items():
            e = fn(v)
            if e.terms:
                out[k] = e
        return TractorMatrix(out, self.row_mid, self.col_mid,
                             self.scale_tag, self.label)

    def __sub__(self, other: "TractorMatrix") -> "TractorMatrix":
        out = dict(self.blocks)
        for k, v in other.blocks.items():
            out[k] = out.get(k, TensorExpr.zero()) - v
        return TractorMatrix(out, self.row_mid, self.col_mid, self.scale_tag,
                             f"{self.label}-{other.label}")

    def compare(self, other: "TractorMatrix", rs=None, cond="none") -> list[dict]:
        """Blockwise residual report; a block passes iff it simplifies to 0."""
        rs = rs or engine.default_rules()
        reports = []
        for r, c in itertools.product(SLOTS, SLOTS):
            residual = engine.simplify(self.block(r, c) - other.block(r, c),
                                       rs, cond=cond)
            ok = equals_zero(residual)
            reports.append({"block": r + c, "match": ok,
                            "residual": None if ok else pretty(residual)})
        return reports

    def text(self) -> str:
        rows = []
        for r in SLOTS:
            cells = [pretty(self.block(r, c)) or "0" for c in SLOTS]
            rows.append(cells)
        width = [max(len(rows[r][c]) for r in range(3)) for c in range(3)]
        lines = ["  ".join(cell.ljust(width[c]) for c, cell in enumerate(row))
                 for row in rows]
        return "\n".join(lines)

    def latex(self) -> str:
        from ..exprcore.printer import latex as _latex
        rows = [" & ".join(_latex(self.block(r, c)) or "0" for c in SLOTS)
                for r in SLOTS]
        return "\\begin{pmatrix}\n" + " \\\\\n".join(rows) + "\n\\end{pmatrix}"


def matrix_from_trac(T: TracExpr, degree: int = 0, label: str = "") -> TractorMatrix:
    """The log-degree ``degree`` part of a two-index tractor expression."""
    if len(T.indices) != 2:
        raise ValueError("expected two tractor indices")
    blocks = {}
    for k, v in T.comps.items():
        e = canonicalize(v.coeffs[degree])
        if e.terms:
            blocks[k] = e
    return TractorMatrix(blocks, T.indices[0].mid, T.indices[1].mid, label=label)


# ----------------------------------------------------------------------
# the composed operator

def compose_DDbar(symbol: str = "fw", w=W, wp=None, degree: int = 0) -> TracExpr:
    """D_A Dbar_B applied to a scalar of equal weights (w, w)."""
    f = TracExpr.scalar(LPoly.of(parse(symbol), degree), w=w,
                        wp=w if wp is None else wp)
    return tractor_D(tractor_Dbar(f, mid=COL_MID), mid=ROW_MID)


def compose_matrix(symbol: str = "fw") -> TractorMatrix:
    return matrix_from_trac(compose_DDbar(symbol), 0, "compose")


# ----------------------------------------------------------------------
# closed-form displays

class _Dummies:
    def __init__(self, prefix: str = "g"):
        self.prefix = prefix
        self.k = 0

    def h(self) -> str:
        self.k += 1
        return f"{self.prefix}{self.k}"

    def a(self) -> str:
        return self.h() + "b"


def _lap_t(core: str, d: _Dummies) -> list[str]:
    """The sublaplacian as a list of term strings (both derivative orders)."""
    a, b = d.h(), d.h()
    return [f"nabla[up.{a}](nabla[lo.{a}]({core}))",
            f"nabla[lo.{b}](nabla[up.{b}]({core}))"]


def _sum(terms: list[str]) -> TensorExpr:
    out = TensorExpr.zero()
    for t in terms:
        out = out + parse(t)
    return out


def _wrap(direction: str, terms: list[str]) -> list[str]:
    return [f"nabla[{direction}]({t})" for t in terms]


def _p0_sq(s: str, d: _Dummies) -> TensorExpr:
    """|trace-free Schouten|^2 times the scalar ``s``."""
    a1, b1, a2, b2 = d.h(), d.a(), d.h(), d.a()
    return (parse(f"hi[up.{a1}, up.{b1}]*hi[up.{a2}, up.{b2}]"
                  f"*P2[lo.{a1}, lo.{b2}]*P2[lo.{a2}, lo.{b1}]*{s}")
            - parse(f"Psc*Psc*{s}").scaled(1 / N))


def _p0_hess(s: str, d: _Dummies) -> TensorExpr:
    """Trace-free Schouten contracted into the mixed hessian of ``s``."""
    a1, b1, a2, b2 = d.h(), d.a(), d.h(), d.a()
    e = (parse(f"hi[up.{a1}, up.{b1}]*hi[up.{a2}, up.{b2}]*P2[lo.{a2}, lo.{b1}]"
               f"*nabla[lo.{a1}](nabla[lo.{b2}]({s}))"))
    a3, b3 = d.h(), d.a()
    return e - parse(f"Psc*hi[up.{a3}, up.{b3}]"
                     f"*nabla[lo.{a3}](nabla[lo.{b3}]({s}))").scaled(1 / N)


def _im(x: TensorExpr, xbar: TensorExpr) -> TensorExpr:
    return (x - xbar).times_i().scaled(-_HALF)


def _re(x: TensorExpr, xbar: TensorExpr) -> TensorExpr:
    return (x + xbar).scaled(_HALF)


def display_C_matrix(s: str = "fw") -> TractorMatrix:
    """The closed-form matrix of D_A Dbar_B on a scalar of weight (w, w)."""
    d = _Dummies()
    m2 = (N + 2 * W) * (N + 2 * W - 1)
    lap = _sum(_lap_t(s, d))
    b: dict = {}

    b["t", "t"] = parse(s).scaled(W * W * m2)
    b["t", "m"] = parse(f"nabla[lo.{COL_MID}]({s})").scaled(W * m2)
    b["t", "b"] = (lap - parse(f"i*nabla[z0]({s})").scaled(N + 2 * W)
                   + parse(f"Psc*{s}").scaled(2 * W)).scaled(-_HALF * W * (N + 2 * W - 1))

    b["m", "t"] = parse(f"nabla[lo.{ROW_MID}]({s})").scaled(W * m2)
    g = d.h()
    b["m", "m"] = (
        (parse(f"nabla[lo.{ROW_MID}](nabla[lo.{COL_MID}]({s}))")
         - parse(f"h[lo.{ROW_MID}, lo.{COL_MID}]"
                 f"*nabla[lo.{g}](nabla[up.{g}]({s}))").scaled(1 / N)).scaled(m2)
        + parse(f"P2[lo.{ROW_MID}, lo.{COL_MID}]*{s}").scaled(W * m2)
        + (_sum([f"h[lo.{ROW_MID}, lo.{COL_MID}]*{t}" for t in _lap_t(s, d)])
           - parse(f"h[lo.{ROW_MID}, lo.{COL_MID}]*Psc*{s}").scaled(N))
        .scaled(W * (N + 2 * W - 1) / N))
    e1, e2 = d.h(), d.h()
    b["m", "b"] = (
        (parse(f"nabla[lo.{ROW_MID}](nabla[lo.{e1}](nabla[up.{e1}]({s})))")
         + parse(f"i*A[lo.{ROW_MID}, lo.{e2}]*nabla[up.{e2}]({s})").scaled(N))
        .scaled(-m2 / N)
        + (_sum(_wrap(f"lo.{ROW_MID}", _lap_t(s, d))).scaled(1 / N)
           - parse(f"nabla[lo.{ROW_MID}](Psc*{s})")
           - parse(f"T[lo.{ROW_MID}]*{s}").scaled(N + 2 * W))
        .scaled(W * (N + 2 * W - 1)))

    b["b", "t"] = (_sum(_lap_t(s, d)) + parse(f"i*nabla[z0]({s})").scaled(N + 2 * W)
                   + parse(f"Psc*{s}").scaled(2 * W)).scaled(-_HALF * W * (N + 2 * W - 1))
    e3, e4 = d.a(), d.a()
    b["b", "m"] = (
        (parse(f"nabla[lo.{COL_MID}](nabla[lo.{e3}](nabla[up.{e3}]({s})))")
         - parse(f"i*Ab[lo.{COL_MID}, lo.{e4}]*nabla[up.{e4}]({s})").scaled(N))
        .scaled(-m2 / N)
        + (_sum(_wrap(f"lo.{COL_MID}", _lap_t(s, d))).scaled(1 / N)
           - parse(f"nabla[lo.{COL_MID}](Psc*{s})")
           - parse(f"Tb[lo.{COL_MID}]*{s}").scaled(N + 2 * W))
        .scaled(W * (N + 2 * W - 1)))

    g1, e5 = d.h(), d.h()
    g2, e6 = d.h(), d.h()
    t1 = (parse(f"nabla[up.{g1}](nabla[lo.{g1}](nabla[lo.{e5}](nabla[up.{e5}]({s}))))")
          + parse(f"i*nabla[up.{g2}](A[lo.{e6}, lo.{g2}]*nabla[up.{e6}]({s}))")
          .scaled(N)).scaled((N + 2 * W) ** 2 / N ** 2)
    t2 = _p0_hess(s, d).scaled(N + 2 * W)
    lap2 = [u for t in _lap_t(s, d) for u in _lap_t(t, d)]
    t3 = _sum(lap2).scaled(-W * (N + W) / N ** 2)
    g3, e7 = d.h(), d.h()
    g4, e8 = d.a(), d.a()
    t4 = _im(parse(f"nabla[up.{g3}](A[lo.{e7}, lo.{g3}]*nabla[up.{e7}]({s}))"),
             parse(f"nabla[up.{g4}](Ab[lo.{e8}, lo.{g4}]*nabla[up.{e8}]({s}))")
             ).scaled(2 * W * (N + 2 * W) / N)
    t5 = _sum([f"Psc*{t}" for t in _lap_t(s, d)]).scaled(-W * (N - 1 + 2 * W) / N)
    g5, g6 = d.h(), d.a()
    t6 = _re(parse(f"nabla[up.{g5}](Psc*nabla[lo.{g5}]({s}))"),
             parse(f"nabla[up.{g6}](Psc*nabla[lo.{g6}]({s}))")
             ).scaled(4 * W * (N + W) / N)
    g7, g8 = d.h(), d.h()
    g9, g10 = d.a(), d.a()
    t7 = _re(parse(f"nabla[up.{g7}](Psc)*nabla[lo.{g7}]({s})")
             + parse(f"T[up.{g8}]*nabla[lo.{g8}]({s})").scaled(N),
             parse(f"nabla[up.{g9}](Psc)*nabla[lo.{g9}]({s})")
             + parse(f"Tb[up.{g10}]*nabla[lo.{g10}]({s})").scaled(N)
             ).scaled(-2 * W * (N + 2 * W) / N)
    g11, g12 = d.h(), d.h()
    t8 = (parse(f"nabla[up.{g11}](nabla[lo.{g11}](Psc))*{s}")
          + parse(f"nabla[up.{g12}](T[lo.{g12}])*{s}").scaled(N)
          ).scaled(W * (N + 2 * W) / N)
    t9 = _p0_sq(s, d).scaled(W * (N + 2 * W))
    t10 = (parse(f"Psc*Psc*{s}").scaled(N + 2)
           - _sum([f"{t}*{s}" for t in _lap_t("Psc", d)])
           - parse(f"Ssc*{s}").scaled(N * (N + 2 * W))).scaled(W * W / N)
    b["b", "b"] = t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8 + t9 + t10

    return TractorMatrix({k: canonicalize(v) for k, v in b.items()},
                         label="display C")


def display_dbard_matrix(s: str = "ph") -> TractorMatrix:
    """D_A Dbar_B on an unweighted scalar: the trace-free hessian and the
    third-order one-form are the only surviving blocks (top row zero)."""
    d = _Dummies()
    b: dict = {}
    e1, e2 = d.h(), d.h()
    b["m", "b"] = (parse(f"nabla[lo.{ROW_MID}](nabla[lo.{e1}](nabla[up.{e1}]({s})))")
                   + parse(f"i*A[lo.{ROW_MID}, lo.{e2}]*nabla[up.{e2}]({s})")
                   .scaled(N)).scaled(-(N - 1))
    g = d.h()
    b["m", "m"] = (parse(f"nabla[lo.{ROW_MID}](nabla[lo.{COL_MID}]({s}))")
                   - parse(f"nabla[lo.{g}](nabla[up.{g}]({s}))"
                           f"*h[lo.{ROW_MID}, lo.{COL_MID}]").scaled(1 / N)
                   ).scaled(N * (N - 1))
    g1, e5, g2, e6 = d.h(), d.h(), d.h(), d.h()
    b["b", "b"] = (
        parse(f"nabla[up.{g1}](nabla[lo.{g1}](nabla[lo.{e5}](nabla[up.{e5}]({s}))))")
        + parse(f"i*nabla[up.{g2}](A[lo.{e6}, lo.{g2}]*nabla[up.{e6}]({s}))").scaled(N)
        + _p0_hess(s, d).scaled(N))
    e3, e4 = d.a(), d.a()
    b["b", "m"] = (parse(f"nabla[lo.{COL_MID}](nabla[lo.{e3}](nabla[up.{e3}]({s})))")
                   - parse(f"i*Ab[lo.{COL_MID}, lo.{e4}]*nabla[up.{e4}]({s})")
                   .scaled(N)).scaled(-(N - 1))
    return TractorMatrix({k: canonicalize(v) for k, v in b.items()},
                         label="display unweighted")


def display_K_matrix(s: str = "ph") -> TractorMatrix:
    """The closed form of the first log-commutator matrix on a scalar."""
    d = _Dummies()
    b: dict = {}
    ga, gb = d.h(), d.h()
    b["t", "m"] = parse(f"nabla[lo.{COL_MID}]({s})").scaled(-N * (N - 1))
    b["t", "b"] = parse(f"nabla[lo.{ga}](nabla[up.{ga}]({s}))").scaled(N - 1)
    b["m", "t"] = parse(f"nabla[lo.{ROW_MID}]({s})").scaled(-N * (N - 1))
    b["m", "m"] = (
        _sum([f"h[lo.{ROW_MID}, lo.{COL_MID}]*{t}" for t in _lap_t(s, d)])
        .scaled(-1 / N)
        - parse(f"{s}*P2[lo.{ROW_MID}, lo.{COL_MID}]").scaled(N)
        + parse(f"{s}*Psc*h[lo.{ROW_MID}, lo.{COL_MID}]")).scaled(N - 1)
    b["m", "b"] = (
        _sum(_wrap(f"lo.{ROW_MID}", _lap_t(s, d))).scaled(-1 / N)
        + parse(f"Psc*nabla[lo.{ROW_MID}]({s})")
        + parse(f"{s}*nabla[lo.{ROW_MID}](Psc)")
        + parse(f"{s}*T[lo.{ROW_MID}]").scaled(N)).scaled(N - 1)
    b["b", "t"] = parse(f"nabla[up.{gb}](nabla[lo.{gb}]({s}))").scaled(N - 1)
    b["b", "m"] = (
        _sum(_wrap(f"lo.{COL_MID}", _lap_t(s, d))).scaled(-1 / N)
        + parse(f"Psc*nabla[lo.{COL_MID}]({s})")
        + parse(f"{s}*nabla[lo.{COL_MID}](Psc)")
        + parse(f"{s}*Tb[lo.{COL_MID}]").scaled(N)).scaled(N - 1)

    lap2 = [u for t in _lap_t(s, d) for u in _lap_t(t, d)]
    g3, e7 = d.h(), d.h()
    g4, e8 = d.a(), d.a()
    g5, g6 = d.h(), d.a()
    g7, g8 = d.h(), d.h()
    g9, g10 = d.a(), d.a()
    g11, g12 = d.h(), d.h()
    b["b", "b"] = (
        _sum(lap2).scaled(1 / N)
        + _im(parse(f"nabla[up.{g3}](A[lo.{e7}, lo.{g3}]*nabla[up.{e7}]({s}))"),
              parse(f"nabla[up.{g4}](Ab[lo.{e8}, lo.{g4}]*nabla[up.{e8}]({s}))")
              ).scaled(-2)
        + _re(parse(f"nabla[up.{g5}](Psc*nabla[lo.{g5}]({s}))"),
              parse(f"nabla[up.{g6}](Psc*nabla[lo.{g6}]({s}))")).scaled(-4)
        + _sum([f"Psc*{t}" for t in _lap_t(s, d)]).scaled((N - 1) / N)
        + _re(parse(f"nabla[lo.{g7}](Psc)*nabla[up.{g7}]({s})")
              + parse(f"T[lo.{g8}]*nabla[up.{g8}]({s})").scaled(N),
              parse(f"nabla[lo.{g9}](Psc)*nabla[up.{g9}]({s})")
              + parse(f"Tb[lo.{g10}]*nabla[up.{g10}]({s})").scaled(N)).scaled(2)
        - _p0_sq(s, d).scaled(N)
        - parse(f"nabla[up.{g11}](nabla[lo.{g11}](Psc))*{s}")
        - parse(f"nabla[up.{g12}](T[lo.{g12}])*{s}").scaled(N))
    return TractorMatrix({k: canonicalize(v) for k, v in b.items()},
                         label="display K")


def display_I_matrix() -> TractorMatrix:
    """The closed form of the second log-commutator (constant) matrix."""
    d = _Dummies()
    b: dict = {}
    b["t", "t"] = parse("1").scaled(N * (N - 1))
    b["t", "b"] = parse("Psc").scaled(-(N - 1))
    b["m", "b"] = parse(f"nabla[lo.{ROW_MID}](Psc)").scaled(2 * (N - 1) / N)
    b["m", "m"] = parse(f"Psc*h[lo.{ROW_MID}, lo.{COL_MID}]").scaled(2 * (N - 1) / N)
    b["b", "b"] = (_sum(_lap_t("Psc", d)).scaled(-2 / N)
                   - parse("A[lo.a9, lo.g9]*A[up.a9, up.g9]")
                   + parse("Psc*Psc").scaled((N + 3) / N))
    b["b", "m"] = parse(f"nabla[lo.{COL_MID}](Psc)").scaled(2 * (N - 1) / N)
    b["b", "t"] = parse("Psc").scaled(-(N - 1))
    return TractorMatrix({k: canonicalize(v) for k, v in b.items()},
                         label="display I")


# ----------------------------------------------------------------------
# K and I: log-machinery route and coefficient-extraction route

def _w_coefficient(e: TensorExpr, order: int) -> TensorExpr:
    fact = sympy.factorial(order)
    out = []
    for m in e.terms:
        c = C.normalise(sympy.diff(m.coeff, C.w, order).subs(C.w, 0) / fact)
        if c != 0:
            out.append(Monomial(c, m.has_i, m.factors))
    return canonicalize(TensorExpr(out))


def _log_compose(poly: LPoly, symbol_w=0) -> TracExpr:
    T = TracExpr.scalar(poly, w=symbol_w, wp=symbol_w)
    return tractor_D(tractor_Dbar(T, mid=COL_MID), mid=ROW_MID)


def K_log_parts(symbol: str = "ph") -> tuple[TractorMatrix, ...]:
    """All log-degree parts of -D Dbar applied to (scalar times log)."""
    T = _log_compose(LPoly.of(parse(symbol), 1)).scaled(-1)
    return tuple(matrix_from_trac(T, j, f"K log^{j}") for j in range(3))


def I_log_parts() -> tuple[TractorMatrix, ...]:
    """All log-degree parts of (1/2) D Dbar applied to the squared log."""
    T = _log_compose(LPoly.of(parse("1"), 2)).scaled(_HALF)
    return tuple(matrix_from_trac(T, j, f"I log^{j}") for j in range(3))


def _strip_scalar(e: TensorExpr, symbol: str) -> Optional[TensorExpr]:
    """Remove a derivative-free occurrence of ``symbol``; None if it
    carries derivatives (the term annihilates the constant function)."""
    out = []
    for m in e.terms:
        kept = []
        ok = True
        for f in m.factors:
            if f.symbol == symbol:
                if f.derivs:
                    ok = False
                    break
                continue
            kept.append(f)
        if ok:
            out.append(Monomial(m.coeff, m.has_i, tuple(kept)))
    return canonicalize(TensorExpr(out))


def K_matrix(symbol: str = "ph", route: str = "log") -> TractorMatrix:
    """First log-commutator matrix: minus the linear-in-weight coefficient."""
    if route == "log":
        return K_log_parts(symbol)[0]
    if route != "coefficient":
        raise ValueError("route must be 'log' or 'coefficient'")
    M = compose_matrix("fw")
    return M.map(lambda e: rename_symbol(_w_coefficient(e, 1).scaled(-1),
                                         "fw", symbol))


def I_matrix(route: str = "log") -> TractorMatrix:
    """Second log-commutator matrix: the quadratic-in-weight coefficient.

    ``route='nested'`` evaluates the two commutators with the log one at a
    time instead of expanding the squared log directly.
    """
    if route == "log":
        return I_log_parts()[0]
    if route == "nested":
        # [P, L](L^j) evaluated on 1 and on L, then commuted once more
        P0 = _log_compose(LPoly.of(parse("1"), 0))
        P1 = _log_compose(LPoly.of(parse("1"), 1))
        P2v = _log_compose(LPoly.of(parse("1"), 2))
        lift = lambda T: T.map(lambda e: e)  # copy
        shift_up = lambda T: TracExpr(T.indices, T.w, T.wp, {
            k: LPoly(TensorExpr.zero(), v.c0, v.c1) for k, v in T.comps.items()})
        inner_on_1 = P1 - shift_up(lift(P0))
        inner_on_L = P2v - shift_up(lift(P1))
        outer = inner_on_L - shift_up(inner_on_1)
        return matrix_from_trac(outer.scaled(_HALF), 0, "I nested")
    if route != "coefficient":
        raise ValueError("route must be 'log', 'nested' or 'coefficient'")
    M = compose_matrix("fw")
    return M.map(lambda e: _strip_scalar(_w_coefficient(e, 2), "fw"))


# ----------------------------------------------------------------------
# transformation laws under a change of contact form

def _hat_degree0(T: TracExpr) -> TractorMatrix:
    """Degree-0 part in the *rescaled* formal log.

    The rescaled log differs from the working one by the scale change, so
    the constant term in the new variable resums the old parts against
    powers of the scale change.
    """
    u1, u2 = parse("Upsilon"), parse("Upsilon*Upsilon")
    blocks = {}
    for k, v in T.comps.items():
        e = canonicalize(v.c0 + u1 * v.c1 + u2 * v.c2)
        if e.terms:
            blocks[k] = e
    return TractorMatrix(blocks, T.indices[0].mid, T.indices[1].mid,
                         scale_tag="rescaled:theta")


def K_transformation_residuals(symbol: str = "ph") -> TractorMatrix:
    """Residual of: K in the rescaled scale equals K plus D Dbar of the
    scale change times the argument (argument pluriharmonic)."""
    s = parse(symbol)
    hat_arg = LPoly(parse(f"Upsilon*{symbol}").scaled(-1), s, TensorExpr.zero())
    K_hat = _hat_degree0(_log_compose(hat_arg).scaled(-1))
    correction = matrix_from_trac(
        _log_compose(LPoly.of(parse(f"Upsilon*{symbol}"))), 0)
    return K_hat - K_matrix(symbol, "log") - correction


def I_transformation_residuals() -> TractorMatrix:
    """Residual of: I in the rescaled scale equals I plus K of the scale
    change plus half of D Dbar of its square (scale change pluriharmonic,
    base scale pseudo-Einstein)."""
    hat_arg = LPoly(parse("Upsilon*Upsilon").scaled(_HALF),
                    parse("Upsilon").scaled(-1), parse("1").scaled(_HALF))
    I_hat = _hat_degree0(_log_compose(hat_arg))
    half_sq = matrix_from_trac(
        _log_compose(LPoly.of(parse("Upsilon*Upsilon"))), 0).map(
        lambda e: e.scaled(_HALF))
    return I_hat - I_matrix("log") - K_matrix("Upsilon", "log") - half_sq


# ----------------------------------------------------------------------
# distinguished scales

def holomorphic_scale_residuals(rs=None) -> dict:
    """Components of Dbar-direction derivative of D applied to the scale
    density, reduced under the trace condition and the scale rules."""
    rs = install_conditions(rs)
    Ds = tractor_D(TracExpr.scalar(parse("sigma"), w=1, wp=0), mid=ROW_MID)
    dd = apply_dir(Ds, ("a", "e9b")).canonical()
    out = {}
    for k in dd.comps:
        out[k] = engine.simplify(dd.get(k).c0, rs,
                                 cond=("pseudoEinstein", "holomorphicScale"))
    return out


def parallel_scale_residuals(rs=None) -> dict:
    """All first derivatives of D applied to the scale density under the
    torsion-free trace condition: the section is parallel."""
    rs = install_conditions(rs)
    Ds = tractor_D(TracExpr.scalar(parse("sigma"), w=1, wp=0), mid=ROW_MID)
    out = {}
    for direction in (("h", "e8"), ("a", "e9b"), ("0",)):
        dd = apply_dir(Ds, direction).canonical()
        for k in dd.comps:
            out[(direction[0],) + k] = engine.simplify(
                dd.get(k).c0, rs, cond=("einstein", "einsteinScale"))
    return out
