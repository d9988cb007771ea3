"""Noncommutative operator algebra over the homogeneous cone.

Words are finite sequences of generators acting on homogeneous tensor
fields: the defining function ``r``, the tautological field ``Z`` (any
slot variance), the parallel Hermitian form ``H``, the curvature
endomorphism ``R#`` (optionally decorated with covariant derivatives),
the covariant derivative ``nab`` and the Laplacian ``Delta``.  The two
grading operators never appear as word letters: every coefficient is a
polynomial in ``n`` and the eigenvalue symbols ``E``, ``Eb`` *of the
operand*, which makes coefficients central.  A prefactor written to the
left of a subword is converted with :func:`attach_left`, which shifts the
eigenvalue arguments by the homogeneity of that subword.

Relations are exact except where curvature divergences or same-type
derivative commutators enter; those are tracked as an ``O(r^(n+c))``
error offset ``c`` carried by every polynomial (``None`` means exact).
Normal ordering moves ``r`` letters leftmost, then ``Z``/``H``, then
curvature endomorphisms, then derivatives, then Laplacian powers, and
never reorders two derivatives of the same type (their commutator is
pure error) nor two curvature letters (no relation exists).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import sympy

N = sympy.Symbol("n")
E = sympy.Symbol("E")
EB = sympy.Symbol("Eb")

_FRESH = itertools.count()


def fresh_dummy() -> str:
    return f"x{next(_FRESH)}"


class UnreducibleWord(Exception):
    """A word pattern with no registered relation was encountered."""


class BudgetExceeded(Exception):
    """The word-count ceiling was hit during normal ordering."""


@dataclass(frozen=True)
class Idx:
    """Index decoration: display class 'h'/'a' plus a raised flag.

    A raised index is the metric contraction with the opposite class, so
    the *nature* (which relations care about) flips under raising.
    """

    name: str
    cls: str
    up: bool = False

    @property
    def nature(self) -> str:
        if not self.up:
            return self.cls
        return "a" if self.cls == "h" else "h"

    def rename(self, name: str) -> "Idx":
        return Idx(name, self.cls, self.up)

    def pretty(self) -> str:
        bar = "b" if self.cls == "a" else ""
        return ("up." if self.up else "lo.") + self.name + bar


@dataclass(frozen=True)
class AGen:
    """One word letter.  ``derivs`` only decorates curvature letters:
    entries are ``("D",)`` (a Laplacian) or ``("n", Idx)`` (a covariant
    derivative), outermost first."""

    kind: str
    idx: tuple = ()
    derivs: tuple = ()

    def all_indices(self):
        for i in self.idx:
            yield i
        for d in self.derivs:
            if d[0] == "n":
                yield d[1]

    def map_names(self, ren) -> "AGen":
        idx = tuple(i.rename(ren.get(i.name, i.name)) for i in self.idx)
        derivs = tuple(d if d[0] != "n" else
                       ("n", d[1].rename(ren.get(d[1].name, d[1].name)))
                       for d in self.derivs)
        return AGen(self.kind, idx, derivs)

    def pretty(self) -> str:
        if self.kind in ("Delta", "r"):
            return self.kind
        body = ", ".join(i.pretty() for i in self.idx)
        base = f"{self.kind}[{body}]"
        for d in reversed(self.derivs):
            base = ("Delta(" + base + ")" if d[0] == "D"
                    else f"nab[{d[1].pretty()}](" + base + ")")
        return base


DELTA = AGen("Delta")
RDEF = AGen("r")


def Zg(i: Idx) -> AGen:
    return AGen("Z", (i,))


def nab(i: Idx) -> AGen:
    return AGen("nab", (i,))


def Hg(i: Idx, j: Idx) -> AGen:
    if i.nature != "h" or j.nature != "a":
        raise ValueError("H wants an h-nature then an a-nature slot")
    return AGen("H", (i, j))


def Rg(i: Idx, j: Idx, derivs: tuple = ()) -> AGen:
    if i.nature != "h" or j.nature != "a":
        raise ValueError("R wants an h-nature then an a-nature form slot")
    return AGen("R", (i, j), derivs)


# ---------------------------------------------------------------------------
# homogeneity bookkeeping

def gen_shift(g: AGen):
    if g.kind == "Z":
        return (0, 1) if g.idx[0].nature == "h" else (1, 0)
    if g.kind == "nab":
        return (-1, 0) if g.idx[0].nature == "h" else (0, -1)
    if g.kind == "Delta":
        return (-1, -1)
    if g.kind == "r":
        return (1, 1)
    if g.kind == "H":
        return (0, 0)
    if g.kind == "R":
        se, sb = -1, -1
        for d in g.derivs:
            if d[0] == "D":
                se, sb = se - 1, sb - 1
            elif d[1].nature == "h":
                se -= 1
            else:
                sb -= 1
        return (se, sb)
    raise ValueError(f"unknown generator kind {g.kind!r}")


def word_shift(word):
    se = sb = 0
    for g in word:
        ds, db = gen_shift(g)
        se, sb = se + ds, sb + db
    return (se, sb)


def attach_left(coeff, word):
    """Rewrite a prefactor standing left of ``word`` in right-convention."""
    se, sb = word_shift(word)
    if se == 0 and sb == 0:
        return sympy.sympify(coeff)
    return sympy.sympify(coeff).subs({E: E + se, EB: EB + sb},
                                     simultaneous=True)


def drop_count(word) -> int:
    """Number of letters that each cost one power of ``r`` when commuted
    through an error term (derivatives and Laplacians)."""
    return sum(1 for g in word if g.kind in ("nab", "Delta"))


# ---------------------------------------------------------------------------
# canonical form of a word: rename dummies by first appearance

def _index_census(word):
    order, count = [], {}
    for g in word:
        for i in g.all_indices():
            if i.name not in count:
                order.append(i.name)
            count[i.name] = count.get(i.name, 0) + 1
    return order, count


def canon_word(word):
    order, count = _index_census(word)
    ren, j = {}, 0
    for nm in order:
        if count[nm] == 2:
            ren[nm] = f"q{j}"
            j += 1
        elif count[nm] > 2:
            raise ValueError(f"index {nm!r} appears {count[nm]} times")
    if not ren:
        return word
    return tuple(g.map_names(ren) for g in word)


def rename_dummies_fresh(word):
    _, count = _index_census(word)
    ren = {nm: fresh_dummy() for nm, c in count.items() if c == 2}
    if not ren:
        return word
    return tuple(g.map_names(ren) for g in word)


def free_names(word):
    _, count = _index_census(word)
    return {nm for nm, c in count.items() if c == 1}


def min_err(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# ---------------------------------------------------------------------------
# polynomials

class OperatorPoly:
    """Finite sum of coefficiented words plus an error offset ``err``:
    the polynomial is asserted modulo ``O(r^(n+err))`` (``None``: exact)."""

    __slots__ = ("terms", "err")

    def __init__(self, terms=None, err: Optional[int] = None):
        self.terms = dict(terms or {})
        self.err = err

    @staticmethod
    def from_word(word, coeff=1, err=None) -> "OperatorPoly":
        return OperatorPoly({tuple(word): sympy.sympify(coeff)}, err)

    @staticmethod
    def scalar(coeff) -> "OperatorPoly":
        return OperatorPoly({(): sympy.sympify(coeff)})

    @staticmethod
    def zero() -> "OperatorPoly":
        return OperatorPoly()

    def copy(self) -> "OperatorPoly":
        return OperatorPoly(dict(self.terms), self.err)

    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return OperatorPoly(out, min_err(self.err, other.err))

    def scaled(self, c) -> "OperatorPoly":
        c = sympy.sympify(c)
        return OperatorPoly({w: v * c for w, v in self.terms.items()}, self.err)

    def __sub__(self, other: "OperatorPoly") -> "OperatorPoly":
        return self + other.scaled(-1)

    def __mul__(self, other: "OperatorPoly") -> "OperatorPoly":
        out: dict = {}
        for wl, cl in self.terms.items():
            for wr, cr in other.terms.items():
                wl2 = wl
                if free_names(wl) or free_names(wr):
                    # avoid accidental capture between the factors
                    _, cr_count = _index_census(wr)
                    if any(nm in cr_count for nm in
                           _index_census(wl)[1]):
                        wl2 = rename_dummies_fresh(wl)
                w = wl2 + wr
                c = attach_left(cl, wr) * cr
                out[w] = out.get(w, 0) + c
        err = self.err
        if other.err is not None:
            worst = max((drop_count(w) for w in self.terms), default=0)
            err = min_err(err, other.err - worst)
        return OperatorPoly(out, err)

    def subs_weights(self, w, wp) -> "OperatorPoly":
        sub = {E: sympy.sympify(w), EB: sympy.sympify(wp)}
        return OperatorPoly(
            {word: sympy.expand(c.subs(sub)) for word, c in self.terms.items()},
            self.err)

    def subs_n(self, value) -> "OperatorPoly":
        return OperatorPoly(
            {word: sympy.expand(c.subs(N, value))
             for word, c in self.terms.items()}, self.err)

    def collected(self) -> "OperatorPoly":
        out: dict = {}
        for w, c in self.terms.items():
            cw = canon_word(w)
            out[cw] = sympy.expand(out.get(cw, 0) + c)
        return OperatorPoly({w: c for w, c in out.items() if c != 0}, self.err)

    def word_count(self) -> int:
        return len(self.terms)

    def pretty(self) -> str:
        if not self.terms:
            body = "0"
        else:
            parts = []
            for w, c in sorted(self.terms.items(), key=lambda t: str(t[0])):
                lead = "*".join(g.pretty() for g in w) or "1"
                parts.append(f"({sympy.sstr(c)})*{lead}")
            body = " + ".join(parts)
        if self.err is not None:
            body += f" + O(r^(n{self.err:+d}))" if self.err else " + O(r^n)"
        return body


def product(*polys: OperatorPoly) -> OperatorPoly:
    out = OperatorPoly.scalar(1)
    for p in polys:
        out = out * p
    return out


# ---------------------------------------------------------------------------
# relation table

RANK = {"r": 0, "Z": 1, "H": 1, "R": 2, "nab": 3, "Delta": 4}


@dataclass(frozen=True)
class Relation:
    """One table entry: a two-letter pattern and its reordered form.

    ``pattern`` names the (left kind, right kind) pair; ``natures``
    restricts the derivative natures where relevant.  ``exact`` entries
    carry no error; otherwise ``err`` is the offset of the discarded
    remainder *before* accounting for letters standing left of the pair.
    """

    name: str
    pattern: tuple
    natures: tuple = ()
    err: Optional[int] = None


RELATIONS = (
    Relation("swap-mult-r", ("Z", "r")),
    Relation("swap-mult-r2", ("H", "r")),
    Relation("swap-mult-r3", ("R", "r")),
    Relation("grad-of-r", ("nab", "r")),
    Relation("laplacian-of-r", ("Delta", "r")),
    Relation("deriv-past-Z-same", ("nab", "Z"), ("h", "h")),
    Relation("deriv-past-Z-mixed", ("nab", "Z"), ("h", "a")),
    Relation("deriv-past-H", ("nab", "H")),
    Relation("deriv-past-curv", ("nab", "R")),
    Relation("laplacian-past-Z", ("Delta", "Z")),
    Relation("laplacian-past-H", ("Delta", "H")),
    Relation("laplacian-past-curv", ("Delta", "R")),
    Relation("laplacian-past-deriv-h", ("Delta", "nab"), ("h",), err=-1),
    Relation("laplacian-past-deriv-a", ("Delta", "nab"), ("a",), err=-1),
    Relation("deriv-exchange", ("nab", "nab"), ("a", "h")),
    Relation("curv-past-Z", ("R", "Z")),
)


def _rewrite_pair(w, p, c, context):
    """Rewrite the inversion at position ``p``.  Returns a list of
    (word, coeff) replacements plus an error-offset candidate or None."""
    x, y = w[p], w[p + 1]
    pre, suf = w[:p], w[p + 2:]
    swap = pre + (y, x) + suf
    out = [(swap, c)]
    err = None
    kx, ky = x.kind, y.kind

    if ky == "r":
        if kx == "nab":
            out.append((pre + (Zg(x.idx[0]),) + suf, c))
        elif kx == "Delta":
            phi = attach_left(N + E + EB + 2, suf)
            out.append((pre + suf, c * phi))
        # Z, H, R: plain swap
    elif kx == "nab" and ky == "Z":
        ix, iy = x.idx[0], y.idx[0]
        if ix.nature != iy.nature:
            hij = Hg(ix, iy) if ix.nature == "h" else Hg(iy, ix)
            out.append((pre + (hij,) + suf, c))
    elif kx == "nab" and ky == "R":
        out.append((pre + (AGen("R", y.idx, (("n", x.idx[0]),) + y.derivs),)
                    + suf, c))
    elif kx == "Delta" and ky == "Z":
        out.append((pre + (nab(y.idx[0]),) + suf, c))
    elif kx == "Delta" and ky == "R":
        out.append((pre + (AGen("R", y.idx, (("D",),) + y.derivs),) + suf, c))
        for up_first in (True, False):
            d = fresh_dummy()
            rg = AGen("R", y.idx,
                      (("n", Idx(d, "h", up_first)),) + y.derivs)
            out.append((pre + (rg, nab(Idx(d, "h", not up_first))) + suf, c))
    elif kx == "Delta" and ky == "nab":
        i = y.idx[0]
        d, d2 = fresh_dummy(), fresh_dummy()
        if i.nature == "h":
            out.append((pre + (Rg(i, Idx(d, "h", True)),
                               nab(Idx(d, "h", False))) + suf, -c))
            out.append((pre + (Rg(i, Idx(d2, "h", True),
                                  (("n", Idx(d2, "h", False)),)),) + suf, -c))
        else:
            out.append((pre + (Rg(Idx(d, "h", False), i),
                               nab(Idx(d, "h", True))) + suf, c))
        # discarded same-type derivative commutator: pure error
        if context == "tensor" or any(g.kind == "nab" for g in suf):
            err = -1 - drop_count(pre)
    elif kx == "nab" and ky == "nab":
        # only mixed natures are exchanged: a-left-of-h becomes h-left
        out.append((pre + (Rg(y.idx[0], x.idx[0]),) + suf, -c))
    elif kx == "R" and ky == "Z":
        if y.idx[0].name in {i.name for i in x.idx}:
            # tautological field contracted into a curvature slot: zero
            return ([], None) if not x.derivs else (None, None)
        if x.derivs:
            return None, None  # no relation for derived curvature past Z
        # Kahler symmetry: contraction of Z into any curvature slot
        # vanishes, so the endomorphism acts trivially on the Z letter.
    else:
        return None, None
    return out, err


def _inversion_at(w, p):
    x, y = w[p], w[p + 1]
    rx, ry = RANK[x.kind], RANK[y.kind]
    if rx > ry:
        return True
    if rx != ry:
        return False
    if x.kind == "nab":
        return x.idx[0].nature == "a" and y.idx[0].nature == "h"
    if x.kind in ("Z", "H"):
        kx = (0 if x.kind == "Z" else 1, tuple((i.name, i.cls, i.up)
                                               for i in x.idx))
        ky = (0 if y.kind == "Z" else 1, tuple((i.name, i.cls, i.up)
                                               for i in y.idx))
        return kx > ky
    return False


# ---------------------------------------------------------------------------
# structural cleanups

def _resolve_kronecker(w):
    """An H letter with a raised slot is a Kronecker delta: contract it."""
    for p, g in enumerate(w):
        if g.kind != "H":
            continue
        i, j = g.idx
        if i.up and j.up:
            raise UnreducibleWord("doubly raised Hermitian form "
                                  + " ".join(x.pretty() for x in w))
        if i.name == j.name:           # full trace of the form
            return w[:p] + w[p + 1:], N + 2
        up = i if i.up else (j if j.up else None)
        if up is None:
            continue
        other = j if up is i else i
        _, count = _index_census(w)
        if count.get(up.name, 0) == 2:
            ren = {up.name: other.name}
            rest = tuple(x if q == p else x.map_names(ren)
                         for q, x in enumerate(w) if q != p)
            return rest, sympy.Integer(1)
    return None


def _curvature_Z_kill(w):
    """A Z letter contracted into an underived curvature slot kills the
    word once only multiplication letters stand between the two."""
    mult = {"r", "Z", "H", "R"}
    for p, g in enumerate(w):
        if g.kind != "R":
            continue
        slot_names_ = {i.name for i in g.idx}
        for q, g2 in enumerate(w):
            if g2.kind != "Z" or g2.idx[0].name not in slot_names_:
                continue
            lo, hi = sorted((p, q))
            if all(w[t].kind in mult for t in range(lo + 1, hi)):
                if g.derivs:
                    raise UnreducibleWord(
                        "tautological field against a differentiated "
                        "curvature slot: " + " ".join(x.pretty() for x in w))
                return True
    return False


def _bianchi_offset(g: AGen) -> Optional[int]:
    """A derivative decoration contracted against the letter's own form
    slot is a curvature divergence, hence pure error."""
    if g.kind != "R" or not g.derivs:
        return None
    slots = {i.name for i in g.idx}
    contracted = any(d[0] == "n" and d[1].name in slots for d in g.derivs)
    if not contracted:
        return None
    return -1 - (len(g.derivs) - 1)


def _function_drop(w, context):
    """Index counting for the curvature endomorphisms acting on an
    operand with no indices.  Returns ("kill", None), ("err", offset) or
    None (keep)."""
    if context != "function":
        # only curvature divergences are errors in the tensor setting
        for g in w:
            off = _bianchi_offset(g)
            if off is not None:
                return "err", off
        return None
    for p in range(len(w) - 1, -1, -1):
        g = w[p]
        if g.kind != "R":
            continue
        suf = w[p + 1:]
        # indices the operand of this endomorphism carries
        created = []
        seen: dict = {}
        for g2 in suf:
            if g2.kind == "nab":
                nm = g2.idx[0].name
                seen[nm] = seen.get(nm, 0) + 1
        created = [nm for nm, cnt in seen.items() if cnt == 1]
        if not created:
            return "kill", None
        if len(created) == 1:
            if created[0] in {i.name for i in g.idx}:
                # trace of the curvature: Ricci-type, pure error
                return "err", -len(g.derivs)
        off = _bianchi_offset(g)
        if off is not None:
            return "err", off
    for g in w:
        off = _bianchi_offset(g)
        if off is not None:
            return "err", off
    return None


# ---------------------------------------------------------------------------
# the normal-ordering driver

def normal_order(p: OperatorPoly, context: str = "tensor",
                 homogeneous=None, target: str = "default",
                 max_words: int = 400_000) -> OperatorPoly:
    """Rewrite to the canonical letter order, tracking the error offset.

    ``context`` is ``"tensor"`` or ``"function"``; ``homogeneous`` may
    give a pair ``(w, wp)`` substituted for the eigenvalue symbols at
    the end.  Raises :class:`UnreducibleWord` when a pattern without a
    relation appears and :class:`BudgetExceeded` past ``max_words``.
    """
    if target != "default":
        raise ValueError(f"unsupported target order {target!r}")
    if context not in ("tensor", "function"):
        raise ValueError(f"unknown context {context!r}")
    err = p.err
    work = [(w, c) for w, c in p.terms.items()]
    done: dict = {}
    steps = 0
    while work:
        w, c = work.pop()
        steps += 1
        if steps > max_words:
            raise BudgetExceeded(f"normal ordering exceeded {max_words} steps")
        kr = _resolve_kronecker(w)
        if kr is not None:
            w2, factor = kr
            work.append((w2, c * factor))
            continue
        if _curvature_Z_kill(w):
            continue
        pos = next((q for q in range(len(w) - 1) if _inversion_at(w, q)), None)
        if pos is None:
            verdict = _function_drop(w, context)
            if verdict is not None:
                what, off = verdict
                if what == "err":
                    # letters left of curvature are multiplications here,
                    # so the offset needs no prefix adjustment
                    err = min_err(err, off)
                continue
            cw = canon_word(w)
            done[cw] = done.get(cw, 0) + c
            continue
        repl, cand = _rewrite_pair(w, pos, c, context)
        if repl is None:
            raise UnreducibleWord("no relation for "
                                  + " ".join(x.pretty() for x in w)
                                  + f" at position {pos}")
        if cand is not None:
            err = min_err(err, cand)
        work.extend(repl)
    out = OperatorPoly({w: sympy.expand(c) for w, c in done.items()}, err)
    out = OperatorPoly({w: c for w, c in out.terms.items() if c != 0}, err)
    if homogeneous is not None:
        out = out.subs_weights(*homogeneous)
    return out


def relation_weight_residual(rel: Relation):
    """Homogeneity balance of one table entry, as (dE, dEb) mismatches of
    each replacement term against the rewritten pair (all must be 0)."""
    samples = _relation_samples(rel)
    residuals = []
    for pair in samples:
        base = word_shift(pair)
        repl, _ = _rewrite_pair(pair, 0, sympy.Integer(1), "tensor")
        for w2, _c in repl:
            s = word_shift(w2)
            residuals.append((s[0] - base[0], s[1] - base[1]))
    return residuals


def _relation_samples(rel: Relation):
    mk = {
        "r": lambda nat: RDEF,
        "Z": lambda nat: Zg(Idx("sz", "h" if nat == "h" else "a")),
        "H": lambda nat: Hg(Idx("sh", "h"), Idx("sk", "a")),
        "R": lambda nat: Rg(Idx("sr", "h"), Idx("ss", "a")),
        "nab": lambda nat: nab(Idx("sn", "h" if nat == "h" else "a")),
        "Delta": lambda nat: DELTA,
    }
    kx, ky = rel.pattern
    nats = rel.natures or ("h", "h")
    nx = nats[0]
    ny = nats[1] if len(nats) > 1 else "a"
    return [(mk[kx](nx), mk[ky](ny))]


def relation_roundtrip(rel: Relation):
    """Apply a table entry then re-assemble the original pair; the
    difference must cancel exactly (the correction terms subtract off)."""
    (pair,) = _relation_samples(rel)
    repl, _ = _rewrite_pair(pair, 0, sympy.Integer(1), "tensor")
    total = OperatorPoly.zero()
    for w2, c2 in repl:
        total = total + OperatorPoly.from_word(w2, c2)
    # reverse application: replace the swapped pair by the original one
    # minus all correction terms
    back = OperatorPoly.zero()
    swapped = (pair[1], pair[0])
    for w2, c2 in total.terms.items():
        if w2 == swapped:
            back = back + OperatorPoly.from_word(pair, c2)
            for w3, c3 in repl:
                if w3 != swapped:
                    back = back + OperatorPoly.from_word(w3, -c2 * c3)
        else:
            back = back + OperatorPoly.from_word(w2, c2)
    return (back - OperatorPoly.from_word(pair)).collected()
