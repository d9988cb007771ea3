"""Componentwise calculus for standard tractors in a chosen scale.

A tractor index decomposes, once a contact form is fixed, into three
slots (top, middle, bottom); the middle slot carries an extra tangential
index.  Multi-index objects are stored as a mapping from slot words to
componentwise tensor expressions.  Values may carry formal powers of the
logarithm of the scale, which the derivative operators annihilate in the
scale itself; only the weight operators see it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import sympy

from ..exprcore import coeff as C
from ..exprcore.canon import canonicalize, equals_zero
from ..exprcore.core import AHOL, HOL, Index, TensorExpr, fresh_name

SLOTS = ("t", "m", "b")

#: density weight carried by each slot, relative to the tractor weight
SLOT_OFFSET = {
    ("co", "t"): (1, 0),
    ("co", "m"): (1, 0),
    ("co", "b"): (0, -1),
    ("cobar", "t"): (0, 1),
    ("cobar", "m"): (0, 1),
    ("cobar", "b"): (-1, 0),
}


class TracIndex(NamedTuple):
    kind: str  # "co" | "cobar"
    mid: str   # free index name used by the middle slot


def mid_index(ix: TracIndex) -> Index:
    return Index(ix.mid, HOL if ix.kind == "co" else AHOL)


@dataclass(frozen=True)
class LPoly:
    """Polynomial of degree <= 2 in the formal log of the scale."""

    c0: TensorExpr
    c1: TensorExpr
    c2: TensorExpr

    @staticmethod
    def zero() -> "LPoly":
        z = TensorExpr.zero()
        return LPoly(z, z, z)

    @staticmethod
    def of(e: TensorExpr, degree: int = 0) -> "LPoly":
        parts = [TensorExpr.zero()] * 3
        parts[degree] = e
        return LPoly(*parts)

    @property
    def coeffs(self) -> tuple[TensorExpr, TensorExpr, TensorExpr]:
        return (self.c0, self.c1, self.c2)

    def map(self, fn: Callable[[TensorExpr], TensorExpr]) -> "LPoly":
        return LPoly(fn(self.c0), fn(self.c1), fn(self.c2))

    def __add__(self, other: "LPoly") -> "LPoly":
        return LPoly(self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other: "LPoly") -> "LPoly":
        return self + other.scaled(-1)

    def scaled(self, c) -> "LPoly":
        return self.map(lambda e: e.scaled(c))

    def times_i(self) -> "LPoly":
        return self.map(lambda e: e.times_i())

    def mul(self, g: TensorExpr) -> "LPoly":
        """Left-multiply every coefficient by a log-free expression."""
        return self.map(lambda e: g * e)

    def shift_down(self) -> "LPoly":
        """d/dL: the commutator of the weight operators with the log."""
        return LPoly(self.c1, self.c2.scaled(2), TensorExpr.zero())

    def is_zero(self) -> bool:
        return all(equals_zero(e) for e in self.coeffs)

    def canonical(self) -> "LPoly":
        return self.map(canonicalize)


class TracExpr:
    """A tractor-valued expression of homogeneous weight, in components."""

    __slots__ = ("indices", "w", "wp", "comps")

    def __init__(self, indices, w, wp, comps: Optional[dict] = None):
        self.indices = tuple(indices)
        self.w = sympy.sympify(w)
        self.wp = sympy.sympify(wp)
        self.comps: dict[tuple[str, ...], LPoly] = dict(comps or {})

    # -- construction --------------------------------------------------
    @staticmethod
    def scalar(value, w=0, wp=0, degree: int = 0) -> "TracExpr":
        if isinstance(value, TensorExpr):
            value = LPoly.of(value, degree)
        return TracExpr((), w, wp, {(): value})

    def copy(self) -> "TracExpr":
        return TracExpr(self.indices, self.w, self.wp, dict(self.comps))

    # -- access --------------------------------------------------------
    def get(self, key) -> LPoly:
        return self.comps.get(tuple(key), LPoly.zero())

    def add_to(self, key, value: LPoly) -> None:
        key = tuple(key)
        self.comps[key] = self.comps.get(key, LPoly.zero()) + value

    def keys(self):
        from itertools import product
        return product(SLOTS, repeat=len(self.indices))

    # -- algebra -------------------------------------------------------
    def map(self, fn: Callable[[TensorExpr], TensorExpr], w=None, wp=None) -> "TracExpr":
        return TracExpr(self.indices,
                        self.w if w is None else w,
                        self.wp if wp is None else wp,
                        {k: v.map(fn) for k, v in self.comps.items()})

    def __add__(self, other: "TracExpr") -> "TracExpr":
        if self.indices != other.indices:
            raise ValueError("tractor index mismatch in sum")
        out = self.copy()
        for k, v in other.comps.items():
            out.add_to(k, v)
        return out

    def __sub__(self, other: "TracExpr") -> "TracExpr":
        return self + other.scaled(-1)

    def scaled(self, c) -> "TracExpr":
        return self.map(lambda e: e.scaled(c))

    def times_i(self) -> "TracExpr":
        return self.map(lambda e: e.times_i())

    def mul(self, g: TensorExpr, dw=0, dwp=0) -> "TracExpr":
        """Multiply componentwise by a log-free scalar expression."""
        return TracExpr(self.indices, self.w + dw, self.wp + dwp,
                        {k: v.mul(g) for k, v in self.comps.items()})

    def canonical(self) -> "TracExpr":
        out = {}
        for k, v in self.comps.items():
            cv = v.canonical()
            if not all(len(e.terms) == 0 for e in cv.coeffs):
                out[k] = cv
        return TracExpr(self.indices, self.w, self.wp, out)

    # -- weight operators ---------------------------------------------
    def weight_op(self, which: str) -> "TracExpr":
        """The weight derivation: tracked weight plus the log shift."""
        w0 = self.w if which == "w" else self.wp
        out = TracExpr(self.indices, self.w, self.wp)
        for k, v in self.comps.items():
            out.add_to(k, v.scaled(w0) + v.shift_down())
        return out

    # -- checks --------------------------------------------------------
    def validate_weights(self) -> None:
        """Each monomial's density weight must match slot offsets exactly."""
        for k, v in self.comps.items():
            dw = sum(SLOT_OFFSET[(ix.kind, s)][0] for ix, s in zip(self.indices, k))
            dwp = sum(SLOT_OFFSET[(ix.kind, s)][1] for ix, s in zip(self.indices, k))
            for e in v.coeffs:
                for m in e.terms:
                    got = m.weight()
                    want = (self.w + dw, self.wp + dwp)
                    if sympy.simplify(got[0] - want[0]) != 0 or \
                       sympy.simplify(got[1] - want[1]) != 0:
                        raise ValueError(
                            f"weight mismatch at {k}: {got} != {want}")


@dataclass(frozen=True)
class TractorSection:
    """A single lowered tractor index in components, in an explicit scale.

    ``tau`` carries one free holomorphic lower slot named ``mid``; extra
    free slots (e.g. a derivative direction) may appear uniformly in all
    three components.
    """

    sigma: TensorExpr
    tau: TensorExpr
    rho: TensorExpr
    mid: str = "a0"
    scale_tag: str = "theta"

    def comps(self) -> dict[str, TensorExpr]:
        return {"t": self.sigma, "m": self.tau, "b": self.rho}

    def to_trac(self, w=0, wp=0) -> "TracExpr":
        T = TracExpr((TracIndex("co", self.mid),), w, wp)
        for slot, e in self.comps().items():
            if e.terms:
                T.add_to((slot,), LPoly.of(e))
        return T

    @staticmethod
    def from_trac(T: "TracExpr", scale_tag: str = "theta") -> "TractorSection":
        if len(T.indices) != 1 or T.indices[0].kind != "co":
            raise ValueError("expected a single lowered unbarred tractor index")
        return TractorSection(T.get(("t",)).c0, T.get(("m",)).c0,
                              T.get(("b",)).c0, T.indices[0].mid, scale_tag)

    def canonical(self) -> "TractorSection":
        return TractorSection(canonicalize(self.sigma), canonicalize(self.tau),
                              canonicalize(self.rho), self.mid, self.scale_tag)


def fresh_hol() -> str:
    return fresh_name("q")


def fresh_ahol() -> str:
    return fresh_name("q") + "b"
