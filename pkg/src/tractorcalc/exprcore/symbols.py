"""The standard symbol table for pseudohermitian geometry.

Importing this module populates the process-wide :data:`REGISTRY` with the
Levi form, the torsion, the Webster--Schouten family and the tractor
curvature components.  Where a symbol is *defined* by a formula in the
primitive quantities, that formula is stored as a parseable expression in
``expansion``; the expansion names the symbol's own slots ``x0, x1, ...``
with a ``b`` suffix on antiholomorphic slots (see :func:`slot_names`).

Registered symbols (slot classes, weight):

=========  =============  ========  =====================================
name       slots          weight    meaning
=========  =============  ========  =====================================
h          (h, a)         (1, 1)    Levi form (parallel)
hi         (h, a)         (-1, -1)  inverse Levi form, upper slots (parallel)
Psc        ()             (-1, -1)  Webster--Schouten scalar trace
P2         (h, a)         (0, 0)    Webster--Schouten tensor
T          (h,)           (-1, -1)  third fundamental curvature one-form
A          (h, h)         (0, 0)    pseudohermitian torsion (symmetric)
Ssc        ()             (-2, -2)  fourth fundamental curvature scalar
S4         (h, a, h, a)   (1, 1)    totally trace-free part of curvature
R4         (h, a, h, a)   (1, 1)    full pseudohermitian curvature
V          (h, a, h)      (0, 0)    tractor curvature, one-derivative part
Q          (h, h)         (-1, -1)  tractor curvature, torsion-type part
U          (h, a)         (-1, -1)  tractor curvature, hermitian part
Y          (h,)           (-2, -2)  tractor curvature, deepest component
Obs        ()             (-3, -3)  obstruction-type scalar (real by the
                                    divergence identity for Y)
SS2        (h, a)         (-1, -1)  trace-adjusted square of S4
X          (h,)           (-2, -2)  potential one-form for the secondary
                                    curvature integrand
Iprime     ()             (-3, -3)  secondary curvature integrand (n = 2)
Icr        ()             (-3, -3)  secondary curvature integrand, general n
Upsilon    ()             (0, 0)    logarithmic scale change
f          ()             (w, wp)   generic weighted scalar
sigma      ()             (1, 0)    holomorphic scale density
=========  =============  ========  =====================================

Conjugates carry a ``b`` suffix (``Ab``, ``Tb``, ``Vb``, ``Qb``, ``Yb``,
``fb``, ``sigmab``); hermitian objects (``h``, ``hi``, ``P2``, ``U``) are
their own conjugates with swapped slots.
"""

from __future__ import annotations

from .core import AHOL, HOL, REGISTRY, SymbolDecl


def slot_names(decl: SymbolDecl) -> tuple[str, ...]:
    """Canonical free-index names binding an expansion to the symbol's slots."""
    return tuple(f"x{j}" + ("b" if cls == AHOL else "")
                 for j, cls in enumerate(decl.slots))


_H, _A = HOL, AHOL

_SWAP2 = (((1, 0), 1),)
_PAIR4 = (((2, 1, 0, 3), 1), ((0, 3, 2, 1), 1))

_DONE = False


def install() -> None:
    """Register the standard symbols (idempotent)."""
    global _DONE
    if _DONE:
        return
    reg = REGISTRY.register

    reg("h", (_H, _A), weight=(1, 1), conj=("h", (1, 0)), parallel=True)
    reg("hi", (_H, _A), weight=(-1, -1), conj=("hi", (1, 0)), parallel=True)

    reg("Psc", (), weight=(-1, -1), conj=("Psc", ()))
    reg("P2", (_H, _A), weight=(0, 0), conj=("P2", (1, 0)))

    reg("T", (_H,), weight=(-1, -1), conj=("Tb", (0,)),
        expansion="(nabla[lo.x0](Psc) - i*nabla[up.g](A[lo.x0, lo.g]))/(n + 2)")
    reg("Tb", (_A,), weight=(-1, -1), conj=("T", (0,)))

    reg("A", (_H, _H), weight=(0, 0), symmetries=_SWAP2, conj=("Ab", (0, 1)))
    reg("Ab", (_A, _A), weight=(0, 0), symmetries=_SWAP2, conj=("A", (0, 1)))

    reg("Ssc", (), weight=(-2, -2), conj=("Ssc", ()),
        expansion="-(nabla[up.a](T[lo.a]) + nabla[lo.a](T[up.a])"
                  " + P2[lo.a, lo.bb]*P2[up.a, up.bb]"
                  " - A[lo.a, lo.g]*A[up.a, up.g])/n")

    reg("S4", (_H, _A, _H, _A), weight=(1, 1), symmetries=_PAIR4,
        conj=("S4", (1, 0, 3, 2)))
    reg("R4", (_H, _A, _H, _A), weight=(1, 1), symmetries=_PAIR4,
        conj=("R4", (1, 0, 3, 2)),
        expansion="S4[lo.x0, lo.x1b, lo.x2, lo.x3b]"
                  " + P2[lo.x0, lo.x1b]*h[lo.x2, lo.x3b]"
                  " + P2[lo.x0, lo.x3b]*h[lo.x2, lo.x1b]"
                  " + P2[lo.x2, lo.x1b]*h[lo.x0, lo.x3b]"
                  " + P2[lo.x2, lo.x3b]*h[lo.x0, lo.x1b]")

    reg("V", (_H, _A, _H), weight=(0, 0), symmetries=(((2, 1, 0), 1),),
        conj=("Vb", (0, 1, 2)),
        expansion="nabla[lo.x1b](A[lo.x0, lo.x2])"
                  " + i*nabla[lo.x2](P2[lo.x0, lo.x1b])"
                  " - i*T[lo.x2]*h[lo.x0, lo.x1b]"
                  " - 2*i*T[lo.x0]*h[lo.x2, lo.x1b]")
    reg("Vb", (_A, _H, _A), weight=(0, 0), symmetries=(((2, 1, 0), 1),),
        conj=("V", (0, 1, 2)))

    reg("Q", (_H, _H), weight=(-1, -1), symmetries=_SWAP2, conj=("Qb", (0, 1)),
        expansion="i*nabla[z0](A[lo.x0, lo.x1])"
                  " - 2*i*nabla[lo.x1](T[lo.x0])"
                  " + 2*P2[lo.x0, up.r]*A[lo.r, lo.x1]")
    reg("Qb", (_A, _A), weight=(-1, -1), symmetries=_SWAP2, conj=("Q", (0, 1)))

    reg("U", (_H, _A), weight=(-1, -1), conj=("U", (1, 0)),
        expansion="nabla[lo.x1b](T[lo.x0]) + nabla[lo.x0](T[lo.x1b])"
                  " + P2[lo.x0, up.r]*P2[lo.r, lo.x1b]"
                  " - A[lo.x0, lo.r]*A[up.r, lo.x1b]"
                  " + Ssc*h[lo.x0, lo.x1b]")

    reg("Y", (_H,), weight=(-2, -2), conj=("Yb", (0,)),
        expansion="nabla[z0](T[lo.x0]) - i*nabla[lo.x0](Ssc)"
                  " + 2*i*P2[lo.x0, up.r]*T[lo.r]"
                  " - 3*A[lo.x0, lo.r]*T[up.r]")
    reg("Yb", (_A,), weight=(-2, -2), conj=("Y", (0,)))

    reg("Obs", (), weight=(-3, -3), conj=("Obs", ()),
        expansion="-i*nabla[up.g](Y[lo.g]) + 2*P2[up.a, up.bb]*U[lo.a, lo.bb]"
                  " + A[up.a, up.g]*Q[lo.a, lo.g]")

    reg("SS2", (_H, _A), weight=(-1, -1), conj=("SS2", (1, 0)),
        expansion="S4[lo.x0, lo.rb, lo.g, lo.sb]*S4[up.rb, lo.x1b, up.sb, up.g]"
                  " - (1/n)*S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb]*h[lo.x0, lo.x1b]")

    reg("X", (_H,), weight=(-2, -2), conj=("Xb", (0,)),
        expansion="-i*S4[lo.x0, lo.rb, lo.g, lo.sb]*V[up.rb, up.g, up.sb]"
                  " + (1/4)*nabla[lo.x0](S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb])")
    reg("Xb", (_A,), weight=(-2, -2), conj=("X", (0,)))

    reg("Iprime", (), weight=(-3, -3), conj=("Iprime", ()),
        expansion="-(1/8)*(nabla[up.e](nabla[lo.e](S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb]))"
                  " + nabla[lo.e](nabla[up.e](S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb])))"
                  " + V[lo.a, lo.bb, lo.g]*V[up.a, up.bb, up.g]"
                  " + (1/2)*Psc*S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb]")

    reg("Icr", (), weight=(-3, -3), conj=("Icr", ()),
        expansion="nabla[up.g](i*S4[lo.g, lo.sb, lo.a, lo.bb]*V[up.sb, up.a, up.bb]"
                  " - (1/(2*n))*nabla[lo.g](S4[lo.e, lo.eb, lo.d, lo.rb]"
                  "*S4[up.e, up.eb, up.d, up.rb]))"
                  " - SS2[up.a, up.bb]*(P2[lo.a, lo.bb] - (1/n)*Psc*h[lo.a, lo.bb])"
                  " + (n - 2)*((1/(2*n*(n - 4)))*(nabla[up.e](nabla[lo.e](S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb]))"
                  " + nabla[lo.e](nabla[up.e](S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb])))"
                  " + V[lo.a, lo.bb, lo.g]*V[up.a, up.bb, up.g]"
                  " - (2/(n*(n - 4)))*Psc*S4[lo.g, lo.sb, lo.d, lo.rb]"
                  "*S4[up.g, up.sb, up.d, up.rb])")

    reg("Upsilon", (), weight=(0, 0), conj=("Upsilon", ()))
    reg("f", (), weight=("w", "wp"), conj=("fb", ()))
    reg("fb", (), weight=("wp", "w"), conj=("f", ()))
    reg("sigma", (), weight=(1, 0), conj=("sigmab", ()))
    reg("sigmab", (), weight=(0, 1), conj=("sigma", ()))

    REGISTRY.check_conjugates()
    _DONE = True


install()
