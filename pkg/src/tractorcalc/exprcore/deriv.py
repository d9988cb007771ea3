"""Leibniz expansion of a covariant derivative over monomials.

Only the structural part lives here (prefix attachment and the product rule);
commutator-based reordering is the pseudohermitian module's job.
"""

from __future__ import annotations

from .core import REGISTRY, Factor, Index, Monomial, TensorExpr


def apply_nabla(e: TensorExpr, idx: Index) -> TensorExpr:
    """nabla_idx applied to e: Leibniz over factors; parallel symbols are skipped."""
    out = []
    for m in e.terms:
        for fi, f in enumerate(m.factors):
            if REGISTRY[f.symbol].parallel:
                continue
            new_factor = Factor(f.symbol, (idx,) + f.derivs, f.slots)
            factors = m.factors[:fi] + (new_factor,) + m.factors[fi + 1:]
            out.append(Monomial(m.coeff, m.has_i, factors))
    return TensorExpr(out)
