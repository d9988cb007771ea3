"""Componentwise standard-tractor calculus in a chosen scale."""

from ..exprcore.core import REGISTRY

_DONE = False


def install() -> None:
    """Register the extra scalars the tractor calculus needs (idempotent)."""
    global _DONE
    if _DONE:
        return
    reg = REGISTRY.register
    # balanced-weight test scalar: both density weights equal w
    reg("fw", (), weight=("w", "w"), conj=("fwb", ()))
    reg("fwb", (), weight=("w", "w"), conj=("fw", ()))
    # unweighted scalar reserved for the log-interpolation arguments
    reg("ph", (), weight=(0, 0), conj=("ph", ()))
    # generic hermitian two-tensor of generic weight for the splitting map
    from ..exprcore.core import AHOL, HOL
    reg("s2", (HOL, AHOL), weight=("w", "wp"), conj=("s2b", (1, 0)))
    reg("s2b", (HOL, AHOL), weight=("wp", "w"), conj=("s2", (1, 0)))
    _DONE = True


install()

from .sections import (LPoly, SLOT_OFFSET, SLOTS, TracExpr,  # noqa: E402
                       TracIndex, TractorSection)
from .connection import (apply_dir, box_down_up, box_up_down,  # noqa: E402
                         connection, tractor_D, tractor_Dbar, tractor_metric,
                         transform_section, transform_section_inverse)
from .weyl import (splitting_map, trace_pair, weyl_report,  # noqa: E402
                   weyl_tractor)

__all__ = [
    "LPoly", "SLOTS", "SLOT_OFFSET", "TracExpr", "TracIndex", "TractorSection",
    "apply_dir", "box_up_down", "box_down_up", "connection", "tractor_D",
    "tractor_Dbar", "tractor_metric", "transform_section",
    "transform_section_inverse", "install", "splitting_map", "trace_pair",
    "weyl_report", "weyl_tractor",
]
