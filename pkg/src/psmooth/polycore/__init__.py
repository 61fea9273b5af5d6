"""Exact integer-polynomial arithmetic and structural predicates."""

from __future__ import annotations

from psmooth.polycore.factored import (
    FactoredPoly,
    StructuralReport,
    compute_Q,
    make_effective_balanced,
    salvation_pipeline,
    structural_report,
)
from psmooth.polycore.parse import parse_poly
from psmooth.polycore.poly import (
    Poly,
    content,
    discriminant,
    fhb_transform,
    primitivize,
    restrict_to_progression,
    resultant,
)

__all__ = [
    "FactoredPoly",
    "Poly",
    "StructuralReport",
    "compute_Q",
    "content",
    "discriminant",
    "fhb_transform",
    "make_effective_balanced",
    "parse_poly",
    "primitivize",
    "restrict_to_progression",
    "resultant",
    "salvation_pipeline",
    "structural_report",
]
