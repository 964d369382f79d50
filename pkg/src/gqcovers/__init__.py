"""Computational engine for finite generalized quadrangles: constructions,
subtended-ovoid geometries, cover factorization, automorphism machinery and
the subquadrangle census of the Kantor-Knuth quadrangle."""

from .incidence import (
    AxiomFailure,
    GQOrder,
    IncidenceStructure,
    SubGeometryEmbedding,
    classify_hyperplane,
    gq_order,
    has_triangle,
    induced_subgeometry,
    is_connected,
    verify_gq_axioms,
)
from .gf import GF, FiniteFieldSpec, field, field_of_order

__all__ = [
    "AxiomFailure",
    "GQOrder",
    "IncidenceStructure",
    "SubGeometryEmbedding",
    "classify_hyperplane",
    "gq_order",
    "has_triangle",
    "induced_subgeometry",
    "is_connected",
    "verify_gq_axioms",
    "GF",
    "FiniteFieldSpec",
    "field",
    "field_of_order",
]
