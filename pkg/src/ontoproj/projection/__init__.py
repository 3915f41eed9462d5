"""Graph projections of ontologies and their inverses."""

from .base import (
    DISJOINTWITH,
    RESERVED_LABELS,
    SUBCLASSOF,
    SUBCLASSOF_INV,
    TYPE,
    TYPE_INV,
    ProjectionResult,
    Projector,
    Unprojectable,
    canonical_edges,
    is_blank,
)
from .owl2vec import OWL2VecStarProjector, project_owl2vecstar
from .patterns import (
    DEFAULT_PATTERNS,
    DISJOINT_INTERSECTION_PATTERN,
    PatternError,
    PatternProjector,
    RelationalPattern,
    load_patterns,
    parse_pattern,
    parse_patterns,
    project_patterns,
)
from .properties import PropertyReport, analyze_properties, analyze_result
from .rdf import RDFProjector, project_rdf, render_axiom
from .taxonomy import TaxonomyProjector, project_taxonomy

PROJECTORS = {
    "taxonomy": TaxonomyProjector,
    "owl2vecstar": OWL2VecStarProjector,
    "rdf": RDFProjector,
    "patterns": PatternProjector,
}


def get_projector(method: str, **options) -> Projector:
    try:
        cls = PROJECTORS[method]
    except KeyError:
        raise ValueError(f"unknown projection method {method!r}; "
                         f"expected one of {sorted(PROJECTORS)}") from None
    return cls(**options)


def project_axiom(method, axiom, **options) -> frozenset:
    """Edges of one query axiom; raises :class:`Unprojectable` outside the domain."""
    projector = method if isinstance(method, Projector) else get_projector(method, **options)
    return projector.project_axiom(axiom)


def invert_projection(method, edges, signature=None, **options) -> frozenset:
    projector = method if isinstance(method, Projector) else get_projector(method, **options)
    return projector.invert(edges, signature=signature)


__all__ = [
    "DEFAULT_PATTERNS", "DISJOINT_INTERSECTION_PATTERN", "DISJOINTWITH", "PROJECTORS",
    "RESERVED_LABELS", "SUBCLASSOF", "SUBCLASSOF_INV", "TYPE", "TYPE_INV",
    "OWL2VecStarProjector", "PatternError", "PatternProjector", "ProjectionResult",
    "Projector", "PropertyReport", "RDFProjector", "RelationalPattern", "TaxonomyProjector",
    "Unprojectable", "analyze_properties", "analyze_result", "canonical_edges",
    "get_projector", "invert_projection", "is_blank", "load_patterns", "parse_pattern",
    "parse_patterns", "project_axiom", "project_owl2vecstar", "project_patterns",
    "project_rdf", "project_taxonomy", "render_axiom",
]
