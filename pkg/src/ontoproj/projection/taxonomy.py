"""Taxonomy projection: one ``subclassof`` edge per ``C ⊑ D`` between names."""

import logging

from ..dl import Named, SubClassOf
from ..graph import Edge
from .base import SUBCLASSOF, Projector, Unprojectable

logger = logging.getLogger(__name__)


class TaxonomyProjector(Projector):
    """Simple and injective; partial unless the ontology is a pure taxonomy."""

    method = "taxonomy"
    injective = True

    def project_axiom(self, axiom) -> frozenset:
        if (isinstance(axiom, SubClassOf) and isinstance(axiom.sub, Named)
                and isinstance(axiom.sup, Named)):
            return frozenset({Edge(axiom.sub.name, SUBCLASSOF, axiom.sup.name)})
        raise Unprojectable(f"taxonomy projection only covers C ⊑ D: {axiom!r}")

    def invert(self, edges, signature=None) -> frozenset:
        edges = list(edges)
        if len(edges) == 1 and edges[0][1] == SUBCLASSOF:
            h, _, t = edges[0]
            return frozenset({SubClassOf(Named(h), Named(t))})
        logger.warning("taxonomy: cannot invert edge set %s", edges)
        return frozenset()


def project_taxonomy(ontology):
    return TaxonomyProjector().fit_transform(ontology)
