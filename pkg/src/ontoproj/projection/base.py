"""Shared types for graph projections."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator, TransformerMixin

from ..dl import Ontology, Signature
from ..graph import Edge, build_graph

# Reserved edge labels carry the ``proj:`` prefix so that they cannot
# collide with roles written as ``:subclassof`` in an ontology file.
SUBCLASSOF = "proj:subclassof"
SUBCLASSOF_INV = "proj:subclassof⁻¹"
TYPE = "proj:type"
TYPE_INV = "proj:type⁻¹"
DISJOINTWITH = "proj:disjointwith"
OBJECTPROPERTY = "proj:objectproperty"
SOMEVALUESFROM = "proj:somevaluesfrom"
ALLVALUESFROM = "proj:allvaluesfrom"
INTERSECTION = "proj:intersection"
UNION = "proj:union"
FIRST = "proj:first"
REST = "proj:rest"
COMPLEMENT = "proj:complement"
EQUIVALENTCLASS = "proj:equivalentclass"
SUBPROPERTYOF = "proj:subpropertyof"
INVERSEOF = "proj:inverseof"
PROPERTYCHAIN = "proj:propertychain"
DOMAIN = "proj:domain"
RANGE = "proj:range"

RESERVED_LABELS = frozenset({
    SUBCLASSOF, SUBCLASSOF_INV, TYPE, TYPE_INV, DISJOINTWITH, OBJECTPROPERTY,
    SOMEVALUESFROM, ALLVALUESFROM, INTERSECTION, UNION, FIRST, REST, COMPLEMENT,
    EQUIVALENTCLASS, SUBPROPERTYOF, INVERSEOF, PROPERTYCHAIN, DOMAIN, RANGE,
})

BLANK_PREFIX = "_:"
QUERY_BLANK = "_:q_n"
_BATCH_BLANK_RE = re.compile(r"^_:ax\d+_n")


class Unprojectable(ValueError):
    """The axiom lies outside the domain of the projection."""


def is_blank(node: str) -> bool:
    return node.startswith(BLANK_PREFIX)


def canonical_edges(edges) -> frozenset:
    """Rename batch blank nodes ``_:ax{i}_n{j}`` to query form ``_:q_n{j}``."""
    return frozenset(
        Edge(_BATCH_BLANK_RE.sub(QUERY_BLANK, h), r, _BATCH_BLANK_RE.sub(QUERY_BLANK, t))
        for h, r, t in edges)


@dataclass
class ProjectionResult:
    """Output of a batch projection.

    ``per_axiom`` maps each projected axiom to its edge set; ``edges`` is
    their union in canonical (sorted) order.  ``extra_nodes`` and
    ``extra_labels`` register signature names that no edge mentions, so
    that every class, role and individual has an index in the graph.
    """

    method: str
    per_axiom: dict
    skipped: list = field(default_factory=list)
    extra_nodes: tuple = ()
    extra_labels: tuple = ()
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        union = set()
        for edges in self.per_axiom.values():
            union.update(edges)
        self.edges = tuple(sorted(union))
        self._graph = None

    @property
    def graph(self):
        if self._graph is None:
            self._graph = build_graph(self)
        return self._graph

    def coverage(self, n_axioms: int) -> float:
        return 1.0 if n_axioms == 0 else (n_axioms - len(self.skipped)) / n_axioms


class Projector(BaseEstimator, TransformerMixin):
    """Base class: ``fit`` records the signature, ``transform`` projects.

    Subclasses implement :meth:`_project` (batch), :meth:`project_axiom`
    (query time, raising :class:`Unprojectable`) and :meth:`invert`.
    """

    method = None
    injective = None
    roles_as_nodes = False

    def fit(self, ontology: Ontology, y=None):
        if not isinstance(ontology, Ontology):
            raise TypeError(f"expected an Ontology, got {type(ontology).__name__}")
        self.signature_ = ontology.signature
        return self

    def transform(self, ontology: Ontology) -> ProjectionResult:
        if not isinstance(ontology, Ontology):
            raise TypeError(f"expected an Ontology, got {type(ontology).__name__}")
        per_axiom, skipped, stats = self._project(ontology)
        per_axiom = {ax: frozenset(e) for ax, e in per_axiom.items()}
        sig = ontology.signature
        nodes = sorted(sig.classes | sig.individuals)
        if self.roles_as_nodes:
            nodes += sorted(sig.roles)
        return ProjectionResult(self.method, per_axiom, skipped, tuple(nodes),
                                tuple(sorted(sig.roles)), stats)

    def _project(self, ontology):
        per_axiom, skipped = {}, []
        for ax in ontology.axioms:
            if ax in per_axiom:
                continue
            try:
                per_axiom[ax] = self.project_axiom(ax)
            except Unprojectable:
                skipped.append(ax)
        return per_axiom, skipped, {}

    def project_axiom(self, axiom) -> frozenset:
        raise NotImplementedError

    def invert(self, edges, signature: Signature = None) -> frozenset:
        raise NotImplementedError

    def _consistent(self, candidates, edges) -> frozenset:
        target = frozenset(edges)
        keep = set()
        for ax in candidates:
            try:
                if self.project_axiom(ax) == target:
                    keep.add(ax)
            except Unprojectable:
                pass
        return frozenset(keep)
