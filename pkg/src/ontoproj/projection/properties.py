"""Executable checks of totality, simplicity and injectivity."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .base import canonical_edges


@dataclass
class PropertyReport:
    """Formal properties of a projection observed on one ontology.

    ``collisions`` lists groups of axioms that share an identical edge set
    (blank nodes compared up to their per-axiom renaming).
    """

    method: str
    n_axioms: int
    coverage: float
    total: bool
    simple: bool
    max_edges: int
    collisions: list = field(default_factory=list)

    @property
    def injective(self) -> bool:
        return not self.collisions

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "axioms": self.n_axioms,
            "coverage": self.coverage,
            "total": self.total,
            "simple": self.simple,
            "max_edges_per_axiom": self.max_edges,
            "injective": self.injective,
            "collisions": len(self.collisions),
        }


def analyze_result(result, n_axioms: int, projector=None, witnesses=False) -> PropertyReport:
    """Property report for an existing :class:`ProjectionResult`.

    With ``witnesses=True`` (and a ``projector``), every projected axiom is
    also inverted, so collisions with axioms outside the ontology count.
    """
    groups = defaultdict(set)
    for ax, edges in result.per_axiom.items():
        groups[canonical_edges(edges)].add(ax)
    if witnesses and projector is not None:
        for key in list(groups):
            groups[key] |= set(projector.invert(key))
    collisions = sorted((sorted(g, key=repr) for g in groups.values() if len(g) > 1),
                        key=lambda g: repr(g))
    sizes = [len(e) for e in result.per_axiom.values()]
    coverage = result.coverage(n_axioms)
    return PropertyReport(
        method=result.method,
        n_axioms=n_axioms,
        coverage=coverage,
        total=not result.skipped,
        simple=all(s == 1 for s in sizes),
        max_edges=max(sizes, default=0),
        collisions=collisions,
    )


def analyze_properties(method, ontology, witnesses=False, **options) -> PropertyReport:
    """Project ``ontology`` with ``method`` and report its properties."""
    from . import get_projector
    projector = get_projector(method, **options)
    result = projector.fit_transform(ontology)
    n = len(dict.fromkeys(ontology.axioms))
    return analyze_result(result, n, projector, witnesses=witnesses)
