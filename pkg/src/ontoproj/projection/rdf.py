"""RDF rendering of axioms as syntax-tree subgraphs.

Every axiom variant is projected, so the projection is total.  Complex
class expressions become blank nodes: restrictions get ``objectproperty``
plus ``somevaluesfrom``/``allvaluesfrom`` edges, ⊓/⊔ point through
``intersection``/``union`` at an RDF list built from ``first``/``rest``
cells that ends in its own fresh ``nil`` node.

Blank nodes are named ``_:ax{i}_n{j}`` in batch mode (axiom index ``i``,
pre-order position ``j``) and ``_:q_n{j}`` for query-time projection.
"""

from __future__ import annotations

import logging
from collections import defaultdict

from ..dl import (
    BOTTOM_NAME,
    TOP_NAME,
    And,
    Bottom,
    ClassAssertion,
    DisjointClasses,
    Domain,
    EquivalentClasses,
    Exists,
    Forall,
    InverseRoles,
    Named,
    Not,
    Or,
    Range,
    RoleAssertion,
    RoleChain,
    SubClassOf,
    SubRoleOf,
    Top,
)
from ..graph import Edge
from .base import (
    ALLVALUESFROM,
    COMPLEMENT,
    DISJOINTWITH,
    DOMAIN,
    EQUIVALENTCLASS,
    FIRST,
    INTERSECTION,
    INVERSEOF,
    OBJECTPROPERTY,
    PROPERTYCHAIN,
    RANGE,
    RESERVED_LABELS,
    REST,
    SOMEVALUESFROM,
    SUBCLASSOF,
    SUBPROPERTYOF,
    TYPE,
    UNION,
    Projector,
    is_blank,
)

logger = logging.getLogger(__name__)

_STRUCTURAL = {OBJECTPROPERTY, SOMEVALUESFROM, ALLVALUESFROM, INTERSECTION, UNION,
               FIRST, REST, COMPLEMENT}


class _Renderer:
    def __init__(self, prefix):
        self.prefix = prefix
        self.count = 0
        self.edges = []

    def blank(self):
        node = f"{self.prefix}{self.count}"
        self.count += 1
        return node

    def add(self, h, r, t):
        self.edges.append(Edge(h, r, t))

    def expr(self, e) -> str:
        if isinstance(e, Named):
            return e.name
        if isinstance(e, Top):
            return TOP_NAME
        if isinstance(e, Bottom):
            return BOTTOM_NAME
        node = self.blank()
        if isinstance(e, (Exists, Forall)):
            self.add(node, OBJECTPROPERTY, e.role)
            label = SOMEVALUESFROM if isinstance(e, Exists) else ALLVALUESFROM
            self.add(node, label, self.expr(e.filler))
        elif isinstance(e, (And, Or)):
            label = INTERSECTION if isinstance(e, And) else UNION
            self.add(node, label, self.list([lambda op=op: self.expr(op) for op in e.operands]))
        elif isinstance(e, Not):
            self.add(node, COMPLEMENT, self.expr(e.operand))
        else:
            raise TypeError(f"not a class expression: {e!r}")
        return node

    def list(self, items) -> str:
        """RDF list; ``items`` are thunks so numbering stays pre-order."""
        head = cell = self.blank()
        for i, item in enumerate(items):
            self.add(cell, FIRST, item())
            nxt = self.blank()  # the last one is this list's nil
            self.add(cell, REST, nxt)
            cell = nxt
        return head

    def axiom(self, ax):
        e = self.expr
        if isinstance(ax, SubClassOf):
            self.add(e(ax.sub), SUBCLASSOF, e(ax.sup))
        elif isinstance(ax, EquivalentClasses):
            nodes = [e(op) for op in ax.operands]
            for a, b in zip(nodes, nodes[1:]):
                self.add(a, EQUIVALENTCLASS, b)
        elif isinstance(ax, DisjointClasses):
            self.add(e(ax.first), DISJOINTWITH, e(ax.second))
        elif isinstance(ax, SubRoleOf):
            self.add(ax.sub, SUBPROPERTYOF, ax.sup)
        elif isinstance(ax, InverseRoles):
            self.add(ax.first, INVERSEOF, ax.second)
        elif isinstance(ax, RoleChain):
            self.add(ax.sup, PROPERTYCHAIN, self.list([lambda r=r: r for r in ax.chain]))
        elif isinstance(ax, Domain):
            self.add(ax.role, DOMAIN, e(ax.cls))
        elif isinstance(ax, Range):
            self.add(ax.role, RANGE, e(ax.cls))
        elif isinstance(ax, ClassAssertion):
            self.add(ax.individual, TYPE, e(ax.cls))
        elif isinstance(ax, RoleAssertion):
            self.add(ax.subject, ax.role, ax.object)
        else:
            raise TypeError(f"not an axiom: {ax!r}")


def render_axiom(axiom, prefix="_:q_n"):
    """Edges of ``axiom`` and the number of blank nodes introduced."""
    r = _Renderer(prefix)
    r.axiom(axiom)
    return frozenset(r.edges), r.count


class RDFProjector(Projector):
    """Total, injective and generally not simple."""

    method = "rdf"
    injective = True
    roles_as_nodes = True

    def project_axiom(self, axiom) -> frozenset:
        return render_axiom(axiom)[0]

    def _project(self, ontology):
        per_axiom, blanks = {}, 0
        for i, ax in enumerate(ontology.axioms):
            if ax in per_axiom:
                continue
            edges, n = render_axiom(ax, prefix=f"_:ax{i}_n")
            per_axiom[ax] = edges
            blanks += n
        return per_axiom, [], {"blank_nodes": blanks}

    def invert(self, edges, signature=None) -> frozenset:
        try:
            axiom = _Decoder(edges).axiom()
        except _DecodeError as exc:
            logger.warning("rdf: cannot invert edge set: %s", exc)
            return frozenset()
        return frozenset({axiom})


class _DecodeError(Exception):
    pass


class _Decoder:
    def __init__(self, edges):
        self.edges = frozenset(edges)
        self.out = defaultdict(list)
        tails = set()  # nodes nested under a structural edge
        for e in self.edges:
            self.out[e.head].append(e)
            if e.label in _STRUCTURAL:
                tails.add(e.tail)
        self.used = set()
        self.roots = [e for e in self.edges
                      if e.label not in _STRUCTURAL
                      and not (is_blank(e.head) and e.head in tails)]
        root_set = set(self.roots)
        for node in self.out:
            self.out[node] = [e for e in self.out[node] if e not in root_set]

    def take(self, node, label):
        found = [e for e in self.out.get(node, ()) if e.label == label]
        if len(found) != 1:
            raise _DecodeError(f"expected one {label} edge at {node}")
        self.used.add(found[0])
        return found[0].tail

    def expr(self, node):
        if not is_blank(node):
            if node == TOP_NAME:
                return Top()
            if node == BOTTOM_NAME:
                return Bottom()
            return Named(node)
        labels = {e.label for e in self.out.get(node, ())}
        if labels == {OBJECTPROPERTY, SOMEVALUESFROM}:
            return Exists(self.take(node, OBJECTPROPERTY), self.expr(self.take(node, SOMEVALUESFROM)))
        if labels == {OBJECTPROPERTY, ALLVALUESFROM}:
            return Forall(self.take(node, OBJECTPROPERTY), self.expr(self.take(node, ALLVALUESFROM)))
        if labels == {INTERSECTION}:
            return And([self.expr(n) for n in self.list(self.take(node, INTERSECTION))])
        if labels == {UNION}:
            return Or([self.expr(n) for n in self.list(self.take(node, UNION))])
        if labels == {COMPLEMENT}:
            return Not(self.expr(self.take(node, COMPLEMENT)))
        raise _DecodeError(f"unrecognized blank node shape {sorted(labels)} at {node}")

    def list(self, node):
        items, seen = [], set()
        while self.out.get(node):
            if node in seen:
                raise _DecodeError("cyclic list")
            seen.add(node)
            items.append(self.take(node, FIRST))
            node = self.take(node, REST)
        if not is_blank(node):
            raise _DecodeError("list does not end in a blank nil node")
        return items

    def axiom(self):
        if not self.roots:
            raise _DecodeError("no root edge")
        labels = {e.label for e in self.roots}
        if len(labels) != 1:
            raise _DecodeError(f"several root edges {sorted(labels)}")
        label = labels.pop()
        if label == EQUIVALENTCLASS:
            ax = EquivalentClasses([self.expr(n) for n in self._chain(self.roots)])
            self.used.update(self.roots)
        else:
            if len(self.roots) != 1:
                raise _DecodeError("several root edges")
            root = self.roots[0]
            self.used.add(root)
            h, _, t = root
            if label == SUBCLASSOF:
                ax = SubClassOf(self.expr(h), self.expr(t))
            elif label == DISJOINTWITH:
                ax = DisjointClasses(self.expr(h), self.expr(t))
            elif label == SUBPROPERTYOF:
                ax = SubRoleOf(h, t)
            elif label == INVERSEOF:
                ax = InverseRoles(h, t)
            elif label == PROPERTYCHAIN:
                ax = RoleChain(self.list(t), h)
            elif label == DOMAIN:
                ax = Domain(h, self.expr(t))
            elif label == RANGE:
                ax = Range(h, self.expr(t))
            elif label == TYPE:
                ax = ClassAssertion(self.expr(t), h)
            elif label in RESERVED_LABELS or is_blank(h) or is_blank(t):
                raise _DecodeError(f"unexpected root label {label}")
            else:
                ax = RoleAssertion(label, h, t)
        if self.used != self.edges:
            raise _DecodeError(f"{len(self.edges - self.used)} edges not part of the axiom")
        try:
            reprojected, _ = render_axiom(ax)
        except (TypeError, ValueError) as exc:
            raise _DecodeError(str(exc)) from None
        if len(reprojected) != len(self.edges):
            raise _DecodeError("edge set shares blank nodes between subterms")
        return ax

    @staticmethod
    def _chain(roots):
        nxt = {e.head: e.tail for e in roots}
        if len(nxt) != len(roots):
            raise _DecodeError("branching equivalence chain")
        starts = set(nxt) - set(nxt.values())
        if len(starts) != 1:
            raise _DecodeError("equivalence edges do not form a path")
        node = starts.pop()
        path = [node]
        while node in nxt:
            node = nxt[node]
            path.append(node)
        return path


def project_rdf(ontology):
    return RDFProjector().fit_transform(ontology)
