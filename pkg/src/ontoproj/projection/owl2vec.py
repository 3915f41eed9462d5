"""OWL2Vec* graph projection.

Class-level rules (usable at query time):

* ``A ⊑ □r.D`` and ``□r.D ⊑ A`` with ``D`` a name or a flat ⊓/⊔ of names
  give ``(A, r, Bi)`` for each member ``Bi``; ``□`` is ∃ or ∀.
* ``B ⊑ A`` gives ``(B, subclassof, A)`` and ``(A, subclassof⁻¹, B)``.
* ``A ⊑ B1 ⊓ ... ⊓ □r.D ...`` gives ``(A, subclassof, Bi)`` per named
  conjunct plus the restriction edges of each restriction conjunct.
* ``A(a)`` gives ``(a, type, A)`` and ``(A, type⁻¹, a)``; ``r(a, b)`` gives
  ``(a, r, b)``.
* Equivalences are projected through their pairwise subclass expansion.

Ontology-level rules, applied to a fixed point over the projected edges:
domain/range pairs, sub-roles, inverse roles and role chains.  Nominal
restrictions ``∃r.{b}`` cannot be written in the accepted syntax and have
no rule here.
"""

from __future__ import annotations

import itertools
import logging
from collections import defaultdict

from ..dl import (
    And,
    ClassAssertion,
    Domain,
    EquivalentClasses,
    Exists,
    Forall,
    InverseRoles,
    Named,
    Or,
    Range,
    RoleAssertion,
    RoleChain,
    SubClassOf,
    SubRoleOf,
    expand_equivalence,
)
from ..graph import Edge
from .base import (
    SUBCLASSOF,
    SUBCLASSOF_INV,
    TYPE,
    TYPE_INV,
    Projector,
    Unprojectable,
)

logger = logging.getLogger(__name__)

_ROLE_AXIOMS = (Domain, Range, SubRoleOf, InverseRoles, RoleChain)

# operand lists up to this length are inverted in every order
MAX_PERMUTED = 4


def _members(expr):
    """Names of ``B`` or of a flat ``B1 ⊓ ... ⊓ Bn`` / ``B1 ⊔ ... ⊔ Bn``."""
    if isinstance(expr, Named):
        return [expr.name]
    if isinstance(expr, (And, Or)) and all(isinstance(op, Named) for op in expr.operands):
        return [op.name for op in expr.operands]
    return None


def _restriction_edges(cls: str, restriction) -> set:
    members = _members(restriction.filler)
    if members is None:
        return set()
    return {Edge(cls, restriction.role, b) for b in members}


class OWL2VecStarProjector(Projector):
    """Graph component of OWL2Vec*.

    Parameters
    ----------
    inverse_edges : bool, default=True
        Emit ``subclassof⁻¹`` and ``type⁻¹`` edges.
    """

    method = "owl2vecstar"
    injective = False

    def __init__(self, inverse_edges=True):
        self.inverse_edges = inverse_edges

    # -- class-level rules --------------------------------------------------
    def _subclass_edges(self, sub, sup) -> set:
        if isinstance(sub, Named) and isinstance(sup, Named):
            out = {Edge(sub.name, SUBCLASSOF, sup.name)}
            if self.inverse_edges:
                out.add(Edge(sup.name, SUBCLASSOF_INV, sub.name))
            return out
        if isinstance(sub, Named) and isinstance(sup, (Exists, Forall)):
            return _restriction_edges(sub.name, sup)
        if isinstance(sub, (Exists, Forall)) and isinstance(sup, Named):
            return _restriction_edges(sup.name, sub)
        if isinstance(sub, Named) and isinstance(sup, And):
            out = set()
            for op in sup.operands:
                if isinstance(op, Named):
                    out.add(Edge(sub.name, SUBCLASSOF, op.name))
                elif isinstance(op, (Exists, Forall)):
                    out |= _restriction_edges(sub.name, op)
            return out
        return set()

    def project_axiom(self, axiom) -> frozenset:
        if isinstance(axiom, SubClassOf):
            edges = self._subclass_edges(axiom.sub, axiom.sup)
        elif isinstance(axiom, EquivalentClasses):
            edges = set()
            for sub_ax in expand_equivalence(axiom):
                edges |= self._subclass_edges(sub_ax.sub, sub_ax.sup)
        elif isinstance(axiom, ClassAssertion) and isinstance(axiom.cls, Named):
            edges = {Edge(axiom.individual, TYPE, axiom.cls.name)}
            if self.inverse_edges:
                edges.add(Edge(axiom.cls.name, TYPE_INV, axiom.individual))
        elif isinstance(axiom, RoleAssertion):
            edges = {Edge(axiom.subject, axiom.role, axiom.object)}
        else:
            edges = set()
        if not edges:
            raise Unprojectable(f"no OWL2Vec* rule matches {axiom!r}")
        return frozenset(edges)

    # -- batch --------------------------------------------------------------
    def _project(self, ontology):
        per_axiom, skipped = {}, []
        role_axioms = []
        for ax in ontology.axioms:
            if ax in per_axiom or ax in role_axioms:
                continue
            if isinstance(ax, _ROLE_AXIOMS):
                role_axioms.append(ax)
                continue
            try:
                per_axiom[ax] = set(self.project_axiom(ax))
            except Unprojectable:
                skipped.append(ax)

        derived = {ax: set() for ax in role_axioms}
        edges = set().union(*per_axiom.values()) if per_axiom else set()

        # domain + range pairs
        domains, ranges = defaultdict(list), defaultdict(list)
        for ax in role_axioms:
            if isinstance(ax, Domain):
                domains[ax.role].append(ax)
            elif isinstance(ax, Range):
                ranges[ax.role].append(ax)
        for role in domains.keys() & ranges.keys():
            for dom in domains[role]:
                for rng in ranges[role]:
                    heads, tails = _members(dom.cls), _members(rng.cls)
                    if heads is None or tails is None:
                        continue
                    new = {Edge(a, role, b) for a in heads for b in tails}
                    derived[dom] |= new
                    derived[rng] |= new
                    edges |= new

        rules = [ax for ax in role_axioms if isinstance(ax, (SubRoleOf, InverseRoles, RoleChain))]
        changed = bool(rules)
        while changed:
            changed = False
            by_label = defaultdict(set)
            for e in edges:
                by_label[e.label].add((e.head, e.tail))
            for ax in rules:
                new = self._apply_role_rule(ax, by_label) - derived[ax]
                if new:
                    derived[ax] |= new
                    if not new <= edges:
                        changed = True
                        edges |= new

        for ax in role_axioms:
            if derived[ax]:
                per_axiom[ax] = derived[ax]
            else:
                skipped.append(ax)
        return per_axiom, skipped, {}

    @staticmethod
    def _apply_role_rule(ax, by_label) -> set:
        if isinstance(ax, SubRoleOf):
            return {Edge(a, ax.sub, b) for a, b in by_label.get(ax.sup, ())}
        if isinstance(ax, InverseRoles):
            out = {Edge(a, ax.second, b) for b, a in by_label.get(ax.first, ())}
            out |= {Edge(a, ax.first, b) for b, a in by_label.get(ax.second, ())}
            return out
        # role chain: compose the relations along the chain
        pairs = set(by_label.get(ax.chain[0], ()))
        for role in ax.chain[1:]:
            succ = defaultdict(set)
            for a, b in by_label.get(role, ()):
                succ[a].add(b)
            pairs = {(a, c) for a, b in pairs for c in succ.get(b, ())}
            if not pairs:
                break
        return {Edge(a, ax.sup, b) for a, b in pairs}

    # -- inversion ----------------------------------------------------------
    def invert(self, edges, signature=None) -> frozenset:
        """Axioms with exactly this edge set.

        The search space is axioms with a named left-hand side and at most
        one restriction per role.  Conjunct and filler lists are tried in
        every order up to ``MAX_PERMUTED`` members, in sorted order beyond.
        """
        edges = frozenset(edges)
        candidates = set()
        individuals = signature.individuals if signature is not None else frozenset()

        for h, r, t in edges:
            if r == TYPE:
                candidates.add(ClassAssertion(Named(t), h))

        forward = [e for e in edges if e.label not in (SUBCLASSOF_INV, TYPE_INV, TYPE)]
        heads = {e.head for e in forward}
        if len(heads) == 1:
            head = heads.pop()
            supers = sorted(e.tail for e in forward if e.label == SUBCLASSOF)
            groups = defaultdict(list)
            for e in forward:
                if e.label != SUBCLASSOF:
                    groups[e.label].append(e.tail)
            if head in individuals:
                for e in forward:
                    candidates.add(RoleAssertion(e.label, e.head, e.tail))
            else:
                options = [_restriction_options(role, sorted(tails))
                           for role, tails in sorted(groups.items())]
                named = [Named(b) for b in supers]
                for choice in itertools.product(*options):
                    conjuncts = named + list(choice)
                    if len(conjuncts) == 1:
                        candidates.add(SubClassOf(Named(head), conjuncts[0]))
                    for order in _orders(conjuncts) if len(conjuncts) > 1 else ():
                        candidates.add(SubClassOf(Named(head), And(order)))
                if not supers and len(groups) == 1:
                    # □r.D ⊑ A projects onto the same (A, r, Bi) edges
                    for restriction in options[0]:
                        candidates.add(SubClassOf(restriction, Named(head)))
        found = self._consistent(candidates, edges)
        if not found:
            logger.warning("owl2vecstar: no axiom projects onto %s", sorted(edges))
        return found


def _orders(items):
    if len(items) > MAX_PERMUTED:
        return [list(items)]
    return [list(p) for p in itertools.permutations(items)]


def _restriction_options(role, tails):
    if len(tails) == 1:
        fillers = [Named(tails[0])]
    else:
        names = [Named(t) for t in tails]
        fillers = [c(order) for order in _orders(names) for c in (And, Or)]
    return [q(role, f) for q in (Exists, Forall) for f in fillers]


def project_owl2vecstar(ontology, inverse_edges=True):
    return OWL2VecStarProjector(inverse_edges=inverse_edges).fit_transform(ontology)
