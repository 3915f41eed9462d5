"""EL normalization and completion-based saturation.

The reasoner computes the fragment of the deductive closure that the
evaluation needs: entailed ``C ⊑ D`` and ``C ⊑ ∃R.D`` between named classes
of the input signature.  Axioms outside EL (``¬``, ``⊔``, ``∀``, inverse
roles, ranges and ABox assertions) are skipped and reported.
"""

from __future__ import annotations

import itertools
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .dl import (
    BOTTOM_NAME,
    TOP_NAME,
    And,
    Bottom,
    ClassAssertion,
    DisjointClasses,
    Domain,
    EquivalentClasses,
    Exists,
    InverseRoles,
    Named,
    Ontology,
    Range,
    RoleAssertion,
    RoleChain,
    SubClassOf,
    SubRoleOf,
    Top,
    expand_equivalence,
)

logger = logging.getLogger(__name__)

TOP = TOP_NAME
BOTTOM = BOTTOM_NAME


class NotEL(Exception):
    """Raised internally for constructs outside the EL fragment."""


@dataclass
class NormalizedAxiomSet:
    """EL axioms in normal form over class and role names.

    ``owl:Thing`` and ``owl:Nothing`` stand for ⊤ and ⊥.  ``aux_classes``
    and ``aux_roles`` are the fresh names introduced during normalization.
    """

    subsumptions: set = field(default_factory=set)   # (A, B)       A ⊑ B
    conjunctions: set = field(default_factory=set)   # (A1, A2, B)  A1 ⊓ A2 ⊑ B
    existentials: set = field(default_factory=set)   # (A, r, B)    A ⊑ ∃r.B
    restrictions: set = field(default_factory=set)   # (r, A, B)    ∃r.A ⊑ B
    role_inclusions: set = field(default_factory=set)  # (r, s)
    role_chains: set = field(default_factory=set)    # (r, s, t)    r∘s ⊑ t
    classes: set = field(default_factory=set)
    roles: set = field(default_factory=set)
    aux_classes: set = field(default_factory=set)
    aux_roles: set = field(default_factory=set)
    skipped: list = field(default_factory=list)

    def rule_count(self) -> int:
        return sum(len(s) for s in (self.subsumptions, self.conjunctions,
                                    self.existentials, self.restrictions,
                                    self.role_inclusions, self.role_chains))


class _Normalizer:
    def __init__(self, ontology: Ontology):
        self.out = NormalizedAxiomSet()
        self.out.classes = set(ontology.signature.classes)
        self.out.roles = set(ontology.signature.roles)
        sig = ontology.signature
        self._taken = set(sig.classes) | set(sig.roles) | set(sig.individuals)
        self._counter = itertools.count(1)
        self._names = {}

    def fresh(self, kind="class"):
        while True:
            name = f"_aux{next(self._counter)}"
            if name not in self._taken:
                self._taken.add(name)
                (self.out.aux_classes if kind == "class" else self.out.aux_roles).add(name)
                return name

    @staticmethod
    def atom_name(expr):
        if isinstance(expr, str):
            return expr
        if isinstance(expr, Named):
            return expr.name
        if isinstance(expr, Top):
            return TOP
        if isinstance(expr, Bottom):
            return BOTTOM
        return None

    def name_for(self, expr, pending, side):
        """A name N with ``expr ⊑ N`` (side 'lhs') or ``N ⊑ expr`` ('rhs')."""
        name = self.atom_name(expr)
        if name is not None:
            return name
        key = (side, expr)
        if key not in self._names:
            name = self._names[key] = self.fresh()
            pending.append((expr, name) if side == "lhs" else (name, expr))
        return self._names[key]

    def check_el(self, expr):
        if isinstance(expr, (Named, Top, Bottom)):
            return
        if isinstance(expr, And):
            for op in expr.operands:
                self.check_el(op)
            return
        if isinstance(expr, Exists):
            self.check_el(expr.filler)
            return
        raise NotEL(type(expr).__name__)

    def gci(self, sub, sup):
        """Normalize ``sub ⊑ sup``; both sides must already be EL."""
        out = self.out
        pending = [(sub, sup)]
        while pending:
            c, d = pending.pop()
            if isinstance(d, Top) or isinstance(c, Bottom):
                continue
            if isinstance(d, And):
                pending.extend((c, op) for op in d.operands)
                continue
            c_name = self.atom_name(c)
            d_name = self.atom_name(d)
            if c_name is not None:
                if d_name is not None:
                    out.subsumptions.add((c_name, d_name))
                else:
                    filler = self.name_for(d.filler, pending, "rhs")
                    out.existentials.add((c_name, d.role, filler))
            elif d_name is None:
                pending.append((c, self.name_for(d, pending, "rhs")))
            elif isinstance(c, And):
                names = [self.name_for(op, pending, "lhs") for op in c.operands]
                acc = names[0]
                for i, nxt in enumerate(names[1:], start=1):
                    target = d_name if i == len(names) - 1 else self.fresh()
                    out.conjunctions.add((acc, nxt, target))
                    acc = target
            else:
                filler = self.name_for(c.filler, pending, "lhs")
                out.restrictions.add((c.role, filler, d_name))

    def add(self, axiom):
        out = self.out
        if isinstance(axiom, SubClassOf):
            self.check_el(axiom.sub)
            self.check_el(axiom.sup)
            self.gci(axiom.sub, axiom.sup)
        elif isinstance(axiom, EquivalentClasses):
            for op in axiom.operands:
                self.check_el(op)
            for sub_ax in expand_equivalence(axiom):
                self.gci(sub_ax.sub, sub_ax.sup)
        elif isinstance(axiom, DisjointClasses):
            self.check_el(axiom.first)
            self.check_el(axiom.second)
            self.gci(And((axiom.first, axiom.second)), Bottom())
        elif isinstance(axiom, SubRoleOf):
            out.role_inclusions.add((axiom.sub, axiom.sup))
        elif isinstance(axiom, RoleChain):
            acc = axiom.chain[0]
            for i, nxt in enumerate(axiom.chain[1:], start=1):
                target = axiom.sup if i == len(axiom.chain) - 1 else self.fresh("role")
                out.role_chains.add((acc, nxt, target))
                acc = target
        elif isinstance(axiom, Domain):
            self.check_el(axiom.cls)
            self.gci(Exists(axiom.role, Top()), axiom.cls)
        elif isinstance(axiom, (Range, InverseRoles, ClassAssertion, RoleAssertion)):
            raise NotEL(type(axiom).__name__)
        else:
            raise TypeError(f"not an axiom: {axiom!r}")


def normalize(ontology: Ontology) -> NormalizedAxiomSet:
    """Bring the EL part of ``ontology`` into normal form.

    Non-EL axioms end up in ``skipped``; skipping is logged, not raised.
    """
    norm = _Normalizer(ontology)
    for axiom in ontology.axioms:
        # EL membership is checked before any rule is emitted
        try:
            norm.add(axiom)
        except NotEL as exc:
            norm.out.skipped.append(axiom)
            logger.debug("skipping non-EL axiom %r (%s)", axiom, exc)
    if norm.out.skipped:
        logger.info("normalization skipped %d non-EL axioms", len(norm.out.skipped))
    return norm.out


# --------------------------------------------------------------------------
# Saturation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosureFacts:
    """Entailed ``C ⊑ D`` and ``C ⊑ ∃R.D`` over named input classes.

    Reflexive pairs and ``C ⊑ ⊤`` are not stored; ``C ⊑ ⊥`` is kept with
    ``owl:Nothing`` as the superclass.  Membership tests (``axiom in
    facts``) treat reflexive and ⊤ subsumptions as entailed.
    """

    subsumptions: frozenset = frozenset()
    existentials: frozenset = frozenset()

    def __contains__(self, axiom) -> bool:
        return self.entails(axiom)

    def entails(self, axiom) -> bool:
        if not isinstance(axiom, SubClassOf) or not isinstance(axiom.sub, Named):
            return False
        c = axiom.sub.name
        sup = axiom.sup
        if isinstance(sup, Top):
            return True
        if isinstance(sup, Named):
            return sup.name == c or (c, sup.name) in self.subsumptions
        if isinstance(sup, Bottom):
            return (c, BOTTOM) in self.subsumptions
        if isinstance(sup, Exists) and isinstance(sup.filler, Named):
            return (c, sup.role, sup.filler.name) in self.existentials
        return False

    def axioms(self) -> list:
        """All stored facts as axioms, in lexicographic order."""
        out = []
        for c, d in sorted(self.subsumptions):
            out.append(SubClassOf(Named(c), Bottom() if d == BOTTOM else Named(d)))
        for c, r, d in sorted(self.existentials):
            out.append(SubClassOf(Named(c), Exists(r, Named(d))))
        return out

    def __len__(self):
        return len(self.subsumptions) + len(self.existentials)


def saturate(normalized: NormalizedAxiomSet) -> ClosureFacts:
    """Least fixed point of the EL completion rules (worklist algorithm).

    Rules: transitivity of told subsumptions, conjunction, existential
    introduction and propagation through ``∃r.A ⊑ B``, ⊥ propagation along
    role edges, role inclusions and binary role chains.
    """
    n = normalized
    told = defaultdict(set)
    for a, b in n.subsumptions:
        told[a].add(b)
    conj = defaultdict(list)
    for a1, a2, b in n.conjunctions:
        conj[a1].append((a2, b))
        conj[a2].append((a1, b))
    told_ex = defaultdict(set)
    for a, r, b in n.existentials:
        told_ex[a].add((r, b))
    restr = defaultdict(set)       # (r, A) -> {B}
    for r, a, b in n.restrictions:
        restr[(r, a)].add(b)
    super_roles = defaultdict(set)
    for r, s in n.role_inclusions:
        super_roles[r].add(s)
    chains_left = defaultdict(list)   # r -> [(s, t)] for r∘s ⊑ t
    chains_right = defaultdict(list)  # s -> [(r, t)]
    for r, s, t in n.role_chains:
        chains_left[r].append((s, t))
        chains_right[s].append((r, t))

    names = set(n.classes) | n.aux_classes | {TOP}
    for a, b in n.subsumptions:
        names.update((a, b))
    for a1, a2, b in n.conjunctions:
        names.update((a1, a2, b))
    for a, _, b in n.existentials:
        names.update((a, b))
    for _, a, b in n.restrictions:
        names.update((a, b))

    S = defaultdict(set)                       # A -> subsumers
    R = defaultdict(set)                       # r -> {(A, B)}
    succ = defaultdict(lambda: defaultdict(set))  # A -> r -> {B}
    pred = defaultdict(lambda: defaultdict(set))  # B -> r -> {A}
    queue = deque()

    def add_sub(a, b):
        if b not in S[a]:
            S[a].add(b)
            queue.append(("S", a, b))

    def add_link(r, a, b):
        if (a, b) not in R[r]:
            R[r].add((a, b))
            succ[a][r].add(b)
            pred[b][r].add(a)
            queue.append(("R", r, a, b))

    names.add(BOTTOM)
    for a in sorted(names):
        add_sub(a, a)
        add_sub(a, TOP)

    while queue:
        item = queue.popleft()
        if item[0] == "S":
            _, a, b = item
            for c in told[b]:
                add_sub(a, c)
            for other, c in conj[b]:
                if other in S[a]:
                    add_sub(a, c)
            for r, c in told_ex[b]:
                add_link(r, a, c)
            # b newly in S(a): predecessors x with (x, a) ∈ R(r)
            for r, xs in list(pred[a].items()):
                for d in restr.get((r, b), ()):
                    for x in list(xs):
                        add_sub(x, d)
                if b == BOTTOM:
                    for x in list(xs):
                        add_sub(x, BOTTOM)
        else:
            _, r, a, b = item
            for b_sup in list(S[b]):
                for d in restr.get((r, b_sup), ()):
                    add_sub(a, d)
            if BOTTOM in S[b]:
                add_sub(a, BOTTOM)
            for s in super_roles[r]:
                add_link(s, a, b)
            for s, t in chains_left[r]:
                for c in list(succ[b][s]):
                    add_link(t, a, c)
            for r0, t in chains_right[r]:
                for x in list(pred[a][r0]):
                    add_link(t, x, b)

    return _extract(n, S, R)


def _extract(n: NormalizedAxiomSet, S, R) -> ClosureFacts:
    named = set(n.classes)
    subs = set()
    for a in named:
        for b in S.get(a, ()):
            if b == a or b == TOP:
                continue
            if b in named or b == BOTTOM:
                subs.add((a, b))
    exs = set()
    for r in n.roles:
        for a, x in R.get(r, ()):
            if a not in named:
                continue
            for b in S.get(x, ()):
                if b in named:
                    exs.add((a, r, b))
    return ClosureFacts(frozenset(subs), frozenset(exs))


def classify(ontology: Ontology) -> ClosureFacts:
    """Normalize then saturate."""
    return saturate(normalize(ontology))


def closure_diff(full: ClosureFacts, reduced: ClosureFacts, pattern: str = "sub") -> list:
    """Axioms of ``pattern`` entailed by ``full`` but not by ``reduced``."""
    if pattern == "sub":
        pairs = sorted(p for p in full.subsumptions - reduced.subsumptions
                       if p[1] != BOTTOM)
        return [SubClassOf(Named(c), Named(d)) for c, d in pairs]
    if pattern == "ex":
        triples = sorted(full.existentials - reduced.existentials)
        return [SubClassOf(Named(c), Exists(r, Named(d))) for c, r, d in triples]
    raise ValueError(f"unknown pattern {pattern!r}; expected 'sub' or 'ex'")


# --------------------------------------------------------------------------
# TSV
# --------------------------------------------------------------------------


def write_closure(facts: ClosureFacts, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c, d in sorted(facts.subsumptions):
            fh.write(f"sub\t{c}\t{d}\n")
        for c, r, d in sorted(facts.existentials):
            fh.write(f"ex\t{c}\t{r}\t{d}\n")


def read_closure(path) -> ClosureFacts:
    subs, exs = set(), set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if parts[0] == "sub" and len(parts) == 3:
                subs.add((parts[1], parts[2]))
            elif parts[0] == "ex" and len(parts) == 4:
                exs.add((parts[1], parts[2], parts[3]))
            else:
                raise ValueError(f"{path}:{lineno}: malformed closure line {line!r}")
    return ClosureFacts(frozenset(subs), frozenset(exs))
