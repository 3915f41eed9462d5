"""Description Logic axiom AST, signatures and ontologies.

All node types are frozen dataclasses, so they hash and compare
structurally and can be used as dictionary keys and set members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

import numpy as np

TOP_NAME = "owl:Thing"
BOTTOM_NAME = "owl:Nothing"


# --------------------------------------------------------------------------
# Class expressions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Named:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Top:
    def __repr__(self):
        return "⊤"


@dataclass(frozen=True)
class Bottom:
    def __repr__(self):
        return "⊥"


@dataclass(frozen=True)
class Not:
    operand: "ClassExpression"

    def __repr__(self):
        return f"¬{self.operand!r}"


@dataclass(frozen=True)
class And:
    operands: tuple

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise ValueError("And needs at least two operands")

    def __repr__(self):
        return "(" + " ⊓ ".join(map(repr, self.operands)) + ")"


@dataclass(frozen=True)
class Or:
    operands: tuple

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise ValueError("Or needs at least two operands")

    def __repr__(self):
        return "(" + " ⊔ ".join(map(repr, self.operands)) + ")"


@dataclass(frozen=True)
class Exists:
    role: str
    filler: "ClassExpression"

    def __repr__(self):
        return f"∃{self.role}.{self.filler!r}"


@dataclass(frozen=True)
class Forall:
    role: str
    filler: "ClassExpression"

    def __repr__(self):
        return f"∀{self.role}.{self.filler!r}"


ClassExpression = Union[Named, Top, Bottom, Not, And, Or, Exists, Forall]
Restriction = (Exists, Forall)


def depth(expr: ClassExpression) -> int:
    """Nesting depth of a class expression; atoms have depth 1."""
    if isinstance(expr, (Named, Top, Bottom)):
        return 1
    if isinstance(expr, Not):
        return 1 + depth(expr.operand)
    if isinstance(expr, (And, Or)):
        return 1 + max(depth(op) for op in expr.operands)
    return 1 + depth(expr.filler)


def iter_subexpressions(expr: ClassExpression) -> Iterator[ClassExpression]:
    """Pre-order traversal of ``expr``."""
    yield expr
    if isinstance(expr, Not):
        yield from iter_subexpressions(expr.operand)
    elif isinstance(expr, (And, Or)):
        for op in expr.operands:
            yield from iter_subexpressions(op)
    elif isinstance(expr, Restriction):
        yield from iter_subexpressions(expr.filler)


# --------------------------------------------------------------------------
# Axioms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SubClassOf:
    sub: ClassExpression
    sup: ClassExpression

    def __repr__(self):
        return f"{self.sub!r} ⊑ {self.sup!r}"


@dataclass(frozen=True)
class EquivalentClasses:
    operands: tuple

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise ValueError("EquivalentClasses needs at least two members")
        if len(set(self.operands)) != len(self.operands):
            # a repeated member adds nothing and makes the RDF chain ambiguous
            raise ValueError("EquivalentClasses members must be distinct")

    def __repr__(self):
        return " ≡ ".join(map(repr, self.operands))


@dataclass(frozen=True)
class DisjointClasses:
    first: ClassExpression
    second: ClassExpression

    def __repr__(self):
        return f"Disjoint({self.first!r}, {self.second!r})"


@dataclass(frozen=True)
class SubRoleOf:
    sub: str
    sup: str


@dataclass(frozen=True)
class InverseRoles:
    first: str
    second: str


@dataclass(frozen=True)
class RoleChain:
    chain: tuple
    sup: str

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        if len(self.chain) < 2:
            raise ValueError("a role chain needs at least two roles")


@dataclass(frozen=True)
class Domain:
    role: str
    cls: ClassExpression


@dataclass(frozen=True)
class Range:
    role: str
    cls: ClassExpression


@dataclass(frozen=True)
class ClassAssertion:
    cls: ClassExpression
    individual: str


@dataclass(frozen=True)
class RoleAssertion:
    role: str
    subject: str
    object: str


Axiom = Union[
    SubClassOf,
    EquivalentClasses,
    DisjointClasses,
    SubRoleOf,
    InverseRoles,
    RoleChain,
    Domain,
    Range,
    ClassAssertion,
    RoleAssertion,
]


def class_expressions(axiom: Axiom) -> tuple:
    """The top-level class expressions mentioned by ``axiom``."""
    if isinstance(axiom, SubClassOf):
        return (axiom.sub, axiom.sup)
    if isinstance(axiom, EquivalentClasses):
        return axiom.operands
    if isinstance(axiom, DisjointClasses):
        return (axiom.first, axiom.second)
    if isinstance(axiom, (Domain, Range, ClassAssertion)):
        return (axiom.cls,)
    return ()


def axiom_roles(axiom: Axiom) -> set:
    roles = set()
    for expr in class_expressions(axiom):
        for sub in iter_subexpressions(expr):
            if isinstance(sub, Restriction):
                roles.add(sub.role)
    if isinstance(axiom, SubRoleOf):
        roles.update((axiom.sub, axiom.sup))
    elif isinstance(axiom, InverseRoles):
        roles.update((axiom.first, axiom.second))
    elif isinstance(axiom, RoleChain):
        roles.update(axiom.chain)
        roles.add(axiom.sup)
    elif isinstance(axiom, (Domain, Range, RoleAssertion)):
        roles.add(axiom.role)
    return roles


def axiom_classes(axiom: Axiom) -> set:
    return {
        sub.name
        for expr in class_expressions(axiom)
        for sub in iter_subexpressions(expr)
        if isinstance(sub, Named)
    }


def axiom_individuals(axiom: Axiom) -> set:
    if isinstance(axiom, ClassAssertion):
        return {axiom.individual}
    if isinstance(axiom, RoleAssertion):
        return {axiom.subject, axiom.object}
    return set()


def expand_equivalence(axiom: EquivalentClasses) -> list:
    """Pairwise bidirectional SubClassOf axioms for an equivalence."""
    ops = axiom.operands
    out = []
    for i, a in enumerate(ops):
        for b in ops[i + 1:]:
            out.append(SubClassOf(a, b))
            out.append(SubClassOf(b, a))
    return out


# --------------------------------------------------------------------------
# Signature and ontology
# --------------------------------------------------------------------------


class SignatureError(ValueError):
    """An identifier is used both as a class, role or individual."""


@dataclass(frozen=True)
class Signature:
    classes: frozenset = frozenset()
    roles: frozenset = frozenset()
    individuals: frozenset = frozenset()

    def __post_init__(self):
        for attr in ("classes", "roles", "individuals"):
            object.__setattr__(self, attr, frozenset(getattr(self, attr)))
        for a, b in (("classes", "roles"), ("classes", "individuals"),
                     ("roles", "individuals")):
            clash = getattr(self, a) & getattr(self, b)
            if clash:
                raise SignatureError(
                    f"identifiers used as both {a} and {b}: {sorted(clash)}")

    def __contains__(self, name):
        return name in self.classes or name in self.roles or name in self.individuals

    def union(self, other: "Signature") -> "Signature":
        return Signature(self.classes | other.classes, self.roles | other.roles,
                         self.individuals | other.individuals)

    @classmethod
    def of_axioms(cls, axioms: Iterable[Axiom]) -> "Signature":
        classes, roles, individuals = set(), set(), set()
        for ax in axioms:
            classes |= axiom_classes(ax)
            roles |= axiom_roles(ax)
            individuals |= axiom_individuals(ax)
        return cls(classes, roles, individuals)


@dataclass(frozen=True)
class Ontology:
    """An ordered list of axioms over a signature closed over them."""

    axioms: tuple = ()
    signature: Signature = None
    prefixes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        used = Signature.of_axioms(self.axioms)
        sig = used if self.signature is None else self.signature.union(used)
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "prefixes", tuple(self.prefixes))

    def __len__(self):
        return len(self.axioms)

    def __iter__(self):
        return iter(self.axioms)

    @property
    def classes(self) -> list:
        return sorted(self.signature.classes)

    def with_axioms(self, axioms) -> "Ontology":
        """A new ontology over the same signature with other axioms."""
        return Ontology(tuple(axioms), self.signature, self.prefixes)


# --------------------------------------------------------------------------
# Ablation splits
# --------------------------------------------------------------------------


def is_sub_axiom(axiom: Axiom) -> bool:
    """``C ⊑ D`` between named classes."""
    return (isinstance(axiom, SubClassOf) and isinstance(axiom.sub, Named)
            and isinstance(axiom.sup, Named))


def is_ex_axiom(axiom: Axiom) -> bool:
    """``C ⊑ ∃R.D`` with C and D named."""
    return (isinstance(axiom, SubClassOf) and isinstance(axiom.sub, Named)
            and isinstance(axiom.sup, Exists) and isinstance(axiom.sup.filler, Named))


SPLIT_PATTERNS = {"sub": is_sub_axiom, "ex": is_ex_axiom}


def _parse_split_pattern(pattern) -> tuple:
    if isinstance(pattern, str):
        parts = pattern.split("_") if pattern not in SPLIT_PATTERNS else [pattern]
    else:
        parts = list(pattern)
    for p in parts:
        if p not in SPLIT_PATTERNS:
            raise ValueError(f"unknown split pattern {p!r}; expected 'sub' or 'ex'")
    return tuple(parts)


def split_ontology(ontology: Ontology, pattern="sub", fraction: float = 0.1,
                   seed: int = 0):
    """Remove a seeded random fraction of the axioms matching ``pattern``.

    ``pattern`` is ``"sub"``, ``"ex"`` or a combination such as
    ``"sub_ex"``; for combinations each pattern pool loses its own
    ``ceil(fraction * size)`` axioms.

    Returns
    -------
    reduced : Ontology
        Same signature, remaining axioms in original order.
    removed : list
        Removed axioms in original order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    parts = _parse_split_pattern(pattern)
    rng = np.random.default_rng(seed)
    drop = set()
    for part in parts:
        pool = [i for i, ax in enumerate(ontology.axioms)
                if SPLIT_PATTERNS[part](ax) and i not in drop]
        if not pool:
            raise ValueError(f"no axioms match pattern {part!r}")
        # round() first: 0.3 * 100 is 30.000000000000004 in binary floating point
        k = math.ceil(round(fraction * len(pool), 9))
        order = rng.permutation(len(pool))[:k]
        drop.update(pool[j] for j in order)
    reduced = [ax for i, ax in enumerate(ontology.axioms) if i not in drop]
    removed = [ax for i, ax in enumerate(ontology.axioms) if i in drop]
    return ontology.with_axioms(reduced), removed
