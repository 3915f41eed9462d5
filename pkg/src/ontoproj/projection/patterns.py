"""Relational-pattern projection driven by axiom templates.

A pattern is one or more axiom templates with ``?``-variables plus an
output edge template::

    SubClassOf(?X ObjectSomeValuesFrom(?R ?Y)) => (?X ?R ?Y)

Patterns are matched against the deductive closure together with the
asserted axioms.  Matching a template against the available facts gives
exactly the instantiations that substituting every class and role name
would, without enumerating the |C|² or |C|²|R| substitutions.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import re
from collections import defaultdict

from ..dl import (
    And,
    Bottom,
    DisjointClasses,
    EquivalentClasses,
    Exists,
    Forall,
    Named,
    Or,
    SubClassOf,
)
from ..graph import Edge
from .base import RESERVED_LABELS, Projector, Unprojectable

logger = logging.getLogger(__name__)

_VAR_RE = re.compile(r"\?[A-Za-z0-9_]+")


class PatternError(ValueError):
    """A malformed relational pattern."""


def is_variable(term) -> bool:
    return isinstance(term, str) and term.startswith("?")


def _template_variables(node) -> set:
    if isinstance(node, str):
        return {node} if is_variable(node) else set()
    if isinstance(node, tuple):
        children = node
    elif dataclasses.is_dataclass(node):
        children = [getattr(node, f.name) for f in dataclasses.fields(node)]
    else:
        return set()
    return set().union(set(), *map(_template_variables, children))


@dataclasses.dataclass(frozen=True)
class RelationalPattern:
    """Axiom templates and the edge emitted for each joint match.

    ``label`` may embed variables (``"⊓?Y"``); ``head``, ``label`` and
    ``tail`` may also be constants.
    """

    premises: tuple
    head: str
    label: str
    tail: str

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(self.premises))
        if not self.premises:
            raise PatternError("a pattern needs at least one axiom template")
        bound = set().union(*map(_template_variables, self.premises))
        used = set(_VAR_RE.findall(self.head + " " + self.label + " " + self.tail))
        missing = used - bound
        if missing:
            raise PatternError(f"unbound output variable(s) {sorted(missing)}")

    def emit(self, binding) -> Edge:
        def fill(term):
            return _VAR_RE.sub(lambda m: binding[m.group(0)], term)
        return Edge(fill(self.head), fill(self.label), fill(self.tail))

    def __str__(self):
        from ..syntax import format_name, serialize_axiom
        templates = ", ".join(serialize_axiom(p) for p in self.premises)
        return f"{templates} => ({' '.join(map(format_name, (self.head, self.label, self.tail)))})"


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


def _split_top_level(text: str) -> list:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return [p.strip() for p in parts]


def _edge_term(token: str) -> str:
    if token.startswith(":"):
        return token[1:]
    if not is_variable(token) and ":" not in token and "?" not in token:
        reserved = "proj:" + token
        if reserved in RESERVED_LABELS:
            return reserved
    return token


def parse_pattern(line: str) -> RelationalPattern:
    """Parse ``TEMPLATE[, TEMPLATE...] => (head label tail)``."""
    from ..syntax import ParseError, parse_axiom
    if "=>" not in line:
        raise PatternError(f"missing '=>' in pattern {line!r}")
    lhs, rhs = line.rsplit("=>", 1)
    rhs = rhs.strip()
    if not (rhs.startswith("(") and rhs.endswith(")")):
        raise PatternError(f"edge template must be '(head label tail)': {rhs!r}")
    terms = rhs[1:-1].split()
    if len(terms) != 3:
        raise PatternError(f"edge template needs three terms: {rhs!r}")
    try:
        premises = [parse_axiom(t, allow_variables=True) for t in _split_top_level(lhs)]
    except ParseError as exc:
        raise PatternError(f"bad axiom template: {exc}") from None
    return RelationalPattern(premises, *map(_edge_term, terms))


def parse_patterns(text: str) -> list:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_pattern(line))
        except PatternError as exc:
            raise PatternError(f"line {lineno}: {exc}") from None
    return out


def load_patterns(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return parse_patterns(fh.read())


SUBCLASS_PATTERN = parse_pattern("SubClassOf(?X ?Y) => (?X subclassof ?Y)")
EXISTENTIAL_PATTERN = parse_pattern("SubClassOf(?X ObjectSomeValuesFrom(?R ?Y)) => (?X ?R ?Y)")
DISJOINT_PATTERN = parse_pattern("DisjointClasses(?X ?Y) => (?X disjointwith ?Y)")
DEFAULT_PATTERNS = (SUBCLASS_PATTERN, EXISTENTIAL_PATTERN, DISJOINT_PATTERN)

# C ⊓ D ⊑ ⊥ as the two edges (C, ⊓D, ⊥) and (D, ⊓C, ⊥)
DISJOINT_INTERSECTION_PATTERN = parse_pattern(
    "SubClassOf(ObjectIntersectionOf(?X ?Y) owl:Nothing) => (?X ⊓?Y owl:Nothing)")


# --------------------------------------------------------------------------
# Matching
# --------------------------------------------------------------------------


def _bind(var, value, binding):
    old = binding.get(var)
    if old is None:
        return {**binding, var: value}
    return binding if old == value else None


def _match(t, c, binding, forall_as_exists=False):
    """Yield every extension of ``binding`` under which ``t`` equals ``c``."""
    if isinstance(t, str):
        if is_variable(t):
            b = _bind(t, c, binding)
            if b is not None:
                yield b
        elif t == c:
            yield binding
        return
    if isinstance(t, Named) and is_variable(t.name):
        # class variables range over class names only
        if isinstance(c, Named):
            b = _bind(t.name, c.name, binding)
            if b is not None:
                yield b
        return
    if isinstance(t, tuple):
        if isinstance(c, tuple):
            yield from _match_seq(t, c, binding, forall_as_exists)
        return
    if isinstance(t, Exists) and forall_as_exists and isinstance(c, Forall):
        c = Exists(c.role, c.filler)
    if type(t) is not type(c):
        return
    if isinstance(t, (And, Or)):
        if len(t.operands) == len(c.operands):
            for perm in itertools.permutations(c.operands):
                yield from _match_seq(t.operands, perm, binding, forall_as_exists)
        return
    if isinstance(t, EquivalentClasses):
        for members in itertools.permutations(c.operands, len(t.operands)):
            yield from _match_seq(t.operands, members, binding, forall_as_exists)
        return
    if not dataclasses.is_dataclass(t):
        if t == c:
            yield binding
        return
    names = [f.name for f in dataclasses.fields(t)]
    tv = [getattr(t, n) for n in names]
    cv = [getattr(c, n) for n in names]
    yield from _match_seq(tv, cv, binding, forall_as_exists)


def _match_seq(ts, cs, binding, forall_as_exists):
    if len(ts) != len(cs):
        return
    if not ts:
        yield binding
        return
    for b in _match(ts[0], cs[0], binding, forall_as_exists):
        yield from _match_seq(ts[1:], cs[1:], b, forall_as_exists)


def interchangeable(axiom) -> list:
    """``axiom`` plus its ``Disjoint(C, D)`` / ``C ⊓ D ⊑ ⊥`` counterpart."""
    if isinstance(axiom, DisjointClasses):
        return [axiom, SubClassOf(And([axiom.first, axiom.second]), Bottom())]
    if (isinstance(axiom, SubClassOf) and isinstance(axiom.sup, Bottom)
            and isinstance(axiom.sub, And) and len(axiom.sub.operands) == 2):
        return [axiom, DisjointClasses(*axiom.sub.operands)]
    return [axiom]


def substitute(node, binding):
    """Instantiate a template; raises ``KeyError`` on an unbound variable."""
    if isinstance(node, str):
        return binding[node] if is_variable(node) else node
    if isinstance(node, tuple):
        return tuple(substitute(x, binding) for x in node)
    if isinstance(node, Named):
        return Named(binding[node.name]) if is_variable(node.name) else node
    if dataclasses.is_dataclass(node):
        return type(node)(**{f.name: substitute(getattr(node, f.name), binding)
                             for f in dataclasses.fields(node)})
    return node


def _bindings(template, axiom, forall_as_exists, binding=None):
    seen = set()
    for variant in interchangeable(axiom):
        for b in _match(template, variant, binding or {}, forall_as_exists):
            key = frozenset(b.items())
            if key not in seen:
                seen.add(key)
                yield b


class _FactIndex:
    def __init__(self, facts):
        self.by_type = defaultdict(list)
        for f in facts:
            for variant in interchangeable(f):
                self.by_type[type(variant)].append(f)
        for k in self.by_type:
            self.by_type[k] = list(dict.fromkeys(self.by_type[k]))

    def candidates(self, template):
        return self.by_type.get(type(template), ())


# --------------------------------------------------------------------------
# Projector
# --------------------------------------------------------------------------


class PatternProjector(Projector):
    """Relational patterns instantiated over asserted axioms and a closure.

    Parameters
    ----------
    patterns : sequence of RelationalPattern, optional
        Defaults to the subclass, existential and disjointness patterns.
    closure : ClosureFacts, optional
        Entailed facts to match; computed with the EL reasoner during
        ``fit`` when omitted.  Pass ``use_closure=False`` to match the
        asserted axioms only.
    use_closure : bool, default=True
    non_injective : bool, default=False
        Let ∃ templates also match ∀ restrictions, so that both
        quantifiers share one edge.
    """

    method = "patterns"

    def __init__(self, patterns=None, closure=None, use_closure=True, non_injective=False):
        self.patterns = patterns
        self.closure = closure
        self.use_closure = use_closure
        self.non_injective = non_injective

    @property
    def injective(self):
        return not self.non_injective

    def _patterns(self):
        patterns = DEFAULT_PATTERNS if self.patterns is None else tuple(self.patterns)
        if not patterns:
            raise PatternError("at least one pattern is required")
        return patterns

    def fit(self, ontology, y=None):
        super().fit(ontology)
        facts = list(ontology.axioms)
        if self.use_closure:
            closure = self.closure
            if closure is None:
                from ..reasoner import classify
                closure = classify(ontology)
            facts += closure.axioms()
        self.facts_ = list(dict.fromkeys(facts))
        self._index = _FactIndex(self.facts_)
        return self

    def _edges_for(self, axiom, index) -> set:
        out = set()
        for pattern in self._patterns():
            first, rest = pattern.premises[0], pattern.premises[1:]
            if rest and index is None:
                continue
            partial = list(_bindings(first, axiom, self.non_injective))
            for template in rest:
                partial = [b2 for b in partial
                           for fact in index.candidates(template)
                           for b2 in _bindings(template, fact, self.non_injective, b)]
            out.update(pattern.emit(b) for b in partial)
        return out

    def project_axiom(self, axiom) -> frozenset:
        edges = self._edges_for(axiom, getattr(self, "_index", None))
        if not edges:
            raise Unprojectable(f"no pattern matches {axiom!r}")
        return frozenset(edges)

    def _project(self, ontology):
        if getattr(self, "facts_", None) is None or self.signature_ != ontology.signature:
            self.fit(ontology)
        per_axiom = {}
        for fact in self.facts_:
            edges = self._edges_for(fact, self._index)
            if edges:
                per_axiom[fact] = edges
        asserted = list(dict.fromkeys(ontology.axioms))
        used = set(per_axiom)
        for pattern in self._patterns():
            for template in pattern.premises[1:]:
                for fact in self._index.candidates(template):
                    if any(True for _ in _bindings(template, fact, self.non_injective)):
                        used.add(fact)
        skipped = [ax for ax in asserted if ax not in used]
        return per_axiom, skipped, {}

    def transform(self, ontology):
        if getattr(self, "facts_", None) is None:
            self.fit(ontology)
        return super().transform(ontology)

    def invert(self, edges, signature=None) -> frozenset:
        """Axioms recovered from single edges by unifying with output templates.

        Only premises whose variables all occur in the output template can
        be reconstructed.
        """
        edges = frozenset(edges)
        candidates = set()
        for pattern in self._patterns():
            out_template = (pattern.head, pattern.label, pattern.tail)
            for edge in edges:
                binding = _unify_edge(out_template, edge)
                if binding is None:
                    continue
                try:
                    ax = substitute(pattern.premises[0], binding)
                except KeyError:
                    continue
                for variant in interchangeable(ax):
                    candidates.update(_reorderings(variant))
        if self.non_injective:
            candidates |= {tw for ax in candidates for tw in _quantifier_variants(ax)}
        found = self._consistent(candidates, edges)
        if not found:
            logger.warning("patterns: no axiom projects onto %s", sorted(edges))
        return found


def _unify_edge(template, edge):
    binding = {}
    for t, value in zip(template, edge):
        parts = [p for p in re.split(r"(\?[A-Za-z0-9_]+)", t) if p]
        regex = "".join(f"(?P<v{i}>.+?)" if is_variable(p) else re.escape(p)
                        for i, p in enumerate(parts))
        m = re.fullmatch(regex, value)
        if m is None:
            return None
        for i, part in enumerate(parts):
            if is_variable(part):
                if m.group(f"v{i}") in RESERVED_LABELS:
                    return None
                binding = _bind(part, m.group(f"v{i}"), binding)
                if binding is None:
                    return None
    return binding


def _reorderings(axiom):
    """The axiom with every ⊓/⊔ operand order (queries may use any order)."""
    options = [_expr_orders(e) for e in _fields(axiom)]
    for combo in itertools.product(*options):
        yield _rebuild(axiom, combo)


def _fields(axiom):
    return [getattr(axiom, f.name) for f in dataclasses.fields(axiom)]


def _rebuild(obj, values):
    return type(obj)(*values)


def _expr_orders(e):
    if isinstance(e, (And, Or)):
        inner = [_expr_orders(op) for op in e.operands]
        out = []
        for combo in itertools.product(*inner):
            for perm in itertools.permutations(combo):
                out.append(type(e)(perm))
        return out
    if isinstance(e, (Exists, Forall)):
        return [type(e)(e.role, f) for f in _expr_orders(e.filler)]
    if isinstance(e, tuple):
        return [tuple(c) for c in itertools.product(*map(_expr_orders, e))]
    return [e]


def _quantifier_variants(axiom):
    def flips(e):
        if isinstance(e, (Exists, Forall)):
            return [q(e.role, f) for q in (Exists, Forall) for f in flips(e.filler)]
        if isinstance(e, (And, Or)):
            return [type(e)(c) for c in itertools.product(*map(flips, e.operands))]
        if isinstance(e, tuple):
            return [tuple(c) for c in itertools.product(*map(flips, e))]
        return [e]
    return [_rebuild(axiom, c) for c in itertools.product(*map(flips, _fields(axiom)))]


def project_patterns(ontology, closure=None, patterns=None, non_injective=False):
    return PatternProjector(patterns=patterns, closure=closure,
                            non_injective=non_injective).fit_transform(ontology)
