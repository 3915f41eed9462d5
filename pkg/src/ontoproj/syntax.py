"""Reader and writer for a subset of OWL functional-style syntax.

Supported statements: ``Prefix``, ``Ontology`` (transparent wrapper),
``Declaration``, ``SubClassOf``, ``EquivalentClasses``,
``DisjointClasses``, ``SubObjectPropertyOf`` (optionally with an
``ObjectPropertyChain``), ``InverseObjectProperties``,
``ObjectPropertyDomain``, ``ObjectPropertyRange``, ``ClassAssertion`` and
``ObjectPropertyAssertion``.  Class constructors: ``ObjectIntersectionOf``,
``ObjectUnionOf``, ``ObjectComplementOf``, ``ObjectSomeValuesFrom``,
``ObjectAllValuesFrom``, ``owl:Thing`` and ``owl:Nothing``.  ``#`` starts a
comment outside of ``<...>`` IRIs.

Identifiers keep their token text, except that the empty default prefix is
dropped: ``:A`` is stored as ``A`` and written back as ``:A``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

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
    Forall,
    InverseRoles,
    Named,
    Not,
    Ontology,
    Or,
    Range,
    RoleAssertion,
    RoleChain,
    Signature,
    SignatureError,
    SubClassOf,
    SubRoleOf,
    Top,
)

DEFAULT_MAX_DEPTH = 64


class ParseError(ValueError):
    """Syntax error in an ontology document, with 1-based position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<eq>=)
  | (?P<iri><[^>\s]*>)
  | (?P<word>[^\s()<>#=]+)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line,
                             pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    return tokens


CLASS_CONSTRUCTORS = {
    "ObjectIntersectionOf",
    "ObjectUnionOf",
    "ObjectComplementOf",
    "ObjectSomeValuesFrom",
    "ObjectAllValuesFrom",
}
AXIOM_KEYWORDS = {
    "SubClassOf",
    "EquivalentClasses",
    "DisjointClasses",
    "SubObjectPropertyOf",
    "InverseObjectProperties",
    "ObjectPropertyDomain",
    "ObjectPropertyRange",
    "ClassAssertion",
    "ObjectPropertyAssertion",
}


def _is_identifier(text: str, allow_variables: bool) -> bool:
    if text.startswith("?"):
        return allow_variables and len(text) > 1
    return ":" in text


def _identifier(text: str) -> str:
    if text.startswith(":"):
        return text[1:]
    return text


class _Parser:
    def __init__(self, text, max_depth=DEFAULT_MAX_DEPTH, allow_variables=False):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.max_depth = max_depth
        self.allow_variables = allow_variables
        self.prefixes = []
        self.declared = {"classes": set(), "roles": set(), "individuals": set()}

    # -- token helpers ---------------------------------------------------
    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _error(self, message, token=None):
        token = token or self._peek()
        if token is None:
            last = self.tokens[-1] if self.tokens else None
            if last is None:
                raise ParseError(message + " (empty input)", 1, 1)
            raise ParseError(message + " (unexpected end of input)", last.line,
                             last.column + len(last.text))
        raise ParseError(message, token.line, token.column)

    def _next(self, kind=None, what=None):
        tok = self._peek()
        if tok is None or (kind is not None and tok.kind != kind):
            self._error(f"expected {what or kind}")
        self.pos += 1
        return tok

    def _open(self):
        self._next("lpar", "'('")

    def _close(self, keyword):
        tok = self._peek()
        if tok is None or tok.kind != "rpar":
            self._error(f"too many arguments or missing ')' for {keyword}")
        self.pos += 1

    def _at_close(self):
        tok = self._peek()
        return tok is not None and tok.kind == "rpar"

    def _name(self, what):
        tok = self._next(what=what)
        if tok.kind == "iri":
            return tok.text
        if tok.kind != "word" or not _is_identifier(tok.text, self.allow_variables):
            self._error(f"expected {what}, got {tok.text!r}", tok)
        if tok.text in (TOP_NAME, BOTTOM_NAME):
            self._error(f"{tok.text} is not allowed as {what}", tok)
        return _identifier(tok.text)

    # -- grammar ---------------------------------------------------------
    def class_expression(self, level=1):
        if level > self.max_depth:
            self._error(f"nesting depth limit {self.max_depth} exceeded")
        tok = self._next(what="class expression")
        if tok.kind == "iri":
            return Named(tok.text)
        if tok.kind != "word":
            self._error("expected class expression", tok)
        if tok.text == TOP_NAME:
            return Top()
        if tok.text == BOTTOM_NAME:
            return Bottom()
        if _is_identifier(tok.text, self.allow_variables):
            return Named(_identifier(tok.text))
        if tok.text not in CLASS_CONSTRUCTORS:
            self._error(f"unknown construct {tok.text!r}", tok)
        keyword = tok.text
        self._open()
        if keyword in ("ObjectIntersectionOf", "ObjectUnionOf"):
            ops = [self.class_expression(level + 1)]
            while not self._at_close():
                ops.append(self.class_expression(level + 1))
            if len(ops) < 2:
                self._error(f"{keyword} needs at least two operands", tok)
            self._close(keyword)
            return And(ops) if keyword == "ObjectIntersectionOf" else Or(ops)
        if keyword == "ObjectComplementOf":
            operand = self.class_expression(level + 1)
            self._close(keyword)
            return Not(operand)
        role = self._name("object property")
        filler = self.class_expression(level + 1)
        self._close(keyword)
        return Exists(role, filler) if keyword == "ObjectSomeValuesFrom" else Forall(role, filler)

    def axiom(self, tok):
        keyword = tok.text
        self._open()
        if keyword == "SubClassOf":
            ax = SubClassOf(self.class_expression(), self.class_expression())
        elif keyword == "EquivalentClasses":
            ops = [self.class_expression()]
            while not self._at_close():
                ops.append(self.class_expression())
            if len(ops) < 2:
                self._error("EquivalentClasses needs at least two members", tok)
            if len(set(ops)) != len(ops):
                self._error("EquivalentClasses members must be distinct", tok)
            ax = EquivalentClasses(ops)
        elif keyword == "DisjointClasses":
            ax = DisjointClasses(self.class_expression(), self.class_expression())
        elif keyword == "SubObjectPropertyOf":
            head = self._peek()
            if head is not None and head.kind == "word" and head.text == "ObjectPropertyChain":
                self.pos += 1
                self._open()
                chain = [self._name("object property")]
                while not self._at_close():
                    chain.append(self._name("object property"))
                if len(chain) < 2:
                    self._error("ObjectPropertyChain needs at least two roles", head)
                self._close("ObjectPropertyChain")
                ax = RoleChain(chain, self._name("object property"))
            else:
                ax = SubRoleOf(self._name("object property"), self._name("object property"))
        elif keyword == "InverseObjectProperties":
            ax = InverseRoles(self._name("object property"), self._name("object property"))
        elif keyword == "ObjectPropertyDomain":
            ax = Domain(self._name("object property"), self.class_expression())
        elif keyword == "ObjectPropertyRange":
            ax = Range(self._name("object property"), self.class_expression())
        elif keyword == "ClassAssertion":
            ax = ClassAssertion(self.class_expression(), self._name("individual"))
        else:
            ax = RoleAssertion(self._name("object property"), self._name("individual"),
                               self._name("individual"))
        self._close(keyword)
        return ax

    def prefix(self):
        self._open()
        tok = self._next("word", "prefix name")
        if not tok.text.endswith(":"):
            self._error("prefix name must end with ':'", tok)
        self._next("eq", "'='")
        iri = self._next("iri", "IRI")
        self._close("Prefix")
        self.prefixes.append((tok.text, iri.text))

    def declaration(self):
        self._open()
        tok = self._next("word", "entity type")
        kinds = {"Class": "classes", "ObjectProperty": "roles",
                 "NamedIndividual": "individuals"}
        if tok.text not in kinds:
            self._error(f"unknown construct {tok.text!r}", tok)
        self._open()
        self.declared[kinds[tok.text]].add(self._name("entity name"))
        self._close(tok.text)
        self._close("Declaration")

    def statements(self, axioms, inside_ontology=False):
        while True:
            tok = self._peek()
            if tok is None:
                if inside_ontology:
                    self._error("missing ')' for Ontology")
                return
            if tok.kind == "rpar" and inside_ontology:
                self.pos += 1
                return
            if tok.kind != "word":
                self._error(f"expected a statement, got {tok.text!r}", tok)
            self.pos += 1
            if tok.text == "Prefix":
                self.prefix()
            elif tok.text == "Ontology":
                if inside_ontology:
                    self._error("nested Ontology", tok)
                self._open()
                while self._peek() is not None and self._peek().kind == "iri":
                    self.pos += 1
                self.statements(axioms, inside_ontology=True)
            elif tok.text == "Declaration":
                self.declaration()
            elif tok.text in AXIOM_KEYWORDS:
                axioms.append(self.axiom(tok))
            else:
                self._error(f"unknown construct {tok.text!r}", tok)


def parse_ontology(text: str, max_depth: int = DEFAULT_MAX_DEPTH) -> Ontology:
    """Parse a functional-syntax document into an :class:`Ontology`.

    Raises
    ------
    ParseError
        On syntax errors, unknown constructs, arity violations, exceeded
        nesting depth, or identifiers used in two roles (class, property,
        individual).
    """
    parser = _Parser(text, max_depth=max_depth)
    axioms = []
    parser.statements(axioms)
    try:
        declared = Signature(**parser.declared)
        return Ontology(axioms, declared, tuple(parser.prefixes))
    except SignatureError as exc:
        raise ParseError(str(exc)) from None


def load_ontology(path, max_depth: int = DEFAULT_MAX_DEPTH) -> Ontology:
    with open(path, encoding="utf-8") as fh:
        return parse_ontology(fh.read(), max_depth=max_depth)


def parse_axiom(text: str, allow_variables: bool = False,
                max_depth: int = DEFAULT_MAX_DEPTH):
    """Parse exactly one axiom.  ``?X`` variables are accepted on request."""
    parser = _Parser(text, max_depth=max_depth, allow_variables=allow_variables)
    tok = parser._next("word", "axiom")
    if tok.text not in AXIOM_KEYWORDS:
        parser._error(f"unknown construct {tok.text!r}", tok)
    ax = parser.axiom(tok)
    if parser._peek() is not None:
        parser._error("trailing input after axiom")
    return ax


def parse_class_expression(text: str, allow_variables: bool = False):
    parser = _Parser(text, allow_variables=allow_variables)
    expr = parser.class_expression()
    if parser._peek() is not None:
        parser._error("trailing input after class expression")
    return expr


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def format_name(name: str) -> str:
    if name.startswith(("<", "?")) or ":" in name:
        return name
    return ":" + name


def serialize_class_expression(expr) -> str:
    if isinstance(expr, Named):
        return format_name(expr.name)
    if isinstance(expr, Top):
        return TOP_NAME
    if isinstance(expr, Bottom):
        return BOTTOM_NAME
    if isinstance(expr, Not):
        return f"ObjectComplementOf({serialize_class_expression(expr.operand)})"
    if isinstance(expr, (And, Or)):
        keyword = "ObjectIntersectionOf" if isinstance(expr, And) else "ObjectUnionOf"
        return f"{keyword}({' '.join(map(serialize_class_expression, expr.operands))})"
    keyword = "ObjectSomeValuesFrom" if isinstance(expr, Exists) else "ObjectAllValuesFrom"
    return f"{keyword}({format_name(expr.role)} {serialize_class_expression(expr.filler)})"


def serialize_axiom(axiom) -> str:
    """Render ``axiom`` so that ``parse_axiom`` gives it back unchanged."""
    ce = serialize_class_expression
    n = format_name
    if isinstance(axiom, SubClassOf):
        return f"SubClassOf({ce(axiom.sub)} {ce(axiom.sup)})"
    if isinstance(axiom, EquivalentClasses):
        return f"EquivalentClasses({' '.join(map(ce, axiom.operands))})"
    if isinstance(axiom, DisjointClasses):
        return f"DisjointClasses({ce(axiom.first)} {ce(axiom.second)})"
    if isinstance(axiom, SubRoleOf):
        return f"SubObjectPropertyOf({n(axiom.sub)} {n(axiom.sup)})"
    if isinstance(axiom, RoleChain):
        chain = " ".join(map(n, axiom.chain))
        return f"SubObjectPropertyOf(ObjectPropertyChain({chain}) {n(axiom.sup)})"
    if isinstance(axiom, InverseRoles):
        return f"InverseObjectProperties({n(axiom.first)} {n(axiom.second)})"
    if isinstance(axiom, Domain):
        return f"ObjectPropertyDomain({n(axiom.role)} {ce(axiom.cls)})"
    if isinstance(axiom, Range):
        return f"ObjectPropertyRange({n(axiom.role)} {ce(axiom.cls)})"
    if isinstance(axiom, ClassAssertion):
        return f"ClassAssertion({ce(axiom.cls)} {n(axiom.individual)})"
    if isinstance(axiom, RoleAssertion):
        return (f"ObjectPropertyAssertion({n(axiom.role)} {n(axiom.subject)} "
                f"{n(axiom.object)})")
    raise TypeError(f"not an axiom: {axiom!r}")


def serialize_ontology(ontology: Ontology) -> str:
    """Document text; declarations are written only for unused names."""
    lines = [f"Prefix({name}={iri})" for name, iri in ontology.prefixes]
    used = Signature.of_axioms(ontology.axioms)
    sig = ontology.signature
    for kind, attr in (("Class", "classes"), ("ObjectProperty", "roles"),
                       ("NamedIndividual", "individuals")):
        for name in sorted(getattr(sig, attr) - getattr(used, attr)):
            lines.append(f"Declaration({kind}({format_name(name)}))")
    lines.extend(serialize_axiom(ax) for ax in ontology.axioms)
    return "\n".join(lines) + "\n"


def save_ontology(ontology: Ontology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_ontology(ontology))
