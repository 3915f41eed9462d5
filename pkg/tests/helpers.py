"""Generators and reference implementations shared by the test modules."""

import itertools

import numpy as np
from hypothesis import strategies as st

from ontoproj.dl import (
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
    SubClassOf,
    SubRoleOf,
    Top,
)

CLASS_NAMES = [f"C{i}" for i in range(15)]
ROLE_NAMES = [f"r{i}" for i in range(5)]
INDIVIDUALS = ["a", "b", "c"]

# -- hypothesis strategies for the full AST ------------------------------------

named = st.sampled_from(CLASS_NAMES[:6]).map(Named)
roles = st.sampled_from(ROLE_NAMES[:3])
individuals = st.sampled_from(INDIVIDUALS)


def _extend(children):
    return st.one_of(
        st.builds(Not, children),
        st.lists(children, min_size=2, max_size=3).map(And),
        st.lists(children, min_size=2, max_size=3).map(Or),
        st.builds(Exists, roles, children),
        st.builds(Forall, roles, children),
    )


class_expressions = st.recursive(
    st.one_of(named, st.just(Top()), st.just(Bottom())), _extend, max_leaves=6)

axioms = st.one_of(
    st.builds(SubClassOf, class_expressions, class_expressions),
    st.lists(class_expressions, min_size=2, max_size=3, unique=True).map(EquivalentClasses),
    st.builds(DisjointClasses, class_expressions, class_expressions),
    st.builds(SubRoleOf, roles, roles),
    st.builds(InverseRoles, roles, roles),
    st.builds(RoleChain, st.lists(roles, min_size=2, max_size=3), roles),
    st.builds(Domain, roles, class_expressions),
    st.builds(Range, roles, class_expressions),
    st.builds(ClassAssertion, class_expressions, individuals),
    st.builds(RoleAssertion, roles, individuals, individuals),
)

# EL-only axioms with named operands, for the projection properties
simple_fillers = st.one_of(
    named,
    st.lists(named, min_size=2, max_size=3, unique=True).map(And),
    st.lists(named, min_size=2, max_size=3, unique=True).map(Or),
)
owl2vec_axioms = st.one_of(
    st.builds(SubClassOf, named, named),
    st.builds(SubClassOf, named, st.builds(Exists, roles, simple_fillers)),
    st.builds(SubClassOf, named, st.builds(Forall, roles, simple_fillers)),
    st.builds(SubClassOf, st.builds(Exists, roles, simple_fillers), named),
    st.builds(ClassAssertion, named, individuals),
    st.builds(RoleAssertion, roles, individuals, individuals),
)


# -- random EL ontologies and a naive completion oracle -------------------------


def random_el_ontology(rng, n_classes=15, n_roles=5, n_axioms=40) -> Ontology:
    """Random ontology built from the EL shapes the reasoner supports."""
    C = [Named(c) for c in CLASS_NAMES[:n_classes]]
    R = ROLE_NAMES[:n_roles]

    def c():
        return C[rng.integers(len(C))]

    def r():
        return R[rng.integers(len(R))]

    makers = [
        lambda: SubClassOf(c(), c()),
        lambda: SubClassOf(c(), c()),
        lambda: SubClassOf(And([c(), c()]), c()),
        lambda: SubClassOf(c(), Exists(r(), c())),
        lambda: SubClassOf(c(), Exists(r(), c())),
        lambda: SubClassOf(Exists(r(), c()), c()),
        lambda: SubClassOf(c(), Exists(r(), Exists(r(), c()))),
        lambda: SubClassOf(c(), And([c(), Exists(r(), c())])),
        lambda: EquivalentClasses([c(), And([c(), c()])]),
        lambda: EquivalentClasses([c(), Exists(r(), c())]),
        lambda: DisjointClasses(c(), c()),
        lambda: SubClassOf(c(), Bottom()),
        lambda: SubRoleOf(r(), r()),
        lambda: RoleChain([r(), r()], r()),
        lambda: RoleChain([r(), r(), r()], r()),
        lambda: Domain(r(), c()),
    ]
    weights = np.array([4, 4, 2, 4, 4, 2, 1, 1, 1, 1, 1, 0.3, 1, 1, 0.5, 0.5])
    picks = rng.choice(len(makers), size=n_axioms, p=weights / weights.sum())
    return Ontology([makers[i]() for i in picks])


TOP, BOT = "⊤", "⊥"


def _oracle_rules(ontology):
    """Translate the generator's shapes to completion rules without fresh names."""
    sub, conj, ex_r, ex_l, roles_inc, chains = set(), set(), set(), set(), set(), set()

    def name(e):
        return TOP if isinstance(e, Top) else BOT if isinstance(e, Bottom) else e.name

    def gci(lhs, rhs):
        if isinstance(rhs, And):
            for op in rhs.operands:
                gci(lhs, op)
            return
        if isinstance(rhs, Exists) and isinstance(rhs.filler, Exists):
            raise NotImplementedError
        if isinstance(lhs, And):
            a, b = lhs.operands
            conj.add((name(a), name(b), name(rhs)))
        elif isinstance(lhs, Exists):
            ex_l.add((lhs.role, name(lhs.filler), name(rhs)))
        elif isinstance(rhs, Exists):
            ex_r.add((name(lhs), rhs.role, name(rhs.filler)))
        else:
            sub.add((name(lhs), name(rhs)))

    extra = 0
    for ax in ontology.axioms:
        if isinstance(ax, SubClassOf):
            sup = ax.sup
            if isinstance(sup, Exists) and isinstance(sup.filler, Exists):
                # A ⊑ ∃r.∃s.B: a named witness class is added by hand
                w = f"_w{extra}"
                extra += 1
                ex_r.add((ax.sub.name, sup.role, w))
                ex_r.add((w, sup.filler.role, sup.filler.filler.name))
                continue
            gci(ax.sub, sup)
        elif isinstance(ax, EquivalentClasses):
            a, b = ax.operands
            gci(a, b)
            gci(b, a)
        elif isinstance(ax, DisjointClasses):
            conj.add((ax.first.name, ax.second.name, BOT))
        elif isinstance(ax, SubRoleOf):
            roles_inc.add((ax.sub, ax.sup))
        elif isinstance(ax, RoleChain):
            chains.add((tuple(ax.chain), ax.sup))
        elif isinstance(ax, Domain):
            ex_l.add((ax.role, TOP, ax.cls.name))
    return sub, conj, ex_r, ex_l, roles_inc, chains


def oracle_closure(ontology):
    """Naive fixpoint of the EL completion rules (no indexes, no worklist).

    Returns ``(subsumptions, existentials)`` in the same form as
    :class:`ontoproj.reasoner.ClosureFacts`.
    """
    sub, conj, ex_r, ex_l, roles_inc, chains = _oracle_rules(ontology)
    classes = set(ontology.signature.classes)
    witnesses = {x for (_, _, x) in ex_r if x.startswith("_w")} | \
                {x for (x, _, _) in ex_r if x.startswith("_w")}
    names = classes | witnesses | {TOP, BOT}
    roles = set(ontology.signature.roles)
    S = {a: {a, TOP} for a in names}
    R = {r: set() for r in roles}
    changed = True
    while changed:
        changed = False

        def add_s(a, b):
            nonlocal changed
            if b not in S[a]:
                S[a].add(b)
                changed = True

        def add_r(r, a, b):
            nonlocal changed
            if (a, b) not in R[r]:
                R[r].add((a, b))
                changed = True

        for a in names:
            for x, y in sub:
                if x in S[a]:
                    add_s(a, y)
            for x, y, z in conj:
                if x in S[a] and y in S[a]:
                    add_s(a, z)
            for x, r, y in ex_r:
                if x in S[a]:
                    add_r(r, a, y)
        for r in roles:
            for a, b in list(R[r]):
                for rr, x, y in ex_l:
                    if rr == r and x in S[b]:
                        add_s(a, y)
                if BOT in S[b]:
                    add_s(a, BOT)
                for s, t in roles_inc:
                    if s == r:
                        add_r(t, a, b)
        for chain, t in chains:
            pairs = set(R[chain[0]])
            for role in chain[1:]:
                pairs = {(a, c) for a, b in pairs for b2, c in R[role] if b == b2}
            for a, c in pairs:
                add_r(t, a, c)
    subs = {(a, b if b != BOT else "owl:Nothing")
            for a in classes for b in S[a]
            if b != a and b != TOP and (b in classes or b == BOT)}
    exs = {(a, r, b) for r in roles for a, x in R[r] if a in classes
           for b in S[x] if b in classes}
    return subs, exs


def brute_force_rank(scores, target, pessimistic=True):
    s = scores[target]
    better = sum(1 for i, v in enumerate(scores) if i != target and v < s)
    tied = sum(1 for i, v in enumerate(scores) if i != target and v == s)
    return 1 + better + (tied if pessimistic else 0)


def all_substitutions(pattern_fn, classes, roles):
    """Every (X, R, Y) substitution, for checking pattern matching exhaustively."""
    return [pattern_fn(x, r, y) for x, r, y in itertools.product(classes, roles, classes)]


# -- kge fixtures ----------------------------------------------------------------


def taxonomy_ontology(branching=(7, 6)) -> Ontology:
    """Balanced taxonomy; the default gives 1 + 7 + 42 = 50 classes in 3 levels."""
    axioms, level = [], ["T0"]
    for width in branching:
        nxt = []
        for parent in level:
            for j in range(width):
                child = f"{parent}_{j}"
                axioms.append(SubClassOf(Named(child), Named(parent)))
                nxt.append(child)
        level = nxt
    return Ontology(axioms)


def random_params(rng, tag, n_nodes=4, n_labels=2, dim=3):
    params = {"entity": rng.normal(size=(n_nodes, dim)),
              "relation": rng.normal(size=(n_labels, dim))}
    if tag == "transr":
        params["matrix"] = rng.normal(size=(n_labels, dim, dim))
    return params


def gradient_relative_error(rng, tag, norm="L2", step=1e-5, batch=3, kink=1e-3):
    """Norm-wise relative error of analytic vs central-difference gradients.

    The objective is piecewise smooth; points whose hinge or norm argument
    lies within ``kink`` of a non-differentiable set are redrawn, since a
    finite difference across the kink does not estimate a derivative.
    """
    from ontoproj.kge import distances, objective

    while True:
        params = random_params(rng, tag)
        n_nodes, n_labels = len(params["entity"]), len(params["relation"])
        pos = np.column_stack([rng.integers(n_nodes, size=batch), rng.integers(n_labels, size=batch),
                               rng.integers(n_nodes, size=batch)])
        neg = pos.copy()
        neg[:, 2] = (pos[:, 2] + 1 + rng.integers(n_nodes - 1, size=batch)) % n_nodes
        margin = rng.uniform(0, 1)
        l2 = rng.choice([0.0, 1e-3])
        M = params.get("matrix")
        dp = distances(params["entity"], params["relation"], M, pos, norm)
        dn = distances(params["entity"], params["relation"], M, neg, norm)
        if np.any(np.abs(dp - dn + margin) < kink) or min(dp.min(), dn.min()) < kink:
            continue
        if norm == "L1":
            parts = []
            for tr in (pos, neg):
                h, r, t = tr.T
                x = params["entity"][h] - params["entity"][t]
                u = (np.einsum("bi,bij->bj", x, M[r]) if M is not None else x) + params["relation"][r]
                parts.append(np.abs(u).min())
            if min(parts) < kink:
                continue
        break

    _, grads = objective(params, pos, neg, margin, l2, norm)
    analytic, numeric = [], []
    for key, arr in params.items():
        flat = arr.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up, _ = objective(params, pos, neg, margin, l2, norm)
            flat[i] = old - step
            down, _ = objective(params, pos, neg, margin, l2, norm)
            flat[i] = old
            numeric.append((up - down) / (2 * step))
        analytic.append(grads[key].reshape(-1))
    a, n = np.concatenate(analytic), np.asarray(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    return 0.0 if scale < 1e-12 else float(np.linalg.norm(a - n) / scale)


def untrained_model(graph, dim=16, seed=0, tag="transe", norm="L2"):
    """A model holding its random initialization, bound to ``graph``."""
    from ontoproj.kge import make_model

    model = make_model(tag, dim=dim, seed=seed, norm=norm)
    model._set_params(model.init_params(graph.n_nodes, graph.n_labels, np.random.default_rng(seed)))
    model._bind_graph(graph)
    model.loss_curve_ = []
    return model


def class_graph(n_classes, roles=("R",)):
    """Graph whose nodes are classes ``K0..K{n-1}`` and whose labels are
    ``subclassof`` plus ``roles``; it has no edges."""
    from ontoproj.graph import RelationalGraph, Vocab
    from ontoproj.projection import SUBCLASSOF

    return RelationalGraph(Vocab(f"K{i}" for i in range(n_classes)),
                           Vocab([SUBCLASSOF, *roles]))
