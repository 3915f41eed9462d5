"""Axiom scoring through the projection, candidate ranking and metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dl import Exists, Forall, Named, SubClassOf
from .projection import Projector, Unprojectable, get_projector, is_blank

logger = logging.getLogger(__name__)

HITS_AT = (1, 10, 100)
TIE_POLICY = "pessimistic"
AUC_DEFINITION = "100 * mean over queries of (N_q - rank_q) / (N_q - 1)"


class Unscorable(Unprojectable):
    """The axiom's edges mention nodes or labels the model has not seen."""


def _projector(method) -> Projector:
    return method if isinstance(method, Projector) else get_projector(method)


class EdgeSetScorer:
    """Mean edge distance of edge sets under a trained model.

    Blank nodes (from the RDF projection of a query) have no embedding;
    they are placed at the least-squares solution of the translation
    equations of the edges that touch them, then scored like any node.
    """

    def __init__(self, model):
        self.model = model
        self.E = model.entity_
        self.R = model.relation_
        self.M = model.matrices

    def _index(self, edges):
        nodes, labels = self.model.nodes_, self.model.labels_
        rows = []
        for h, r, t in edges:
            ri = labels.get(r)
            hi = None if is_blank(h) else nodes.get(h)
            ti = None if is_blank(t) else nodes.get(t)
            if ri is None or (hi is None and not is_blank(h)) or (ti is None and not is_blank(t)):
                raise Unscorable(f"edge {(h, r, t)} is outside the model vocabulary")
            rows.append((h, hi, ri, t, ti))
        return rows

    def score(self, edges) -> float:
        edges = sorted(edges)
        if not edges:
            raise Unscorable("empty edge set")
        rows = self._index(edges)
        if all(hi is not None and ti is not None for _, hi, _, _, ti in rows):
            return float(np.mean(self.model.score_triples([(hi, ri, ti) for _, hi, ri, _, ti in rows])))
        blanks = {}
        for h, hi, _, t, ti in rows:
            for node, idx in ((h, hi), (t, ti)):
                if idx is None:
                    blanks.setdefault(node, len(blanks))
        vec = self._place(rows, blanks)
        n = self.E.shape[1]
        dists = []
        for h, hi, ri, t, ti in rows:
            hv = self.E[hi] if hi is not None else vec[blanks[h] * n:(blanks[h] + 1) * n]
            tv = self.E[ti] if ti is not None else vec[blanks[t] * n:(blanks[t] + 1) * n]
            u = hv - tv
            if self.M is not None:
                u = u @ self.M[ri]
            u = u + self.R[ri]
            dists.append(np.sum(np.abs(u)) if self.model.norm == "L1" else np.sqrt(u @ u))
        return float(np.mean(dists))

    def _place(self, rows, blanks):
        n = self.E.shape[1]
        A = np.zeros((len(rows) * n, len(blanks) * n))
        b = np.zeros(len(rows) * n)
        eye = np.eye(n)
        for k, (h, hi, ri, t, ti) in enumerate(rows):
            Mt = (self.M[ri] if self.M is not None else eye).T
            block = slice(k * n, (k + 1) * n)
            const = np.zeros(n)
            if hi is None:
                A[block, blanks[h] * n:(blanks[h] + 1) * n] += Mt
            else:
                const += Mt @ self.E[hi]
            if ti is None:
                A[block, blanks[t] * n:(blanks[t] + 1) * n] -= Mt
            else:
                const -= Mt @ self.E[ti]
            b[block] = -(const + self.R[ri])
        return np.linalg.lstsq(A, b, rcond=None)[0]


@dataclass
class AxiomScore:
    axiom: object
    edges: frozenset
    score: float
    tied: frozenset = frozenset()


def score_axiom(model, method, axiom, ties=True, signature=None) -> AxiomScore:
    """Project ``axiom`` and average the distances of its edges.

    Raises
    ------
    Unprojectable
        If the method has no edges for the axiom, or (as
        :class:`Unscorable`) if an edge is unknown to the model.
    """
    projector = _projector(method)
    edges = projector.project_axiom(axiom)
    score = EdgeSetScorer(model).score(edges)
    tied = frozenset()
    if ties and not projector.injective:
        tied = frozenset(projector.invert(edges, signature=signature)) - {axiom}
    return AxiomScore(axiom, edges, score, tied)


def score_axioms(model, method, axioms, scorer=None) -> np.ndarray:
    """Scores of many axioms; unprojectable or unscorable ones are NaN."""
    projector = _projector(method)
    scorer = scorer or EdgeSetScorer(model)
    cache = {}
    out = np.full(len(axioms), np.nan)
    for i, ax in enumerate(axioms):
        try:
            edges = projector.project_axiom(ax)
        except Unprojectable:
            continue
        if edges not in cache:
            try:
                cache[edges] = scorer.score(edges)
            except Unscorable:
                cache[edges] = np.nan
        out[i] = cache[edges]
    return out


def rank_from_scores(scores, target: int, keep=None, optimistic=False) -> tuple:
    """Rank of ``scores[target]`` among ``scores`` (lower is better).

    ``keep`` masks the candidates that take part (the target always does).
    Returns ``(rank, n_candidates)``.
    """
    scores = np.asarray(scores, dtype=float)
    mask = np.ones(len(scores), dtype=bool) if keep is None else np.asarray(keep, dtype=bool).copy()
    mask[target] = False
    others = scores[mask]
    s = scores[target]
    rank = 1 + int(np.sum(others < s))
    if not optimistic:
        rank += int(np.sum(others == s))
    return rank, int(mask.sum()) + 1


def rank_axiom(model, method, target, candidates, filter_set=(), optimistic=False) -> tuple:
    """Raw and filtered rank of ``target`` among ``candidates``.

    Candidates entailed by ``filter_set`` (a set of axioms or a
    :class:`~ontoproj.reasoner.ClosureFacts`) are dropped for the
    filtered rank; the target itself is always kept.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty candidate list")
    try:
        t = candidates.index(target)
    except ValueError:
        raise ValueError("target must be one of the candidates") from None
    scores = score_axioms(model, method, candidates)
    if np.isnan(scores[t]):
        raise Unscorable(f"target {target!r} cannot be scored")
    valid = ~np.isnan(scores)
    raw, _ = rank_from_scores(scores, t, valid, optimistic)
    keep = valid & np.array([c not in filter_set for c in candidates])
    filtered, _ = rank_from_scores(scores, t, keep, optimistic)
    return raw, filtered


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def query_shape(axiom):
    """``("sub", C, None, D)`` or ``("ex", C, R, D)``; ``None`` otherwise."""
    if isinstance(axiom, SubClassOf) and isinstance(axiom.sub, Named):
        if isinstance(axiom.sup, Named):
            return "sub", axiom.sub.name, None, axiom.sup.name
        if isinstance(axiom.sup, (Exists, Forall)) and isinstance(axiom.sup.filler, Named):
            return "ex", axiom.sub.name, axiom.sup.role, axiom.sup.filler.name
    return None


def candidates_for(axiom, classes, mode="A") -> list:
    """Candidate axioms for a query, obtained by replacing its right-hand class.

    Mode ``"B"`` adds the universal twin of every existential candidate.
    """
    shape = query_shape(axiom)
    if shape is None:
        raise ValueError(f"queries must be C ⊑ D or C ⊑ ∃R.D, got {axiom!r}")
    kind, c, role, _ = shape
    if kind == "sub":
        return [SubClassOf(Named(c), Named(d)) for d in classes]
    quantifiers = (Exists,) if mode == "A" else (Exists, Forall)
    return [SubClassOf(Named(c), q(role, Named(d))) for q in quantifiers for d in classes]


def _metrics(ranks, sizes) -> dict:
    ranks = np.asarray(ranks, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    if len(ranks) == 0:
        return {"MR": float("nan"), **{f"H@{k}": float("nan") for k in HITS_AT},
                "AUC": float("nan")}
    auc = np.where(sizes > 1, (sizes - ranks) / np.maximum(sizes - 1, 1), 1.0)
    out = {"MR": float(np.mean(ranks))}
    for k in HITS_AT:
        out[f"H@{k}"] = 100.0 * float(np.mean(ranks <= k))
    out["AUC"] = 100.0 * float(np.mean(auc))
    return out


@dataclass
class EvaluationReport:
    """Per-query ranks and aggregate ranking metrics."""

    method: str
    mode: str
    queries: list = field(default_factory=list)
    raw_ranks: list = field(default_factory=list)
    filtered_ranks: list = field(default_factory=list)
    raw_sizes: list = field(default_factory=list)
    filtered_sizes: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    optimistic: bool = False

    @property
    def raw(self) -> dict:
        return _metrics(self.raw_ranks, self.raw_sizes)

    @property
    def filtered(self) -> dict:
        return _metrics(self.filtered_ranks, self.filtered_sizes)

    def validate(self) -> list:
        """Violated consistency conditions (an empty list means valid)."""
        problems = []
        for q, r, f in zip(self.queries, self.raw_ranks, self.filtered_ranks):
            if f > r:
                problems.append(f"filtered rank {f} > raw rank {r} for {q!r}")
        for name, m in (("raw", self.raw), ("filtered", self.filtered)):
            if not self.queries:
                break
            hits = [m[f"H@{k}"] for k in HITS_AT]
            if any(a > b for a, b in zip(hits, hits[1:])):
                problems.append(f"{name} Hits@k not monotone in k: {hits}")
            if not 0.0 <= m["AUC"] <= 100.0:
                problems.append(f"{name} AUC {m['AUC']} outside [0, 100]")
        if self.queries and self.filtered["MR"] > self.raw["MR"]:
            problems.append("filtered MR exceeds raw MR")
        return problems

    def header(self) -> list:
        ties = "optimistic" if self.optimistic else TIE_POLICY
        return [f"# method={self.method} mode={self.mode} ties={ties}",
                f"# AUC = {AUC_DEFINITION}",
                f"# queries={len(self.queries)} excluded={len(self.excluded)}"]

    def to_tsv(self) -> str:
        cols = ["MR"] + [f"H@{k}" for k in HITS_AT] + ["AUC"]
        lines = self.header() + ["setting\t" + "\t".join(cols)]
        for name, m in (("raw", self.raw), ("filtered", self.filtered)):
            lines.append(name + "\t" + "\t".join(f"{m[c]:.4f}" for c in cols))
        return "\n".join(lines) + "\n"

    def queries_tsv(self) -> str:
        from .syntax import serialize_axiom
        lines = ["query\traw_rank\tfiltered_rank\traw_candidates\tfiltered_candidates"]
        for row in zip(self.queries, self.raw_ranks, self.filtered_ranks,
                       self.raw_sizes, self.filtered_sizes):
            lines.append(serialize_axiom(row[0]) + "\t" + "\t".join(map(str, row[1:])))
        for q in self.excluded:
            lines.append(serialize_axiom(q) + "\t-\t-\t-\t-")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        cols = ["MR"] + [f"H@{k}" for k in HITS_AT] + ["AUC"]
        out = [f"{'':10}" + "".join(f"{c:>11}" for c in cols)]
        for name, m in (("raw", self.raw), ("filtered", self.filtered)):
            out.append(f"{name:10}" + "".join(f"{m[c]:>11.2f}" for c in cols))
        return "\n".join(self.header() + out)


def evaluate(model, method, test_set, mode="A", classes=None, closure=(),
             optimistic=False, signature=None) -> EvaluationReport:
    """Rank every test axiom against its candidates.

    Parameters
    ----------
    model : TransE or TransR
    method : str or Projector
    test_set : list of axioms of shape ``C ⊑ D`` or ``C ⊑ ∃R.D``
    mode : {"A", "B"}
        ``"B"`` ranks existential queries among both quantifiers.
    classes : iterable of str, optional
        Candidate right-hand classes; defaults to ``signature.classes``.
    closure : ClosureFacts or set of axioms
        Entailed axioms removed from the candidates for filtered metrics.
    """
    if mode not in ("A", "B"):
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    test_set = list(test_set)
    if not test_set:
        raise ValueError("empty test set")
    if classes is None:
        if signature is None:
            raise ValueError("either classes or signature is required")
        classes = signature.classes
    classes = sorted(classes)
    projector = _projector(method)
    scorer = EdgeSetScorer(model)
    report = EvaluationReport(getattr(projector, "method", str(method)), mode,
                              optimistic=optimistic)
    for query in test_set:
        cands = candidates_for(query, classes, mode)
        if query not in cands:
            report.excluded.append(query)
            continue
        t = cands.index(query)
        scores = score_axioms(model, projector, cands, scorer)
        if np.isnan(scores[t]):
            report.excluded.append(query)
            continue
        valid = ~np.isnan(scores)
        raw, n_raw = rank_from_scores(scores, t, valid, optimistic)
        keep = valid & np.array([c not in closure for c in cands])
        filt, n_filt = rank_from_scores(scores, t, keep, optimistic)
        report.queries.append(query)
        report.raw_ranks.append(raw)
        report.filtered_ranks.append(filt)
        report.raw_sizes.append(n_raw)
        report.filtered_sizes.append(n_filt)
    if report.excluded:
        logger.info("%d of %d queries could not be scored by %s",
                    len(report.excluded), len(test_set), report.method)
    return report
