"""Translational graph embeddings (TransE, TransR) trained with a margin loss.

Distances:

* TransE: ``d(h, r, t) = ||h + r - t||``
* TransR: ``d(h, r, t) = ||h M_r + r - t M_r||``

Both are written as ``||(h - t) M_r + r||`` with ``M_r = I`` for TransE,
which is what the shared gradient code uses.
"""

from __future__ import annotations

import json
import logging
import math
import struct

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .graph import RelationalGraph, Vocab, corrupt, vocab_hash

logger = logging.getLogger(__name__)

NORMS = ("L1", "L2")


class TrainingDiverged(RuntimeError):
    """The training loss became non-finite."""


class CheckpointError(ValueError):
    """A checkpoint file cannot be read."""


class VocabMismatch(CheckpointError):
    """The checkpoint was trained on a graph with different vocabularies."""


def margin_loss(d_pos, d_neg, margin):
    """``max(0, d_pos - d_neg + margin)``, elementwise."""
    if np.any(np.asarray(margin) < 0):
        raise ValueError("margin must be non-negative")
    out = np.maximum(0.0, np.asarray(d_pos, dtype=float) - d_neg + margin)
    return float(out) if out.ndim == 0 else out


def _norm(u, norm):
    if norm == "L2":
        return np.sqrt(np.sum(u * u, axis=-1))
    return np.sum(np.abs(u), axis=-1)


def _norm_grad(u, norm):
    """Gradient of ``||u||`` with respect to ``u`` (zero at the origin)."""
    if norm == "L1":
        return np.sign(u)
    d = np.sqrt(np.sum(u * u, axis=-1, keepdims=True))
    return np.divide(u, d, out=np.zeros_like(u), where=d > 0)


def distances(entity, relation, matrices, triples, norm="L2"):
    """Distance of each ``(h, r, t)`` index triple.

    ``matrices`` is ``None`` for TransE, otherwise an ``(|L|, n, n)`` array.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    h, r, t = triples.T
    diff = entity[h] - entity[t]
    if matrices is not None:
        diff = np.einsum("bi,bij->bj", diff, matrices[r])
    return _norm(diff + relation[r], norm)


def objective(params, pos, neg, margin, l2=0.0, norm="L2"):
    """Summed margin loss over paired positives/negatives plus L2 penalty.

    Parameters
    ----------
    params : dict
        ``entity`` (|V|, n), ``relation`` (|L|, n) and, for TransR,
        ``matrix`` (|L|, n, n).
    pos, neg : ndarray of shape (b, 3)
        Index triples; row ``i`` of ``neg`` is the corruption of row ``i``
        of ``pos``.
    margin, l2 : float
    norm : {"L1", "L2"}

    Returns
    -------
    loss : float
    grads : dict
        Dense gradients with the same keys and shapes as ``params``.

    Notes
    -----
    The penalty is ``l2`` times the squared norms of the entity and
    relation rows that occur in the batch.  Projection matrices are not
    penalized, since shrinking them pulls TransR away from its identity
    initialization.
    """
    E, R = params["entity"], params["relation"]
    M = params.get("matrix")
    pos = np.asarray(pos, dtype=np.int64).reshape(-1, 3)
    neg = np.asarray(neg, dtype=np.int64).reshape(-1, 3)
    grads = {k: np.zeros_like(v) for k, v in params.items()}

    def side(triples):
        h, r, t = triples.T
        x = E[h] - E[t]
        u = (np.einsum("bi,bij->bj", x, M[r]) if M is not None else x) + R[r]
        return h, r, t, x, u

    hp, rp, tp, xp, up = side(pos)
    hn, rn, tn, xn, un = side(neg)
    hinge = _norm(up, norm) - _norm(un, norm) + margin
    active = hinge > 0
    loss = float(np.sum(hinge[active]))

    for (h, r, t, x, u), sign in (((hp, rp, tp, xp, up), 1.0), ((hn, rn, tn, xn, un), -1.0)):
        g = sign * _norm_grad(u, norm) * active[:, None]
        gx = np.einsum("bj,bij->bi", g, M[r]) if M is not None else g
        np.add.at(grads["entity"], h, gx)
        np.add.at(grads["entity"], t, -gx)
        np.add.at(grads["relation"], r, g)
        if M is not None:
            np.add.at(grads["matrix"], r, np.einsum("bi,bj->bij", x, g))

    if l2:
        ents = np.unique(np.concatenate([pos[:, 0], pos[:, 2], neg[:, 0], neg[:, 2]]))
        rels = np.unique(np.concatenate([pos[:, 1], neg[:, 1]]))
        loss += l2 * (float(np.sum(E[ents] ** 2)) + float(np.sum(R[rels] ** 2)))
        grads["entity"][ents] += 2 * l2 * E[ents]
        grads["relation"][rels] += 2 * l2 * R[rels]
    return loss, grads


class TransE(BaseEstimator):
    """TransE trained by mini-batch SGD on the margin ranking loss.

    Parameters
    ----------
    dim : int, default=64
    margin : float, default=0.4
    l2 : float, default=0.0
        Weight of the squared-norm penalty on parameters touched per batch.
    batch_size : int, default=4096
    lr : float, default=0.01
    epochs : int, default=1000
    seed : int, default=0
    negatives : int, default=1
        Corrupted triples per positive.
    norm : {"L2", "L1"}, default="L2"
    corrupt_heads : bool, default=False
        Corrupt heads instead of tails.
    filtered_negatives : bool, default=False
        Resample corruptions that hit an existing edge.
    patience : int, default=50
        Stop when the loss changed by less than ``tol`` (relative) over
        this many epochs.
    tol : float, default=1e-5

    Attributes
    ----------
    entity_ : ndarray of shape (n_nodes, dim)
    relation_ : ndarray of shape (n_labels, dim)
    loss_curve_ : list of float
        Mean objective per positive edge, one value per epoch.
    """

    model_tag = "transe"

    def __init__(self, dim=64, margin=0.4, l2=0.0, batch_size=4096, lr=0.01, epochs=1000,
                 seed=0, negatives=1, norm="L2", corrupt_heads=False,
                 filtered_negatives=False, patience=50, tol=1e-5):
        self.dim = dim
        self.margin = margin
        self.l2 = l2
        self.batch_size = batch_size
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.negatives = negatives
        self.norm = norm
        self.corrupt_heads = corrupt_heads
        self.filtered_negatives = filtered_negatives
        self.patience = patience
        self.tol = tol

    # -- parameters -----------------------------------------------------------
    def _check_params(self):
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        for name in ("dim", "batch_size", "negatives"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.epochs < 0 or self.lr <= 0 or self.margin < 0 or self.l2 < 0:
            raise ValueError("epochs, lr, margin and l2 must be non-negative (lr positive)")

    def init_params(self, n_nodes, n_labels, rng) -> dict:
        bound = 6.0 / math.sqrt(self.dim)
        entity = rng.uniform(-bound, bound, size=(n_nodes, self.dim))
        relation = rng.uniform(-bound, bound, size=(n_labels, self.dim))
        entity /= np.linalg.norm(entity, axis=1, keepdims=True)
        return {"entity": entity, "relation": relation}

    def _set_params(self, params):
        self.entity_ = params["entity"]
        self.relation_ = params["relation"]

    def get_embeddings(self) -> dict:
        return {"entity": self.entity_, "relation": self.relation_}

    @property
    def matrices(self):
        return None

    # -- training -------------------------------------------------------------
    def fit(self, graph: RelationalGraph, y=None):
        """Train on every edge of ``graph``.

        Raises
        ------
        TrainingDiverged
            If the epoch loss becomes NaN or infinite.
        """
        self._check_params()
        if len(graph) == 0:
            raise ValueError("cannot train on an empty graph")
        rng = np.random.default_rng(self.seed)
        params = self.init_params(graph.n_nodes, graph.n_labels, rng)
        self._bind_graph(graph)
        triples = graph.triples
        known = set(map(tuple, triples.tolist())) if self.filtered_negatives else None
        m = len(triples)
        self.loss_curve_ = []
        self.n_epochs_ = 0
        for epoch in range(self.epochs):
            order = rng.permutation(m)
            total = 0.0
            for start in range(0, m, self.batch_size):
                batch = triples[order[start:start + self.batch_size]]
                pos = np.repeat(batch, self.negatives, axis=0)
                neg = corrupt(pos, graph.n_nodes, rng, heads=self.corrupt_heads, known=known)
                loss, grads = objective(params, pos, neg, self.margin, self.l2, self.norm)
                for k in params:
                    params[k] -= self.lr * grads[k]
                total += loss
            mean = total / (m * self.negatives)
            if not math.isfinite(mean):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}; try a smaller learning rate")
            params["entity"] /= np.maximum(
                np.linalg.norm(params["entity"], axis=1, keepdims=True), 1e-12)
            self.loss_curve_.append(mean)
            self.n_epochs_ = epoch + 1
            if self._plateau():
                logger.info("early stop after %d epochs", self.n_epochs_)
                break
        self._set_params(params)
        return self

    def _plateau(self) -> bool:
        curve = self.loss_curve_
        if self.patience <= 0 or len(curve) <= self.patience:
            return False
        old, new = curve[-1 - self.patience], curve[-1]
        return abs(old - new) <= self.tol * max(abs(old), 1e-12)

    def _bind_graph(self, graph):
        self.nodes_ = graph.nodes
        self.labels_ = graph.labels
        self.vocab_hash_ = graph.vocab_hash()

    # -- scoring --------------------------------------------------------------
    def score_triples(self, triples) -> np.ndarray:
        """Distances of index triples (lower means more plausible)."""
        check_is_fitted(self, "entity_")
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if len(triples) and (triples[:, [0, 2]].max() >= len(self.entity_)
                             or triples[:, 1].max() >= len(self.relation_)):
            raise IndexError("triple index out of range for this model")
        return distances(self.entity_, self.relation_, self.matrices, triples, self.norm)

    predict = score_triples

    def score_edges(self, edges) -> np.ndarray:
        """Distances of identifier edges; raises ``KeyError`` on unknowns."""
        rows = [(self.nodes_.index(h), self.labels_.index(r), self.nodes_.index(t))
                for h, r, t in edges]
        return self.score_triples(rows)


class TransR(TransE):
    """TransR: entities are mapped by a per-relation matrix before translating.

    Takes the same parameters as :class:`TransE`; matrices start at the
    identity, so an untrained TransR scores exactly like TransE.
    """

    model_tag = "transr"

    def init_params(self, n_nodes, n_labels, rng) -> dict:
        params = super().init_params(n_nodes, n_labels, rng)
        params["matrix"] = np.tile(np.eye(self.dim), (n_labels, 1, 1))
        return params

    def _set_params(self, params):
        super()._set_params(params)
        self.matrix_ = params["matrix"]

    def get_embeddings(self) -> dict:
        return {**super().get_embeddings(), "matrix": self.matrix_}

    @property
    def matrices(self):
        return self.matrix_


MODELS = {"transe": TransE, "transr": TransR}


def make_model(tag="transe", **params):
    try:
        return MODELS[tag](**params)
    except KeyError:
        raise ValueError(f"unknown model {tag!r}; expected one of {sorted(MODELS)}") from None


def score_edge(model, edge) -> float:
    """Distance of one edge, given by identifiers or by indices."""
    if all(isinstance(x, (int, np.integer)) for x in edge):
        return float(model.score_triples([edge])[0])
    return float(model.score_edges([edge])[0])


def train(graph, **params):
    """Train a model; ``model="transr"`` selects TransR."""
    tag = params.pop("model", "transe")
    return make_model(tag, **params).fit(graph)


# --------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------

MAGIC = b"ONTOKGE\0"
VERSION = 1
# magic, version, tag, norm, dim, |V|, |L|, vocab hash
_HEADER = struct.Struct("<8sI8sBIQQ32s")


def save_model(model, path) -> None:
    """Write a single-file checkpoint of little-endian doubles."""
    tag = model.model_tag.encode("ascii")
    header = _HEADER.pack(MAGIC, VERSION, tag, NORMS.index(model.norm) + 1, model.dim,
                          len(model.entity_), len(model.relation_), model.vocab_hash_)
    meta = json.dumps({"params": model.get_params(), "nodes": list(model.nodes_),
                       "labels": list(model.labels_), "loss_curve": list(model.loss_curve_)},
                      sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)
        for key in ("entity", "relation", "matrix"):
            arr = model.get_embeddings().get(key)
            if arr is not None:
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path, graph: RelationalGraph = None):
    """Read a checkpoint; with ``graph``, refuse a vocabulary mismatch."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size + 8 or raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint")
    magic, version, tag, norm, dim, n_nodes, n_labels, digest = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise CheckpointError(f"{path}: checkpoint format version {version}, "
                              f"this build reads version {VERSION}")
    if graph is not None and graph.vocab_hash() != digest:
        raise VocabMismatch(f"{path}: model was trained on a different graph vocabulary")
    offset = _HEADER.size
    (meta_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    meta = json.loads(raw[offset:offset + meta_len].decode("utf-8"))
    offset += meta_len
    model = make_model(tag.rstrip(b"\0").decode("ascii"), **meta["params"])
    shapes = {"entity": (n_nodes, dim), "relation": (n_labels, dim)}
    if model.model_tag == "transr":
        shapes["matrix"] = (n_labels, dim, dim)
    params = {}
    for key, shape in shapes.items():
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated checkpoint")
        params[key] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset) \
            .reshape(shape).astype(np.float64)
        offset = end
    model._set_params(params)
    model.nodes_ = Vocab(meta["nodes"])
    model.labels_ = Vocab(meta["labels"])
    model.vocab_hash_ = digest
    if vocab_hash(model.nodes_, model.labels_) != digest:
        raise CheckpointError(f"{path}: stored vocabulary does not match its hash")
    model.loss_curve_ = meta["loss_curve"]
    model.n_epochs_ = len(model.loss_curve_)
    return model
