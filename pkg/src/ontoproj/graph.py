"""Relational graphs, vocabularies, TSV persistence and negative sampling."""

from __future__ import annotations

import hashlib
import os
from typing import Iterable, NamedTuple

import numpy as np


class Edge(NamedTuple):
    head: str
    label: str
    tail: str


class Vocab:
    """Bidirectional identifier <-> dense index map."""

    def __init__(self, items: Iterable[str] = ()):
        self._items = []
        self._index = {}
        for item in items:
            self.add(item)

    def add(self, item: str) -> int:
        idx = self._index.get(item)
        if idx is None:
            if not isinstance(item, str) or not item or any(c in item for c in "\t\n\r"):
                raise ValueError(f"invalid identifier {item!r}")
            idx = self._index[item] = len(self._items)
            self._items.append(item)
        return idx

    def index(self, item: str) -> int:
        return self._index[item]

    def get(self, item, default=None):
        return self._index.get(item, default)

    def __getitem__(self, idx: int) -> str:
        return self._items[idx]

    def __contains__(self, item) -> bool:
        return item in self._index

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self._items == other._items

    def __repr__(self):
        return f"Vocab({len(self)} items)"

    @property
    def items(self) -> tuple:
        return tuple(self._items)


def vocab_hash(nodes: Vocab, labels: Vocab) -> bytes:
    """SHA-256 over both vocabularies, used to pair models with graphs."""
    h = hashlib.sha256()
    h.update("\n".join(nodes).encode("utf-8"))
    h.update(b"\0")
    h.update("\n".join(labels).encode("utf-8"))
    return h.digest()


class RelationalGraph:
    """A labeled directed graph ``(V, E, L)`` over dense integer indices.

    ``triples`` is an ``(m, 3)`` int64 array of ``(head, label, tail)``,
    deduplicated and sorted lexicographically.
    """

    def __init__(self, nodes: Vocab, labels: Vocab, triples=None):
        self.nodes = nodes
        self.labels = labels
        if triples is None:
            triples = np.empty((0, 3), dtype=np.int64)
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if len(triples):
            if triples[:, [0, 2]].min() < 0 or triples[:, [0, 2]].max() >= len(nodes):
                raise ValueError("node index out of range")
            if triples[:, 1].min() < 0 or triples[:, 1].max() >= len(labels):
                raise ValueError("label index out of range")
            triples = np.unique(triples, axis=0)
        self.triples = triples
        self.triples.setflags(write=False)

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], extra_nodes=(), extra_labels=()):
        """Build a graph, assigning indices in first-seen order."""
        nodes, labels = Vocab(), Vocab()
        rows = []
        for h, r, t in edges:
            rows.append((nodes.add(h), labels.add(r), nodes.add(t)))
        for n in extra_nodes:
            nodes.add(n)
        for lab in extra_labels:
            labels.add(lab)
        return cls(nodes, labels, rows)

    def __len__(self):
        return len(self.triples)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def edges(self) -> list:
        return [Edge(self.nodes[h], self.labels[r], self.nodes[t])
                for h, r, t in self.triples]

    def encode(self, edges: Iterable[Edge]) -> np.ndarray:
        """Map identifier edges to index triples; raises KeyError on unknowns."""
        rows = [(self.nodes.index(h), self.labels.index(r), self.nodes.index(t))
                for h, r, t in edges]
        return np.asarray(rows, dtype=np.int64).reshape(-1, 3)

    def vocab_hash(self) -> bytes:
        return vocab_hash(self.nodes, self.labels)

    def with_triples(self, triples) -> "RelationalGraph":
        """Same vocabularies, different edge set."""
        return RelationalGraph(self.nodes, self.labels, triples)

    def __eq__(self, other):
        return (isinstance(other, RelationalGraph) and self.nodes == other.nodes
                and self.labels == other.labels
                and np.array_equal(self.triples, other.triples))

    def __repr__(self):
        return (f"RelationalGraph(nodes={self.n_nodes}, labels={self.n_labels}, "
                f"edges={len(self)})")


def build_graph(result) -> RelationalGraph:
    """Relational graph of a :class:`~ontoproj.projection.ProjectionResult`."""
    return RelationalGraph.from_edges(result.edges, result.extra_nodes, result.extra_labels)


# --------------------------------------------------------------------------
# Negative sampling
# --------------------------------------------------------------------------


def _uniform_excluding(n_nodes, exclude, rng):
    """Uniform draws over ``range(n_nodes)`` minus ``exclude`` (elementwise)."""
    draw = rng.integers(0, n_nodes - 1, size=np.shape(exclude))
    return draw + (draw >= exclude)


def corrupt(triples, n_nodes: int, rng: np.random.Generator, heads: bool = False,
            known=None, max_tries: int = 100) -> np.ndarray:
    """Corrupt the tail (or head) of every triple with a uniform other node.

    With ``known`` (a set of index triples), resample corruptions that
    produce an existing edge; after ``max_tries`` rounds leftovers are kept.
    """
    if n_nodes < 2:
        raise ValueError("negative sampling needs at least two nodes")
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    col = 0 if heads else 2
    out = triples.copy()
    out[:, col] = _uniform_excluding(n_nodes, triples[:, col], rng)
    if known:
        for _ in range(max_tries):
            bad = np.fromiter((tuple(row) in known for row in out.tolist()),
                              dtype=bool, count=len(out))
            if not bad.any():
                break
            out[bad, col] = _uniform_excluding(n_nodes, triples[bad, col], rng)
    return out


def sample_negative(edge, n_nodes: int, rng: np.random.Generator, heads: bool = False,
                    known=None) -> tuple:
    """One corrupted copy of ``edge`` (an index triple)."""
    return tuple(int(x) for x in corrupt([edge], n_nodes, rng, heads=heads, known=known)[0])


# --------------------------------------------------------------------------
# TSV persistence
# --------------------------------------------------------------------------

GRAPH_FILE = "graph.tsv"
NODES_FILE = "nodes.tsv"
LABELS_FILE = "labels.tsv"


def _write_vocab(vocab: Vocab, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, item in enumerate(vocab):
            fh.write(f"{i}\t{item}\n")


def _read_vocab(path) -> Vocab:
    vocab = Vocab()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or not parts[0].isdigit() or int(parts[0]) != len(vocab):
                raise ValueError(f"{path}:{lineno}: malformed vocabulary line")
            vocab.add(parts[1])
    return vocab


def write_graph(graph: RelationalGraph, directory) -> None:
    """Write ``graph.tsv``, ``nodes.tsv`` and ``labels.tsv`` to ``directory``."""
    os.makedirs(directory, exist_ok=True)
    _write_vocab(graph.nodes, os.path.join(directory, NODES_FILE))
    _write_vocab(graph.labels, os.path.join(directory, LABELS_FILE))
    with open(os.path.join(directory, GRAPH_FILE), "w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in graph.triples:
            fh.write(f"{graph.nodes[h]}\t{graph.labels[r]}\t{graph.nodes[t]}\n")


def read_graph(path) -> RelationalGraph:
    """Read a graph directory (or a bare edge TSV file).

    Vocabulary files next to the edge file fix the indices; identifiers
    they do not list get new indices in first-seen order.
    """
    if os.path.isdir(path):
        directory, graph_file = path, os.path.join(path, GRAPH_FILE)
    else:
        directory, graph_file = os.path.dirname(path), path
    nodes_file = os.path.join(directory, NODES_FILE)
    labels_file = os.path.join(directory, LABELS_FILE)
    nodes = _read_vocab(nodes_file) if os.path.exists(nodes_file) else Vocab()
    labels = _read_vocab(labels_file) if os.path.exists(labels_file) else Vocab()
    rows = []
    with open(graph_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not all(parts):
                raise ValueError(f"{graph_file}:{lineno}: expected head<TAB>label<TAB>tail")
            h, r, t = parts
            rows.append((nodes.add(h), labels.add(r), nodes.add(t)))
    return RelationalGraph(nodes, labels, rows)
