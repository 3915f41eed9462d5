import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontoproj.dl import And, Exists, Named, Ontology, SubClassOf
from ontoproj.graph import (
    Edge,
    RelationalGraph,
    Vocab,
    build_graph,
    corrupt,
    read_graph,
    sample_negative,
    write_graph,
)
from ontoproj.projection import ProjectionResult, project_owl2vecstar


def test_build_graph_conjunctive_filler():
    o = Ontology([SubClassOf(Named("A"), Exists("R", And([Named("B"), Named("C")])))])
    g = build_graph(project_owl2vecstar(o))
    assert set(g.nodes) == {"A", "B", "C"}
    assert list(g.labels) == ["R"]
    assert len(g) == 2


def test_empty_projection():
    g = build_graph(ProjectionResult("taxonomy", {}))
    assert (g.n_nodes, g.n_labels, len(g)) == (0, 0, 0)


def test_duplicate_edges_stored_once():
    e = Edge("A", "R", "B")
    r = ProjectionResult("x", {"ax1": frozenset({e}), "ax2": frozenset({e})})
    assert len(r.graph) == 1
    assert r.per_axiom["ax1"] == r.per_axiom["ax2"] == {e}


def test_first_seen_order():
    g = RelationalGraph.from_edges([Edge("Z", "r", "A"), Edge("A", "q", "M")])
    assert list(g.nodes) == ["Z", "A", "M"]
    assert list(g.labels) == ["r", "q"]


def test_index_range_checked():
    with pytest.raises(ValueError):
        RelationalGraph(Vocab(["A"]), Vocab(["r"]), [(0, 0, 1)])


def test_vocab_bijection():
    v = Vocab(["a", "b", "a"])
    assert len(v) == 2 and v.index("b") == 1 and v[1] == "b"
    with pytest.raises(ValueError):
        v.add("bad\tname")


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 2), st.integers(0, 5)), max_size=60))
def test_dedup_property(rows):
    g = RelationalGraph(Vocab(map(str, range(6))), Vocab("abc"), rows)
    assert len(g) == len(set(rows))


def test_negative_only_choice():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert sample_negative((0, 0, 1), 2, rng) == (0, 0, 0)


def test_negative_degenerate_graph():
    with pytest.raises(ValueError, match="two nodes"):
        sample_negative((0, 0, 0), 1, np.random.default_rng(0))


@given(st.integers(2, 50), st.integers(0, 2**32 - 1), st.data())
@settings(max_examples=100)
def test_negative_never_returns_tail(n, seed, data):
    triples = np.array(data.draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, 3), st.integers(0, n - 1)),
        min_size=1, max_size=20)))
    neg = corrupt(triples, n, np.random.default_rng(seed))
    assert np.all(neg[:, 2] != triples[:, 2])
    assert np.array_equal(neg[:, :2], triples[:, :2])
    heads = corrupt(triples, n, np.random.default_rng(seed), heads=True)
    assert np.all(heads[:, 0] != triples[:, 0])
    assert np.array_equal(heads[:, 1:], triples[:, 1:])


def test_negative_uniform_chi_square():
    n, t, draws = 20, 7, 100_000
    rng = np.random.default_rng(12345)
    neg = corrupt(np.tile([3, 0, t], (draws, 1)), n, rng)
    counts = np.bincount(neg[:, 2], minlength=n)
    assert counts[t] == 0
    observed = np.delete(counts, t)
    expected = draws / (n - 1)
    chi2 = ((observed - expected) ** 2 / expected).sum()
    df = n - 2
    assert abs(chi2 - df) / np.sqrt(2 * df) < 3


def test_filtered_negatives_avoid_known():
    known = {(0, 0, 1), (0, 0, 2)}
    rng = np.random.default_rng(1)
    neg = corrupt(np.tile([0, 0, 1], (500, 1)), 4, rng, known=known)
    assert set(neg[:, 2].tolist()) == {0, 3}


def test_write_read_write_identical(tmp_path):
    g = RelationalGraph.from_edges(
        [Edge("B", "r", "A"), Edge("A", "r", "C"), Edge("C", "s", "B")], extra_nodes=["Lonely"])
    write_graph(g, tmp_path / "one")
    g2 = read_graph(tmp_path / "one")
    write_graph(g2, tmp_path / "two")
    for name in ("graph.tsv", "nodes.tsv", "labels.tsv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    assert g2 == g
    assert g2.vocab_hash() == g.vocab_hash()
    assert (tmp_path / "one" / "graph.tsv").read_text().splitlines()[0].count("\t") == 2


def test_read_without_vocab_assigns_indices(tmp_path):
    path = tmp_path / "edges.tsv"
    path.write_text("A\tr\tB\nB\tr\tNew\n")
    g = read_graph(path)
    assert list(g.nodes) == ["A", "B", "New"]


def test_read_unknown_identifier_gets_new_index(tmp_path):
    g = RelationalGraph.from_edges([Edge("A", "r", "B")])
    write_graph(g, tmp_path)
    with open(tmp_path / "graph.tsv", "a") as fh:
        fh.write("B\tr\tC\n")
    g2 = read_graph(tmp_path)
    assert g2.nodes.index("C") == 2


@pytest.mark.parametrize("line", ["A\tr\n", "A\tr\tB\tC\n", "A\t\tB\n"])
def test_read_malformed(tmp_path, line):
    path = tmp_path / "edges.tsv"
    path.write_text(line)
    with pytest.raises(ValueError, match="edges.tsv:1"):
        read_graph(path)
