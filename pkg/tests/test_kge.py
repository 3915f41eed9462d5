import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import gradient_relative_error, taxonomy_ontology
from ontoproj.graph import Edge, RelationalGraph, Vocab, build_graph, corrupt
from ontoproj.kge import (
    VERSION,
    CheckpointError,
    TrainingDiverged,
    TransE,
    TransR,
    VocabMismatch,
    distances,
    load_model,
    make_model,
    margin_loss,
    save_model,
    score_edge,
    train,
)
from ontoproj.projection import project_taxonomy


def fixed_model(entity, relation, norm="L2", cls=TransE, matrix=None):
    m = cls(dim=len(entity[0]), norm=norm)
    m.entity_ = np.asarray(entity, dtype=float)
    m.relation_ = np.asarray(relation, dtype=float)
    if matrix is not None:
        m.matrix_ = np.asarray(matrix, dtype=float)
    m.nodes_ = Vocab(f"n{i}" for i in range(len(entity)))
    m.labels_ = Vocab(f"r{i}" for i in range(len(relation)))
    return m


@pytest.fixture(scope="module")
def taxonomy_graph():
    return build_graph(project_taxonomy(taxonomy_ontology()))


# -- scoring and loss ---------------------------------------------------------------


def test_score_zero():
    m = fixed_model([[0, 0]], [[0, 0]])
    assert score_edge(m, (0, 0, 0)) == 0.0


def test_score_exact_translation():
    m = fixed_model([[1, 0], [1, 1]], [[0, 1]])
    assert score_edge(m, (0, 0, 1)) == 0.0
    assert score_edge(m, Edge("n0", "r0", "n1")) == 0.0


def test_score_l1():
    m = fixed_model([[1, 0], [0, 0]], [[0, 1]], norm="L1")
    assert score_edge(m, (0, 0, 1)) == 2.0


def test_score_index_out_of_range():
    m = fixed_model([[1, 0]], [[0, 1]])
    with pytest.raises(IndexError):
        m.score_triples([(0, 0, 3)])


@pytest.mark.parametrize("d_pos, d_neg, margin, expected", [
    (0.5, 1.0, 0.4, 0.0),
    (0.5, 1.0, 0.6, 0.1),
    (1.0, 1.0, 0.0, 0.0),
])
def test_margin_loss_examples(d_pos, d_neg, margin, expected):
    assert margin_loss(d_pos, d_neg, margin) == pytest.approx(expected, abs=1e-15)


def test_margin_loss_negative_margin():
    with pytest.raises(ValueError):
        margin_loss(0.1, 0.2, -0.1)


@given(arrays(float, 50, elements=st.floats(0, 10)), arrays(float, 50, elements=st.floats(0, 10)),
       st.floats(0, 2))
def test_margin_loss_formula(dp, dn, gamma):
    assert np.array_equal(margin_loss(dp, dn, gamma), np.maximum(0.0, dp - dn + gamma))


def test_transr_identity_equals_transe():
    rng = np.random.default_rng(3)
    E, R = rng.normal(size=(10, 5)), rng.normal(size=(3, 5))
    triples = np.column_stack([rng.integers(10, size=200), rng.integers(3, size=200),
                               rng.integers(10, size=200)])
    for norm in ("L1", "L2"):
        te = fixed_model(E, R, norm)
        tr = fixed_model(E, R, norm, TransR, np.tile(np.eye(5), (3, 1, 1)))
        assert np.array_equal(te.score_triples(triples), tr.score_triples(triples))


def test_transr_untrained_init_is_identity():
    m = TransR(dim=4)
    params = m.init_params(5, 2, np.random.default_rng(0))
    assert np.array_equal(params["matrix"], np.tile(np.eye(4), (2, 1, 1)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_directionality(seed):
    rng = np.random.default_rng(seed)
    E, R = rng.normal(size=(2, 8)), rng.normal(size=(1, 8))
    for cls, M in ((TransE, None), (TransR, rng.normal(size=(1, 8, 8)))):
        m = fixed_model(E, R, cls=cls, matrix=M)
        assert score_edge(m, (0, 0, 1)) != score_edge(m, (1, 0, 0))


def test_distances_shape():
    E = np.eye(3)
    assert distances(E, np.zeros((1, 3)), None, [(0, 0, 1), (1, 0, 1)]).tolist() == \
        [np.sqrt(2), 0.0]


# -- gradients -------------------------------------------------------------------


@pytest.mark.parametrize("tag", ["transe", "transr"])
@pytest.mark.parametrize("norm", ["L1", "L2"])
def test_gradients_match_finite_differences(tag, norm):
    rng = np.random.default_rng(7)
    errors = [gradient_relative_error(rng, tag, norm) for _ in range(50)]
    assert max(errors) < 1e-4


# -- training -----------------------------------------------------------------------


def test_entity_rows_unit_norm(taxonomy_graph):
    for cls in (TransE, TransR):
        m = cls(dim=16, epochs=3, seed=1, patience=0).fit(taxonomy_graph)
        assert np.allclose(np.linalg.norm(m.entity_, axis=1), 1.0, atol=1e-6)


def test_training_deterministic(taxonomy_graph):
    a = TransE(dim=16, epochs=20, seed=5, batch_size=32).fit(taxonomy_graph)
    b = TransE(dim=16, epochs=20, seed=5, batch_size=32).fit(taxonomy_graph)
    assert a.loss_curve_ == b.loss_curve_
    assert np.array_equal(a.entity_, b.entity_)
    c = TransE(dim=16, epochs=20, seed=6, batch_size=32).fit(taxonomy_graph)
    assert a.loss_curve_ != c.loss_curve_


def test_training_separates_positives(taxonomy_graph):
    m = TransE(dim=64, margin=0.4, lr=0.01, epochs=200, seed=0).fit(taxonomy_graph)
    pos = taxonomy_graph.triples
    neg = corrupt(pos, taxonomy_graph.n_nodes, np.random.default_rng(99))
    gap = m.score_triples(neg).mean() - m.score_triples(pos).mean()
    assert gap > 0
    assert m.loss_curve_[-1] < m.loss_curve_[0]


def test_training_diverges():
    g = RelationalGraph.from_edges([Edge("a", "r", "b"), Edge("b", "r", "c")])
    with pytest.raises(TrainingDiverged, match="non-finite"), np.errstate(all="ignore"):
        TransE(dim=4, lr=1e308, margin=1.0, epochs=5, l2=1.0).fit(g)


def test_empty_graph_rejected():
    with pytest.raises(ValueError, match="empty graph"):
        TransE().fit(RelationalGraph(Vocab(["a", "b"]), Vocab(["r"])))


@pytest.mark.parametrize("params", [{"norm": "L3"}, {"dim": 0}, {"margin": -1.0}, {"lr": 0.0}])
def test_invalid_params(params):
    g = RelationalGraph.from_edges([Edge("a", "r", "b")])
    with pytest.raises(ValueError):
        TransE(**params).fit(g)


def test_unfitted_model_refuses_to_score():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        TransE().score_triples([(0, 0, 1)])


def test_sklearn_params_round_trip():
    m = make_model("transr", dim=8, lr=0.1)
    assert m.get_params()["dim"] == 8
    assert isinstance(m, TransR)
    with pytest.raises(ValueError, match="unknown model"):
        make_model("rotate")


def test_train_helper(taxonomy_graph):
    m = train(taxonomy_graph, model="transr", dim=4, epochs=2, seed=0)
    assert isinstance(m, TransR) and m.n_epochs_ == 2


def test_early_stopping():
    g = RelationalGraph.from_edges([Edge("a", "r", "b")])
    m = TransE(dim=4, margin=0.0, epochs=1000, patience=5, seed=0).fit(g)
    assert m.n_epochs_ < 1000


# -- checkpoints -------------------------------------------------------------------


@pytest.mark.parametrize("cls", [TransE, TransR])
def test_checkpoint_round_trip(tmp_path, taxonomy_graph, cls):
    m = cls(dim=8, epochs=5, seed=2).fit(taxonomy_graph)
    path = tmp_path / "model.bin"
    save_model(m, path)
    loaded = load_model(path, taxonomy_graph)
    rng = np.random.default_rng(0)
    edges = np.column_stack([rng.integers(taxonomy_graph.n_nodes, size=100),
                             np.zeros(100, dtype=int),
                             rng.integers(taxonomy_graph.n_nodes, size=100)])
    assert np.array_equal(m.score_triples(edges), loaded.score_triples(edges))
    assert loaded.get_params() == m.get_params()
    assert loaded.loss_curve_ == m.loss_curve_
    assert path.read_bytes()[:8] == b"ONTOKGE\0"


def test_checkpoint_other_graph_refused(tmp_path, taxonomy_graph):
    m = TransE(dim=4, epochs=1).fit(taxonomy_graph)
    save_model(m, tmp_path / "m.bin")
    other = RelationalGraph.from_edges([Edge("x", "r", "y")])
    with pytest.raises(VocabMismatch):
        load_model(tmp_path / "m.bin", other)


def test_checkpoint_version_refused(tmp_path, taxonomy_graph):
    m = TransE(dim=4, epochs=1).fit(taxonomy_graph)
    path = tmp_path / "m.bin"
    save_model(m, path)
    raw = bytearray(path.read_bytes())
    raw[8:12] = (VERSION + 1).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_model(path)


def test_checkpoint_garbage_refused(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a model at all, just bytes")
    with pytest.raises(CheckpointError):
        load_model(path)
