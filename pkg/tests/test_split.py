import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontoproj.dl import Exists, Named, Ontology, SubClassOf, is_ex_axiom, is_sub_axiom, split_ontology


def make(n_sub, n_ex=0):
    axioms = [SubClassOf(Named(f"A{i}"), Named(f"B{i}")) for i in range(n_sub)]
    axioms += [SubClassOf(Named(f"C{i}"), Exists("R", Named(f"D{i}"))) for i in range(n_ex)]
    return Ontology(axioms)


def test_ten_percent_of_hundred():
    reduced, removed = split_ontology(make(100), "sub", 0.10, seed=1)
    assert len(removed) == 10 and len(reduced.axioms) == 90


def test_thirty_percent_of_both_patterns():
    o = make(100, 50)
    reduced, removed = split_ontology(o, "sub_ex", 0.30, seed=0)
    assert sum(map(is_sub_axiom, removed)) == 30
    assert sum(map(is_ex_axiom, removed)) == 15


def test_same_seed_same_split():
    o = make(57, 13)
    assert split_ontology(o, "ex", 0.3, 42) == split_ontology(o, "ex", 0.3, 42)
    assert split_ontology(o, "sub", 0.3, 1)[1] != split_ontology(o, "sub", 0.3, 2)[1]


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_fraction_out_of_range(fraction):
    with pytest.raises(ValueError, match="fraction"):
        split_ontology(make(5), "sub", fraction, 0)


def test_no_matching_axioms():
    with pytest.raises(ValueError, match="no axioms match"):
        split_ontology(make(5), "ex", 0.1, 0)


def test_equivalences_not_in_sub_pool():
    from ontoproj.syntax import parse_ontology
    o = parse_ontology("EquivalentClasses(:A :B)\nSubClassOf(:C :D)")
    _, removed = split_ontology(o, "sub", 0.5, 0)
    assert removed == [SubClassOf(Named("C"), Named("D"))]


@given(st.integers(1, 60), st.integers(0, 20), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_removal_count_and_partition(n_sub, n_ex, fraction, seed):
    o = make(n_sub, n_ex)
    reduced, removed = split_ontology(o, "sub", fraction, seed)
    assert len(removed) == math.ceil(round(fraction * n_sub, 9))
    assert all(is_sub_axiom(a) for a in removed)
    assert sorted(map(repr, reduced.axioms + tuple(removed))) == sorted(map(repr, o.axioms))
    assert reduced.signature == o.signature
