import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import oracle_closure, random_el_ontology
from ontoproj.dl import Bottom, Exists, Forall, Named, Ontology, SubClassOf
from ontoproj.reasoner import (
    ClosureFacts,
    classify,
    closure_diff,
    normalize,
    read_closure,
    saturate,
    write_closure,
)
from ontoproj.syntax import parse_ontology


def test_normalize_definition_unfolding():
    n = normalize(parse_ontology(
        "EquivalentClasses(:A ObjectIntersectionOf(:B ObjectSomeValuesFrom(:R :C)))"))
    assert ("A", "B") in n.subsumptions
    assert ("A", "R", "C") in n.existentials
    (x1,) = n.aux_classes
    assert n.restrictions == {("R", "C", x1)}
    assert n.conjunctions == {("B", x1, "A")}
    assert x1 not in {"A", "B", "C", "R"}
    assert n.skipped == []


def test_normalize_skips_universal():
    ax = SubClassOf(Named("A"), Forall("R", Named("B")))
    n = normalize(Ontology([ax]))
    assert n.skipped == [ax]
    assert n.rule_count() == 0


def test_normalize_disjointness_already_normal():
    n = normalize(parse_ontology("SubClassOf(ObjectIntersectionOf(:C :D) owl:Nothing)"))
    assert n.conjunctions == {("C", "D", "owl:Nothing")}
    assert n.aux_classes == set()


def test_fresh_names_avoid_signature():
    o = parse_ontology("SubClassOf(:_aux1 ObjectSomeValuesFrom(:R ObjectIntersectionOf(:B :C)))")
    n = normalize(o)
    assert n.aux_classes and not (n.aux_classes & o.signature.classes)


def test_transitivity():
    facts = classify(parse_ontology("SubClassOf(:A :B)\nSubClassOf(:B :C)"))
    assert ("A", "C") in facts.subsumptions
    assert ("A", "A") not in facts.subsumptions
    assert all(d != "owl:Thing" for _, d in facts.subsumptions)


def test_go_definition_chain():
    o = parse_ontology("""
        EquivalentClasses(:GO_2000859 ObjectIntersectionOf(:GO_0065007
            ObjectSomeValuesFrom(:RO_0002212 :GO_0035932)))
        SubClassOf(:GO_0065007 :GO_0050789)
        SubClassOf(:GO_0050789 :GO_0023051)
    """)
    facts = classify(o)
    assert ("GO_2000859", "GO_0023051") in facts.subsumptions
    assert ("GO_2000859", "RO_0002212", "GO_0035932") in facts.existentials
    assert not any(c.startswith("_aux") or d.startswith("_aux") for c, d in facts.subsumptions)


def test_bottom_propagation_and_chains():
    facts = classify(parse_ontology("""
        DisjointClasses(:C :D)
        SubClassOf(:E :C)
        SubClassOf(:E :D)
        SubClassOf(:F ObjectSomeValuesFrom(:r :E))
        SubClassOf(:G ObjectSomeValuesFrom(:p :H))
        SubClassOf(:H ObjectSomeValuesFrom(:q :K))
        SubObjectPropertyOf(ObjectPropertyChain(:p :q) :s)
        SubObjectPropertyOf(:s :t)
    """))
    assert ("E", "owl:Nothing") in facts.subsumptions
    assert ("F", "owl:Nothing") in facts.subsumptions
    assert SubClassOf(Named("F"), Bottom()) in facts
    assert ("G", "s", "K") in facts.existentials
    assert ("G", "t", "K") in facts.existentials


def test_entails_membership():
    facts = classify(parse_ontology("SubClassOf(:A ObjectSomeValuesFrom(:R :B))\nSubClassOf(:B :C)"))
    assert SubClassOf(Named("A"), Exists("R", Named("C"))) in facts
    assert SubClassOf(Named("A"), Named("A")) in facts
    assert SubClassOf(Named("A"), Named("C")) not in facts


@pytest.mark.parametrize("seed", range(40))
def test_matches_oracle(seed):
    o = random_el_ontology(np.random.default_rng(seed))
    facts = classify(o)
    subs, exs = oracle_closure(o)
    assert set(facts.subsumptions) == subs
    assert set(facts.existentials) == exs


@given(st.integers(0, 10**6), st.integers(1, 39))
@settings(max_examples=60, deadline=None)
def test_monotone_under_removal(seed, keep):
    o = random_el_ontology(np.random.default_rng(seed))
    reduced = Ontology(o.axioms[:keep], signature=o.signature)
    full, red = classify(o), classify(reduced)
    assert red.subsumptions <= full.subsumptions
    assert red.existentials <= full.existentials
    assert closure_diff(red, full, "sub") == []
    assert closure_diff(red, full, "ex") == []


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_idempotent(seed):
    o = random_el_ontology(np.random.default_rng(seed))
    facts = classify(o)
    again = classify(Ontology(list(o.axioms) + facts.axioms(), signature=o.signature))
    assert again == facts


def test_closure_diff_examples():
    full = classify(parse_ontology(
        "SubClassOf(:A :B)\nSubClassOf(:B :C)\nSubClassOf(:A ObjectSomeValuesFrom(:R :C))"))
    reduced = classify(parse_ontology("SubClassOf(:B :C)\nDeclaration(Class(:A))"))
    assert closure_diff(full, reduced, "sub") == [
        SubClassOf(Named("A"), Named("B")), SubClassOf(Named("A"), Named("C"))]
    assert closure_diff(full, reduced, "ex") == [SubClassOf(Named("A"), Exists("R", Named("C")))]
    assert closure_diff(full, full, "sub") == []
    with pytest.raises(ValueError):
        closure_diff(full, reduced, "both")


def test_closure_tsv_round_trip(tmp_path):
    facts = classify(parse_ontology(
        "SubClassOf(:A :B)\nSubClassOf(:A ObjectSomeValuesFrom(:R :B))\nDisjointClasses(:A :B)"))
    path = tmp_path / "closure.tsv"
    write_closure(facts, path)
    lines = path.read_text().splitlines()
    assert "sub\tA\tB" in lines and "ex\tA\tR\tB" in lines
    assert read_closure(path) == facts


def test_read_closure_malformed(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("sub\tA\n")
    with pytest.raises(ValueError):
        read_closure(path)


def test_saturate_empty():
    assert saturate(normalize(Ontology([]))) == ClosureFacts()
