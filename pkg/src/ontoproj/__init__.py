"""Ontology graph projections, translational embeddings and axiom ranking."""

from .dl import Ontology, Signature, split_ontology
from .graph import RelationalGraph, read_graph, write_graph
from .inference import EvaluationReport, evaluate, rank_axiom, score_axiom
from .kge import TransE, TransR, load_model, margin_loss, save_model, score_edge
from .projection import (
    OWL2VecStarProjector,
    PatternProjector,
    RDFProjector,
    TaxonomyProjector,
    analyze_properties,
    invert_projection,
    project_axiom,
    project_owl2vecstar,
    project_patterns,
    project_rdf,
    project_taxonomy,
)
from .reasoner import classify, closure_diff, normalize, saturate
from .syntax import load_ontology, parse_axiom, parse_ontology, serialize_axiom

__version__ = "0.1.0"
