"""Experiment configuration and end-to-end pipelines (run, grid, analyze)."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import ParameterGrid

from .dl import split_ontology
from .graph import write_graph
from .inference import evaluate
from .kge import make_model, save_model
from .projection import (
    SUBCLASSOF,
    SUBCLASSOF_INV,
    TYPE_INV,
    analyze_result,
    get_projector,
    load_patterns,
)
from .reasoner import classify, closure_diff, write_closure
from .syntax import load_ontology, save_ontology, serialize_axiom

logger = logging.getLogger(__name__)

DEFAULT_GRID = {
    "dim": [64, 128, 256],
    "margin": [0.0, 0.2, 0.4],
    "l2": [0.0, 1e-4, 5e-4],
    "batch_size": [4096, 8192, 16384],
    "lr": [0.1, 0.01, 0.001],
}
VALIDATION_FRACTION = 0.1
SELECTION_CRITERION = "validation tail-prediction mean rank (raw, pessimistic ties)"


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class TrainConfig:
    dim: int = 64
    margin: float = 0.4
    l2: float = 0.0
    batch_size: int = 4096
    lr: float = 0.01
    epochs: int = 1000
    seed: int = 0
    negatives: int = 1
    norm: str = "L2"


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run.

    ``method_options`` is passed to the projector; for ``patterns`` a
    ``patterns_file`` entry names a pattern file.
    """

    ontology: str = ""
    method: str = "owl2vecstar"
    method_options: dict = field(default_factory=dict)
    split_pattern: str = "sub"
    split_fraction: float = 0.1
    split_seed: int = 0
    model: str = "transe"
    train: TrainConfig = field(default_factory=TrainConfig)
    mode: str = "A"
    output: str = "run"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        train = data.pop("train", {})
        if isinstance(train, dict):
            bad = set(train) - {f.name for f in dataclasses.fields(TrainConfig)}
            if bad:
                raise ValueError(f"unknown train keys {sorted(bad)}")
            train = TrainConfig(**train)
        return cls(train=train, **data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def override(self, assignments) -> "ExperimentConfig":
        """Apply ``key=value`` strings; nested keys use dots (``train.lr=0.1``)."""
        data = self.to_dict()
        for item in assignments:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ValueError(f"override must be key=value, got {item!r}")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            target = data
            *parents, leaf = key.strip().split(".")
            for p in parents:
                target = target.setdefault(p, {})
            target[leaf] = value
        return ExperimentConfig.from_dict(data)


def load_config(path, overrides=()) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        config = ExperimentConfig.from_dict(json.load(fh))
    if config.ontology and not os.path.isabs(config.ontology):
        config.ontology = os.path.join(os.path.dirname(os.path.abspath(path)), config.ontology)
    return config.override(overrides) if overrides else config


# --------------------------------------------------------------------------
# Pipeline pieces
# --------------------------------------------------------------------------


def make_projector(method, options=None, closure=None):
    options = dict(options or {})
    if method == "patterns":
        path = options.pop("patterns_file", None)
        if path:
            options["patterns"] = load_patterns(path)
        if closure is not None:
            options.setdefault("closure", closure)
    return get_projector(method, **options)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        logger.info("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def split_test_set(full_closure, reduced_closure, pattern) -> list:
    patterns = ["sub", "ex"] if pattern == "sub_ex" else [pattern]
    test = []
    for p in patterns:
        test += closure_diff(full_closure, reduced_closure, p)
    return test


def cmd_run(config: ExperimentConfig) -> dict:
    """Train on the full and on the reduced ontology; evaluate both on one test set.

    Returns a dict with both evaluation reports and the path of the
    combined report.
    """
    out = config.output
    os.makedirs(out, exist_ok=True)
    with _Stage("parse"):
        ontology = load_ontology(config.ontology)
    with _Stage("reason"):
        full_closure = classify(ontology)
        write_closure(full_closure, os.path.join(out, "closure.tsv"))
    with _Stage("split"):
        reduced, removed = split_ontology(ontology, config.split_pattern,
                                          config.split_fraction, config.split_seed)
        save_ontology(reduced, os.path.join(out, "reduced.ofn"))
        reduced_closure = classify(reduced)
        test_set = split_test_set(full_closure, reduced_closure, config.split_pattern)
        with open(os.path.join(out, "test.ofn"), "w", encoding="utf-8") as fh:
            fh.writelines(serialize_axiom(a) + "\n" for a in test_set)

    reports, stats = {}, {}
    regimes = (("inference", ontology, full_closure), ("prediction", reduced, reduced_closure))
    for regime, onto, closure in regimes:
        rdir = os.path.join(out, regime)
        with _Stage(f"project:{regime}"):
            projector = make_projector(config.method, config.method_options, closure)
            result = projector.fit_transform(onto)
            graph = result.graph
            write_graph(graph, os.path.join(rdir, "graph"))
            stats[regime] = {"nodes": graph.n_nodes, "labels": graph.n_labels,
                             "edges": len(graph), "skipped_axioms": len(result.skipped),
                             **result.stats}
        with _Stage(f"train:{regime}"):
            model = make_model(config.model, **dataclasses.asdict(config.train)).fit(graph)
            save_model(model, os.path.join(rdir, "model.bin"))
        with _Stage(f"evaluate:{regime}"):
            report = evaluate(model, projector, test_set, mode=config.mode,
                              classes=ontology.signature.classes,
                              closure=full_closure)
            problems = report.validate()
            if problems:
                raise ValueError("; ".join(problems))
            with open(os.path.join(rdir, "queries.tsv"), "w", encoding="utf-8") as fh:
                fh.write(report.queries_tsv())
            reports[regime] = report

    report_path = os.path.join(out, "report.tsv")
    with _Stage("report"):
        lines = [f"# split={config.split_pattern} fraction={config.split_fraction} "
                 f"seed={config.split_seed} removed={len(removed)} test={len(test_set)}"]
        for regime in ("inference", "prediction"):
            lines.append(f"## regime={regime} " + " ".join(
                f"{k}={v}" for k, v in sorted(stats[regime].items())))
            lines.append(reports[regime].to_tsv().rstrip("\n"))
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
            fh.write(config.to_json())
        _write_manifest(out)
    return {"reports": reports, "stats": stats, "report_path": report_path,
            "test_set": test_set}


def _write_manifest(out):
    entries = {}
    for root, _, files in os.walk(out):
        for name in files:
            path = os.path.join(root, name)
            rel = os.path.relpath(path, out)
            if rel != "manifest.json":
                entries[rel.replace(os.sep, "/")] = _sha256(path)
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(dict(sorted(entries.items())), fh, indent=2)
        fh.write("\n")


# --------------------------------------------------------------------------
# Grid search
# --------------------------------------------------------------------------


def grid_points(grid=None) -> list:
    grid = DEFAULT_GRID if grid is None else grid
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("empty hyperparameter grid")
    bad = set(grid) - {f.name for f in dataclasses.fields(TrainConfig)}
    if bad:
        raise ValueError(f"grid axes must be training parameters, got {sorted(bad)}")
    return list(ParameterGrid(grid))


def tail_ranks(model, triples) -> np.ndarray:
    """Pessimistic rank of each true tail among all nodes (raw)."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    E, R, M = model.entity_, model.relation_, model.matrices
    ranks = np.empty(len(triples), dtype=np.int64)
    for i, (h, r, t) in enumerate(triples):
        u = E[h] - E
        if M is not None:
            u = u @ M[r]
        u = u + R[r]
        d = np.abs(u).sum(axis=1) if model.norm == "L1" else np.sqrt((u * u).sum(axis=1))
        ranks[i] = int(np.sum(d <= d[t]))  # ties count against the true tail
    return ranks


def holdout_split(graph, fraction=VALIDATION_FRACTION, seed=0):
    """Train graph (same vocabularies) and held-out validation triples."""
    rng = np.random.default_rng(seed)
    m = len(graph)
    k = max(1, int(np.ceil(fraction * m))) if m > 1 else 0
    order = rng.permutation(m)
    held = np.sort(order[:k])
    kept = np.sort(order[k:])
    return graph.with_triples(graph.triples[kept]), graph.triples[held]


def _grid_cell(model_tag, base, point, train_graph, valid):
    params = {**base, **point}
    model = make_model(model_tag, **params).fit(train_graph)
    return float(np.mean(tail_ranks(model, valid)))


def validation_split(config: ExperimentConfig) -> tuple:
    """Training graph and held-out triples used to score grid cells.

    The graph is projected from the reduced ontology of ``config``'s split;
    ``VALIDATION_FRACTION`` of its edges are held out.
    """
    with _Stage("parse"):
        ontology = load_ontology(config.ontology)
    with _Stage("split"):
        reduced, _ = split_ontology(ontology, config.split_pattern, config.split_fraction,
                                    config.split_seed)
    with _Stage("project"):
        closure = classify(reduced) if config.method == "patterns" else None
        projector = make_projector(config.method, config.method_options, closure)
        graph = projector.fit_transform(reduced).graph
        train_graph, valid = holdout_split(graph, seed=config.train.seed)
        if len(valid) == 0 or len(train_graph) == 0:
            raise StageError("project", ValueError("graph too small for a validation split"))
    return train_graph, valid


def validation_mr(config: ExperimentConfig) -> float:
    """Validation mean rank of ``config.train``, as recorded by :func:`cmd_grid`."""
    train_graph, valid = validation_split(config)
    return _grid_cell(config.model, dataclasses.asdict(config.train), {}, train_graph, valid)


def cmd_grid(config: ExperimentConfig, grid=None, n_jobs=1) -> dict:
    """Exhaustive sweep on held-out edges of the reduced ontology's graph."""
    points = grid_points(grid)
    out = config.output
    os.makedirs(out, exist_ok=True)
    train_graph, valid = validation_split(config)
    base = dataclasses.asdict(config.train)
    with _Stage("grid"):
        if n_jobs == 1:
            scores = [_grid_cell(config.model, base, p, train_graph, valid) for p in points]
        else:
            from joblib import Parallel, delayed
            scores = Parallel(n_jobs=n_jobs)(
                delayed(_grid_cell)(config.model, base, p, train_graph, valid) for p in points)
    best = int(np.argmin(scores))
    keys = sorted(points[0])
    path = os.path.join(out, "grid_results.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# selection: {SELECTION_CRITERION}\n")
        fh.write("\t".join(keys + ["valid_MR"]) + "\n")
        for p, s in zip(points, scores):
            fh.write("\t".join(str(p[k]) for k in keys) + f"\t{s:.6f}\n")
    best_config = dataclasses.replace(config, train=TrainConfig(**{**base, **points[best]}))
    with open(os.path.join(out, "best_config.json"), "w", encoding="utf-8") as fh:
        fh.write(best_config.to_json())
    return {"points": points, "scores": scores, "best": points[best],
            "best_score": scores[best], "best_config": best_config, "results_path": path}


# --------------------------------------------------------------------------
# Analysis
# --------------------------------------------------------------------------


def edge_statistics(result) -> dict:
    edges = result.edges
    n = len(edges)
    sub = sum(1 for e in edges if e.label == SUBCLASSOF)
    inv = sum(1 for e in edges if e.label in (SUBCLASSOF_INV, TYPE_INV))
    return {"edges": n, "subclass_edges": sub,
            "subclass_pct": 100.0 * sub / n if n else 0.0,
            "inverse_edges": inv, **result.stats}


def cmd_analyze(ontology, method, options=None, compare=None, compare_options=None) -> dict:
    """Property report and edge statistics, optionally against a second method."""
    closure = classify(ontology) if "patterns" in (method, compare) else None
    projector = make_projector(method, options, closure)
    result = projector.fit_transform(ontology)
    n = len(dict.fromkeys(ontology.axioms))
    out = {"properties": analyze_result(result, n, projector).as_dict(),
           "statistics": edge_statistics(result)}
    if compare:
        other = make_projector(compare, compare_options, closure).fit_transform(ontology)
        shared = set(result.edges) & set(other.edges)
        out["compare"] = {"method": compare, "edges": len(other.edges), "shared": len(shared)}
    return out
