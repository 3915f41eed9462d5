"""Command-line interface: ``ontoproj <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiment as ex
from .dl import split_ontology
from .graph import read_graph, write_graph
from .inference import evaluate, score_axiom
from .kge import load_model, make_model, save_model
from .projection import Unprojectable
from .reasoner import classify, read_closure, write_closure
from .syntax import load_ontology, parse_axiom, save_ontology, serialize_axiom

logger = logging.getLogger("ontoproj")


def _read_axioms(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                out.append(parse_axiom(line))
    return out


def _method_options(args) -> dict:
    opts = {}
    if getattr(args, "no_inverse_edges", False):
        opts["inverse_edges"] = False
    if getattr(args, "patterns", None):
        opts["patterns_file"] = args.patterns
    if getattr(args, "non_injective", False):
        opts["non_injective"] = True
    return opts


def _add_method_args(p, default="owl2vecstar"):
    p.add_argument("--method", default=default,
                   choices=["taxonomy", "owl2vecstar", "rdf", "patterns"])
    p.add_argument("--no-inverse-edges", action="store_true",
                   help="owl2vecstar: omit subclassof⁻¹ and type⁻¹ edges")
    p.add_argument("--patterns", help="patterns: pattern file (default patterns otherwise)")
    p.add_argument("--non-injective", action="store_true",
                   help="patterns: let ∃ templates also match ∀ restrictions")


def _add_train_args(p):
    defaults = ex.TrainConfig()
    p.add_argument("--model", default="transe", choices=["transe", "transr"])
    p.add_argument("--dim", type=int, default=defaults.dim)
    p.add_argument("--margin", type=float, default=defaults.margin)
    p.add_argument("--l2", type=float, default=defaults.l2)
    p.add_argument("--batch-size", type=int, default=defaults.batch_size)
    p.add_argument("--lr", type=float, default=defaults.lr)
    p.add_argument("--epochs", type=int, default=defaults.epochs)
    p.add_argument("--negatives", type=int, default=defaults.negatives)
    p.add_argument("--norm", default=defaults.norm, choices=["L1", "L2"])


# -- subcommands ---------------------------------------------------------------


def cmd_parse(args):
    onto = load_ontology(args.ontology)
    sig = onto.signature
    print(f"axioms={len(onto.axioms)} classes={len(sig.classes)} roles={len(sig.roles)} "
          f"individuals={len(sig.individuals)}")
    if args.output:
        save_ontology(onto, args.output)


def cmd_reason(args):
    facts = classify(load_ontology(args.ontology))
    write_closure(facts, args.output)
    print(f"subsumptions={len(facts.subsumptions)} existentials={len(facts.existentials)}")


def cmd_split(args):
    onto = load_ontology(args.ontology)
    reduced, removed = split_ontology(onto, args.pattern, args.fraction, args.seed)
    save_ontology(reduced, args.output)
    if args.removed:
        with open(args.removed, "w", encoding="utf-8") as fh:
            fh.writelines(serialize_axiom(a) + "\n" for a in removed)
    print(f"removed={len(removed)} kept={len(reduced.axioms)}")


def cmd_project(args):
    onto = load_ontology(args.ontology)
    closure = read_closure(args.closure) if args.closure else None
    if args.method == "patterns" and closure is None:
        closure = classify(onto)
    result = ex.make_projector(args.method, _method_options(args), closure).fit_transform(onto)
    write_graph(result.graph, args.output)
    stats = ex.edge_statistics(result)
    print(" ".join(f"{k}={v}" for k, v in stats.items()) + f" skipped={len(result.skipped)}")


def cmd_train(args):
    graph = read_graph(args.graph)
    model = make_model(args.model, dim=args.dim, margin=args.margin, l2=args.l2,
                       batch_size=args.batch_size, lr=args.lr, epochs=args.epochs,
                       seed=args.seed, negatives=args.negatives, norm=args.norm)
    model.fit(graph)
    save_model(model, args.output)
    print(f"epochs={model.n_epochs_} final_loss={model.loss_curve_[-1]:.6f}")


def _load_model_for(args):
    graph = read_graph(args.graph) if args.graph else None
    return load_model(args.model_file, graph)


def cmd_score(args):
    model = _load_model_for(args)
    projector = ex.make_projector(args.method, _method_options(args))
    axioms = [parse_axiom(a) for a in args.axiom] or _read_axioms(args.axioms)
    status = 0
    for ax in axioms:
        try:
            s = score_axiom(model, projector, ax)
        except Unprojectable as exc:
            print(f"{serialize_axiom(ax)}\tunprojectable\t{exc}")
            status = 1
            continue
        tied = ",".join(sorted(serialize_axiom(t) for t in s.tied))
        print(f"{serialize_axiom(ax)}\t{s.score:.6f}\t{tied}")
    return status


def cmd_evaluate(args):
    model = _load_model_for(args)
    onto = load_ontology(args.ontology)
    closure = read_closure(args.closure) if args.closure else classify(onto)
    projector = ex.make_projector(args.method, _method_options(args), closure)
    if args.method == "patterns":
        projector.fit(onto)
    report = evaluate(model, projector, _read_axioms(args.test), mode=args.mode,
                      classes=onto.signature.classes, closure=closure,
                      optimistic=args.optimistic)
    problems = report.validate()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report.to_tsv())
    print(report.to_table())
    for p in problems:
        print(f"INVALID: {p}", file=sys.stderr)
    return 1 if problems else 0


def _config(args):
    config = ex.load_config(args.config, args.set) if args.config else \
        ex.ExperimentConfig().override(args.set)
    if args.output:
        config.output = args.output
    if args.seed is not None:
        config.train.seed = args.seed
        config.split_seed = args.seed
    return config


def cmd_run(args):
    result = ex.cmd_run(_config(args))
    for regime, report in result["reports"].items():
        print(f"== {regime}")
        print(report.to_table())
    print(f"report: {result['report_path']}")


def cmd_grid(args):
    config = _config(args)
    grid = None
    if args.grid:
        with open(args.grid, encoding="utf-8") as fh:
            grid = json.load(fh)
    result = ex.cmd_grid(config, grid, n_jobs=args.jobs)
    print(f"cells={len(result['points'])} best={result['best']} "
          f"valid_MR={result['best_score']:.4f}")
    print(f"results: {result['results_path']}")


def cmd_analyze(args):
    onto = load_ontology(args.ontology)
    out = ex.cmd_analyze(onto, args.method, _method_options(args), compare=args.compare)
    print(json.dumps(out, indent=2, sort_keys=True))


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ontoproj", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="check an ontology file and print its signature size")
    p.add_argument("ontology")
    p.add_argument("-o", "--output", help="write the normalized serialization here")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("reason", help="write the EL closure as TSV")
    p.add_argument("ontology")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reason)

    p = sub.add_parser("split", help="remove a seeded fraction of sub/ex axioms")
    p.add_argument("ontology")
    p.add_argument("--pattern", default="sub", choices=["sub", "ex", "sub_ex"])
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--removed", help="write removed axioms here")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("project", help="project an ontology into a graph directory")
    p.add_argument("ontology")
    _add_method_args(p)
    p.add_argument("--closure", help="closure TSV for the patterns method")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("train", help="train TransE/TransR on a graph")
    p.add_argument("graph")
    _add_train_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score axioms with a trained model")
    p.add_argument("model_file")
    _add_method_args(p)
    p.add_argument("--graph", help="graph directory to check the model against")
    p.add_argument("--axiom", action="append", default=[])
    p.add_argument("--axioms", help="file with one axiom per line")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="rank test axioms and report MR/Hits/AUC")
    p.add_argument("model_file")
    p.add_argument("ontology", help="ontology whose classes form the candidates")
    p.add_argument("test", help="file with one test axiom per line")
    _add_method_args(p)
    p.add_argument("--graph")
    p.add_argument("--closure", help="closure TSV used for filtering")
    p.add_argument("--mode", default="A", choices=["A", "B"])
    p.add_argument("--optimistic", action="store_true", help="optimistic tie ranking")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    for name, func, text in (("run", cmd_run, "full pipeline on both regimes"),
                             ("grid", cmd_grid, "hyperparameter grid search")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", nargs="?", help="JSON experiment config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. train.lr=0.1")
        p.add_argument("--seed", type=int, help="override split and training seeds")
        p.add_argument("-o", "--output")
        if name == "grid":
            p.add_argument("--grid", help="JSON mapping of training parameter to values")
            p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="projection properties and edge statistics")
    p.add_argument("ontology")
    _add_method_args(p, default="taxonomy")
    p.add_argument("--compare", choices=["taxonomy", "owl2vecstar", "rdf", "patterns"])
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "score" and not args.axiom and not args.axioms:
        print("score: give --axiom or --axioms", file=sys.stderr)
        return 2
    try:
        return args.func(args) or 0
    except ex.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
