"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad arguments, malformed files,
bad config), 2 runtime or numeric error. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

import numpy as np

from . import chem, geometry
from .data import (DataFormatError, load_dataset, load_run_config,
                   parse_citation_files, write_citation_files,
                   write_molecule_file)
from .gradchecks import TOLERANCE, full_model_gradcheck, op_gradchecks
from .model import ConfigError
from .molgraph import MoleculeError, build_graph
from .paths import enumerate_paths, sample_paths
from .synth import TASKS, generate_molecules, synth_citation
from .tensor import load_params, save_params
from .training import (TrainReport, evaluate_regression, save_report,
                       train_node_classification, train_regression)

VALIDATION_ERRORS = (ConfigError, MoleculeError, DataFormatError,
                     FileNotFoundError, json.JSONDecodeError)


def cmd_paths(args) -> int:
    dataset = load_dataset(args.input, args.explicit_h or None)
    if not (0 <= args.index < len(dataset.records)):
        raise ConfigError(f"molecule index {args.index} out of range "
                          f"({len(dataset.records)} molecules)")
    graph = build_graph(dataset.records[args.index], dataset.featurizer)
    if args.sample is not None:
        found = sample_paths(graph, args.node, args.length, args.sample, args.seed)
    else:
        found = enumerate_paths(graph, args.node, args.length)
    for p in found:
        print(" ".join(str(v) for v in p.nodes))
    return 0


def cmd_featurize(args) -> int:
    dataset = load_dataset(args.input, args.explicit_h or None)
    with open(args.out, "w") as fh:
        for record in dataset.records:
            graph = build_graph(record, dataset.featurizer)
            ring_table = groups = None
            if args.mode == "substructure":
                ring_table = chem.ring_membership(graph)
                groups = chem.detect_groups(graph)
            elif graph.coords is None:
                raise ConfigError(f"molecule {record.id}: geometry mode needs coordinates")
            for v in range(graph.n):
                for p in enumerate_paths(graph, v, args.length):
                    if args.mode == "substructure":
                        vec = chem.substructure_path_features(
                            graph, p, ring_table, groups).to_vector()
                    else:
                        vec = geometry.geometry_path_features(graph, p).to_vector()
                    fh.write(json.dumps({
                        "molecule": record.id,
                        "path": list(p.nodes),
                        "features": [float(x) for x in vec],
                    }) + "\n")
    return 0


def cmd_gradcheck(args) -> int:
    rows = []
    if args.op:
        all_ops = op_gradchecks(seed=args.seed)
        if args.op not in all_ops:
            raise ConfigError(f"unknown op {args.op!r}; known: {sorted(all_ops)}")
        rows.append((args.op, all_ops[args.op]))
    elif args.full_model:
        for mode, err in full_model_gradcheck(seed=args.seed).items():
            rows.append((f"full_model[{mode}]", err))
    else:
        rows.extend(sorted(op_gradchecks(seed=args.seed).items()))
    failed = False
    width = max(len(name) for name, _ in rows)
    for name, err in rows:
        ok = err < TOLERANCE
        failed = failed or not ok
        print(f"{name:<{width}}  {err:12.3e}  {'PASS' if ok else 'FAIL'}")
    if failed:
        print("gradient check failed", file=sys.stderr)
        return 2
    return 0


def _train_regression_runs(config, repeats):
    dataset = load_dataset(config.dataset, config.explicit_hydrogens)
    results = []
    for r in range(repeats):
        model_config = replace(config.model, seed=config.model.seed + r)
        results.append(train_regression(dataset.records, model_config,
                                        config.train, dataset.featurizer))
    return dataset, results


def _train_citation_runs(config, repeats):
    graph = parse_citation_files(config.content, config.cites)
    results = []
    for r in range(repeats):
        gcn_config = replace(config.gcn, seed=config.gcn.seed + r)
        results.append(train_node_classification(graph, gcn_config,
                                                 epochs=config.epochs,
                                                 patience=config.patience))
    return graph, results


def cmd_train(args) -> int:
    config = load_run_config(args.config)
    repeats = args.repeats if args.repeats is not None else config.repeats

    if config.task == "regression":
        dataset, results = _train_regression_runs(config, repeats)
    else:
        _, results = _train_citation_runs(config, repeats)

    key = "test_accuracy" if config.task == "citation" else "test_rmse"
    finals = np.array([res.report.final[key] for res in results])
    with open(args.report, "w") as fh:
        for res in results:
            for entry in res.report.epochs:
                fh.write(json.dumps(entry) + "\n")
            fh.write(json.dumps({
                "final": res.report.final,
                "wall_clock": res.report.wall_clock,
                "seed": res.report.seed,
                "config": res.report.config,
            }) + "\n")
        if repeats > 1:
            fh.write(json.dumps({"summary": {
                "metric": key,
                "mean": float(finals.mean()),
                "std": float(finals.std()),
                "repeats": repeats,
            }}) + "\n")
    for res in results:
        print(f"seed {res.report.seed}: " + ", ".join(
            f"{k}={v:.4g}" for k, v in res.report.final.items()
            if isinstance(v, float)))
    if repeats > 1:
        print(f"{key}: {finals.mean():.4g} +- {finals.std():.4g} over {repeats} seeds")

    if config.checkpoint and config.task == "regression":
        best = min(results, key=lambda res: res.report.final["val_metric_best"])
        save_params(config.checkpoint, best.params, metadata={
            "task": "regression",
            "model": asdict(best.model_config),
            "element_vocab": list(best.featurizer.element_vocab),
            "explicit_hydrogens": best.featurizer.explicit_hydrogens,
            "target_mean": best.target_mean.tolist(),
            "target_std": best.target_std.tolist(),
        })
        print(f"checkpoint written to {config.checkpoint}")
    return 0


def cmd_eval(args) -> int:
    from .model import ModelConfig
    from .molgraph import FeaturizerConfig

    params, meta = load_params(args.checkpoint)
    if meta.get("task") != "regression":
        raise ConfigError(f"{args.checkpoint}: not a regression checkpoint")
    model_config = ModelConfig(**meta["model"])
    featurizer = FeaturizerConfig(tuple(meta["element_vocab"]),
                                  meta["explicit_hydrogens"])
    dataset = load_dataset(args.input, featurizer.explicit_hydrogens)
    metrics = evaluate_regression(dataset.records, params, model_config,
                                  featurizer, np.asarray(meta["target_mean"]),
                                  np.asarray(meta["target_std"]))
    print(json.dumps(metrics))
    return 0


def cmd_synth(args) -> int:
    if args.task == "citation":
        graph = synth_citation(n_nodes=args.n, seed=args.seed)
        write_citation_files(f"{args.out}.content", f"{args.out}.cites", graph)
        print(f"wrote {args.out}.content and {args.out}.cites "
              f"({graph.n} nodes, {len(graph.edges)} edges)")
        return 0
    records = generate_molecules(args.task, args.n, args.seed)
    write_molecule_file(args.out, records)
    print(f"wrote {len(records)} molecules to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathmpnn",
        description="Path message passing toolkit: enumeration, featurization, "
                    "training and evaluation.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("paths", help="list simple paths rooted at a node")
    p.add_argument("--input", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--sample", type=int, default=None, metavar="K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0, help="molecule index in the file")
    p.add_argument("--explicit-h", action="store_true")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("featurize", help="dump per-path feature vectors")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("substructure", "geometry"), required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--explicit-h", action="store_true")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--op", default=None)
    p.add_argument("--full-model", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--repeats", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a molecule file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--task", choices=TASKS + ("citation",), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except VALIDATION_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - runtime/numeric failures exit 2
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
