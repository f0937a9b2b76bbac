"""Command-line entry points.

Subcommands mirror the pipeline stages so each artifact can be rebuilt in
isolation: run (everything), build-graph, extract, train, evaluate, diagnose,
generate (planted fixtures), serve (explorer API).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, correction, mapper, modes as modes_mod, pipeline
from .errors import FailmapError
from .synth import generate_planted, planted_config, write_dataset_csv


def _load_config(args) -> pipeline.PipelineConfig:
    config = pipeline.load_config(args.config)
    if getattr(args, "out", None):
        config = pipeline.PipelineConfig.from_dict(
            {**config.to_dict(), "output_dir": args.out}
        )
    if getattr(args, "seed", None) is not None:
        config = pipeline.PipelineConfig.from_dict(
            {**config.to_dict(), "seed": args.seed}
        )
    return config


def _out_dir(config) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    config = _load_config(args)
    report = pipeline.run(config)
    print(f"graph: {report.graph_summary['nodes']} nodes, {report.graph_summary['edges']} edges")
    print(f"failure modes: {len(report.mode_table)}")
    metrics = report.ensemble_metrics
    print(
        f"accuracy: {metrics['accuracy']:.4f} -> corrected {metrics['corrected_accuracy']:.4f}"
    )
    if metrics.get("clean_fraction") is not None:
        print(f"clean fraction of corrected points: {metrics['clean_fraction']:.4%}")
    for stage_name, seconds in report.timings.items():
        print(f"  [{stage_name}] {seconds:.2f}s")
    print(f"artifacts written to {config.output_dir}")


def cmd_build_graph(args):
    config = _load_config(args)
    d = pipeline.load_stage(config)
    graph = pipeline.graph_stage(config, d)
    doc = mapper.graph_to_dict(graph, config=config.to_dict())
    doc["config_hash"] = config.hash()
    out = _out_dir(config)
    pipeline.write_artifact(out / "graph.json", doc)
    print(f"graph.json: {len(graph.nodes)} nodes, {len(graph.edges)} edges")


def cmd_extract(args):
    config = _load_config(args)
    d = pipeline.load_stage(config)
    graph_doc = json.loads((Path(config.output_dir) / "graph.json").read_text())
    graph = mapper.graph_from_dict(graph_doc)
    mode_list = pipeline.extract_stage(config, d, graph)
    out = _out_dir(config)
    pipeline.write_artifact(
        out / "modes.json", modes_mod.modes_to_dict(mode_list, config_hash=config.hash())
    )
    for m in mode_list:
        print(
            f"mode {m.id}: size={m.size} accuracy={m.accuracy:.4f} "
            f"ground_truth={m.ground_truth_mode:g}"
        )
    print(f"{len(mode_list)} failure modes -> modes.json")


def cmd_train(args):
    config = _load_config(args)
    d = pipeline.load_stage(config)
    modes_doc = json.loads((Path(config.output_dir) / "modes.json").read_text())
    mode_list = modes_mod.modes_from_dict(modes_doc)
    ensemble = pipeline.train_stage(config, d, mode_list)
    out = _out_dir(config)
    pipeline.write_artifact(
        out / "ensemble.json", pipeline.ensemble_to_dict(ensemble, config_hash=config.hash())
    )
    print(f"trained {len(ensemble.classifiers)} classifiers -> ensemble.json")


def cmd_evaluate(args):
    config = _load_config(args)
    d = pipeline.load_stage(config)
    ensemble_doc = json.loads((Path(config.output_dir) / "ensemble.json").read_text())
    ensemble = pipeline.ensemble_from_dict(ensemble_doc)
    metrics, profiles = pipeline.evaluate_stage(config, d, ensemble)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    out = _out_dir(config)
    doc = {
        "schema": "evaluation/1",
        "config_hash": config.hash(),
        "metrics": metrics,
        "bias_profiles": [pipeline._bias_profile_dict(p) for p in profiles],
    }
    pipeline.write_artifact(out / "evaluation.json", doc)


def cmd_diagnose(args):
    config = _load_config(args)
    d = pipeline.load_stage(config)
    modes_doc = json.loads((Path(config.output_dir) / "modes.json").read_text())
    mode_list = modes_mod.modes_from_dict(modes_doc)
    diag = pipeline.diagnose_stage(config, d, mode_list)
    out = _out_dir(config)
    pipeline.write_artifact(
        out / "diagnostics.json",
        {"schema": "diagnostics/1", "config_hash": config.hash(), "modes": diag},
    )
    for mode_id, entry in diag.items():
        tops = ", ".join(f"{t['name']}={t['ks']:.3f}" for t in entry["top_features"])
        print(f"mode {mode_id} vs {entry['reference']}: {tops}")


def cmd_generate(args):
    d = generate_planted(
        seed=args.seed,
        n_inliers=args.inliers,
        n_outliers=args.outliers,
        dims=args.dims,
        task=args.task,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "planted.csv"
    write_dataset_csv(d, csv_path)

    # paths inside the config are relative to the config file's directory
    config = planted_config(args.task, "planted.csv", "artifacts", args.seed, args.dims)
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n")
    print(f"wrote {csv_path} ({d.row_count} rows) and {config_path}")


def cmd_serve(args):
    from .service import serve

    serve(args.artifacts, bind=args.bind, ui_dir=args.ui_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="failmap",
        description="Map, extract, and correct failure modes of a predictive model.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--out", help="override the config's output directory")
        p.add_argument("--seed", type=int, help="override the config's seed")
        p.set_defaults(func=func)
        return p

    add_config_command("run", cmd_run, "full pipeline: graph, modes, ensemble, report")
    add_config_command("build-graph", cmd_build_graph, "build and persist the graph only")
    add_config_command("extract", cmd_extract, "extract failure modes from graph.json")
    add_config_command("train", cmd_train, "train the correction ensemble from modes.json")
    add_config_command("evaluate", cmd_evaluate, "evaluate ensemble.json on the dataset")
    add_config_command("diagnose", cmd_diagnose, "KS feature rankings per failure mode")

    p_gen = sub.add_parser("generate", help="write a planted-failure fixture dataset")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=7)
    p_gen.add_argument("--inliers", type=int, default=800)
    p_gen.add_argument("--outliers", type=int, default=200)
    p_gen.add_argument("--dims", type=int, default=10)
    p_gen.add_argument(
        "--task", choices=["classification", "regression"], default="classification"
    )
    p_gen.set_defaults(func=cmd_generate)

    p_serve = sub.add_parser("serve", help="serve artifacts over HTTP for the explorer")
    p_serve.add_argument("--artifacts", required=True, help="artifact directory")
    p_serve.add_argument("--bind", default="127.0.0.1:8330", help="host:port")
    p_serve.add_argument("--ui-dir", default=None, help="built explorer UI to serve at /")
    p_serve.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except FailmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
