"""Command line entry points: run experiments, aggregate results, generate
synthetic data, and serve the session API."""

import argparse
import json
import os
import sys

from . import harness
from .tabular import export_csv

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _cmd_run(args):
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = harness.ExperimentConfig.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result, timings = harness.run_experiment(config)
    out_dir = args.out or "results"
    harness.save_result(result, timings, out_dir)
    failures = sum(1 for entry in result["settings"]
                   for alg in entry["algorithms"].values()
                   for cell in alg["cells"] if "error" in cell)
    total = sum(len(alg["cells"]) for entry in result["settings"]
                for alg in entry["algorithms"].values())
    print(f"wrote {out_dir}/results.json ({total - failures}/{total} cells ok)")
    return EXIT_PARTIAL if failures else EXIT_OK


def _cmd_aggregate(args):
    results = []
    try:
        if os.path.isdir(args.path):
            for root, _, files in os.walk(args.path):
                for name in sorted(files):
                    if name == "results.json":
                        with open(os.path.join(root, name), encoding="utf-8") as fh:
                            results.append(json.load(fh))
        else:
            with open(args.path, encoding="utf-8") as fh:
                results.append(json.load(fh))
        summary = harness.aggregate(results)
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_synth(args):
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        dataset = harness.generate_synthetic(spec)
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    export_csv(dataset, args.out)
    schema = {
        "label": "label",
        "columns": {f.name: f.kind for f in dataset.features},
        "missing_tokens": [""],
    }
    schema_path = os.path.splitext(args.out)[0] + ".schema.json"
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
    print(f"wrote {args.out} and {schema_path}")
    return EXIT_OK


def _cmd_serve(args):
    from .service import main as serve_main
    serve_main(host=args.host, port=args.port, data_dir=args.data_dir,
               ui_dir=args.ui)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cleanguide",
        description="budget-aware step-by-step cleaning recommendations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (default: results)")
    p_run.set_defaults(func=_cmd_run)

    p_agg = sub.add_parser("aggregate", help="summarize result directories")
    p_agg.add_argument("path", help="results.json file or directory tree")
    p_agg.add_argument("--out", help="write the summary to this file")
    p_agg.set_defaults(func=_cmd_aggregate)

    p_synth = sub.add_parser("synth", help="generate a synthetic CSV")
    p_synth.add_argument("spec", help="generator spec (JSON)")
    p_synth.add_argument("out", help="output CSV path")
    p_synth.set_defaults(func=_cmd_synth)

    p_session = sub.add_parser("session", help="session service commands")
    session_sub = p_session.add_subparsers(dest="session_command", required=True)
    p_serve = session_sub.add_parser("serve", help="start the HTTP API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--data-dir", default=None,
                         help="session storage directory "
                              "(default: $CLEANGUIDE_DATA or ./sessions)")
    p_serve.add_argument("--ui", default=None,
                         help="serve the built cockpit from this directory "
                              "under /ui")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
