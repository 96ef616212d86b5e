"""Command-line entry point.

One subcommand per pipeline stage (ingest, score, analyze, audit, report)
so expensive scoring is never repeated implicitly, plus rater agreement
and the annotation web service. Flags override config-file values.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import annotation, corpus, pipeline, service


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--transcripts", type=Path, dest="transcripts_dir",
                        help="directory of <SHOW>_<date>.txt transcripts")
    parser.add_argument("--flags", type=Path, dest="flags_path", help="Pass I flags JSONL")
    parser.add_argument("--ratings", type=Path, dest="ratings_path", help="ratings JSONL")
    parser.add_argument("--out", type=Path, dest="out_dir", help="output directory")
    parser.add_argument("--backend", choices=["remote", "mock"])
    parser.add_argument("--mock-lexicon", type=Path, dest="mock_lexicon_path")
    parser.add_argument("--templates", type=Path, dest="templates_path",
                        help="template file, one carrier sentence per line")
    parser.add_argument("--lexicon", type=Path, dest="offensive_lexicon_path",
                        help="offensive-word list, one word per line")
    parser.add_argument("--cache", type=Path, dest="cache_path", help="score cache JSONL")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--toxic-threshold", type=float, dest="toxic_threshold")
    parser.add_argument("--error-threshold", type=float, dest="error_threshold")
    parser.add_argument("--suberror-sigma", type=float, dest="suberror_sigma")
    parser.add_argument("--words-per-show", type=int, dest="words_per_show")


_CONFIG_KEYS = (
    "transcripts_dir",
    "flags_path",
    "ratings_path",
    "out_dir",
    "backend",
    "mock_lexicon_path",
    "templates_path",
    "offensive_lexicon_path",
    "cache_path",
    "seed",
    "toxic_threshold",
    "error_threshold",
    "suberror_sigma",
    "words_per_show",
)


def _build_config(args: argparse.Namespace) -> pipeline.RunConfig:
    overrides = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    overrides = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in overrides.items()
        if value is not None
    }
    if args.config is not None:
        config = pipeline.RunConfig.from_file(args.config, overrides)
    else:
        required = ("transcripts_dir", "flags_path", "ratings_path", "out_dir")
        missing = [name for name in required if overrides.get(name) is None]
        if missing:
            raise pipeline.ConfigError(
                f"missing {', '.join(missing)} (pass --config or the individual flags)"
            )
        config = pipeline.RunConfig(**overrides)
    config.validate()
    return config


def _cmd_stage(args: argparse.Namespace) -> int:
    config = _build_config(args)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    stage = dict(pipeline.STAGES)[args.command]
    outputs = stage(config)
    for name, path in sorted(outputs.items()):
        print(f"{args.command}: wrote {name} -> {path}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    config = _build_config(args)
    bundle = pipeline.run_pipeline(config)
    for name, path in sorted(bundle.files().items()):
        print(f"report: {name} -> {path}")
    print(f"report: manifest -> {bundle.manifest}")
    return 0


def _cmd_agreement(args: argparse.Namespace) -> int:
    ratings = annotation.load_ratings(args.ratings)
    results = annotation.pairwise_agreement(ratings)
    if not results:
        print("agreement: no annotator pair shares any snippet")
        return 1
    rows = []
    for (first, second), result in sorted(results.items()):
        r = "undefined" if result.pearson_r is None else f"{result.pearson_r:.3f}"
        rows.append((first, second, result.n_shared, r, f"{result.mean_abs_diff:.3f}"))
        print(
            f"{first} vs {second}: n={result.n_shared} pearson_r={r} "
            f"mean_abs_diff={result.mean_abs_diff:.3f}"
        )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("annotator_a,annotator_b,n_shared,pearson_r,mean_abs_diff\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"agreement: wrote {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    snippets = corpus.load_snippets(args.snippets)
    app = service.create_app(
        snippets,
        annotators=[a.strip() for a in args.annotators.split(",") if a.strip()],
        store_path=args.store,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="civility-audit",
        description="Incivility statistics and toxicity-scorer word audits "
        "for speaker-turn transcripts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("ingest", "parse transcripts and flags, extract snippets"),
        ("score", "score turns and snippets with the configured backend"),
        ("analyze", "statistics, significance tests, and figure data"),
        ("audit", "template-probing word audit"),
    ):
        stage_parser = sub.add_parser(name, help=help_text)
        _add_config_flags(stage_parser)
        stage_parser.set_defaults(func=_cmd_stage)

    report = sub.add_parser("report", help="run all stages and emit the report bundle")
    _add_config_flags(report)
    report.set_defaults(func=_cmd_report)

    agreement = sub.add_parser("agreement", help="inter-annotator agreement from a ratings file")
    agreement.add_argument("--ratings", type=Path, required=True)
    agreement.add_argument("--out", type=Path, help="optional CSV output")
    agreement.set_defaults(func=_cmd_agreement)

    serve = sub.add_parser("serve", help="run the annotation web service")
    serve.add_argument("--snippets", type=Path, required=True, help="snippet corpus JSONL")
    serve.add_argument("--store", type=Path, required=True, help="ratings store JSONL")
    serve.add_argument("--annotators", required=True, help="comma-separated annotator ids")
    serve.add_argument("--batch-size", type=int, default=service.DEFAULT_BATCH_SIZE)
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (pipeline.ConfigError, pipeline.PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
