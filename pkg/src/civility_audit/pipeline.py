"""End-to-end run: ingest -> score -> analyze -> audit -> report.

Each stage reads the previous stage's files from the output directory, so
the expensive scoring step is never repeated implicitly; reruns with the
same configuration and score cache produce byte-identical report files.
The manifest records every stage's outputs with content digests.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import analysis, annotation, audit, corpus, scoring

ROUNDED_DIGITS = 2


class ConfigError(ValueError):
    """Bad or incomplete run configuration."""


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class RunConfig:
    transcripts_dir: Path
    flags_path: Path
    ratings_path: Path
    out_dir: Path
    backend: str = "mock"
    mock_lexicon_path: Path | None = None
    templates_path: Path | None = None
    offensive_lexicon_path: Path | None = None
    cache_path: Path | None = None  # defaults to <out_dir>/score_cache.jsonl
    endpoint: str | None = None
    qps: float = scoring.DEFAULT_QPS
    toxic_threshold: float = analysis.DEFAULT_TOXIC_THRESHOLD
    error_threshold: float = audit.DEFAULT_ERROR_THRESHOLD
    suberror_sigma: float = audit.DEFAULT_SUBERROR_SIGMA
    min_reference_turns: int = audit.DEFAULT_MIN_REFERENCE_TURNS
    reference_tox_ceiling: float = audit.DEFAULT_REFERENCE_TOX_CEILING
    target_words: int = corpus.DEFAULT_TARGET_WORDS
    words_per_show: int = 300
    random_snippets: dict[str, int] = field(default_factory=dict)
    seed: int = 0

    _PATH_FIELDS = (
        "transcripts_dir",
        "flags_path",
        "ratings_path",
        "out_dir",
        "mock_lexicon_path",
        "templates_path",
        "offensive_lexicon_path",
        "cache_path",
    )

    def __post_init__(self):
        for name in self._PATH_FIELDS:
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "RunConfig":
        """Load a JSON config; ``overrides`` (CLI flags) win over file values."""
        base = Path(path).parent
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            config = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        # Relative paths in the file are relative to the file's directory.
        for name in cls._PATH_FIELDS:
            value = getattr(config, name)
            if value is not None and not value.is_absolute():
                setattr(config, name, (base / value).resolve())
        return config

    def validate(self) -> None:
        if self.backend not in ("mock", "remote"):
            raise ConfigError(f"backend must be 'mock' or 'remote', got {self.backend!r}")
        if not self.transcripts_dir.is_dir():
            raise ConfigError(f"transcripts_dir does not exist: {self.transcripts_dir}")
        for name in ("flags_path", "ratings_path"):
            value = getattr(self, name)
            if not value.is_file():
                raise ConfigError(f"{name} does not exist: {value}")
        if self.backend == "mock":
            if self.mock_lexicon_path is None or not self.mock_lexicon_path.is_file():
                raise ConfigError(
                    f"mock backend needs mock_lexicon_path, got {self.mock_lexicon_path}"
                )
        if self.backend == "remote" and not os.environ.get(scoring.API_KEY_ENV_VAR):
            raise ConfigError(
                f"remote backend needs the {scoring.API_KEY_ENV_VAR} environment variable"
            )
        for name in ("toxic_threshold", "error_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} {value} outside [0, 1]")
        if self.suberror_sigma < 0:
            raise ConfigError("suberror_sigma must be >= 0")

    def resolved_cache_path(self) -> Path:
        return self.cache_path or (self.out_dir / "score_cache.jsonl")

    def build_scorer(self) -> scoring.Scorer:
        cache = scoring.ScoreCache(self.resolved_cache_path())
        if self.backend == "mock":
            lexicon = scoring.MockLexicon.load(self.mock_lexicon_path)
            return scoring.Scorer(scoring.MockBackend(lexicon), cache=cache)
        kwargs = {}
        if self.endpoint:
            kwargs["endpoint"] = self.endpoint
        return scoring.Scorer(
            scoring.RemoteBackend(**kwargs),
            cache=cache,
            rate_limiter=scoring.RateLimiter(self.qps),
        )

    def load_templates(self) -> audit.TemplateSet:
        if self.templates_path is None:
            return audit.TemplateSet()
        return audit.TemplateSet.load(self.templates_path)

    def load_offensive_lexicon(self) -> audit.OffensiveLexicon:
        if self.offensive_lexicon_path is None:
            return audit.OffensiveLexicon()
        return audit.OffensiveLexicon.load(self.offensive_lexicon_path)


@dataclass(frozen=True)
class ReportBundle:
    table1: Path
    table4: Path
    table6: Path
    fig2: Path
    fig3: Path
    audit_summary: Path
    manifest: Path

    def files(self) -> dict[str, Path]:
        return {
            "table1": self.table1,
            "table4": self.table4,
            "table6": self.table6,
            "fig2": self.fig2,
            "fig3": self.fig3,
            "audit_summary": self.audit_summary,
        }

    def verify(self) -> None:
        for name, path in self.files().items():
            if not path.is_file() or path.stat().st_size == 0:
                raise PipelineError("report", RuntimeError(f"{name} missing or empty: {path}"))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_jsonl(records, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_ingest(config: RunConfig) -> dict[str, Path]:
    """Parse transcripts and flags, extract flag-anchored and random snippets."""
    out = config.out_dir / "corpus"
    out.mkdir(parents=True, exist_ok=True)
    transcripts = corpus.load_corpus(config.transcripts_dir)
    flags = corpus.load_flags(config.flags_path)
    corpus.validate_flags(flags, transcripts)

    by_id = {t.id: t for t in transcripts}
    snippets: list[corpus.Snippet] = []
    for flag in flags:
        snippets.append(
            corpus.extract_snippet(
                by_id[flag.transcript_id],
                flag.turn_index,
                target_words=config.target_words,
                rationale=flag.label,
            )
        )

    # Random snippets: cycle each show's transcripts, taking one at a time
    # until the show's quota is filled or nothing fits.
    show_order = sorted({t.show for t in transcripts})
    for show in show_order:
        quota = config.random_snippets.get(show, 0)
        show_transcripts = sorted(
            (t for t in transcripts if t.show == show), key=lambda t: t.id
        )
        round_number = 0
        while quota > 0:
            progress = False
            for i, transcript in enumerate(show_transcripts):
                if quota == 0:
                    break
                sampled = corpus.sample_random_snippets(
                    transcript,
                    1,
                    taken=[s for s in snippets if s.transcript_id == transcript.id],
                    seed=config.seed + 7919 * round_number + i,
                    target_words=config.target_words,
                )
                if sampled:
                    snippets.extend(sampled)
                    quota -= 1
                    progress = True
            round_number += 1
            if not progress:
                break

    transcripts_path = out / "transcripts.jsonl"
    snippets_path = out / "snippets.jsonl"
    _write_jsonl((corpus.transcript_to_dict(t) for t in transcripts), transcripts_path)
    corpus.save_snippets(snippets, snippets_path)
    return {"transcripts": transcripts_path, "snippets": snippets_path}


def _load_corpus_outputs(config: RunConfig) -> tuple[list[corpus.Transcript], list[corpus.Snippet]]:
    transcripts_path = config.out_dir / "corpus" / "transcripts.jsonl"
    snippets_path = config.out_dir / "corpus" / "snippets.jsonl"
    if not transcripts_path.is_file() or not snippets_path.is_file():
        raise ConfigError("corpus outputs missing; run the ingest stage first")
    transcripts = [corpus.transcript_from_dict(r) for r in _read_jsonl(transcripts_path)]
    snippets = corpus.load_snippets(snippets_path)
    return transcripts, snippets


def stage_score(config: RunConfig) -> dict[str, Path]:
    """Score every turn and snippet with the configured backend."""
    transcripts, snippets = _load_corpus_outputs(config)
    out = config.out_dir / "scored"
    out.mkdir(parents=True, exist_ok=True)
    scorer = config.build_scorer()

    turn_records = []
    for transcript in transcripts:
        scores = scorer.score_batch([t.text for t in transcript.turns])
        for turn, score in zip(transcript.turns, scores):
            turn_records.append(
                {
                    "transcript_id": transcript.id,
                    "turn_index": turn.index,
                    "score": score.value,
                    "model_id": score.model_id,
                }
            )
    snippet_scores = scorer.score_batch([s.text for s in snippets])
    snippet_records = [
        {"snippet_id": s.id, "score": score.value, "model_id": score.model_id}
        for s, score in zip(snippets, snippet_scores)
    ]
    turn_path = out / "turn_scores.jsonl"
    snippet_path = out / "snippet_scores.jsonl"
    _write_jsonl(turn_records, turn_path)
    _write_jsonl(snippet_records, snippet_path)
    return {"turn_scores": turn_path, "snippet_scores": snippet_path}


def _load_scores(config: RunConfig) -> tuple[dict[tuple[str, int], float], dict[str, float]]:
    turn_path = config.out_dir / "scored" / "turn_scores.jsonl"
    snippet_path = config.out_dir / "scored" / "snippet_scores.jsonl"
    if not turn_path.is_file() or not snippet_path.is_file():
        raise ConfigError("score outputs missing; run the score stage first")
    turn_scores = {
        (r["transcript_id"], r["turn_index"]): r["score"] for r in _read_jsonl(turn_path)
    }
    snippet_scores = {r["snippet_id"]: r["score"] for r in _read_jsonl(snippet_path)}
    return turn_scores, snippet_scores


def stage_analyze(config: RunConfig) -> dict[str, Path]:
    """Transcript- and snippet-level statistics, tests, and figure data."""
    transcripts, snippets = _load_corpus_outputs(config)
    turn_scores, snippet_scores = _load_scores(config)
    flags = corpus.load_flags(config.flags_path)
    ratings = annotation.load_ratings(config.ratings_path)
    out = config.out_dir / "analysis"
    out.mkdir(parents=True, exist_ok=True)

    incivility = analysis.transcript_stats(
        transcripts, turn_scores, flags, threshold=config.toxic_threshold
    )
    stats_rows = list(analysis.transcript_show_statistics(incivility))

    composites = annotation.composites_by_snippet(ratings)
    by_id = {s.id: s for s in snippets}
    rated = [
        analysis.SnippetScore(
            snippet_id=sid,
            show=by_id[sid].show,
            human=score.value,
            model=snippet_scores[sid],
        )
        for sid, score in sorted(composites.items())
        if sid in by_id and sid in snippet_scores
    ]
    comparison = analysis.show_comparison(rated)
    stats_rows.extend(comparison.statistics)

    analysis.write_statistics_csv(stats_rows, out / "table4.csv")
    analysis.write_scatter_csv(comparison.scatter, out / "fig3.csv")
    annotation.export_composites(snippets, composites, out / "composites.csv")

    distribution = annotation.rationale_distribution(
        (by_id[sid].rationale, score)
        for sid, score in sorted(composites.items())
        if sid in by_id
    )
    fig2 = {
        label: {
            "count": d.count,
            "mean": d.mean,
            "min": d.min,
            "max": d.max,
            "below_midpoint": d.below_midpoint,
        }
        for label, d in distribution.items()
    }

    def test_dict(result: analysis.TestResult) -> dict:
        return {
            "u_statistic": result.u_statistic,
            "p_value": result.p_value,
            "method": result.method,
            "n1": result.n1,
            "n2": result.n2,
        }

    correlations: dict[str, float | None] = {}
    try:
        correlations["transcript"] = analysis.pearson(
            [float(t.human_uncivil_turns) for t in incivility],
            [float(t.model_toxic_turns) for t in incivility],
        )
    except analysis.AnalysisError:
        correlations["transcript"] = None
    try:
        correlations["snippet"] = analysis.pearson(
            [s.human for s in rated], [s.model for s in rated]
        )
    except analysis.AnalysisError:
        correlations["snippet"] = None

    significance = {
        "human": {f"{a}|{b}": test_dict(t) for (a, b), t in comparison.human_tests.items()},
        "model": {f"{a}|{b}": test_dict(t) for (a, b), t in comparison.model_tests.items()},
        "correlations": correlations,
    }

    agreements = annotation.pairwise_agreement(ratings)
    agreement_path = out / "agreement.csv"
    with open(agreement_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("annotator_a,annotator_b,n_shared,pearson_r,mean_abs_diff\n")
        for (a, b), result in sorted(agreements.items()):
            r = "" if result.pearson_r is None else repr(result.pearson_r)
            fh.write(f"{a},{b},{result.n_shared},{r},{repr(result.mean_abs_diff)}\n")

    fig2_path = out / "fig2.json"
    with open(fig2_path, "w", encoding="utf-8") as fh:
        json.dump(fig2, fh, indent=2, sort_keys=True)
        fh.write("\n")
    significance_path = out / "significance.json"
    with open(significance_path, "w", encoding="utf-8") as fh:
        json.dump(significance, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {
        "table4": out / "table4.csv",
        "fig3": out / "fig3.csv",
        "fig2": fig2_path,
        "significance": significance_path,
        "composites": out / "composites.csv",
        "agreement": agreement_path,
    }


def stage_audit(config: RunConfig) -> dict[str, Path]:
    """Word sampling, template profiling, classification, and distributions."""
    transcripts, snippets = _load_corpus_outputs(config)
    turn_scores, _ = _load_scores(config)
    out = config.out_dir / "audit"
    out.mkdir(parents=True, exist_ok=True)
    scorer = config.build_scorer()
    templates = config.load_templates()
    lexicon = config.load_offensive_lexicon()

    scored_turns: dict[str, list[tuple[str, float]]] = {}
    for transcript in transcripts:
        rows = scored_turns.setdefault(transcript.show, [])
        for turn in transcript.turns:
            rows.append((turn.text, turn_scores[(transcript.id, turn.index)]))

    audit_words = audit.sample_audit_words(
        scored_turns, per_show=config.words_per_show, seed=config.seed
    )
    profiles = audit.profile_words(audit_words, templates, scorer)
    profiles = audit.apply_lexicon(profiles, lexicon)
    reference = audit.build_reference(
        scored_turns,
        templates,
        scorer,
        lexicon=lexicon,
        min_turns=config.min_reference_turns,
        turn_tox_ceiling=config.reference_tox_ceiling,
        suberror_sigma=config.suberror_sigma,
    )
    profiles = audit.classify_profiles(
        profiles, reference, error_threshold=config.error_threshold
    )
    validation = audit.validate_offensive(
        profiles, lexicon, reference.suberror_threshold,
        error_threshold=config.error_threshold,
    )
    distribution = audit.trigger_distribution(snippets, profiles, lexicon)

    report_path = out / "report.csv"
    summary_path = out / "summary.json"
    table6_path = out / "table6.csv"
    audit.write_audit_csv(profiles, report_path, n_templates=len(templates))
    audit.write_audit_summary(
        audit.audit_summary_dict(
            profiles, reference, validation, distribution,
            error_threshold=config.error_threshold,
        ),
        summary_path,
    )
    audit.write_trigger_distribution_csv(distribution, table6_path)
    return {"report": report_path, "summary": summary_path, "table6": table6_path}


def _write_table1(snippets, path: Path) -> None:
    rows = corpus.corpus_summary(snippets)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("show,uncivil,civil,random,total,mean_words,vocabulary\n")
        for row in rows:
            fh.write(
                f"{row.show},{row.uncivil},{row.civil},{row.random},{row.total},"
                f"{repr(row.mean_words)},{row.vocabulary}\n"
            )


def _rounded_copy(src: Path, dst: Path, ndigits: int = ROUNDED_DIGITS) -> None:
    """Copy a CSV with float cells rounded; integers and text pass through."""
    import csv as _csv

    with open(src, encoding="utf-8", newline="") as inp, open(
        dst, "w", encoding="utf-8", newline=""
    ) as out:
        writer = _csv.writer(out)
        for row in _csv.reader(inp):
            rounded = []
            for cell in row:
                if ("." in cell or "e" in cell or "E" in cell) and cell not in ("", "-"):
                    try:
                        rounded.append(f"{float(cell):.{ndigits}f}")
                        continue
                    except ValueError:
                        pass
                rounded.append(cell)
            writer.writerow(rounded)


def emit_tables(config: RunConfig) -> dict[str, Path]:
    """Write the bundle's human-facing copies: table1 plus 2-decimal tables.

    Machine-precision CSVs come from the analyze/audit stages; this stage
    derives the rounded copies from them, so the two always agree after
    rounding.
    """
    _, snippets = _load_corpus_outputs(config)
    table1_path = config.out_dir / "table1.csv"
    _write_table1(snippets, table1_path)

    out_analysis = config.out_dir / "analysis"
    out_audit = config.out_dir / "audit"
    for src in (out_analysis / "table4.csv", out_analysis / "fig3.csv",
                out_audit / "table6.csv"):
        if not src.is_file():
            raise ConfigError(f"{src.name} missing; run the analyze/audit stages first")
    _rounded_copy(out_analysis / "table4.csv", out_analysis / "table4_rounded.csv")
    _rounded_copy(out_analysis / "fig3.csv", out_analysis / "fig3_rounded.csv")
    _rounded_copy(out_audit / "table6.csv", out_audit / "table6_rounded.csv")
    return {
        "table1": table1_path,
        "table4_rounded": out_analysis / "table4_rounded.csv",
        "fig3_rounded": out_analysis / "fig3_rounded.csv",
        "table6_rounded": out_audit / "table6_rounded.csv",
    }


STAGES: tuple[tuple[str, Callable[[RunConfig], dict[str, Path]]], ...] = (
    ("ingest", stage_ingest),
    ("score", stage_score),
    ("analyze", stage_analyze),
    ("audit", stage_audit),
    ("report", emit_tables),
)


def _stage_inputs(config: RunConfig, stage: str) -> list[str]:
    corpus_files = [
        config.out_dir / "corpus" / "transcripts.jsonl",
        config.out_dir / "corpus" / "snippets.jsonl",
    ]
    scored_files = [
        config.out_dir / "scored" / "turn_scores.jsonl",
        config.out_dir / "scored" / "snippet_scores.jsonl",
    ]
    inputs: dict[str, list[Path | None]] = {
        "ingest": [config.transcripts_dir, config.flags_path],
        "score": [*corpus_files, config.mock_lexicon_path, config.resolved_cache_path()],
        "analyze": [*corpus_files, *scored_files, config.flags_path, config.ratings_path],
        "audit": [
            *corpus_files,
            *scored_files,
            config.templates_path,
            config.offensive_lexicon_path,
            config.mock_lexicon_path,
            config.resolved_cache_path(),
        ],
        "report": [
            *corpus_files,
            config.out_dir / "analysis" / "table4.csv",
            config.out_dir / "analysis" / "fig3.csv",
            config.out_dir / "audit" / "table6.csv",
        ],
    }
    return [str(path) for path in inputs.get(stage, []) if path is not None]


def run_pipeline(config: RunConfig) -> ReportBundle:
    """Run every stage and write the manifest; returns the report bundle.

    Any stage failure aborts the run; the manifest still records completed
    stages and marks the failing one incomplete. Output files contain no
    timestamps, so two runs with the same configuration and cache produce
    byte-identical bundles (the manifest's stage timings are the only
    nondeterministic values; its digests are not).
    """
    config.validate()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = config.out_dir / "manifest.json"
    manifest: dict = {"stages": {}, "bundle": {}}
    bundle_files: dict[str, Path] = {}

    for name, stage in STAGES:
        started = time.monotonic()
        try:
            outputs = stage(config)
        except Exception as exc:
            manifest["stages"][name] = {
                "status": "incomplete",
                "error": str(exc),
                "duration_s": time.monotonic() - started,
            }
            _write_manifest(manifest, manifest_path, config)
            raise PipelineError(name, exc) from exc
        manifest["stages"][name] = {
            "status": "complete",
            "inputs": _stage_inputs(config, name),
            "outputs": {
                key: {"path": str(path.relative_to(config.out_dir)), "sha256": _sha256(path)}
                for key, path in sorted(outputs.items())
            },
            "duration_s": time.monotonic() - started,
        }
        bundle_files.update(outputs)

    bundle = ReportBundle(
        table1=bundle_files["table1"],
        table4=bundle_files["table4"],
        table6=bundle_files["table6"],
        fig2=bundle_files["fig2"],
        fig3=bundle_files["fig3"],
        audit_summary=bundle_files["summary"],
        manifest=manifest_path,
    )
    manifest["bundle"] = {
        key: str(path.relative_to(config.out_dir)) for key, path in bundle.files().items()
    }
    _write_manifest(manifest, manifest_path, config)
    bundle.verify()
    return bundle


def _write_manifest(manifest: dict, path: Path, config: RunConfig) -> None:
    snapshot = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in dataclasses.asdict(config).items()
    }
    manifest["config"] = snapshot
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
