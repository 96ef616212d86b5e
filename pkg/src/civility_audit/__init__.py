"""Incivility measurement and toxicity-scorer word audits.

Parses speaker-turn transcripts, manages multi-dimension civility ratings
and their composites, scores text with a pluggable (remote or mock)
toxicity backend, compares human and model incivility per source, and
audits the scorer for words that trigger spurious toxicity via template
probing.
"""

from .analysis import (
    ShowStatistics,
    SnippetScore,
    TestResult,
    TranscriptIncivility,
    mann_whitney_two_sided,
    mean_ci95,
    pearson,
    show_comparison,
    transcript_stats,
)
from .annotation import (
    AnnotatorRating,
    Batch,
    CompositeScore,
    Dimension,
    DimensionPresentation,
    RawRating,
    agreement,
    build_batches,
    composite_score,
    orient,
    rationale_distribution,
)
from .audit import (
    OffensiveLexicon,
    ReferenceStats,
    TemplateSet,
    WordProfile,
    build_reference,
    classify_word,
    sample_audit_words,
    suberror_threshold,
    template_profile,
    trigger_distribution,
    validate_offensive,
    word_contribution,
)
from .corpus import (
    PassIFlag,
    Snippet,
    SpeakerTurn,
    Transcript,
    corpus_summary,
    extract_snippet,
    parse_transcript,
    sample_random_snippets,
)
from .pipeline import ReportBundle, RunConfig, run_pipeline
from .scoring import (
    MockLexicon,
    ScoreCache,
    Scorer,
    ToxicityScore,
    make_mock_scorer,
    make_remote_scorer,
    mock_score,
)

__version__ = "0.1.0"
