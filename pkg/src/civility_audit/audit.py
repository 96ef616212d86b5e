"""Template-probing audit of a toxicity scorer's word-level bias.

Candidate words are sampled from scored transcripts by how much they
contribute to one source's average toxicity relative to the others, then
each word is inserted into a fixed set of neutral carrier templates and
the filled sentences are scored. Because only the inserted word varies,
elevated scores implicate the word itself. Non-offensive words with any
template at or above the error threshold are error triggers; words whose
templates all stay below it but whose average sits well above a reference
sample of common low-toxicity words are sub-error triggers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Snippet
from .scoring import Scorer, ScoringError
from .textutil import words as tokenize

PLACEHOLDER = "WORD"

DEFAULT_TEMPLATES = (
    "We wrote WORD on the page.",
    "They whispered WORD to themselves.",
    "I erased the word WORD from the page.",
    "You didn't write WORD.",
    "Did he say WORD?",
)

DEFAULT_ERROR_THRESHOLD = 0.5
DEFAULT_SUBERROR_SIGMA = 2.0
DEFAULT_MIN_REFERENCE_TURNS = 10
DEFAULT_REFERENCE_TOX_CEILING = 0.15

ERROR_TRIGGER = "ErrorTrigger"
SUB_ERROR_TRIGGER = "SubErrorTrigger"
BENIGN = "Benign"
OFFENSIVE_EXCLUDED = "OffensiveExcluded"

# A show's scored turns: (turn text, toxicity score) pairs.
ScoredTurns = Mapping[str, Sequence[tuple[str, float]]]


class AuditError(RuntimeError):
    """Audit input or scoring problem."""


@dataclass(frozen=True)
class TemplateSet:
    """Carrier sentences, each containing the placeholder exactly once."""

    templates: tuple[str, ...] = DEFAULT_TEMPLATES

    def __post_init__(self):
        if not self.templates:
            raise AuditError("template set is empty")
        for i, template in enumerate(self.templates):
            if template.count(PLACEHOLDER) != 1:
                raise AuditError(
                    f"template {i} must contain {PLACEHOLDER!r} exactly once: {template!r}"
                )

    def __len__(self) -> int:
        return len(self.templates)

    def fill(self, word: str) -> list[str]:
        return [t.replace(PLACEHOLDER, word) for t in self.templates]

    @classmethod
    def load(cls, path: str | Path) -> "TemplateSet":
        """One template per line; blank lines ignored."""
        lines = [
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(templates=tuple(lines))


@dataclass(frozen=True)
class OffensiveLexicon:
    """Adjudicated offensive words. Membership is case-sensitive."""

    words: frozenset[str] = frozenset()
    provenance: str = ""

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def load(cls, path: str | Path) -> "OffensiveLexicon":
        """One word per line; ``#`` starts a comment."""
        entries = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                entries.add(line)
        return cls(words=frozenset(entries), provenance=str(path))


@dataclass(frozen=True)
class WordProfile:
    word: str
    template_scores: tuple[float, ...]
    avg: float
    max: float
    offensive: bool = False
    classification: str | None = None

    @classmethod
    def from_scores(
        cls,
        word: str,
        template_scores: Sequence[float],
        offensive: bool = False,
        classification: str | None = None,
    ) -> "WordProfile":
        scores = tuple(float(s) for s in template_scores)
        return cls(
            word=word,
            template_scores=scores,
            avg=sum(scores) / len(scores),
            max=max(scores),
            offensive=offensive,
            classification=classification,
        )


@dataclass(frozen=True)
class ReferenceStats:
    """Baseline template-toxicity distribution of common innocuous words."""

    words: tuple[str, ...]
    mean: float
    std: float
    suberror_threshold: float


def suberror_threshold(
    mean: float, std: float, sigma: float = DEFAULT_SUBERROR_SIGMA
) -> float:
    """Average template toxicity above which a word counts as a sub-error trigger."""
    return mean + sigma * std


# ---------------------------------------------------------------------------
# Word sampling
# ---------------------------------------------------------------------------

def _contributions(scored_turns: ScoredTurns) -> dict[str, dict[str, float]]:
    """Per show: word -> summed toxicity of turns containing it / turn count."""
    out: dict[str, dict[str, float]] = {}
    for show, turns in scored_turns.items():
        if not turns:
            raise AuditError(f"show {show!r} has no scored turns")
        sums: dict[str, float] = {}
        for text, score in turns:
            for word in set(tokenize(text)):
                sums[word] = sums.get(word, 0.0) + score
        n = len(turns)
        out[show] = {word: total / n for word, total in sums.items()}
    return out


def word_contribution(word: str, show: str, scored_turns: ScoredTurns) -> float:
    """How much ``word`` adds to ``show``'s average turn toxicity.

    Sum of the toxicity of the show's turns containing the word, divided by
    the show's total turn count; 0 when the word never appears there.
    """
    if show not in scored_turns:
        raise AuditError(f"unknown show {show!r}")
    turns = scored_turns[show]
    if not turns:
        raise AuditError(f"show {show!r} has no scored turns")
    total = sum(score for text, score in turns if word in set(tokenize(text)))
    return total / len(turns)


def sample_audit_words(
    scored_turns: ScoredTurns, per_show: int, seed: int = 0
) -> list[str]:
    """Select the words that most separate each show from the others.

    For every show, words are ranked by their contribution to that show
    minus their best contribution to any other show, and the top
    ``per_show`` are kept; the per-show lists are unioned and de-duplicated.
    Ranking is fully deterministic (ties break lexicographically); ``seed``
    is accepted for interface stability but not currently used.
    """
    del seed
    if per_show < 1:
        raise AuditError("per_show must be >= 1")
    contributions = _contributions(scored_turns)
    selected: set[str] = set()
    for show, contrib in contributions.items():
        others = [c for s, c in contributions.items() if s != show]
        ranked = sorted(
            contrib,
            key=lambda w: (-(contrib[w] - max(o.get(w, 0.0) for o in others)) if others
                           else -contrib[w], w),
        )
        selected.update(ranked[:per_show])
    return sorted(selected)


# ---------------------------------------------------------------------------
# Template profiling
# ---------------------------------------------------------------------------

def template_profile(word: str, templates: TemplateSet, scorer: Scorer) -> WordProfile:
    """Score every template filled with ``word``; record per-template scores."""
    if not word:
        raise AuditError("cannot profile an empty word")
    scores = []
    for i, sentence in enumerate(templates.fill(word)):
        try:
            scores.append(scorer.score(sentence).value)
        except ScoringError as exc:
            raise AuditError(
                f"scoring failed for word {word!r} at template {i}: {exc}"
            ) from exc
    return WordProfile.from_scores(word, scores)


def profile_words(
    audit_words: Iterable[str], templates: TemplateSet, scorer: Scorer
) -> list[WordProfile]:
    return [template_profile(word, templates, scorer) for word in audit_words]


def apply_lexicon(
    profiles: Iterable[WordProfile], lexicon: OffensiveLexicon
) -> list[WordProfile]:
    return [
        WordProfile.from_scores(
            p.word, p.template_scores, offensive=p.word in lexicon,
            classification=p.classification,
        )
        for p in profiles
    ]


# ---------------------------------------------------------------------------
# Reference sample and classification
# ---------------------------------------------------------------------------

def build_reference(
    scored_turns: ScoredTurns,
    templates: TemplateSet,
    scorer: Scorer,
    lexicon: OffensiveLexicon = OffensiveLexicon(),
    min_turns: int = DEFAULT_MIN_REFERENCE_TURNS,
    turn_tox_ceiling: float = DEFAULT_REFERENCE_TOX_CEILING,
    suberror_sigma: float = DEFAULT_SUBERROR_SIGMA,
) -> ReferenceStats:
    """Baseline statistics from common words found only in low-toxicity turns.

    A word qualifies when it appears in at least ``min_turns`` turns across
    the corpus, every turn containing it scores below ``turn_tox_ceiling``,
    and it is not in the offensive lexicon. (A looser reading — at least
    ``min_turns`` low-toxicity turns, ignoring noisier ones — would admit
    more words; the strict every-turn rule is used here.) The sub-error
    threshold is the mean of the qualifying words' average template scores
    plus ``suberror_sigma`` sample standard deviations.
    """
    if min_turns < 1:
        raise AuditError("min_turns must be >= 1")
    if not 0.0 < turn_tox_ceiling <= 1.0:
        raise AuditError("turn_tox_ceiling must be in (0, 1]")
    turn_counts: dict[str, int] = {}
    max_turn_score: dict[str, float] = {}
    for turns in scored_turns.values():
        for text, score in turns:
            for word in set(tokenize(text)):
                turn_counts[word] = turn_counts.get(word, 0) + 1
                max_turn_score[word] = max(max_turn_score.get(word, 0.0), score)

    candidates = sorted(
        word
        for word, count in turn_counts.items()
        if count >= min_turns
        and max_turn_score[word] < turn_tox_ceiling
        and word not in lexicon
    )
    if len(candidates) < 2:
        raise AuditError(
            f"reference needs at least 2 candidate words, found {len(candidates)}"
        )
    avgs = [template_profile(word, templates, scorer).avg for word in candidates]
    mean = sum(avgs) / len(avgs)
    std = math.sqrt(sum((a - mean) ** 2 for a in avgs) / (len(avgs) - 1))
    return ReferenceStats(
        words=tuple(candidates),
        mean=mean,
        std=std,
        suberror_threshold=suberror_threshold(mean, std, suberror_sigma),
    )


def classify_word(
    profile: WordProfile,
    reference: ReferenceStats,
    error_threshold: float = DEFAULT_ERROR_THRESHOLD,
) -> str:
    """Classify one audited word.

    Offensive words are excluded from the trigger lists (they are genuinely
    provocative, so a high score is not an error). Otherwise: any template
    at or above ``error_threshold`` makes an error trigger; failing that, an
    average at or above the reference sub-error threshold makes a sub-error
    trigger; anything else is benign.
    """
    if profile.offensive:
        return OFFENSIVE_EXCLUDED
    if profile.max >= error_threshold:
        return ERROR_TRIGGER
    if profile.avg >= reference.suberror_threshold:
        return SUB_ERROR_TRIGGER
    return BENIGN


def classify_profiles(
    profiles: Iterable[WordProfile],
    reference: ReferenceStats,
    error_threshold: float = DEFAULT_ERROR_THRESHOLD,
) -> list[WordProfile]:
    return [
        WordProfile.from_scores(
            p.word,
            p.template_scores,
            offensive=p.offensive,
            classification=classify_word(p, reference, error_threshold),
        )
        for p in profiles
    ]


# ---------------------------------------------------------------------------
# Offensive-lexicon validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffensiveValidation:
    """How the offensive words fare under the raw trigger criteria.

    The error criterion here is strictly greater than the threshold and the
    sub-error criterion requires every template strictly below it, so the
    two groups are disjoint and their union is "either".
    """

    n_offensive: int
    n_nonoffensive: int
    avg_tox_offensive: float | None
    avg_tox_nonoffensive: float | None
    pct_error_criteria: float | None
    pct_suberror_criteria: float | None
    pct_either: float | None


def validate_offensive(
    profiles: Sequence[WordProfile],
    lexicon: OffensiveLexicon,
    suberror_threshold: float,
    error_threshold: float = DEFAULT_ERROR_THRESHOLD,
) -> OffensiveValidation:
    """Quantify how well the trigger criteria capture known-offensive words."""
    offensive = [p for p in profiles if p.word in lexicon]
    nonoffensive = [p for p in profiles if p.word not in lexicon]
    avg_off = sum(p.avg for p in offensive) / len(offensive) if offensive else None
    avg_non = (
        sum(p.avg for p in nonoffensive) / len(nonoffensive) if nonoffensive else None
    )
    if not offensive:
        return OffensiveValidation(
            n_offensive=0,
            n_nonoffensive=len(nonoffensive),
            avg_tox_offensive=None,
            avg_tox_nonoffensive=avg_non,
            pct_error_criteria=None,
            pct_suberror_criteria=None,
            pct_either=None,
        )
    n_error = sum(1 for p in offensive if p.max > error_threshold)
    n_suberror = sum(
        1
        for p in offensive
        if p.max < error_threshold and p.avg >= suberror_threshold
    )
    return OffensiveValidation(
        n_offensive=len(offensive),
        n_nonoffensive=len(nonoffensive),
        avg_tox_offensive=avg_off,
        avg_tox_nonoffensive=avg_non,
        pct_error_criteria=n_error / len(offensive),
        pct_suberror_criteria=n_suberror / len(offensive),
        pct_either=(n_error + n_suberror) / len(offensive),
    )


# ---------------------------------------------------------------------------
# Trigger distribution over snippets
# ---------------------------------------------------------------------------

TRIGGER_CATEGORIES = ("Error", "Sub-error", "Offensive")


@dataclass(frozen=True)
class CategoryRow:
    category: str
    counts: dict[str, int]
    fractions: dict[str, float]
    total: int


def trigger_distribution(
    snippets: Sequence[Snippet],
    profiles: Sequence[WordProfile],
    lexicon: OffensiveLexicon,
) -> list[CategoryRow]:
    """Per show: snippets containing at least one trigger or offensive word.

    Fractions are each show's count over the category's row total, so the
    fractions of a row sum to 1 (up to rounding) across shows.
    """
    error_words = {p.word for p in profiles if p.classification == ERROR_TRIGGER}
    suberror_words = {p.word for p in profiles if p.classification == SUB_ERROR_TRIGGER}
    category_words = {
        "Error": error_words,
        "Sub-error": suberror_words,
        "Offensive": set(lexicon.words),
    }
    shows = sorted({s.show for s in snippets})
    snippet_words = [(s.show, set(tokenize(s.text))) for s in snippets]

    rows = []
    for category in TRIGGER_CATEGORIES:
        wordset = category_words[category]
        counts = {show: 0 for show in shows}
        for show, tokens in snippet_words:
            if tokens & wordset:
                counts[show] += 1
        total = sum(counts.values())
        fractions = {
            show: (counts[show] / total if total else 0.0) for show in shows
        }
        rows.append(
            CategoryRow(category=category, counts=counts, fractions=fractions, total=total)
        )
    return rows


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------

def write_audit_csv(
    profiles: Sequence[WordProfile], path: str | Path, n_templates: int | None = None
) -> None:
    """One row per audited word with template scores and classification."""
    width = n_templates or (len(profiles[0].template_scores) if profiles else 5)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["word"]
            + [f"t{i + 1}" for i in range(width)]
            + ["avg", "max", "offensive", "classification"]
        )
        for p in sorted(profiles, key=lambda p: p.word):
            writer.writerow(
                [p.word]
                + [repr(float(s)) for s in p.template_scores]
                + [repr(p.avg), repr(p.max), str(p.offensive).lower(), p.classification or ""]
            )


def audit_summary_dict(
    profiles: Sequence[WordProfile],
    reference: ReferenceStats,
    validation: OffensiveValidation,
    distribution: Sequence[CategoryRow] | None = None,
    error_threshold: float = DEFAULT_ERROR_THRESHOLD,
) -> dict:
    by_class: dict[str, int] = {}
    for p in profiles:
        key = p.classification or "Unclassified"
        by_class[key] = by_class.get(key, 0) + 1
    summary = {
        "n_words": len(profiles),
        "classification_counts": dict(sorted(by_class.items())),
        "error_threshold": error_threshold,
        "reference": {
            "n_words": len(reference.words),
            "mean": reference.mean,
            "std": reference.std,
            "suberror_threshold": reference.suberror_threshold,
        },
        "offensive_validation": {
            "n_offensive": validation.n_offensive,
            "n_nonoffensive": validation.n_nonoffensive,
            "avg_tox_offensive": validation.avg_tox_offensive,
            "avg_tox_nonoffensive": validation.avg_tox_nonoffensive,
            "pct_error_criteria": validation.pct_error_criteria,
            "pct_suberror_criteria": validation.pct_suberror_criteria,
            "pct_either": validation.pct_either,
        },
    }
    if distribution is not None:
        summary["trigger_distribution"] = [
            {
                "category": row.category,
                "counts": row.counts,
                "fractions": row.fractions,
                "total": row.total,
            }
            for row in distribution
        ]
    return summary


def write_audit_summary(summary: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trigger_distribution_csv(
    rows: Sequence[CategoryRow], path: str | Path, ndigits: int | None = None
) -> None:
    shows = sorted(rows[0].counts) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["category"]
        for show in shows:
            header += [f"{show}_count", f"{show}_fraction"]
        header.append("total")
        writer.writerow(header)
        for row in rows:
            out = [row.category]
            for show in shows:
                fraction = row.fractions[show]
                out += [
                    row.counts[show],
                    repr(float(fraction)) if ndigits is None else f"{fraction:.{ndigits}f}",
                ]
            out.append(row.total)
            writer.writerow(out)
