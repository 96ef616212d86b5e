"""Civility ratings: scales, composite scores, batches, and rater agreement.

Raters judge each snippet on four 10-point scales (Polite/Rude,
Friendly/Hostile, Cooperative/Quarrelsome, Calm/Agitated). Scales are
shown in random order and flip which end sits on the left, so raw values
must be reoriented before they mean anything: after orientation 1 is
always the most civil answer and 10 the most uncivil. The composite score
of a snippet is the mean of the four oriented values per rater, averaged
over raters.
"""

from __future__ import annotations

import csv
import enum
import json
import random
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import CIVIL, RANDOM, UNCIVIL, Snippet

SCALE_MIN = 1
SCALE_MAX = 10
DEFAULT_BATCH_SIZE = 15


class AnnotationError(ValueError):
    """Invalid rating data (bad value, missing dimension, duplicate)."""


class Dimension(enum.Enum):
    """The four civility dimensions, in canonical order."""

    POLITE_RUDE = ("Polite", "Rude")
    FRIENDLY_HOSTILE = ("Friendly", "Hostile")
    COOPERATIVE_QUARRELSOME = ("Cooperative", "Quarrelsome")
    CALM_AGITATED = ("Calm", "Agitated")

    def __init__(self, civil_label: str, uncivil_label: str):
        self.civil_label = civil_label
        self.uncivil_label = uncivil_label

    @property
    def key(self) -> str:
        return f"{self.civil_label}/{self.uncivil_label}"

    @classmethod
    def from_key(cls, key: str) -> "Dimension":
        for dim in cls:
            if dim.key == key or dim.name == key:
                return dim
        raise AnnotationError(f"unknown dimension {key!r}")


DIMENSIONS = tuple(Dimension)


@dataclass(frozen=True)
class DimensionPresentation:
    dimension: Dimension
    civil_end_on_left: bool
    display_order: int

    @property
    def left_label(self) -> str:
        return self.dimension.civil_label if self.civil_end_on_left else self.dimension.uncivil_label

    @property
    def right_label(self) -> str:
        return self.dimension.uncivil_label if self.civil_end_on_left else self.dimension.civil_label


@dataclass(frozen=True)
class RawRating:
    dimension: Dimension
    value: int
    civil_end_on_left: bool

    def __post_init__(self):
        if not SCALE_MIN <= self.value <= SCALE_MAX:
            raise AnnotationError(
                f"rating value {self.value} outside {SCALE_MIN}..{SCALE_MAX}"
            )


@dataclass(frozen=True)
class AnnotatorRating:
    annotator_id: str
    snippet_id: str
    ratings: tuple[RawRating, ...]
    timestamp: str = ""

    def __post_init__(self):
        dims = [r.dimension for r in self.ratings]
        if len(dims) != len(DIMENSIONS) or set(dims) != set(DIMENSIONS):
            raise AnnotationError(
                f"rating for snippet {self.snippet_id!r} by {self.annotator_id!r} "
                f"must cover all four dimensions exactly once"
            )


@dataclass(frozen=True)
class CompositeScore:
    snippet_id: str
    value: float


@dataclass(frozen=True)
class BatchItem:
    snippet_id: str
    presentations: tuple[DimensionPresentation, ...]


@dataclass(frozen=True)
class Batch:
    batch_id: str
    annotator_id: str
    items: tuple[BatchItem, ...]

    @property
    def size(self) -> int:
        return len(self.items)


# ---------------------------------------------------------------------------
# Orientation and composites
# ---------------------------------------------------------------------------

def orient(rating: RawRating) -> int:
    """Map a raw value onto the fixed scale where 1 = most civil.

    When the civil end of the scale was shown on the left, position 1 is
    already the civil extreme and the value passes through; otherwise the
    scale ran the other way and the value reflects to ``11 - v``.
    """
    if rating.civil_end_on_left:
        return rating.value
    return SCALE_MAX + 1 - rating.value


def composite_score(ratings_by_annotator: Sequence[AnnotatorRating]) -> CompositeScore:
    """Mean oriented value per annotator, averaged over annotators."""
    if not ratings_by_annotator:
        raise AnnotationError("composite score needs at least one annotator")
    snippet_id = ratings_by_annotator[0].snippet_id
    per_annotator = []
    for annotator_rating in ratings_by_annotator:
        if annotator_rating.snippet_id != snippet_id:
            raise AnnotationError(
                f"ratings mix snippets {snippet_id!r} and {annotator_rating.snippet_id!r}"
            )
        oriented = [orient(r) for r in annotator_rating.ratings]
        per_annotator.append(sum(oriented) / len(oriented))
    return CompositeScore(snippet_id=snippet_id, value=sum(per_annotator) / len(per_annotator))


def composites_by_snippet(ratings: Iterable[AnnotatorRating]) -> dict[str, CompositeScore]:
    """Group ratings by snippet and compute every composite."""
    grouped: dict[str, list[AnnotatorRating]] = {}
    for rating in ratings:
        grouped.setdefault(rating.snippet_id, []).append(rating)
    return {sid: composite_score(rs) for sid, rs in grouped.items()}


# ---------------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------------

class _OrientationSchedule:
    """Per-dimension strict alternation of which end appears on the left.

    The first presentation of each dimension draws its orientation from the
    RNG; every later presentation of that dimension flips the previous one.
    """

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._last: dict[Dimension, bool] = {}

    def next_for(self, dimension: Dimension) -> bool:
        if dimension in self._last:
            value = not self._last[dimension]
        else:
            value = self._rng.random() < 0.5
        self._last[dimension] = value
        return value


def _presentations(rng: random.Random, schedule: _OrientationSchedule) -> tuple[DimensionPresentation, ...]:
    order = list(range(len(DIMENSIONS)))
    rng.shuffle(order)
    return tuple(
        DimensionPresentation(
            dimension=dim,
            civil_end_on_left=schedule.next_for(dim),
            display_order=order[i],
        )
        for i, dim in enumerate(DIMENSIONS)
    )


def build_batches(
    snippets: Sequence[Snippet],
    annotator_id: str,
    size: int = DEFAULT_BATCH_SIZE,
    seed: int = 0,
) -> list[Batch]:
    """Partition snippets into presentation batches for one annotator.

    Batches are filled by cycling through the shows so each batch mixes
    programs whenever more than one show still has snippets; items are then
    shuffled so the display order is random. Every input snippet appears in
    exactly one batch. Deterministic for a given seed.
    """
    if size < 1:
        raise AnnotationError("batch size must be >= 1")
    rng = random.Random((seed, annotator_id, "batches").__repr__())
    queues: dict[str, list[Snippet]] = {}
    for snippet in snippets:
        queues.setdefault(snippet.show, []).append(snippet)
    show_order = sorted(queues)
    rng.shuffle(show_order)
    for show in show_order:
        rng.shuffle(queues[show])

    ordered: list[list[Snippet]] = []
    current: list[Snippet] = []
    while any(queues.values()):
        for show in show_order:
            if queues[show]:
                current.append(queues[show].pop())
                if len(current) == size:
                    ordered.append(current)
                    current = []
    if current:
        ordered.append(current)

    schedule = _OrientationSchedule(rng)
    batches = []
    for i, batch_snippets in enumerate(ordered):
        rng.shuffle(batch_snippets)
        items = tuple(
            BatchItem(snippet_id=s.id, presentations=_presentations(rng, schedule))
            for s in batch_snippets
        )
        batches.append(Batch(batch_id=f"{annotator_id}-{i:03d}", annotator_id=annotator_id, items=items))
    return batches


# ---------------------------------------------------------------------------
# Agreement and rationale distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgreementResult:
    n_shared: int
    pearson_r: float | None
    mean_abs_diff: float


def agreement(pairs: Sequence[tuple[float, float]]) -> AgreementResult:
    """Pearson correlation and mean absolute difference between two raters.

    ``pairs`` holds the two composite scores of every snippet both raters
    saw. When either rater's scores have no variance the correlation is
    undefined and reported as None, never as 0.
    """
    if not pairs:
        raise AnnotationError("agreement needs at least one shared snippet")
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    mad = sum(abs(x - y) for x, y in pairs) / len(pairs)
    if len(pairs) < 2:
        return AgreementResult(n_shared=len(pairs), pearson_r=None, mean_abs_diff=mad)
    mean_a = sum(a) / len(a)
    mean_b = sum(b) / len(b)
    var_a = sum((x - mean_a) ** 2 for x in a)
    var_b = sum((y - mean_b) ** 2 for y in b)
    if var_a == 0 or var_b == 0:
        return AgreementResult(n_shared=len(pairs), pearson_r=None, mean_abs_diff=mad)
    cov = sum((x - mean_a) * (y - mean_b) for x, y in pairs)
    return AgreementResult(
        n_shared=len(pairs),
        pearson_r=cov / (var_a**0.5 * var_b**0.5),
        mean_abs_diff=mad,
    )


def pairwise_agreement(
    ratings: Sequence[AnnotatorRating],
) -> dict[tuple[str, str], AgreementResult]:
    """Agreement for every annotator pair over the snippets both rated."""
    per_annotator: dict[str, dict[str, float]] = {}
    for rating in ratings:
        oriented = [orient(r) for r in rating.ratings]
        per_annotator.setdefault(rating.annotator_id, {})[rating.snippet_id] = sum(
            oriented
        ) / len(oriented)

    results: dict[tuple[str, str], AgreementResult] = {}
    annotators = sorted(per_annotator)
    for i, first in enumerate(annotators):
        for second in annotators[i + 1 :]:
            shared = sorted(set(per_annotator[first]) & set(per_annotator[second]))
            if not shared:
                continue
            pairs = [(per_annotator[first][s], per_annotator[second][s]) for s in shared]
            results[(first, second)] = agreement(pairs)
    return results


@dataclass(frozen=True)
class LabelDistribution:
    label: str
    count: int
    mean: float | None
    min: float | None
    max: float | None
    below_midpoint: int  # scores < 5


def rationale_distribution(
    scores: Iterable[tuple[str, CompositeScore]],
) -> dict[str, LabelDistribution]:
    """Distribution of composite scores per Pass I rationale label."""
    grouped: dict[str, list[float]] = {UNCIVIL: [], CIVIL: [], RANDOM: []}
    for label, score in scores:
        grouped.setdefault(label, []).append(score.value)
    out = {}
    for label, values in grouped.items():
        if values:
            out[label] = LabelDistribution(
                label=label,
                count=len(values),
                mean=statistics.fmean(values),
                min=min(values),
                max=max(values),
                below_midpoint=sum(1 for v in values if v < 5),
            )
        else:
            out[label] = LabelDistribution(
                label=label, count=0, mean=None, min=None, max=None, below_midpoint=0
            )
    return out


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def rating_to_dict(rating: AnnotatorRating) -> dict:
    return {
        "annotator_id": rating.annotator_id,
        "snippet_id": rating.snippet_id,
        "ratings": [
            {
                "dimension": r.dimension.key,
                "value": r.value,
                "civil_end_on_left": r.civil_end_on_left,
            }
            for r in rating.ratings
        ],
        "timestamp": rating.timestamp,
    }


def rating_from_dict(record: dict) -> AnnotatorRating:
    return AnnotatorRating(
        annotator_id=record["annotator_id"],
        snippet_id=record["snippet_id"],
        ratings=tuple(
            RawRating(
                dimension=Dimension.from_key(r["dimension"]),
                value=int(r["value"]),
                civil_end_on_left=bool(r["civil_end_on_left"]),
            )
            for r in record["ratings"]
        ),
        timestamp=record.get("timestamp", ""),
    )


def load_ratings(path: str | Path) -> list[AnnotatorRating]:
    ratings = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                ratings.append(rating_from_dict(json.loads(line)))
    return ratings


def save_ratings(ratings: Iterable[AnnotatorRating], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rating in ratings:
            fh.write(json.dumps(rating_to_dict(rating), sort_keys=True) + "\n")


def export_composites(
    snippets: Sequence[Snippet],
    composites: dict[str, CompositeScore],
    path: str | Path,
) -> None:
    """Write ``snippet_id, show, rationale, composite`` rows for rated snippets."""
    by_id = {s.id: s for s in snippets}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snippet_id", "show", "rationale", "composite"])
        for sid in sorted(composites):
            snippet = by_id.get(sid)
            if snippet is None:
                continue
            writer.writerow([sid, snippet.show, snippet.rationale, repr(composites[sid].value)])
