"""Transcript- and snippet-level incivility statistics.

Compares how humans and a toxicity model characterize each news source:
per-transcript uncivil-turn counts (human flags vs. turns scored at or
above a threshold), per-show means with 95% confidence intervals,
two-sided Mann-Whitney tests between shows, and human/model correlation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from scipy import stats as _scipy_stats

from .corpus import PassIFlag, Transcript, UNCIVIL

DEFAULT_TOXIC_THRESHOLD = 0.5
# Largest pooled sample size for which the exact Mann-Whitney null
# distribution is enumerated instead of using the normal approximation.
EXACT_MW_LIMIT = 12


class AnalysisError(ValueError):
    """Invalid statistical input (too few values, constant series, ...)."""


@dataclass(frozen=True)
class TranscriptIncivility:
    transcript_id: str
    show: str
    human_uncivil_turns: int
    model_toxic_turns: int


@dataclass(frozen=True)
class ShowStatistics:
    show: str
    n: int
    human_mean: float
    human_ci95: tuple[float, float]
    model_mean: float
    model_ci95: tuple[float, float]
    level: str = "snippet"  # "transcript" or "snippet"


@dataclass(frozen=True)
class TestResult:
    u_statistic: float
    p_value: float
    method: str  # "exact" or "normal_approx"
    n1: int
    n2: int


@dataclass(frozen=True)
class SnippetScore:
    snippet_id: str
    show: str
    human: float
    model: float


# ---------------------------------------------------------------------------
# Basic statistics
# ---------------------------------------------------------------------------

def mean_ci95(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean with a Student-t 95% confidence interval.

    Uses the sample standard deviation and the t quantile with n-1 degrees
    of freedom; the interval is symmetric around the mean and (for count
    data with enough spread) may extend below zero. At the sample sizes
    this toolkit deals in (n around 17 and up) the t and normal quantiles
    differ by a few percent at most; t is used throughout.
    """
    n = len(values)
    if n < 2:
        raise AnalysisError(f"confidence interval needs n >= 2, got {n}")
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    half_width = float(_scipy_stats.t.ppf(0.975, n - 1)) * math.sqrt(variance / n)
    return mean, mean - half_width, mean + half_width


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Sample Pearson correlation of two equal-length, non-constant series."""
    if len(a) != len(b):
        raise AnalysisError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise AnalysisError("correlation needs at least 2 pairs")
    mean_a = sum(a) / len(a)
    mean_b = sum(b) / len(b)
    var_a = sum((x - mean_a) ** 2 for x in a)
    var_b = sum((y - mean_b) ** 2 for y in b)
    if var_a == 0.0 or var_b == 0.0:
        raise AnalysisError("correlation undefined for a constant series")
    cov = sum((x - mean_a) * (y - mean_b) for x, y in zip(a, b))
    return cov / math.sqrt(var_a * var_b)


# ---------------------------------------------------------------------------
# Mann-Whitney
# ---------------------------------------------------------------------------

def _rank_with_ties(pooled: Sequence[float]) -> tuple[list[float], list[int]]:
    """Ranks (1-based, ties get the average rank) and tie-group sizes."""
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    tie_sizes = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        avg_rank = (i + j + 2) / 2  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes


def _exact_u_counts(n1: int, n2: int) -> list[int]:
    """Null distribution of U as integer counts, U = 0..n1*n2.

    counts[u] is the number of ways to choose n1 of the ranks 1..n1+n2 so
    that the rank sum equals u + n1(n1+1)/2.
    """
    total = n1 + n2
    max_sum = n1 * total  # loose upper bound on a rank sum of n1 ranks
    ways = [[0] * (max_sum + 1) for _ in range(n1 + 1)]
    ways[0][0] = 1
    for rank in range(1, total + 1):
        for k in range(min(rank, n1), 0, -1):
            row_k, row_prev = ways[k], ways[k - 1]
            for s in range(max_sum, rank - 1, -1):
                if row_prev[s - rank]:
                    row_k[s] += row_prev[s - rank]
    offset = n1 * (n1 + 1) // 2
    return [ways[n1][offset + u] for u in range(n1 * n2 + 1)]


def mann_whitney_two_sided(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U test.

    The statistic is U for the first sample (pairwise wins, ties counted as
    half). With a pooled size of at most ``EXACT_MW_LIMIT`` and no tied
    values, the p-value comes from full enumeration of the null
    distribution; otherwise from the normal approximation with tie and
    continuity corrections.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise AnalysisError("both samples must be non-empty")
    pooled = list(a) + list(b)
    ranks, tie_sizes = _rank_with_ties(pooled)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2
    has_ties = any(t > 1 for t in tie_sizes)

    if n1 + n2 <= EXACT_MW_LIMIT and not has_ties:
        counts = _exact_u_counts(n1, n2)
        u_obs = int(round(u1))
        u_min = min(u_obs, n1 * n2 - u_obs)
        u_max = n1 * n2 - u_min
        n_total = sum(counts)
        extreme = sum(counts[: u_min + 1]) + sum(counts[u_max:])
        p = min(1.0, extreme / n_total)
        return TestResult(u_statistic=float(u1), p_value=p, method="exact", n1=n1, n2=n2)

    total = n1 + n2
    tie_term = sum(t**3 - t for t in tie_sizes) / (total * (total - 1))
    sd = math.sqrt(n1 * n2 / 12.0 * ((total + 1) - tie_term))
    if sd == 0.0:
        # Every pooled value identical; no evidence of any difference.
        return TestResult(
            u_statistic=float(u1), p_value=1.0, method="normal_approx", n1=n1, n2=n2
        )
    diff = max(0.0, abs(u1 - n1 * n2 / 2.0) - 0.5)
    z = diff / sd
    p = min(1.0, 2.0 * float(_scipy_stats.norm.sf(z)))
    return TestResult(
        u_statistic=float(u1), p_value=p, method="normal_approx", n1=n1, n2=n2
    )


# ---------------------------------------------------------------------------
# Transcript level
# ---------------------------------------------------------------------------

def transcript_stats(
    transcripts: Sequence[Transcript],
    turn_scores: Mapping[tuple[str, int], float],
    flags: Sequence[PassIFlag],
    threshold: float = DEFAULT_TOXIC_THRESHOLD,
) -> list[TranscriptIncivility]:
    """Per transcript: Pass I uncivil-flag count vs. model toxic-turn count.

    A turn is model-toxic when its score is at or above ``threshold``
    (inclusive). Every turn must have a score.
    """
    if not 0.0 <= threshold <= 1.0:
        raise AnalysisError(f"threshold {threshold} outside [0, 1]")
    uncivil_flags: dict[str, int] = {}
    for flag in flags:
        if flag.label == UNCIVIL:
            uncivil_flags[flag.transcript_id] = uncivil_flags.get(flag.transcript_id, 0) + 1

    results = []
    for transcript in transcripts:
        toxic = 0
        for turn in transcript.turns:
            key = (transcript.id, turn.index)
            if key not in turn_scores:
                raise AnalysisError(
                    f"turn {turn.index} of transcript {transcript.id!r} has no score"
                )
            if turn_scores[key] >= threshold:
                toxic += 1
        results.append(
            TranscriptIncivility(
                transcript_id=transcript.id,
                show=transcript.show,
                human_uncivil_turns=uncivil_flags.get(transcript.id, 0),
                model_toxic_turns=toxic,
            )
        )
    return results


def show_statistics(
    show: str,
    human_values: Sequence[float],
    model_values: Sequence[float],
    level: str,
) -> ShowStatistics:
    if len(human_values) != len(model_values):
        raise AnalysisError("human and model value counts differ")
    h_mean, h_lo, h_hi = mean_ci95(human_values)
    m_mean, m_lo, m_hi = mean_ci95(model_values)
    return ShowStatistics(
        show=show,
        n=len(human_values),
        human_mean=h_mean,
        human_ci95=(h_lo, h_hi),
        model_mean=m_mean,
        model_ci95=(m_lo, m_hi),
        level=level,
    )


def transcript_show_statistics(
    incivility: Sequence[TranscriptIncivility],
) -> list[ShowStatistics]:
    shows = sorted({t.show for t in incivility})
    out = []
    for show in shows:
        rows = [t for t in incivility if t.show == show]
        out.append(
            show_statistics(
                show,
                [float(t.human_uncivil_turns) for t in rows],
                [float(t.model_toxic_turns) for t in rows],
                level="transcript",
            )
        )
    return out


# ---------------------------------------------------------------------------
# Snippet level
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShowComparison:
    statistics: tuple[ShowStatistics, ...]
    human_tests: dict[tuple[str, str], TestResult]
    model_tests: dict[tuple[str, str], TestResult]
    scatter: tuple[SnippetScore, ...]


def show_comparison(snippet_scores: Sequence[SnippetScore]) -> ShowComparison:
    """Pairwise show tests plus per-show statistics on rated snippets.

    Runs the two-sided Mann-Whitney test between every pair of shows, once
    on the human composites and once on the model scores, and computes each
    show's means and confidence intervals.
    """
    by_show: dict[str, list[SnippetScore]] = {}
    for score in snippet_scores:
        by_show.setdefault(score.show, []).append(score)
    shows = sorted(by_show)
    if len(shows) < 2:
        raise AnalysisError("show comparison needs at least two shows")
    for show, rows in by_show.items():
        if len(rows) < 2:
            raise AnalysisError(f"show {show!r} has fewer than 2 snippets")

    statistics = tuple(
        show_statistics(
            show,
            [s.human for s in by_show[show]],
            [s.model for s in by_show[show]],
            level="snippet",
        )
        for show in shows
    )
    human_tests = {}
    model_tests = {}
    for i, first in enumerate(shows):
        for second in shows[i + 1 :]:
            human_tests[(first, second)] = mann_whitney_two_sided(
                [s.human for s in by_show[first]], [s.human for s in by_show[second]]
            )
            model_tests[(first, second)] = mann_whitney_two_sided(
                [s.model for s in by_show[first]], [s.model for s in by_show[second]]
            )
    return ShowComparison(
        statistics=statistics,
        human_tests=human_tests,
        model_tests=model_tests,
        scatter=tuple(snippet_scores),
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def _fmt(value: float, ndigits: int | None) -> str:
    return repr(float(value)) if ndigits is None else f"{value:.{ndigits}f}"


def write_statistics_csv(
    rows: Sequence[ShowStatistics], path: str | Path, ndigits: int | None = None
) -> None:
    """Per-show statistics table: one row per (show, level)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["show", "count", "human_avg", "human_ci_lo", "human_ci_hi",
             "model_avg", "model_ci_lo", "model_ci_hi", "level"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.show,
                    row.n,
                    _fmt(row.human_mean, ndigits),
                    _fmt(row.human_ci95[0], ndigits),
                    _fmt(row.human_ci95[1], ndigits),
                    _fmt(row.model_mean, ndigits),
                    _fmt(row.model_ci95[0], ndigits),
                    _fmt(row.model_ci95[1], ndigits),
                    row.level,
                ]
            )


def write_scatter_csv(
    scores: Sequence[SnippetScore], path: str | Path, ndigits: int | None = None
) -> None:
    """Human-vs-model scatter data, one row per rated snippet."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["show", "snippet_id", "human_composite", "model_score"])
        for s in scores:
            writer.writerow([s.show, s.snippet_id, _fmt(s.human, ndigits), _fmt(s.model, ndigits)])
