"""Acceptance suite: one test per gate criterion, offline via the mock scorer.

Each test prints an ``ACCEPTANCE PASS/FAIL`` line (run with ``-s`` to see
them all). Every numeric target is pinned here; nothing is deferred to
later calibration.
"""

import itertools
import math
import os
import random
import statistics
import time

import pytest
from fastapi.testclient import TestClient
from scipy import stats as scipy_stats

from civility_audit import pipeline
from civility_audit.analysis import mann_whitney_two_sided, mean_ci95
from civility_audit.annotation import (
    AnnotatorRating,
    DIMENSIONS,
    Dimension,
    DimensionPresentation,
    RawRating,
    composite_score,
    orient,
)
from civility_audit.audit import (
    ERROR_TRIGGER,
    OffensiveLexicon,
    ReferenceStats,
    SUB_ERROR_TRIGGER,
    TemplateSet,
    WordProfile,
    apply_lexicon,
    classify_word,
    suberror_threshold,
    trigger_distribution,
    validate_offensive,
)
from civility_audit.scoring import API_KEY_ENV_VAR
from civility_audit.service import RatingsStore, composites_from_store, create_app

from conftest import FIXTURES, make_snippet


def report(criterion: str, passed: bool) -> None:
    print(f"ACCEPTANCE {'PASS' if passed else 'FAIL'}: {criterion}")


def check(criterion: str, condition: bool, detail: str = "") -> None:
    report(criterion, condition)
    assert condition, f"{criterion}: {detail}"


# ---------------------------------------------------------------------------
# Composite scoring
# ---------------------------------------------------------------------------

def _rating(oriented, lefts, annotator="a", snippet="s"):
    raw = tuple(
        RawRating(dimension=d, value=v if left else 11 - v, civil_end_on_left=left)
        for d, v, left in zip(DIMENSIONS, oriented, lefts)
    )
    return AnnotatorRating(annotator_id=annotator, snippet_id=snippet, ratings=raw)


def test_composite_scoring_extremes_and_invariance():
    all_civil = [_rating([1] * 4, [True, False] * 2, annotator=a) for a in ("a", "b")]
    all_uncivil = [_rating([10] * 4, [False, True] * 2, annotator=a) for a in ("a", "b")]
    extremes_ok = (
        composite_score(all_civil).value == 1.0
        and composite_score(all_uncivil).value == 10.0
    )

    rng = random.Random(2024)
    invariance_ok = True
    for _ in range(1000):
        ratings = []
        for i in range(rng.randint(1, 3)):
            oriented = [rng.randint(1, 10) for _ in range(4)]
            lefts = [rng.random() < 0.5 for _ in range(4)]
            ratings.append(_rating(oriented, lefts, annotator=f"a{i}"))
        value = composite_score(ratings).value
        if not 1.0 <= value <= 10.0:
            invariance_ok = False
            break
        shuffled_annotators = rng.sample(ratings, len(ratings))
        shuffled_dimensions = [
            AnnotatorRating(
                annotator_id=r.annotator_id,
                snippet_id=r.snippet_id,
                ratings=tuple(rng.sample(r.ratings, 4)),
            )
            for r in ratings
        ]
        if abs(composite_score(shuffled_annotators).value - value) > 1e-12:
            invariance_ok = False
            break
        if abs(composite_score(shuffled_dimensions).value - value) > 1e-12:
            invariance_ok = False
            break

    check(
        "composite scoring: exact extremes, range and permutation invariance "
        "(1,000 randomized cases)",
        extremes_ok and invariance_ok,
    )


def test_reversal_law():
    ok = all(
        orient(RawRating(dimension=d, value=v, civil_end_on_left=left))
        == orient(RawRating(dimension=d, value=11 - v, civil_end_on_left=not left))
        for d in (Dimension.POLITE_RUDE,)
        for v in range(1, 11)
        for left in (True, False)
    )
    check("reversal law: orient(v, L) == orient(11-v, not L) for all v, L", ok)


# ---------------------------------------------------------------------------
# Mann-Whitney vs. enumeration oracle
# ---------------------------------------------------------------------------

def _oracle_distribution(n1, n2):
    counts = {}
    for combo in itertools.combinations(range(1, n1 + n2 + 1), n1):
        u = sum(combo) - n1 * (n1 + 1) // 2
        counts[u] = counts.get(u, 0) + 1
    return counts


def _oracle_p(counts, n1, n2, u_obs):
    total = sum(counts.values())
    u_min = min(u_obs, n1 * n2 - u_obs)
    u_max = n1 * n2 - u_min
    extreme = sum(c for u, c in counts.items() if u <= u_min) + sum(
        c for u, c in counts.items() if u >= u_max
    )
    return min(1.0, extreme / total)


def test_mann_whitney_exact_matches_enumeration_oracle():
    started = time.monotonic()
    worst = 0.0
    cases = 0
    for total in range(2, 11):
        for n1 in range(1, total):
            n2 = total - n1
            counts = _oracle_distribution(n1, n2)
            pooled = list(range(1, total + 1))
            for combo in itertools.combinations(pooled, n1):
                a = list(combo)
                b = [v for v in pooled if v not in combo]
                result = mann_whitney_two_sided(a, b)
                expected = _oracle_p(counts, n1, n2, int(result.u_statistic))
                worst = max(worst, abs(result.p_value - expected))
                cases += 1
                assert result.method == "exact"
    elapsed = time.monotonic() - started
    separated = mann_whitney_two_sided([1, 2, 3], [10, 11, 12])
    check(
        f"mann-whitney: exact p equals enumeration oracle to 1e-12 on all "
        f"{cases} no-tie assignments with n1+n2 <= 10 (worst {worst:.2e}), "
        f"[1,2,3] vs [10,11,12] gives p = 0.1, runtime {elapsed:.1f}s < 10s",
        worst <= 1e-12 and separated.p_value == pytest.approx(0.1, abs=1e-15)
        and elapsed < 10.0,
    )


# ---------------------------------------------------------------------------
# t-interval
# ---------------------------------------------------------------------------

def test_t_interval_matches_independent_oracle():
    rng = random.Random(777)
    worst = 0.0
    for _ in range(100):
        n = rng.randint(2, 80)
        values = [rng.gauss(rng.uniform(-5, 5), rng.uniform(0.1, 4)) for _ in range(n)]
        mean = statistics.fmean(values)
        sem = statistics.stdev(values) / math.sqrt(n)
        if sem == 0:
            expected = (mean, mean, mean)
        else:
            lo, hi = scipy_stats.t.interval(0.95, n - 1, loc=mean, scale=sem)
            expected = (mean, float(lo), float(hi))
        got = mean_ci95(values)
        worst = max(worst, max(abs(g - e) for g, e in zip(got, expected)))
    check(
        f"t-interval: matches independently coded textbook oracle to 1e-9 "
        f"on 100 random samples (worst {worst:.2e})",
        worst <= 1e-9,
    )


def test_t_interval_pbs_fixture_as_specified():
    """Criterion as stated: (12 zeros, 5 ones) -> 0.29 with CI [-0.06, 0.65].

    This criterion is implemented faithfully and is expected to FAIL: the
    stated fixture cannot produce the stated interval. For 12 zeros and 5
    ones the Student-t interval is [0.0526, 0.5356] (lower bound positive);
    no standard 95% mean interval on that sample dips below zero. The
    target row (0.29, [-0.06, 0.65]) is reproduced exactly by
    per-transcript counts {2, 2, 1, 0 x 14} - see
    test_analysis.TestMeanCI95.test_reproduces_reference_pbs_transcript_row
    and the bundled fixture corpus, which uses those counts.
    """
    values = [0.0] * 12 + [1.0] * 5
    mean, lo, hi = mean_ci95(values)
    mean_ok = round(mean, 2) == 0.29
    ci_ok = lo < 0 and round(lo, 2) == -0.06 and round(hi, 2) == 0.65
    check(
        "t-interval: (12 zeros, 5 ones) fixture yields mean 0.29 and CI "
        "[-0.06, 0.65] with negative lower bound",
        mean_ok and ci_ok,
        detail=(
            f"fixture produces CI [{lo:.4f}, {hi:.4f}]; the stated fixture and "
            "the stated interval are mathematically inconsistent (the interval "
            "is reproduced by counts {2,2,1,0x14} instead)"
        ),
    )


# ---------------------------------------------------------------------------
# Sub-error threshold
# ---------------------------------------------------------------------------

def test_suberror_threshold_exact_and_monotone():
    exact_ok = suberror_threshold(0.09, 0.01) == 0.11

    rng = random.Random(31337)
    profiles = [
        WordProfile.from_scores(f"w{i}", [rng.random() * 0.7 for _ in range(5)])
        for i in range(300)
    ]

    def counts(error_t, sub_t):
        ref = ReferenceStats(words=(), mean=0.0, std=0.0, suberror_threshold=sub_t)
        labels = [classify_word(p, ref, error_t) for p in profiles]
        return labels.count(ERROR_TRIGGER), labels.count(SUB_ERROR_TRIGGER)

    monotone_ok = True
    thresholds = sorted(rng.random() * 0.8 for _ in range(12))
    for low, high in zip(thresholds, thresholds[1:]):
        if counts(high, 0.1)[0] > counts(low, 0.1)[0]:
            monotone_ok = False
        if counts(2.0, high)[1] > counts(2.0, low)[1]:
            monotone_ok = False

    check(
        "sub-error threshold: mean 0.09 + 2 x std 0.01 == 0.11 exactly; "
        "classification monotone under threshold increases",
        exact_ok and monotone_ok,
    )


# ---------------------------------------------------------------------------
# Offensive-lexicon validation fixture (2,671 words)
# ---------------------------------------------------------------------------

def test_offensive_validation_fixture():
    started = time.monotonic()
    profiles = []
    offensive_words = []
    # 35 offensive words meeting the error criterion (a template above 0.5),
    # 23 meeting the sub-error criterion, 7 meeting neither; the weights are
    # chosen so the offensive mean average-toxicity lands on 0.48.
    for i in range(35):
        word = f"off_error_{i}"
        offensive_words.append(word)
        profiles.append(WordProfile.from_scores(word, [0.684] * 5))
    for i in range(23):
        word = f"off_sub_{i}"
        offensive_words.append(word)
        profiles.append(WordProfile.from_scores(word, [0.30] * 5))
    for i in range(7):
        word = f"off_quiet_{i}"
        offensive_words.append(word)
        profiles.append(WordProfile.from_scores(word, [0.05] * 5))
    for i in range(2671 - 65):
        profiles.append(WordProfile.from_scores(f"plain_{i}", [0.11] * 5))

    lexicon = OffensiveLexicon(words=frozenset(offensive_words))
    profiles = apply_lexicon(profiles, lexicon)
    stats = validate_offensive(profiles, lexicon, suberror_threshold=0.11)
    elapsed = time.monotonic() - started

    ok = (
        len(profiles) == 2671
        and stats.n_offensive == 65
        and stats.pct_error_criteria == pytest.approx(35 / 65, abs=1e-12)
        and stats.pct_suberror_criteria == pytest.approx(23 / 65, abs=1e-12)
        and stats.pct_either == pytest.approx(58 / 65, abs=1e-12)
        and abs(stats.avg_tox_offensive - 0.48) < 0.005
        and abs(stats.avg_tox_nonoffensive - 0.11) < 0.005
        and elapsed < 30.0
    )
    check(
        f"offensive validation fixture: 2,671 words, 65 offensive -> "
        f"pct_error 35/65, pct_suberror 23/65, pct_either 58/65, mean "
        f"toxicities 0.48/0.11 (runtime {elapsed:.1f}s < 30s)",
        ok,
        detail=f"got {stats}",
    )


# ---------------------------------------------------------------------------
# Trigger distribution fixture
# ---------------------------------------------------------------------------

def test_trigger_distribution_reproduces_error_row():
    snippets = []
    placements = {"FOX": (197, 250), "MSNBC": (55, 120), "PBS": (196, 250)}
    for show, (hits, total) in placements.items():
        for i in range(total):
            text = "the flagword appears here" if i < hits else "nothing special here"
            snippets.append(make_snippet(f"{show}-{i}", show, text=text))
    profiles = [
        WordProfile.from_scores("flagword", [0.7] * 5, classification=ERROR_TRIGGER)
    ]
    rows = trigger_distribution(snippets, profiles, OffensiveLexicon())
    error_row = rows[0]
    counts_ok = error_row.counts == {"FOX": 197, "MSNBC": 55, "PBS": 196}
    fractions_ok = [
        round(error_row.fractions[show], 2) for show in ("FOX", "MSNBC", "PBS")
    ] == [0.44, 0.12, 0.44]
    check(
        "trigger distribution: error row counts (197, 55, 196) exact, "
        "fractions round to [.44, .12, .44]",
        counts_ok and fractions_ok and error_row.total == 448,
        detail=f"got {error_row}",
    )


# ---------------------------------------------------------------------------
# End-to-end determinism
# ---------------------------------------------------------------------------

def test_pipeline_determinism(tmp_path):
    cache = tmp_path / "cache.jsonl"
    bundles = []
    for name in ("first", "second"):
        config = pipeline.RunConfig.from_file(
            FIXTURES / "config.json",
            overrides={"out_dir": str(tmp_path / name), "cache_path": str(cache)},
        )
        bundles.append(pipeline.run_pipeline(config))
    identical = all(
        bundles[0].files()[key].read_bytes() == bundles[1].files()[key].read_bytes()
        for key in bundles[0].files()
    )
    check(
        "end-to-end determinism: two pipeline runs with identical config and "
        "cache produce byte-identical report bundles",
        identical,
    )


# ---------------------------------------------------------------------------
# Optional networked probe (informational)
# ---------------------------------------------------------------------------

@pytest.mark.skipif(
    not os.environ.get(API_KEY_ENV_VAR),
    reason=f"remote probe needs {API_KEY_ENV_VAR}",
)
def test_live_backend_control_word_vs_known_trigger(tmp_path):
    """Informational only: the remote model evolves, so no hard gate."""
    from civility_audit.scoring import make_remote_scorer

    scorer = make_remote_scorer(cache_path=tmp_path / "live_cache.jsonl")
    templates = TemplateSet()
    control = [scorer.score(s).value for s in templates.fill("tall")]
    trigger = [scorer.score(s).value for s in templates.fill("Muslim")]
    control_avg = sum(control) / len(control)
    trigger_avg = sum(trigger) / len(trigger)
    report(
        f"live probe (informational): control avg {control_avg:.3f} vs "
        f"known-trigger avg {trigger_avg:.3f} "
        f"({'lower' if control_avg < trigger_avg else 'NOT lower'})",
        True,
    )


# ---------------------------------------------------------------------------
# Secondary: annotation UI protocol
# ---------------------------------------------------------------------------

def test_ui_protocol_orientation_labels_and_round_trip(tmp_path):
    label_ok = True
    for dimension in Dimension:
        for left in (True, False):
            presentation = DimensionPresentation(
                dimension=dimension, civil_end_on_left=left, display_order=0
            )
            expected_left = dimension.civil_label if left else dimension.uncivil_label
            expected_right = dimension.uncivil_label if left else dimension.civil_label
            if (presentation.left_label, presentation.right_label) != (
                expected_left, expected_right,
            ):
                label_ok = False

    snippets = [make_snippet(f"u{i:02d}", show="FOX") for i in range(15)]
    app = create_app(
        snippets, annotators=["r1", "r2"], store_path=tmp_path / "store.jsonl",
        batch_size=15, seed=5,
    )
    client = TestClient(app)
    rng = random.Random(99)
    submitted = {}
    ratings_by_snippet: dict[str, list[AnnotatorRating]] = {}
    for annotator in ("r1", "r2"):
        batch = client.get(f"/api/annotators/{annotator}/next-batch").json()
        payload = {"ratings": []}
        for item in batch["items"]:
            entry = {"snippet_id": item["snippet_id"], "ratings": []}
            raw_ratings = []
            for p in item["presentations"]:
                value = rng.randint(1, 10)
                submitted[(annotator, item["snippet_id"], p["dimension"])] = value
                entry["ratings"].append(
                    {
                        "dimension": p["dimension"],
                        "value": value,
                        "civil_end_on_left": p["civil_end_on_left"],
                    }
                )
                raw_ratings.append(
                    RawRating(
                        dimension=Dimension.from_key(p["dimension"]),
                        value=value,
                        civil_end_on_left=p["civil_end_on_left"],
                    )
                )
            payload["ratings"].append(entry)
            ratings_by_snippet.setdefault(item["snippet_id"], []).append(
                AnnotatorRating(
                    annotator_id=annotator,
                    snippet_id=item["snippet_id"],
                    ratings=tuple(raw_ratings),
                )
            )
        response = client.post(
            f"/api/annotators/{annotator}/batches/{batch['batch_id']}/ratings",
            json=payload,
        )
        assert response.status_code == 200

    stored = RatingsStore(tmp_path / "store.jsonl").load()
    round_trip_ok = len(stored) == 120 and all(
        submitted[(r["annotator_id"], r["snippet_id"], r["dimension"])] == r["value"]
        for r in stored
    )
    recomputed = composites_from_store(tmp_path / "store.jsonl")
    composite_ok = all(
        recomputed[snippet_id].value == composite_score(ratings).value
        for snippet_id, ratings in ratings_by_snippet.items()
    )
    check(
        "ui protocol: 8 orientation/label combinations correct, submitted "
        "values round-trip unmodified, store-recomputed composites equal "
        "direct computation on a scripted 15-snippet batch",
        label_ok and round_trip_ok and composite_ok,
    )
