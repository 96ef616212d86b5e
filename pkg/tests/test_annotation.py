import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from civility_audit.annotation import (
    AgreementResult,
    AnnotationError,
    AnnotatorRating,
    Dimension,
    DIMENSIONS,
    RawRating,
    agreement,
    build_batches,
    composite_score,
    composites_by_snippet,
    load_ratings,
    orient,
    pairwise_agreement,
    rating_from_dict,
    rating_to_dict,
    rationale_distribution,
    save_ratings,
)
from civility_audit.corpus import CIVIL, RANDOM, UNCIVIL
from civility_audit.annotation import CompositeScore

from conftest import make_snippet


def rating_for(values, lefts=None, snippet_id="s1", annotator_id="a1"):
    lefts = lefts or [True] * 4
    return AnnotatorRating(
        annotator_id=annotator_id,
        snippet_id=snippet_id,
        ratings=tuple(
            RawRating(dimension=d, value=v, civil_end_on_left=left)
            for d, v, left in zip(DIMENSIONS, values, lefts)
        ),
    )


def oriented_rating(oriented_values, lefts, **kwargs):
    """Build a rating whose oriented values equal ``oriented_values``."""
    raw = [v if left else 11 - v for v, left in zip(oriented_values, lefts)]
    return rating_for(raw, lefts, **kwargs)


class TestOrient:
    def test_civil_left_passthrough(self):
        assert orient(RawRating(Dimension.POLITE_RUDE, 1, True)) == 1

    def test_extreme_reverses(self):
        assert orient(RawRating(Dimension.POLITE_RUDE, 1, False)) == 10

    def test_mid_value_reverses(self):
        assert orient(RawRating(Dimension.CALM_AGITATED, 4, False)) == 7

    def test_involution_under_end_flip(self):
        for v in range(1, 11):
            for left in (True, False):
                a = orient(RawRating(Dimension.POLITE_RUDE, v, left))
                b = orient(RawRating(Dimension.POLITE_RUDE, 11 - v, not left))
                assert a == b

    def test_value_range_enforced(self):
        with pytest.raises(AnnotationError):
            RawRating(Dimension.POLITE_RUDE, 11, True)
        with pytest.raises(AnnotationError):
            RawRating(Dimension.POLITE_RUDE, 0, True)


class TestCompositeScore:
    def test_all_civil_is_one(self):
        ratings = [
            oriented_rating([1, 1, 1, 1], [True, False, True, False], annotator_id=a)
            for a in ("a1", "a2")
        ]
        assert composite_score(ratings).value == 1.0

    def test_all_uncivil_is_ten(self):
        ratings = [
            oriented_rating([10, 10, 10, 10], [False, True, False, True], annotator_id=a)
            for a in ("a1", "a2")
        ]
        assert composite_score(ratings).value == 10.0

    def test_hand_computed_mean(self):
        a = oriented_rating([2, 4, 6, 8], [True] * 4, annotator_id="a1")
        b = oriented_rating([3, 3, 3, 3], [False] * 4, annotator_id="a2")
        assert composite_score([a, b]).value == pytest.approx(4.0)

    def test_zero_annotators(self):
        with pytest.raises(AnnotationError):
            composite_score([])

    def test_missing_dimension(self):
        with pytest.raises(AnnotationError):
            AnnotatorRating(
                annotator_id="a1",
                snippet_id="s1",
                ratings=tuple(
                    RawRating(Dimension.POLITE_RUDE, 5, True) for _ in range(4)
                ),
            )

    def test_mixed_snippets_rejected(self):
        a = rating_for([1, 2, 3, 4], snippet_id="s1")
        b = rating_for([1, 2, 3, 4], snippet_id="s2")
        with pytest.raises(AnnotationError):
            composite_score([a, b])

    def test_permutation_invariance_randomized(self):
        rng = random.Random(42)
        for _ in range(300):
            n_annotators = rng.randint(1, 4)
            ratings = []
            for i in range(n_annotators):
                values = [rng.randint(1, 10) for _ in range(4)]
                lefts = [rng.random() < 0.5 for _ in range(4)]
                ratings.append(rating_for(values, lefts, annotator_id=f"a{i}"))
            base = composite_score(ratings).value
            assert 1.0 <= base <= 10.0
            shuffled = ratings[:]
            rng.shuffle(shuffled)
            assert composite_score(shuffled).value == pytest.approx(base, abs=1e-12)
            permuted = [
                AnnotatorRating(
                    annotator_id=r.annotator_id,
                    snippet_id=r.snippet_id,
                    ratings=tuple(rng.sample(r.ratings, 4)),
                )
                for r in ratings
            ]
            assert composite_score(permuted).value == pytest.approx(base, abs=1e-12)


class TestBuildBatches:
    def _snippets(self, n, shows=("FOX", "MSNBC", "PBS")):
        return [
            make_snippet(f"s{i}", show=shows[i % len(shows)]) for i in range(n)
        ]

    def test_thirty_into_two_full_batches(self):
        batches = build_batches(self._snippets(30), "a1", size=15, seed=1)
        assert [b.size for b in batches] == [15, 15]

    def test_sixteen_into_fifteen_plus_one(self):
        batches = build_batches(self._snippets(16), "a1", size=15, seed=1)
        assert [b.size for b in batches] == [15, 1]

    def test_deterministic(self):
        snippets = self._snippets(31)
        assert build_batches(snippets, "a1", seed=4) == build_batches(snippets, "a1", seed=4)

    def test_covers_each_snippet_exactly_once(self):
        snippets = self._snippets(47)
        batches = build_batches(snippets, "a1", size=15, seed=2)
        served = [item.snippet_id for b in batches for item in b.items]
        assert sorted(served) == sorted(s.id for s in snippets)

    def test_show_mix_within_batches(self):
        snippets = self._snippets(45)
        batches = build_batches(snippets, "a1", size=15, seed=3)
        for batch in batches:
            shows = {item.snippet_id.split("s")[0] for item in batch.items}
            by_id = {s.id: s.show for s in snippets}
            shows = {by_id[item.snippet_id] for item in batch.items}
            assert len(shows) > 1

    def test_display_order_is_permutation(self):
        batches = build_batches(self._snippets(6), "a1", size=3, seed=5)
        for batch in batches:
            for item in batch.items:
                assert sorted(p.display_order for p in item.presentations) == [0, 1, 2, 3]

    def test_orientation_alternates_per_dimension(self):
        batches = build_batches(self._snippets(40), "a1", size=15, seed=6)
        history: dict[Dimension, list[bool]] = {}
        for batch in batches:
            for item in batch.items:
                for p in item.presentations:
                    history.setdefault(p.dimension, []).append(p.civil_end_on_left)
        for flags in history.values():
            assert all(a != b for a, b in zip(flags, flags[1:]))

    def test_empty_input(self):
        assert build_batches([], "a1", seed=0) == []

    def test_bad_size(self):
        with pytest.raises(AnnotationError):
            build_batches(self._snippets(3), "a1", size=0)


def pearson_oracle(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)


class TestAgreement:
    def test_identical_raters(self):
        result = agreement([(1, 1), (2, 2), (3, 3)])
        assert result.pearson_r == pytest.approx(1.0)
        assert result.mean_abs_diff == 0.0

    def test_constant_offset(self):
        result = agreement([(1, 3), (2, 4), (3, 5)])
        assert result.pearson_r == pytest.approx(1.0)
        assert result.mean_abs_diff == pytest.approx(2.0)

    def test_matches_independent_formula(self):
        pairs = [(1, 2), (2, 1), (3, 3), (4, 5)]
        result = agreement(pairs)
        expected_r = pearson_oracle([p[0] for p in pairs], [p[1] for p in pairs])
        expected_mad = sum(abs(a - b) for a, b in pairs) / len(pairs)
        assert result.pearson_r == pytest.approx(expected_r, abs=1e-9)
        assert result.mean_abs_diff == pytest.approx(expected_mad, abs=1e-9)

    def test_zero_variance_reports_undefined(self):
        result = agreement([(2, 1), (2, 5), (2, 9)])
        assert result.pearson_r is None
        assert result.mean_abs_diff > 0

    def test_empty_pairs_rejected(self):
        with pytest.raises(AnnotationError):
            agreement([])

    @given(
        st.lists(
            st.tuples(
                st.floats(1, 10, allow_nan=False), st.floats(1, 10, allow_nan=False)
            ),
            min_size=3,
            max_size=30,
        )
    )
    def test_bounds_and_affine_invariance(self, pairs):
        result = agreement(pairs)
        assert result.mean_abs_diff >= 0
        if result.pearson_r is not None:
            assert -1.0 - 1e-9 <= result.pearson_r <= 1.0 + 1e-9
            rescaled = agreement([(3.0 * a + 2.0, b) for a, b in pairs])
            if rescaled.pearson_r is not None:
                assert rescaled.pearson_r == pytest.approx(result.pearson_r, abs=1e-6)

    def test_pairwise_agreement_uses_shared_snippets(self):
        ratings = []
        for annotator, snippets in (
            ("a1", ["s1", "s2", "s3"]),
            ("a2", ["s2", "s3", "s4"]),
        ):
            for i, sid in enumerate(snippets):
                ratings.append(
                    oriented_rating(
                        [i + 1] * 4, [True] * 4, snippet_id=sid, annotator_id=annotator
                    )
                )
        results = pairwise_agreement(ratings)
        assert results[("a1", "a2")].n_shared == 2


class TestRationaleDistribution:
    def test_three_slightly_under_five(self):
        scores = [(UNCIVIL, CompositeScore(f"s{i}", 6.0)) for i in range(102)]
        scores += [(UNCIVIL, CompositeScore(f"t{i}", 4.6)) for i in range(3)]
        dist = rationale_distribution(scores)
        assert dist[UNCIVIL].count == 105
        assert dist[UNCIVIL].below_midpoint == 3

    def test_empty_input(self):
        dist = rationale_distribution([])
        for label in (UNCIVIL, CIVIL, RANDOM):
            assert dist[label].count == 0
            assert dist[label].mean is None

    def test_single_label_present(self):
        dist = rationale_distribution([(CIVIL, CompositeScore("s1", 2.0))])
        assert dist[CIVIL].count == 1
        assert dist[UNCIVIL].count == 0
        assert dist[RANDOM].count == 0

    def test_summary_values(self):
        dist = rationale_distribution(
            [
                (CIVIL, CompositeScore("s1", 2.0)),
                (CIVIL, CompositeScore("s2", 4.0)),
            ]
        )
        assert dist[CIVIL].mean == pytest.approx(3.0)
        assert dist[CIVIL].min == 2.0
        assert dist[CIVIL].max == 4.0
        assert dist[CIVIL].below_midpoint == 2


class TestRatingsIO:
    def test_round_trip(self, tmp_path):
        ratings = [
            rating_for([1, 5, 10, 7], [True, False, True, False], snippet_id="s1"),
            rating_for([2, 2, 2, 2], snippet_id="s2", annotator_id="a2"),
        ]
        path = tmp_path / "ratings.jsonl"
        save_ratings(ratings, path)
        assert load_ratings(path) == ratings

    def test_dict_round_trip(self):
        rating = rating_for([3, 6, 9, 1], [False, True, False, True])
        assert rating_from_dict(rating_to_dict(rating)) == rating

    def test_composites_by_snippet(self):
        ratings = [
            oriented_rating([2, 2, 2, 2], [True] * 4, snippet_id="s1", annotator_id="a1"),
            oriented_rating([4, 4, 4, 4], [False] * 4, snippet_id="s1", annotator_id="a2"),
        ]
        composites = composites_by_snippet(ratings)
        assert composites["s1"].value == pytest.approx(3.0)
