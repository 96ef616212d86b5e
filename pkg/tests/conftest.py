import datetime as dt
import random
from pathlib import Path

import pytest

from civility_audit.corpus import Snippet, SpeakerTurn, Transcript
from civility_audit.scoring import MockLexicon, make_mock_scorer

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def make_transcript(
    n_turns: int,
    words_per_turn: int = 50,
    show: str = "FOX",
    transcript_id: str = "FOX_2019-02-01",
    seed: int = 0,
) -> Transcript:
    """Synthetic transcript with exactly ``words_per_turn`` words per turn."""
    rng = random.Random(seed)
    pool = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"]
    speakers = ["HOST", "GUEST"]
    turns = tuple(
        SpeakerTurn(
            transcript_id=transcript_id,
            index=i,
            speaker=speakers[i % 2],
            text=" ".join(rng.choice(pool) for _ in range(words_per_turn)),
        )
        for i in range(n_turns)
    )
    return Transcript(id=transcript_id, show=show, date=dt.date(2019, 2, 1), turns=turns)


def make_snippet(
    snippet_id: str = "s1",
    show: str = "FOX",
    rationale: str = "Uncivil",
    text: str = "alpha bravo charlie",
    transcript_id: str = "FOX_2019-02-01",
    anchor: int = 0,
    turn_start: int = 0,
    turn_end: int = 0,
) -> Snippet:
    return Snippet(
        id=snippet_id,
        show=show,
        transcript_id=transcript_id,
        rationale=rationale,
        anchor_turn_index=anchor,
        word_count=len(text.split()),
        text=text,
        turn_start=turn_start,
        turn_end=turn_end,
    )


@pytest.fixture
def plain_scorer():
    """Mock scorer with an empty lexicon: every text scores the base 0.05."""
    return make_mock_scorer(MockLexicon(entries={}, base=0.05))


@pytest.fixture
def weighted_scorer():
    lexicon = MockLexicon(
        entries={"garbage": 0.6, "swamp": 0.3, "hoax": 0.4}, base=0.05
    )
    return make_mock_scorer(lexicon)
