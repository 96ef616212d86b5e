"""Speaker-turn transcripts, Pass I flags, and snippet extraction.

Transcripts arrive as plain text, one ``SPEAKER: text`` line per turn with
optional blank lines between turns. Pass I flags mark turns that stood out
as notably uncivil or civil; Pass II snippets are ~200-word windows built
around those turns (plus non-overlapping random windows) for fine-grained
rating.
"""

from __future__ import annotations

import datetime as dt
import json
import random
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import IO, Iterable, Sequence

from .textutil import word_count, vocabulary

FOX = "FOX"
MSNBC = "MSNBC"
PBS = "PBS"
DEFAULT_SHOWS = (FOX, MSNBC, PBS)

UNCIVIL = "Uncivil"
CIVIL = "Civil"
RANDOM = "Random"
RATIONALES = (UNCIVIL, CIVIL, RANDOM)

DEFAULT_TARGET_WORDS = 200
# "about 200 words": accept snippets between target-50 and target+100.
MIN_SNIPPET_WORDS = 150
MAX_SNIPPET_WORDS = 300


class ParseError(ValueError):
    """Malformed transcript input."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CorpusError(ValueError):
    """Inconsistent corpus data (bad flag, bad anchor, duplicate transcript)."""


@dataclass(frozen=True)
class SpeakerTurn:
    transcript_id: str
    index: int
    speaker: str
    text: str


@dataclass(frozen=True)
class Transcript:
    id: str
    show: str
    date: dt.date
    turns: tuple[SpeakerTurn, ...]

    def __post_init__(self):
        if not self.turns:
            raise CorpusError(f"transcript {self.id!r} has no turns")
        for i, turn in enumerate(self.turns):
            if turn.index != i:
                raise CorpusError(
                    f"transcript {self.id!r}: turn index {turn.index} at position {i}"
                )
            if not turn.speaker or not turn.text.strip():
                raise CorpusError(f"transcript {self.id!r}: empty speaker or text at turn {i}")


@dataclass(frozen=True)
class PassIFlag:
    transcript_id: str
    turn_index: int
    label: str

    def __post_init__(self):
        if self.label not in RATIONALES:
            raise CorpusError(f"unknown flag label {self.label!r}")


@dataclass(frozen=True)
class Snippet:
    """A contiguous run of turns rendered as plain text for rating.

    ``turn_start``/``turn_end`` (inclusive) record which turns the snippet
    covers; they are extraction metadata used to enforce non-overlap.
    """

    id: str
    show: str
    transcript_id: str
    rationale: str
    anchor_turn_index: int
    word_count: int
    text: str
    turn_start: int
    turn_end: int

    def turn_range(self) -> set[int]:
        return set(range(self.turn_start, self.turn_end + 1))


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------

def parse_transcript(
    raw: str | IO[str],
    show: str,
    date: dt.date,
    transcript_id: str | None = None,
) -> Transcript:
    """Parse ``SPEAKER: text`` lines into a Transcript.

    Blank lines separate turns visually and are ignored; consecutive lines
    with the same speaker merge into a single turn. A non-blank line without
    a ``:`` delimiter (or with an empty speaker/text part) is an error.
    """
    text = raw if isinstance(raw, str) else raw.read()
    tid = transcript_id or f"{show}_{date.isoformat()}"

    turns: list[tuple[str, list[str]]] = []  # (speaker, text parts)
    seen_content = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        seen_content = True
        speaker, sep, turn_text = line.partition(":")
        speaker = speaker.strip()
        turn_text = turn_text.strip()
        if not sep:
            raise ParseError("no 'SPEAKER:' delimiter", lineno)
        if not speaker:
            raise ParseError("empty speaker label", lineno)
        if not turn_text:
            raise ParseError("turn line has no text", lineno)
        if turns and turns[-1][0] == speaker:
            turns[-1][1].append(turn_text)
        else:
            turns.append((speaker, [turn_text]))
    if not seen_content:
        raise ParseError("empty transcript stream")

    built = tuple(
        SpeakerTurn(transcript_id=tid, index=i, speaker=speaker, text=" ".join(parts))
        for i, (speaker, parts) in enumerate(turns)
    )
    return Transcript(id=tid, show=show, date=date, turns=built)


def serialize_transcript(transcript: Transcript) -> str:
    """Inverse of :func:`parse_transcript` for parsed transcripts."""
    return "\n\n".join(f"{t.speaker}: {t.text}" for t in transcript.turns) + "\n"


def transcript_to_dict(transcript: Transcript) -> dict:
    return {
        "id": transcript.id,
        "show": transcript.show,
        "date": transcript.date.isoformat(),
        "turns": [
            {"index": t.index, "speaker": t.speaker, "text": t.text}
            for t in transcript.turns
        ],
    }


def transcript_from_dict(record: dict) -> Transcript:
    tid = record["id"]
    turns = tuple(
        SpeakerTurn(transcript_id=tid, index=t["index"], speaker=t["speaker"], text=t["text"])
        for t in record["turns"]
    )
    return Transcript(
        id=tid,
        show=record["show"],
        date=dt.date.fromisoformat(record["date"]),
        turns=turns,
    )


def load_transcript_file(path: str | Path) -> Transcript:
    """Load a transcript text file named ``<SHOW>_<YYYY-MM-DD>.txt``."""
    path = Path(path)
    stem = path.stem
    show, sep, datepart = stem.partition("_")
    if not sep:
        raise CorpusError(f"transcript filename {path.name!r} is not <SHOW>_<date>.txt")
    try:
        date = dt.date.fromisoformat(datepart)
    except ValueError as exc:
        raise CorpusError(f"transcript filename {path.name!r}: bad date: {exc}") from exc
    with open(path, encoding="utf-8") as fh:
        return parse_transcript(fh, show=show, date=date, transcript_id=stem)


def load_corpus(transcript_dir: str | Path) -> list[Transcript]:
    """Load every ``*.txt`` transcript under ``transcript_dir``, sorted by id."""
    paths = sorted(Path(transcript_dir).glob("*.txt"))
    transcripts = [load_transcript_file(p) for p in paths]
    seen: set[tuple[str, dt.date]] = set()
    for t in transcripts:
        key = (t.show, t.date)
        if key in seen:
            raise CorpusError(f"duplicate transcript for {key}")
        seen.add(key)
    return transcripts


# ---------------------------------------------------------------------------
# Pass I flags
# ---------------------------------------------------------------------------

def load_flags(path: str | Path) -> list[PassIFlag]:
    flags = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            flags.append(
                PassIFlag(
                    transcript_id=rec["transcript_id"],
                    turn_index=int(rec["turn_index"]),
                    label=rec["label"],
                )
            )
    return flags


def save_flags(flags: Iterable[PassIFlag], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for flag in flags:
            fh.write(json.dumps(asdict(flag), sort_keys=True) + "\n")


def validate_flags(flags: Sequence[PassIFlag], transcripts: Sequence[Transcript]) -> None:
    """Every flag must reference an existing turn; one flag per turn at most."""
    by_id = {t.id: t for t in transcripts}
    seen: set[tuple[str, int]] = set()
    for flag in flags:
        transcript = by_id.get(flag.transcript_id)
        if transcript is None:
            raise CorpusError(f"flag references unknown transcript {flag.transcript_id!r}")
        if not 0 <= flag.turn_index < len(transcript.turns):
            raise CorpusError(
                f"flag references missing turn {flag.turn_index} "
                f"of transcript {flag.transcript_id!r}"
            )
        key = (flag.transcript_id, flag.turn_index)
        if key in seen:
            raise CorpusError(f"turn {key} carries more than one flag")
        seen.add(key)


# ---------------------------------------------------------------------------
# Snippet extraction
# ---------------------------------------------------------------------------

def _expand(
    transcript: Transcript,
    anchor: int,
    target_words: int,
    lo_limit: int,
    hi_limit: int,
) -> tuple[int, int, int]:
    """Grow a window of whole turns around ``anchor`` until ``target_words``.

    Adjacent turns are added alternately after/before the current window
    (starting with the following turn) until the word count reaches the
    target or both limits are hit. Returns (start, end, word_count).
    """
    counts = [word_count(t.text) for t in transcript.turns]
    start = end = anchor
    total = counts[anchor]
    take_next = True
    while total < target_words and (start > lo_limit or end < hi_limit):
        if take_next and end < hi_limit:
            end += 1
            total += counts[end]
        elif not take_next and start > lo_limit:
            start -= 1
            total += counts[start]
        take_next = not take_next
    return start, end, total


def _snippet_id(transcript_id: str, anchor: int, rationale: str) -> str:
    return f"{transcript_id}:{anchor}:{rationale[0]}"


def _build_snippet(
    transcript: Transcript, start: int, end: int, anchor: int, rationale: str
) -> Snippet:
    text = " ".join(t.text for t in transcript.turns[start : end + 1])
    return Snippet(
        id=_snippet_id(transcript.id, anchor, rationale),
        show=transcript.show,
        transcript_id=transcript.id,
        rationale=rationale,
        anchor_turn_index=anchor,
        word_count=word_count(text),
        text=text,
        turn_start=start,
        turn_end=end,
    )


def extract_snippet(
    transcript: Transcript,
    anchor: int,
    target_words: int = DEFAULT_TARGET_WORDS,
    rationale: str = RANDOM,
) -> Snippet:
    """Extract the ~``target_words`` snippet around the turn at ``anchor``."""
    if not 0 <= anchor < len(transcript.turns):
        raise CorpusError(
            f"anchor {anchor} out of range for transcript {transcript.id!r} "
            f"({len(transcript.turns)} turns)"
        )
    start, end, _ = _expand(transcript, anchor, target_words, 0, len(transcript.turns) - 1)
    return _build_snippet(transcript, start, end, anchor, rationale)


def sample_random_snippets(
    transcript: Transcript,
    n: int,
    taken: Iterable[Snippet],
    seed: int,
    target_words: int = DEFAULT_TARGET_WORDS,
    min_words: int = MIN_SNIPPET_WORDS,
    max_words: int = MAX_SNIPPET_WORDS,
) -> list[Snippet]:
    """Sample up to ``n`` random snippets disjoint from ``taken`` and each other.

    Expansion never crosses into an occupied turn, so the sampled windows
    share no turn with any flag-anchored snippet. Returns fewer than ``n``
    snippets when the transcript has no room left. Deterministic for a
    given seed.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    occupied: set[int] = set()
    for snippet in taken:
        if snippet.transcript_id == transcript.id:
            occupied |= snippet.turn_range()

    rng = random.Random(seed)
    candidates = [i for i in range(len(transcript.turns)) if i not in occupied]
    result: list[Snippet] = []
    while len(result) < n and candidates:
        anchor = candidates.pop(rng.randrange(len(candidates)))
        # Free region limits around the anchor.
        lo = anchor
        while lo > 0 and lo - 1 not in occupied:
            lo -= 1
        hi = anchor
        while hi < len(transcript.turns) - 1 and hi + 1 not in occupied:
            hi += 1
        start, end, total = _expand(transcript, anchor, target_words, lo, hi)
        if not min_words <= total <= max_words:
            continue
        result.append(_build_snippet(transcript, start, end, anchor, RANDOM))
        span = set(range(start, end + 1))
        occupied |= span
        candidates = [i for i in candidates if i not in span]
    return result


# ---------------------------------------------------------------------------
# Snippet corpus I/O and summary
# ---------------------------------------------------------------------------

def save_snippets(snippets: Iterable[Snippet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for snippet in snippets:
            fh.write(json.dumps(asdict(snippet), sort_keys=True) + "\n")


def load_snippets(path: str | Path) -> list[Snippet]:
    snippets = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            snippets.append(Snippet(**json.loads(line)))
    return snippets


@dataclass
class ShowSummary:
    show: str
    uncivil: int = 0
    civil: int = 0
    random: int = 0
    total: int = 0
    mean_words: float = 0.0
    vocabulary: int = 0
    _lengths: list[int] = field(default_factory=list, repr=False)


def corpus_summary(snippets: Sequence[Snippet]) -> list[ShowSummary]:
    """Per-show snippet counts by rationale, mean length and vocabulary size.

    The final row aggregates all shows under the name ``Overall``; an empty
    corpus yields no rows.
    """
    if not snippets:
        return []
    by_show: dict[str, ShowSummary] = {}
    for snippet in snippets:
        summary = by_show.setdefault(snippet.show, ShowSummary(show=snippet.show))
        if snippet.rationale == UNCIVIL:
            summary.uncivil += 1
        elif snippet.rationale == CIVIL:
            summary.civil += 1
        else:
            summary.random += 1
        summary.total += 1
        summary._lengths.append(snippet.word_count)

    rows = [by_show[show] for show in sorted(by_show)]
    for row in rows:
        row.mean_words = sum(row._lengths) / len(row._lengths)
        row.vocabulary = len(
            vocabulary(s.text for s in snippets if s.show == row.show)
        )

    overall = ShowSummary(
        show="Overall",
        uncivil=sum(r.uncivil for r in rows),
        civil=sum(r.civil for r in rows),
        random=sum(r.random for r in rows),
        total=sum(r.total for r in rows),
        mean_words=sum(s.word_count for s in snippets) / len(snippets),
        vocabulary=len(vocabulary(s.text for s in snippets)),
    )
    rows.append(overall)
    return rows
