#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus.

Produces a fully deterministic month of synthetic three-show transcripts
with known per-transcript uncivil-flag counts and planted toxic turns,
plus the mock scorer lexicon, carrier templates, an offensive-word sample
list, and two annotators' ratings for every extracted snippet. Run from
the repository root:

    python fixtures/generate.py

All outputs land next to this script and are committed; tests and the
default config consume them.
"""

from __future__ import annotations

import datetime as dt
import json
import random
import shutil
import sys
import tempfile
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent
sys.path.insert(0, str(FIXTURES.parent / "src"))

from civility_audit import annotation, corpus, pipeline  # noqa: E402

SEED = 20190201
DATES = [dt.date(2019, 2, d) for d in (1, 4, 5, 6, 7, 8, 11, 12, 13, 14, 15, 18, 19, 20, 21, 22, 25)]

# Per-transcript count multisets. The human/model columns of the
# transcript-level statistics table follow directly from these via the
# Student-t interval (five of the six rows land on the reference values
# to two decimals; no integer counts can hit the sixth exactly).
HUMAN_UNCIVIL = {
    "FOX": [12, 11, 8, 8, 7, 6, 5, 5, 4, 3, 3, 2, 1, 1, 1, 0, 0],          # sum 77
    "MSNBC": [6, 3, 3, 2, 2, 2, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0],          # sum 21
    "PBS": [2, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],            # sum 5
}
MODEL_TOXIC = {
    "FOX": [13, 12, 12, 11, 10, 9, 8, 7, 6, 6, 3, 3, 3, 1, 1, 0, 0],       # sum 105
    "MSNBC": [2, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],          # sum 5
    "PBS": [6, 3, 3, 2, 2, 2, 2, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0],            # sum 24
}
CIVIL_FLAGS = {
    "FOX": [1] * 12 + [0] * 5,                                             # sum 12
    "MSNBC": [2] * 6 + [1] * 11,                                           # sum 23
    "PBS": [2] * 14 + [1] * 3,                                             # sum 31
}
RANDOM_QUOTAS = {"FOX": 23, "MSNBC": 8, "PBS": 17}

SPEAKERS = {
    "FOX": ["HANNITY", "GUEST", "CALLER", "ANALYST"],
    "MSNBC": ["MADDOW", "CORRESPONDENT", "GUEST", "PRODUCER"],
    "PBS": ["WOODRUFF", "REPORTER", "EXPERT", "WITNESS"],
}

# Words the mock scorer flags heavily (weight + base 0.05 >= 0.5): any
# turn containing one becomes a toxic turn. Non-offensive ones should come
# out as error triggers in the audit.
ERROR_WORDS = {
    "FOX": {"garbage": 0.60, "rats": 0.50, "kill": 0.55, "killed": 0.52},
    "MSNBC": {"killing": 0.47, "murdered": 0.51},
    "PBS": {"shooting": 0.49, "Muslim": 0.47, "gay": 0.46, "rape": 0.58},
}

# Offensive sample list: the high-weight ones behave like error triggers,
# the mid-weight ones like sub-error triggers, the tiny ones like neither.
OFFENSIVE_HIGH = {"idiot": 0.55, "moron": 0.50, "psychos": 0.58, "F-ing": 0.50}
OFFENSIVE_MID = {
    "stupid": 0.30, "dumb": 0.25, "deplorables": 0.33, "insane": 0.28,
    "cheater": 0.15, "crock": 0.12, "bozo": 0.10, "hoax": 0.09,
}
OFFENSIVE_LOW = {"mad": 0.02, "silly": 0.01}

# Non-offensive words with clearly elevated but sub-threshold weights:
# expected sub-error triggers.
SUBERROR_WORDS = {
    "Black": 0.12, "white": 0.10, "women": 0.22, "Democrats": 0.14,
    "Republicans": 0.13, "Trump": 0.16, "president": 0.08, "she": 0.09,
    "her": 0.08, "you": 0.11, "your": 0.10, "baby": 0.13, "kid": 0.11,
    "child": 0.12, "violence": 0.28, "violent": 0.26, "terror": 0.30,
    "war": 0.17, "crime": 0.19, "criminal": 0.21, "drugs": 0.15,
    "prison": 0.14, "police": 0.12, "attack": 0.24, "hate": 0.29,
    "evil": 0.27, "death": 0.23, "threat": 0.20, "fake": 0.13,
    "socialist": 0.12, "racism": 0.25, "lie": 0.15, "lying": 0.18,
    "swamp": 0.20, "gun": 0.33, "invaders": 0.31, "slurs": 0.22,
}

# Template carrier words get tiny weights so the five filled templates
# score slightly differently for every word.
CARRIER_WORDS = {"page": 0.01, "whispered": 0.015, "erased": 0.025, "didn't": 0.02, "say": 0.005}

# Common words that only ever appear in low-toxicity turns and carry a
# small weight: the backbone of the audit's reference sample.
REFERENCE_POOL_NAMES = [
    "meeting", "report", "budget", "schedule", "session", "hearing",
    "committee", "member", "program", "policy", "measure", "proposal",
    "statement", "question", "answer", "detail", "record", "moment",
    "morning", "evening", "tonight", "today", "yesterday", "tomorrow",
    "week", "month", "year", "office", "building", "street",
    "city", "state", "country", "economy", "market", "industry",
    "company", "worker", "teacher", "student", "school", "college",
    "family", "neighbor", "community", "leader", "official", "agency",
    "department", "congress", "senate", "house", "court", "justice",
    "election", "campaign", "voter", "ballot", "district", "governor",
]

COMMON_WORDS = (
    "the a an and or but if then because while although with without into onto "
    "from under over about around through during before after again still just "
    "very quite rather almost nearly really actually certainly probably perhaps "
    "we they he it this that these those there here now soon later often always "
    "never sometimes usually is are was were be been being have has had do does "
    "did will would can could should may might must go goes went going come "
    "comes came coming make makes made take takes took give gives gave get gets "
    "got know knows knew think thinks thought see sees saw look looks looked "
    "want wants wanted need needs needed tell tells told ask asks asked work "
    "works worked call calls called try tries tried feel feels felt seem seems "
    "seemed leave leaves left put puts keep keeps kept begin begins began show "
    "shows showed hear hears heard let lets run runs ran move moves moved live "
    "lives lived believe believes believed bring brings brought happen happens "
    "happened write set sets sat stand stands stood lose loses lost pay pays "
    "paid meet meets met include includes included continue continues continued "
    "change changes changed lead leads led understand understood watch watched "
    "follow follows followed stop stops stopped create creates created speak "
    "speaks spoke read reads spend spends spent grow grows grew open opens "
    "opened walk walks walked win wins won offer offers offered remember "
    "appear appears appeared buy buys bought serve serves served send sends "
    "sent expect expects expected build builds built stay stays stayed fall "
    "falls fell reach reckons reached remain remains remained suggest suggests "
    "number part point world hand place case fact group problem right study "
    "night water thing area money story issue side kind head hour line end "
    "letter father mother friend idea body news power mind level order door "
    "health person art history result effort rate field food practice "
    "road form event official matter center table final voice news note "
    "plan interest job action figure process chance amount information"
).split()


def build_lexicon() -> dict[str, float]:
    entries: dict[str, float] = {}
    for show_words in ERROR_WORDS.values():
        entries.update(show_words)
    entries.update(OFFENSIVE_HIGH)
    entries.update(OFFENSIVE_MID)
    entries.update(OFFENSIVE_LOW)
    entries.update(SUBERROR_WORDS)
    entries.update(CARRIER_WORDS)
    rng = random.Random(SEED + 17)
    for name in REFERENCE_POOL_NAMES:
        entries[name] = round(rng.uniform(0.004, 0.024), 3)
    return entries


_COMMON_SET = set(COMMON_WORDS)


class TurnBuilder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self._reference_cycle: list[str] = []

    def _next_reference_words(self, k: int) -> list[str]:
        out = []
        for _ in range(k):
            if not self._reference_cycle:
                self._reference_cycle = REFERENCE_POOL_NAMES[:]
                self.rng.shuffle(self._reference_cycle)
            out.append(self._reference_cycle.pop())
        return out

    def _plant(self, tokens: list[str], planted: list[str]) -> None:
        for position, word in zip(
            self.rng.sample(range(len(tokens)), len(planted)), planted
        ):
            tokens[position] = word

    def _sentenceize(self, tokens: list[str]) -> str:
        # The mock lexicon is case-sensitive, so only plain filler words get
        # sentence-start capitalization; planted words keep their spelling.
        sentences = []
        i = 0
        while i < len(tokens):
            n = min(self.rng.randint(7, 12), len(tokens) - i)
            chunk = tokens[i : i + n]
            if chunk[0] in _COMMON_SET:
                chunk[0] = chunk[0][0].upper() + chunk[0][1:]
            sentences.append(" ".join(chunk) + ".")
            i += n
        return " ".join(sentences)

    def neutral(self, n_words: int) -> str:
        tokens = [self.rng.choice(COMMON_WORDS) for _ in range(n_words)]
        self._plant(tokens, self._next_reference_words(self.rng.randint(0, 2)))
        return self._sentenceize(tokens)

    def flavored(self, n_words: int) -> str:
        """Uncivil-sounding but below the toxicity threshold."""
        tokens = [self.rng.choice(COMMON_WORDS) for _ in range(n_words)]
        candidates = sorted(SUBERROR_WORDS) + sorted(OFFENSIVE_MID)
        self.rng.shuffle(candidates)
        spice, budget = [], 0.33
        for word in candidates:
            weight = SUBERROR_WORDS.get(word, OFFENSIVE_MID.get(word, 0.0))
            if weight <= budget:
                spice.append(word)
                budget -= weight
            if len(spice) == 3:
                break
        self._plant(tokens, spice)
        return self._sentenceize(tokens)

    def toxic(self, n_words: int, show: str) -> str:
        tokens = [self.rng.choice(COMMON_WORDS) for _ in range(n_words)]
        pool = sorted(ERROR_WORDS[show]) + sorted(OFFENSIVE_HIGH)
        planted = [self.rng.choice(pool)]
        if self.rng.random() < 0.5:
            planted.append(self.rng.choice(sorted(SUBERROR_WORDS)))
        self._plant(tokens, planted)
        return self._sentenceize(tokens)


def generate_transcript(
    show: str, date: dt.date, n_uncivil: int, n_civil: int, n_toxic: int,
    rng: random.Random,
) -> tuple[str, list[dict]]:
    """Returns (transcript text, flag records)."""
    builder = TurnBuilder(rng)
    n_anchors = n_uncivil + n_civil
    reserve = max(3, -(-RANDOM_QUOTAS[show] // len(DATES)) + 2)
    n_turns = max(34, 6 * (n_anchors + reserve) + 14)

    anchor_slots = list(range(2, n_turns - 2, 6))[:n_anchors]
    rng.shuffle(anchor_slots)
    uncivil_at = sorted(anchor_slots[:n_uncivil])
    civil_at = sorted(anchor_slots[n_uncivil:])

    toxic_at = set()
    preferred = [i for i in uncivil_at]
    rng.shuffle(preferred)
    for i in preferred[: min(n_toxic, (n_toxic * 3) // 5)]:
        toxic_at.add(i)
    free = [i for i in range(n_turns) if i not in set(anchor_slots) and i not in toxic_at]
    rng.shuffle(free)
    while len(toxic_at) < n_toxic:
        toxic_at.add(free.pop())

    speakers = SPEAKERS[show]
    lines = []
    flags = []
    transcript_id = f"{show}_{date.isoformat()}"
    for i in range(n_turns):
        speaker = speakers[i % len(speakers)]
        n_words = rng.randint(42, 62)
        if i in toxic_at:
            text = builder.toxic(n_words, show)
        elif i in uncivil_at:
            text = builder.flavored(n_words)
        else:
            text = builder.neutral(n_words)
        lines.append(f"{speaker}: {text}")
        if i in uncivil_at:
            flags.append({"transcript_id": transcript_id, "turn_index": i, "label": "Uncivil"})
        elif i in civil_at:
            flags.append({"transcript_id": transcript_id, "turn_index": i, "label": "Civil"})
    return "\n\n".join(lines) + "\n", flags


def generate_ratings(snippets: list[corpus.Snippet], rng: random.Random) -> list[dict]:
    """Two annotators rate every snippet; oriented targets follow the rationale.

    Exactly three uncivil-anchored snippets (sarcastic MSNBC ones) land a
    bit under the scale midpoint; every other uncivil snippet stays at or
    above it.
    """
    msnbc_uncivil = sorted(
        s.id for s in snippets if s.show == "MSNBC" and s.rationale == corpus.UNCIVIL
    )
    barely_under = set(msnbc_uncivil[:3])

    records = []
    for annotator in ("annotator_1", "annotator_2"):
        for snippet in sorted(snippets, key=lambda s: s.id):
            if snippet.id in barely_under:
                oriented = [4, 4, 4, rng.randint(4, 5)]
                rng.shuffle(oriented)
            elif snippet.rationale == corpus.UNCIVIL:
                oriented = [rng.randint(7, 9) for _ in range(4)]
            elif snippet.rationale == corpus.CIVIL:
                oriented = [rng.randint(2, 4) for _ in range(4)]
            else:
                oriented = [rng.randint(3, 5) for _ in range(4)]
            ratings = []
            for dim, value in zip(annotation.DIMENSIONS, oriented):
                left = rng.random() < 0.5
                ratings.append(
                    {
                        "dimension": dim.key,
                        "value": value if left else 11 - value,
                        "civil_end_on_left": left,
                    }
                )
            records.append(
                {
                    "annotator_id": annotator,
                    "snippet_id": snippet.id,
                    "ratings": ratings,
                    "timestamp": "2019-03-01T00:00:00+00:00",
                }
            )
    return records


def main() -> None:
    rng = random.Random(SEED)
    transcripts_dir = FIXTURES / "transcripts"
    if transcripts_dir.exists():
        shutil.rmtree(transcripts_dir)
    transcripts_dir.mkdir(parents=True)

    all_flags = []
    for show in ("FOX", "MSNBC", "PBS"):
        uncivil = HUMAN_UNCIVIL[show][:]
        toxic = MODEL_TOXIC[show][:]
        civil = CIVIL_FLAGS[show][:]
        for counts in (uncivil, toxic, civil):
            rng.shuffle(counts)
        for i, date in enumerate(DATES):
            text, flags = generate_transcript(
                show, date, uncivil[i], civil[i], toxic[i], rng
            )
            (transcripts_dir / f"{show}_{date.isoformat()}.txt").write_text(
                text, encoding="utf-8"
            )
            all_flags.extend(flags)

    with open(FIXTURES / "flags.jsonl", "w", encoding="utf-8") as fh:
        for flag in all_flags:
            fh.write(json.dumps(flag, sort_keys=True) + "\n")

    lexicon = {"base": 0.05, "entries": build_lexicon()}
    with open(FIXTURES / "mock_lexicon.json", "w", encoding="utf-8") as fh:
        json.dump(lexicon, fh, indent=2, sort_keys=True)
        fh.write("\n")

    (FIXTURES / "templates.txt").write_text(
        "We wrote WORD on the page.\n"
        "They whispered WORD to themselves.\n"
        "I erased the word WORD from the page.\n"
        "You didn't write WORD.\n"
        "Did he say WORD?\n",
        encoding="utf-8",
    )

    offensive = sorted(set(OFFENSIVE_HIGH) | set(OFFENSIVE_MID) | set(OFFENSIVE_LOW))
    (FIXTURES / "offensive_lexicon.txt").write_text(
        "# Sample offensive-word list for the bundled fixture corpus.\n"
        "# Not a judgment about real-world usage; adjudicate your own list\n"
        "# for real audits. One word per line, case-sensitive.\n"
        + "\n".join(offensive)
        + "\n",
        encoding="utf-8",
    )

    config = {
        "transcripts_dir": "transcripts",
        "flags_path": "flags.jsonl",
        "ratings_path": "ratings.jsonl",
        "out_dir": "out",
        "backend": "mock",
        "mock_lexicon_path": "mock_lexicon.json",
        "templates_path": "templates.txt",
        "offensive_lexicon_path": "offensive_lexicon.txt",
        "words_per_show": 300,
        "random_snippets": RANDOM_QUOTAS,
        "seed": 7,
    }
    with open(FIXTURES / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # Ratings reference the snippet ids the ingest stage will generate, so
    # run ingest against a scratch directory to learn them.
    with tempfile.TemporaryDirectory() as tmp:
        run_config = pipeline.RunConfig.from_file(
            FIXTURES / "config.json", overrides={"out_dir": tmp, "ratings_path": "flags.jsonl"}
        )
        pipeline.stage_ingest(run_config)
        snippets = corpus.load_snippets(Path(tmp) / "corpus" / "snippets.jsonl")

    ratings = generate_ratings(snippets, random.Random(SEED + 99))
    with open(FIXTURES / "ratings.jsonl", "w", encoding="utf-8") as fh:
        for record in ratings:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    print(f"wrote {len(list(transcripts_dir.glob('*.txt')))} transcripts")
    print(f"wrote {len(all_flags)} flags, {len(snippets)} snippets, {len(ratings)} ratings")


if __name__ == "__main__":
    main()
