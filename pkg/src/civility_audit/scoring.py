"""Black-box toxicity scoring with caching, throttling, and an offline mock.

Every backend maps text to a single toxicity probability in [0, 1]. The
remote backend talks to a hosted scoring API (key in the
``CIVILITY_AUDIT_API_KEY`` environment variable); the mock backend is a
deterministic lexicon scorer so the full pipeline runs offline and tests
are reproducible. Scores are cached on disk keyed by content digest, so an
audit can be re-run byte-for-byte without touching the backend again.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .textutil import words

API_KEY_ENV_VAR = "CIVILITY_AUDIT_API_KEY"
DEFAULT_ENDPOINT = (
    "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze"
)
DEFAULT_MAX_TEXT_LEN = 20000
DEFAULT_QPS = 1.0
DEFAULT_RETRIES = 3


class ScoringError(RuntimeError):
    """Base class for scoring failures."""


class TextLengthError(ScoringError):
    """Text is empty or exceeds the backend's length limit."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"item {index}: {message}"
        super().__init__(message)


class BackendError(ScoringError):
    """The backend failed after exhausting retries."""

    def __init__(self, message: str, attempts: int, index: int | None = None):
        self.attempts = attempts
        self.index = index
        if index is not None:
            message = f"item {index}: {message}"
        super().__init__(f"{message} (after {attempts} attempt(s))")


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ToxicityScore:
    value: float
    model_id: str
    text_hash: str

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ScoringError(f"score {self.value} outside [0, 1]")


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------

class ScoreCache:
    """Append-only score cache keyed by (text_hash, model_id).

    Backed by a JSON-lines file when a path is given; entries never expire,
    so a finished audit stays reproducible. Thread-safe.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str], float] = {}
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._entries[(rec["text_hash"], rec["model_id"])] = float(rec["value"])

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, text_hash: str, model_id: str) -> float | None:
        with self._lock:
            value = self._entries.get((text_hash, model_id))
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def put(self, text_hash: str, model_id: str, value: float) -> None:
        with self._lock:
            if (text_hash, model_id) in self._entries:
                return
            self._entries[(text_hash, model_id)] = value
            if self.path is not None:
                record = {
                    "text_hash": text_hash,
                    "model_id": model_id,
                    "value": value,
                    "retrieved_at": datetime.now(timezone.utc).isoformat(),
                }
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Rate limiting
# ---------------------------------------------------------------------------

class RateLimiter:
    """Serializes callers so consecutive acquisitions are >= 1/qps apart."""

    def __init__(self, qps: float):
        if qps <= 0:
            raise ValueError("qps must be > 0")
        self.min_interval = 1.0 / qps
        self._lock = threading.Lock()
        self._last = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            wait = self._last + self.min_interval - now
            if wait > 0:
                time.sleep(wait)
                now = time.monotonic()
            self._last = now


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MockLexicon:
    """Word weights for the offline scorer."""

    entries: dict[str, float]
    base: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.base <= 1.0:
            raise ScoringError(f"lexicon base {self.base} outside [0, 1]")
        for word, weight in self.entries.items():
            if not 0.0 <= weight <= 1.0:
                raise ScoringError(f"lexicon weight for {word!r} outside [0, 1]")

    @classmethod
    def load(cls, path: str | Path) -> "MockLexicon":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(entries={str(k): float(v) for k, v in data["entries"].items()},
                   base=float(data.get("base", 0.05)))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"base": self.base, "entries": self.entries}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def mock_score(text: str, lexicon: MockLexicon) -> float:
    """Deterministic lexicon score: base plus each distinct matched word's weight.

    Tokenization matches the corpus word definition (case preserved), so the
    same word lists drive transcripts, snippets, and template probes alike.
    """
    hits = {w for w in words(text) if w in lexicon.entries}
    return min(1.0, lexicon.base + sum(lexicon.entries[w] for w in hits))


class MockBackend:
    model_id = "mock"

    def __init__(self, lexicon: MockLexicon, model_id: str = "mock"):
        self.lexicon = lexicon
        self.model_id = model_id
        self.calls = 0

    def score_text(self, text: str) -> float:
        self.calls += 1
        return mock_score(text, self.lexicon)


class RemoteBackend:
    """HTTP backend for a hosted toxicity-probability endpoint.

    Sends the text as a JSON comment-analysis request and reads the summary
    toxicity probability from the response. Retries with exponential backoff
    on transient failures (connection errors, 429, 5xx).
    """

    def __init__(
        self,
        api_key: str | None = None,
        endpoint: str = DEFAULT_ENDPOINT,
        model_id: str = "perspective",
        session: requests.Session | None = None,
        retries: int = DEFAULT_RETRIES,
        backoff_base: float = 1.0,
        timeout: float = 30.0,
    ):
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR)
        if not key:
            raise ScoringError(
                f"remote backend needs an API key: set {API_KEY_ENV_VAR} or pass api_key"
            )
        self.api_key = key
        self.endpoint = endpoint
        self.model_id = model_id
        self.session = session or requests.Session()
        self.retries = retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.calls = 0

    def score_text(self, text: str) -> float:
        payload = {
            "comment": {"text": text},
            "requestedAttributes": {"TOXICITY": {}},
            "doNotStore": True,
        }
        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.retries:
            attempts += 1
            self.calls += 1
            try:
                response = self.session.post(
                    self.endpoint,
                    params={"key": self.api_key},
                    json=payload,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    body = response.json()
                    try:
                        return float(
                            body["attributeScores"]["TOXICITY"]["summaryScore"]["value"]
                        )
                    except (KeyError, TypeError, ValueError) as exc:
                        raise BackendError(
                            f"malformed backend response: {exc}", attempts=attempts
                        ) from exc
                if response.status_code not in (429,) and response.status_code < 500:
                    raise BackendError(
                        f"backend rejected request: HTTP {response.status_code}",
                        attempts=attempts,
                    )
                last_error = ScoringError(f"HTTP {response.status_code}")
            if attempts <= self.retries:
                time.sleep(self.backoff_base * (2 ** (attempts - 1)))
        raise BackendError(f"backend unreachable: {last_error}", attempts=attempts)


# ---------------------------------------------------------------------------
# Scorer facade
# ---------------------------------------------------------------------------

class Scorer:
    """Cache-backed, optionally throttled scoring front end.

    Identical text always yields the identical score within a run: the first
    call stores the backend's answer, later calls are cache hits. Safe to
    share across threads; concurrent uncached calls serialize on the rate
    limiter.
    """

    def __init__(
        self,
        backend,
        cache: ScoreCache | None = None,
        rate_limiter: RateLimiter | None = None,
        max_text_len: int = DEFAULT_MAX_TEXT_LEN,
    ):
        self.backend = backend
        self.cache = cache if cache is not None else ScoreCache()
        self.rate_limiter = rate_limiter
        self.max_text_len = max_text_len

    @property
    def model_id(self) -> str:
        return self.backend.model_id

    def _check_text(self, text: str, index: int | None = None) -> None:
        if not text:
            raise TextLengthError("text is empty", index=index)
        if len(text) > self.max_text_len:
            raise TextLengthError(
                f"text of {len(text)} chars exceeds limit {self.max_text_len}",
                index=index,
            )

    def _score_checked(self, text: str, index: int | None, limiter: RateLimiter | None) -> ToxicityScore:
        digest = text_digest(text)
        cached = self.cache.get(digest, self.model_id)
        if cached is not None:
            return ToxicityScore(value=cached, model_id=self.model_id, text_hash=digest)
        if limiter is not None:
            limiter.acquire()
        try:
            value = self.backend.score_text(text)
        except BackendError as exc:
            if index is not None and exc.index is None:
                raise BackendError(str(exc), attempts=exc.attempts, index=index) from exc
            raise
        if not 0.0 <= value <= 1.0:
            raise BackendError(
                f"backend returned out-of-range score {value}", attempts=1, index=index
            )
        self.cache.put(digest, self.model_id, value)
        return ToxicityScore(value=value, model_id=self.model_id, text_hash=digest)

    def score(self, text: str) -> ToxicityScore:
        self._check_text(text)
        return self._score_checked(text, None, self.rate_limiter)

    def score_batch(
        self, texts: Sequence[str], qps_limit: float | None = None
    ) -> list[ToxicityScore]:
        """Score texts in order; all succeed or the error names the failing index.

        Length limits are validated up front so no backend call happens for a
        batch that cannot complete. ``qps_limit`` overrides the instance rate
        limiter for this batch's uncached items.
        """
        for i, text in enumerate(texts):
            self._check_text(text, index=i)
        limiter = RateLimiter(qps_limit) if qps_limit is not None else self.rate_limiter
        return [self._score_checked(text, i, limiter) for i, text in enumerate(texts)]


def make_mock_scorer(
    lexicon: MockLexicon, cache_path: str | Path | None = None
) -> Scorer:
    return Scorer(MockBackend(lexicon), cache=ScoreCache(cache_path))


def make_remote_scorer(
    cache_path: str | Path | None = None,
    qps: float = DEFAULT_QPS,
    **backend_kwargs,
) -> Scorer:
    return Scorer(
        RemoteBackend(**backend_kwargs),
        cache=ScoreCache(cache_path),
        rate_limiter=RateLimiter(qps),
    )
