"""Likelihood scoring of an answer given question + retained rationale.

Two backends sit behind one handle interface:

* tabular -- an order-1 bigram model with additive smoothing over a
  declared vocabulary and whitespace tokenization. Small enough to check
  against brute-force oracles, yet context-sensitive: removing the unit
  that precedes the answer changes the answer's conditional.
* remote -- POST /v1/score against an inference server:
  request  {"model": str, "prompt": str, "completion": str}
  response {"token_logprobs": [float, ...], "total_logprob": float}
  429 and 5xx responses and transport faults retry with exponential
  backoff; other statuses fail immediately. All values are natural-log.

Everything stays in log space; probabilities are never materialized.
Scores are deterministic for a fixed model_version, which increases on
every refit/refresh, so the cache never serves stale values.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import requests

from .corpus import Corpus, RationaleRecord
from .errors import (
    BatchScoreError,
    ConfigurationError,
    OutOfVocabularyError,
    ProtocolError,
    ScorerError,
    TransportError,
    UnsupportedSchemeError,
)

ENV_SCORER_URL = "VARR_SCORER_URL"
ENV_SCORER_TIMEOUT_MS = "VARR_SCORER_TIMEOUT_MS"
DEFAULT_TIMEOUT_MS = 10_000
RETRYABLE_STATUSES = frozenset({429}) | frozenset(range(500, 600))


@dataclass(frozen=True)
class LogLikelihood:
    """Natural-log likelihood of an answer, total plus per-token terms."""

    total: float
    per_token: tuple[float, ...]

    def __post_init__(self):
        for value in self.per_token:
            if not math.isfinite(value):
                raise ScorerError("non-finite per-token log-likelihood")
            if value > 0.0:
                raise ScorerError(f"positive log-likelihood term: {value!r}")
        checksum = sum(self.per_token)
        if abs(self.total - checksum) > 1e-12 * max(1.0, abs(self.total)):
            raise ScorerError(
                f"total {self.total!r} disagrees with per-token sum {checksum!r}"
            )

    @classmethod
    def from_per_token(cls, values: Iterable[float]) -> "LogLikelihood":
        values = tuple(float(v) for v in values)
        return cls(total=float(sum(values)), per_token=values)


# --- prompt assembly -------------------------------------------------------

@dataclass(frozen=True)
class PromptTemplate:
    """Joining rule for question + retained units. Separators only."""

    template_id: str
    question_separator: str = " "
    unit_separator: str = " "


TEMPLATES: dict[str, PromptTemplate] = {
    "plain-v1": PromptTemplate("plain-v1", " ", " "),
    "newline-v1": PromptTemplate("newline-v1", "\n", "\n"),
}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise ConfigurationError(f"unknown template_id {template_id!r}") from None


@dataclass(frozen=True)
class PromptAssembly:
    question: str
    retained_rationale: tuple[str, ...]
    template_id: str = "plain-v1"

    def render(self) -> str:
        template = get_template(self.template_id)
        if not self.retained_rationale:
            return self.question
        return (
            self.question
            + template.question_separator
            + template.unit_separator.join(self.retained_rationale)
        )


def assemble_prompt(
    record: RationaleRecord,
    retained: Iterable[int],
    template_id: str = "plain-v1",
) -> PromptAssembly:
    """Question first, then the retained units in their original order."""
    get_template(template_id)
    retained = sorted(set(retained))
    known = {u.index for u in record.rationale}
    unknown = [i for i in retained if i not in known]
    if unknown:
        raise ValueError(f"retained indices {unknown} not in record {record.id}")
    return PromptAssembly(
        question=record.question,
        retained_rationale=tuple(record.unit_texts(retained)),
        template_id=template_id,
    )


# --- score cache -----------------------------------------------------------

def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def make_cache_key(model_version: int, prompt: str, answer: str) -> tuple[int, str, str]:
    return (model_version, _digest(prompt), _digest(answer))


class ScoreCache:
    """Concurrent map from (model_version, prompt digest, answer digest).

    Values are deterministic per version, so last-writer-wins races on
    identical keys are benign. Entries from older versions are purged on
    refresh and can never hit anyway (the version is part of the key).
    """

    def __init__(self):
        self._entries: dict[tuple[int, str, str], LogLikelihood] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def lookup(self, key: tuple[int, str, str]) -> LogLikelihood | None:
        with self._lock:
            value = self._entries.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def store(self, key: tuple[int, str, str], value: LogLikelihood) -> None:
        with self._lock:
            self._entries[key] = value

    def purge_versions_below(self, version: int) -> None:
        with self._lock:
            self._entries = {k: v for k, v in self._entries.items() if k[0] >= version}

    def __len__(self) -> int:
        return len(self._entries)


def cache_lookup(cache: ScoreCache, key: tuple[int, str, str]) -> LogLikelihood | None:
    return cache.lookup(key)


# --- tabular backend -------------------------------------------------------

class TabularModel:
    """Additively smoothed bigram counts over a declared vocabulary.

    p(w | v) = (count(v, w) + alpha) / (sum_w count(v, w) + alpha * V)
    """

    def __init__(self, vocabulary: Sequence[str], smoothing_alpha: float = 1.0):
        if not vocabulary:
            raise ValueError("vocabulary must be non-empty")
        if len(set(vocabulary)) != len(vocabulary):
            raise ValueError("vocabulary contains duplicates")
        if smoothing_alpha <= 0:
            raise ValueError("smoothing_alpha must be positive")
        self.vocabulary = tuple(vocabulary)
        self.smoothing_alpha = float(smoothing_alpha)
        self._index = {symbol: i for i, symbol in enumerate(self.vocabulary)}
        self.counts = np.zeros((len(vocabulary), len(vocabulary)), dtype=np.int64)
        self._row_sums = np.zeros(len(vocabulary), dtype=np.int64)

    @classmethod
    def from_counts(
        cls,
        vocabulary: Sequence[str],
        counts,
        smoothing_alpha: float = 1.0,
    ) -> "TabularModel":
        model = cls(vocabulary, smoothing_alpha)
        matrix = np.asarray(counts, dtype=np.int64)
        if matrix.shape != model.counts.shape:
            raise ValueError(f"counts must be {model.counts.shape}, got {matrix.shape}")
        if (matrix < 0).any():
            raise ValueError("counts must be nonnegative")
        model.counts = matrix
        model._row_sums = matrix.sum(axis=1)
        return model

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def symbol_index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise OutOfVocabularyError(symbol) from None

    def log_conditional(self, prev: str, nxt: str) -> float:
        v = self.symbol_index(prev)
        w = self.symbol_index(nxt)
        alpha = self.smoothing_alpha
        numer = int(self.counts[v, w]) + alpha
        denom = int(self._row_sums[v]) + alpha * self.vocab_size
        return math.log(numer / denom)

    def fit_streams(self, streams: Iterable[Sequence[str]]) -> None:
        """Rebuild counts from scratch over the given token streams."""
        counts = np.zeros_like(self.counts)
        for stream in streams:
            indices = [self.symbol_index(tok) for tok in stream]
            for v, w in zip(indices, indices[1:]):
                counts[v, w] += 1
        self.counts = counts
        self._row_sums = counts.sum(axis=1)


class ScorerHandle:
    """Abstract likelihood oracle. Subclasses define one backend each."""

    backend = "abstract"
    exposes_tokenizer = False

    def __init__(self):
        self.model_version = 1
        self.calls = 0
        self._calls_lock = threading.Lock()

    def _count_call(self) -> None:
        with self._calls_lock:
            self.calls += 1

    def tokenize(self, text: str) -> list[str]:
        raise UnsupportedSchemeError(f"{self.backend} backend exposes no tokenizer")

    def score_answer(self, assembly: PromptAssembly, answer: str) -> LogLikelihood:
        raise NotImplementedError

    def refresh(self, corpus_view=None) -> None:
        """Epoch-boundary hook; must bump model_version."""
        raise NotImplementedError


class TabularScorer(ScorerHandle):
    backend = "tabular"
    exposes_tokenizer = True

    def __init__(self, model: TabularModel, cache_enabled: bool = True):
        super().__init__()
        self.model = model
        self.cache = ScoreCache() if cache_enabled else None

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def score_answer(self, assembly: PromptAssembly, answer: str) -> LogLikelihood:
        self._count_call()
        if not answer.strip():
            raise ScorerError("answer must be non-empty")
        prompt = assembly.render()
        key = make_cache_key(self.model_version, prompt, answer)
        if self.cache is not None:
            cached = self.cache.lookup(key)
            if cached is not None:
                return cached
        context = self.tokenize(prompt)
        if not context:
            raise ScorerError("assembled context is empty; cannot condition")
        answer_tokens = self.tokenize(answer)
        per_token = []
        prev = context[-1]
        for token in answer_tokens:
            per_token.append(self.model.log_conditional(prev, token))
            prev = token
        result = LogLikelihood.from_per_token(per_token)
        if self.cache is not None:
            self.cache.store(key, result)
        return result

    def refresh(self, corpus_view=None) -> None:
        if corpus_view is None:
            raise ScorerError("tabular refresh needs a corpus view to refit on")
        refit_tabular(self, corpus_view)


def refit_tabular(scorer: TabularScorer, corpus_view: Sequence) -> TabularModel:
    """Full reinitialization: recount bigrams over the view's streams.

    The view is a sequence of (context, answer) pairs, each side either a
    string or pre-split tokens. Bumps model_version and invalidates cache
    entries from older versions.
    """
    if not corpus_view:
        raise ValueError("corpus_view must be non-empty")
    streams = []
    for context, answer in corpus_view:
        context_tokens = context.split() if isinstance(context, str) else list(context)
        answer_tokens = answer.split() if isinstance(answer, str) else list(answer)
        streams.append(context_tokens + answer_tokens)
    scorer.model.fit_streams(streams)
    scorer.model_version += 1
    if scorer.cache is not None:
        scorer.cache.purge_versions_below(scorer.model_version)
    return scorer.model


class RemoteScorer(ScorerHandle):
    backend = "remote"
    exposes_tokenizer = False

    def __init__(
        self,
        base_url: str | None = None,
        model: str = "default",
        timeout_ms: int | None = None,
        max_attempts: int = 3,
        backoff_seconds: float = 0.1,
        in_flight: int = 4,
        refresh_callback=None,
        session: requests.Session | None = None,
    ):
        super().__init__()
        base_url = base_url or os.environ.get(ENV_SCORER_URL)
        if not base_url:
            raise ConfigurationError(
                f"remote scorer needs a base URL (flag, config, or {ENV_SCORER_URL})"
            )
        if timeout_ms is None:
            timeout_ms = int(os.environ.get(ENV_SCORER_TIMEOUT_MS, DEFAULT_TIMEOUT_MS))
        if max_attempts < 1:
            raise ConfigurationError("max_attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout_seconds = timeout_ms / 1000.0
        self.max_attempts = max_attempts
        self.backoff_seconds = backoff_seconds
        self.in_flight = max(1, in_flight)
        self._refresh_callback = refresh_callback
        self._session = session or requests.Session()

    def score_answer(self, assembly: PromptAssembly, answer: str) -> LogLikelihood:
        self._count_call()
        if not answer.strip():
            raise ScorerError("answer must be non-empty")
        payload = {
            "model": self.model,
            "prompt": assembly.render(),
            "completion": answer,
        }
        url = self.base_url + "/v1/score"
        attempts = 0
        failure = "no attempt made"
        while attempts < self.max_attempts:
            attempts += 1
            try:
                response = self._session.post(
                    url, json=payload, timeout=self.timeout_seconds
                )
            except requests.RequestException as exc:
                failure = f"transport failure: {exc}"
            else:
                if response.status_code == 200:
                    return self._parse_response(response)
                if response.status_code not in RETRYABLE_STATUSES:
                    raise ProtocolError(
                        f"scorer endpoint returned status {response.status_code}"
                    )
                failure = f"retryable status {response.status_code}"
            if attempts < self.max_attempts:
                time.sleep(self.backoff_seconds * (2 ** (attempts - 1)))
        raise TransportError(failure, attempts=attempts)

    def _parse_response(self, response: requests.Response) -> LogLikelihood:
        try:
            body = response.json()
            per_token = tuple(float(v) for v in body["token_logprobs"])
            total = float(body["total_logprob"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed scorer response: {exc}") from exc
        try:
            return LogLikelihood(total=total, per_token=per_token)
        except ScorerError as exc:
            raise ProtocolError(f"inconsistent scorer response: {exc}") from exc

    def refresh(self, corpus_view=None) -> None:
        if self._refresh_callback is not None:
            self._refresh_callback(corpus_view)
        self.model_version += 1


def batch_score(
    handle: ScorerHandle,
    requests_list: Sequence[tuple[PromptAssembly, str]],
) -> list[LogLikelihood]:
    """Score a list of (assembly, answer) pairs, order preserved.

    The remote backend runs requests concurrently up to its in-flight
    bound; any single failure fails the whole batch, naming the index.
    """
    if not requests_list:
        raise ValueError("batch must be non-empty")
    workers = handle.in_flight if isinstance(handle, RemoteScorer) else 1

    def one(indexed):
        i, (assembly, answer) = indexed
        try:
            return handle.score_answer(assembly, answer)
        except Exception as exc:
            raise BatchScoreError(i, exc) from exc

    if workers <= 1 or len(requests_list) == 1:
        return [one(item) for item in enumerate(requests_list)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, enumerate(requests_list)))


# --- corpus-backed construction -------------------------------------------

def build_vocabulary(corpus: Corpus, extra_tokens: Iterable[str] = ()) -> tuple[str, ...]:
    """Sorted union of whitespace tokens over every text field."""
    symbols: set[str] = set(extra_tokens)
    for record in corpus.records:
        symbols.update(record.question.split())
        symbols.update(record.answer.split())
        for unit in record.rationale:
            symbols.update(unit.text.split())
        for wrong in record.wrong_answers:
            symbols.update(wrong.split())
    if not symbols:
        raise ValueError("corpus yields an empty vocabulary")
    return tuple(sorted(symbols))


def corpus_view(corpus: Corpus, template_id: str = "plain-v1") -> list[tuple[list[str], list[str]]]:
    """(context tokens, answer tokens) per record, using retained units."""
    view = []
    for record in corpus.records:
        assembly = assemble_prompt(record, record.retained_indices(), template_id)
        view.append((assembly.render().split(), record.answer.split()))
    return view


def fit_tabular_scorer(
    corpus: Corpus,
    smoothing_alpha: float = 1.0,
    template_id: str = "plain-v1",
    cache_enabled: bool = True,
) -> TabularScorer:
    """Build a tabular scorer fitted on the corpus as currently retained."""
    model = TabularModel(build_vocabulary(corpus), smoothing_alpha)
    scorer = TabularScorer(model, cache_enabled=cache_enabled)
    model.fit_streams(
        [context + answer for context, answer in corpus_view(corpus, template_id)]
    )
    return scorer


def uniform_tabular_scorer(
    vocabulary: Sequence[str],
    smoothing_alpha: float = 1.0,
    cache_enabled: bool = True,
) -> TabularScorer:
    """Untrained model: every conditional is exactly -ln(V)."""
    return TabularScorer(TabularModel(vocabulary, smoothing_alpha), cache_enabled)
