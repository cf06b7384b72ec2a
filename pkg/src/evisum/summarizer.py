"""Summary generation boundary: a remote HTTP backend that forwards
decoding parameters to a model server, and a deterministic extractive
baseline so the whole pipeline runs hermetically.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import httpx

from .corpus import Review
from .input_builder import (
    ABSTRACT_MARKER,
    DOC_MARKER,
    BuildConfig,
    EncoderInput,
    assemble,
    strip_decoration,
)
from .tagger import TagSet, punchline_cue_count, tag_spans
from .textproc import split_sentences, tokenize


class BackendError(RuntimeError):
    """Base class for generation failures."""


class BackendUnreachableError(BackendError):
    pass


class BackendStatusError(BackendError):
    pass


class BackendPayloadError(BackendError):
    pass


class EmptySummaryError(BackendError):
    pass


@dataclass(frozen=True)
class DecodingParams:
    beam_size: int = 4
    min_length: int = 65
    no_repeat_ngram: int = 3
    max_length: int = 200

    def __post_init__(self) -> None:
        if min(self.beam_size, self.min_length, self.no_repeat_ngram, self.max_length) <= 0:
            raise ValueError("decoding parameters must be positive")
        if self.min_length >= self.max_length:
            raise ValueError("min_length must be below max_length")

    def to_dict(self) -> dict:
        return {
            "beam_size": self.beam_size,
            "min_length": self.min_length,
            "no_repeat_ngram": self.no_repeat_ngram,
            "max_length": self.max_length,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecodingParams":
        return cls(
            beam_size=d["beam_size"],
            min_length=d["min_length"],
            no_repeat_ngram=d["no_repeat_ngram"],
            max_length=d["max_length"],
        )


@dataclass(frozen=True)
class GeneratedSummary:
    review_id: str
    system_id: str
    text: str
    backend_meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("summary text is empty")


class SummarizerBackend(Protocol):
    def summarize(self, text: str, params: DecodingParams) -> str: ...


class BaselineBackend:
    """Extractive stand-in: the top three punchline-cue sentences, kept in
    document order, truncated to max_length tokens.

    With cue scoring off every sentence ties at zero and the lead
    sentences win, giving a second, weaker reference system.
    """

    def __init__(self, cue_scoring: bool = True) -> None:
        self.cue_scoring = cue_scoring

    def summarize(self, text: str, params: DecodingParams) -> str:
        candidates = []  # (score, doc idx, sentence idx, text)
        for doc_idx, body in enumerate(_document_bodies(text)):
            for sent in split_sentences(body):
                score = punchline_cue_count(sent.text) if self.cue_scoring else 0
                candidates.append((score, doc_idx, sent.index, sent.text))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        chosen = sorted(candidates[:3], key=lambda c: (c[1], c[2]))
        summary = " ".join(c[3] for c in chosen)
        return _truncate_tokens(summary, params.max_length)


def _document_bodies(text: str) -> list[str]:
    """Abstract text per document of an assembled encoder input. Plain
    unstructured text is treated as a single body."""
    chunks = text.split(DOC_MARKER)
    if len(chunks) == 1:
        return [strip_decoration(text).strip()]
    bodies = []
    for chunk in chunks[1:]:
        _, _, after = chunk.partition(ABSTRACT_MARKER)
        bodies.append(strip_decoration(after).strip())
    return bodies


def _truncate_tokens(text: str, max_tokens: int) -> str:
    toks = tokenize(text)
    if len(toks) <= max_tokens:
        return text
    return text[: toks[max_tokens - 1].end]


class RemoteBackend:
    """HTTP client for a generation service (POST /summarize)."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        retries: int = 0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def summarize(self, text: str, params: DecodingParams) -> str:
        payload = {"text": text, "params": params.to_dict()}
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._client.post(f"{self.base_url}/summarize", json=payload)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                raise BackendStatusError(
                    f"summarize service returned {resp.status_code}"
                )
            try:
                body = resp.json()
                summary = body["summary"]
            except (ValueError, KeyError, TypeError) as exc:
                raise BackendPayloadError(f"malformed summarize response: {exc}")
            if not isinstance(summary, str) or not summary:
                raise EmptySummaryError("summarize service returned an empty summary")
            return summary
        raise BackendUnreachableError(f"summarize service unreachable: {last_exc}")


@dataclass(frozen=True)
class SystemConfig:
    system_id: str
    build: BuildConfig
    backend: SummarizerBackend
    params: DecodingParams = DecodingParams()


@dataclass(frozen=True)
class CellFailure:
    system_id: str
    review_id: str
    error: str


def generate(
    enc: EncoderInput,
    backend: SummarizerBackend,
    params: DecodingParams,
    system_id: str = "system",
) -> GeneratedSummary:
    text = backend.summarize(enc.text, params)
    if not text:
        raise EmptySummaryError(f"empty summary for review {enc.review_id!r}")
    return GeneratedSummary(review_id=enc.review_id, system_id=system_id, text=text)


def run_systems(
    reviews: Sequence[Review],
    configs: Sequence[SystemConfig],
    *,
    jobs: int = 1,
) -> tuple[list[GeneratedSummary], list[CellFailure]]:
    """Run every system over every review. A failing cell is recorded and
    skipped; the rest of the grid still runs. Output order is (review,
    system), matching the input orders."""
    ids = [c.system_id for c in configs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate system_id in grid")

    tag_cache: dict[str, dict[str, TagSet]] = {}

    def tags_for(review: Review) -> dict[str, TagSet]:
        if review.review_id not in tag_cache:
            tag_cache[review.review_id] = {
                s.study_id: tag_spans(s) for s in review.studies
            }
        return tag_cache[review.review_id]

    def run_cell(review: Review, cfg: SystemConfig):
        tags = tags_for(review) if cfg.build.decorate else None
        enc = assemble(review, cfg.build, tags)
        return generate(enc, cfg.backend, cfg.params, system_id=cfg.system_id)

    cells = [(review, cfg) for review in reviews for cfg in configs]
    summaries: list[GeneratedSummary] = []
    failures: list[CellFailure] = []

    def attempt(cell):
        review, cfg = cell
        try:
            return run_cell(review, cfg)
        except Exception as exc:
            return CellFailure(cfg.system_id, review.review_id, str(exc))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(attempt, cells))
    else:
        results = [attempt(c) for c in cells]
    for res in results:
        if isinstance(res, CellFailure):
            failures.append(res)
        else:
            summaries.append(res)
    return summaries, failures


def summary_to_dict(s: GeneratedSummary) -> dict:
    return {"review_id": s.review_id, "system_id": s.system_id, "text": s.text}


def summary_from_dict(d: dict) -> GeneratedSummary:
    return GeneratedSummary(
        review_id=d["review_id"], system_id=d["system_id"], text=d["text"]
    )


def variant_grid(
    *,
    budget: int = 1024,
    seed: int = 0,
    params: DecodingParams | None = None,
) -> list[SystemConfig]:
    """The five-system comparison grid: a lead-sentence reference system,
    then the cue-scored baseline with decoration and evidence sorting
    toggled."""
    p = params or DecodingParams()
    lead = BaselineBackend(cue_scoring=False)
    cue = BaselineBackend(cue_scoring=True)

    def cfg(decorate: bool, sort: bool) -> BuildConfig:
        return BuildConfig(
            token_budget=budget, seed=seed, decorate=decorate, sort_by_evidence=sort
        )

    return [
        SystemConfig("base", cfg(False, False), lead, p),
        SystemConfig("domain", cfg(False, False), cue, p),
        SystemConfig("domain-decorate", cfg(True, False), cue, p),
        SystemConfig("domain-sort", cfg(False, True), cue, p),
        SystemConfig("domain-decorate-sort", cfg(True, True), cue, p),
    ]
