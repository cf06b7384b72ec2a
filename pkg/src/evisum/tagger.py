"""Per-study metadata extraction: tagged spans, sample size, risk of bias.

Span and risk-of-bias scoring are pluggable providers. The bundled
defaults are deterministic cue-lexicon rules; a remote HTTP provider
speaking {study_id, title, abstract} -> {spans: [{kind, start, end,
score}]} can stand in for trained models.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Protocol

import httpx

from .corpus import StudyDocument
from .textproc import split_sentences

SPAN_KINDS = ("population", "intervention", "outcome", "punchline")


class ProviderError(RuntimeError):
    """A span or RoB provider failed or returned garbage."""


@dataclass(frozen=True)
class TaggedSpan:
    kind: str
    start: int
    end: int
    score: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in SPAN_KINDS:
            raise ValueError(f"unknown span kind {self.kind!r}")
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad span [{self.start}, {self.end})")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"span score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class TagSet:
    study_id: str
    spans: tuple[TaggedSpan, ...]


class SpanProvider(Protocol):
    def __call__(self, doc: StudyDocument) -> list[TaggedSpan]: ...


RobProvider = Callable[[StudyDocument], float]


def _load_lexicon(kind: str) -> list[str]:
    path = resources.files("evisum.data.lexicon").joinpath(f"{kind}.txt")
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return entries


class LexiconSpanProvider:
    """Rule-based tagging from bundled cue lexicons.

    Population/intervention/outcome spans cover the matched phrase;
    punchline spans cover the whole sentence containing a cue. All
    spans carry score 1.0.
    """

    def __init__(self) -> None:
        self._phrase_patterns = {
            kind: self._compile(_load_lexicon(kind))
            for kind in ("population", "intervention", "outcome")
        }
        self._punchline_pattern = self._compile(_load_lexicon("punchline"))

    @staticmethod
    def _compile(entries: list[str]) -> re.Pattern[str] | None:
        if not entries:
            return None
        alts = sorted((re.escape(e) for e in entries), key=len, reverse=True)
        return re.compile(r"\b(?:" + "|".join(alts) + r")\b", re.IGNORECASE)

    def __call__(self, doc: StudyDocument) -> list[TaggedSpan]:
        text = doc.abstract
        spans: list[TaggedSpan] = []
        for kind, pattern in self._phrase_patterns.items():
            if pattern is None:
                continue
            for m in pattern.finditer(text):
                spans.append(TaggedSpan(kind, m.start(), m.end(), 1.0))
        if self._punchline_pattern is not None:
            for sent in split_sentences(text):
                if self._punchline_pattern.search(sent.text):
                    spans.append(TaggedSpan("punchline", sent.start, sent.end, 1.0))
        return spans


class RemoteSpanProvider:
    """HTTP client for an external tagging service (POST /tag)."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 10.0,
        retries: int = 0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def __call__(self, doc: StudyDocument) -> list[TaggedSpan]:
        payload = {"study_id": doc.study_id, "title": doc.title, "abstract": doc.abstract}
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._client.post(self.base_url + "/tag", json=payload)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                raise ProviderError(f"tag service returned HTTP {resp.status_code}")
            try:
                raw = resp.json()["spans"]
                return [
                    TaggedSpan(s["kind"], s["start"], s["end"], s.get("score", 1.0))
                    for s in raw
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise ProviderError(f"tag service response malformed: {exc}") from exc
        raise ProviderError(f"tag service unreachable: {last_exc}")


def _merge_same_kind(spans: list[TaggedSpan]) -> list[TaggedSpan]:
    """Union overlapping or touching spans of one kind, keeping the max score."""
    merged: list[TaggedSpan] = []
    for span in sorted(spans, key=lambda s: (s.start, s.end)):
        if merged and span.start <= merged[-1].end:
            prev = merged[-1]
            merged[-1] = TaggedSpan(
                prev.kind, prev.start, max(prev.end, span.end), max(prev.score, span.score)
            )
        else:
            merged.append(span)
    return merged


def tag_spans(doc: StudyDocument, provider: SpanProvider | None = None) -> TagSet:
    """Run a span provider and normalize its output.

    Same-kind overlaps are merged; punchline spans are snapped outward to
    sentence boundaries. Provider failures propagate.
    """
    if not doc.abstract:
        raise ValueError(f"study {doc.study_id!r}: abstract empty")
    if provider is None:
        provider = default_span_provider()
    raw = provider(doc)
    for span in raw:
        if span.end > len(doc.abstract):
            raise ProviderError(
                f"study {doc.study_id!r}: span [{span.start}, {span.end}) "
                f"exceeds abstract length {len(doc.abstract)}"
            )
    sentences = split_sentences(doc.abstract)
    by_kind: dict[str, list[TaggedSpan]] = {k: [] for k in SPAN_KINDS}
    for span in raw:
        if span.kind == "punchline":
            start, end = span.start, span.end
            for sent in sentences:
                if sent.start < end and start < sent.end:
                    start = min(start, sent.start)
                    end = max(end, sent.end)
            span = TaggedSpan("punchline", start, end, span.score)
        by_kind[span.kind].append(span)
    normalized: list[TaggedSpan] = []
    for kind in SPAN_KINDS:
        normalized.extend(_merge_same_kind(by_kind[kind]))
    normalized.sort(key=lambda s: (s.start, s.end, SPAN_KINDS.index(s.kind)))
    return TagSet(study_id=doc.study_id, spans=tuple(normalized))


_SAMPLE_SIZE_PATTERNS = [
    re.compile(r"\brandomi[sz]ed\s+(\d+)\b", re.IGNORECASE),
    re.compile(r"\bn\s*=\s*(\d+)\b", re.IGNORECASE),
    re.compile(
        r"\b(\d+)\s+(?:patients|participants)\s+were\s+(?:enrolled|randomi[sz]ed)\b",
        re.IGNORECASE,
    ),
]


def extract_sample_size(doc: StudyDocument) -> int | None:
    """Explicit sample_size field wins; otherwise try the pattern rules in
    order. Never returns zero or negative values."""
    if doc.sample_size is not None:
        return doc.sample_size
    text = f"{doc.title} {doc.abstract}"
    for pattern in _SAMPLE_SIZE_PATTERNS:
        for m in pattern.finditer(text):
            value = int(m.group(1))
            if value > 0:
                return value
    return None


_ROB_CUES = [
    "double-blind",
    "double blind",
    "allocation concealment",
    "placebo-controlled",
    "intention-to-treat",
    "randomised",
    "randomized",
]


def heuristic_rob_provider(doc: StudyDocument) -> float:
    """Crude low-risk-of-bias probability from methodological cue words."""
    text = f"{doc.title} {doc.abstract}".lower()
    hits = sum(1 for cue in _ROB_CUES if cue in text)
    return min(0.2 + 0.15 * hits, 0.95)


def score_rob(doc: StudyDocument, provider: RobProvider | None = None) -> float:
    """Probability the study is at overall low risk of bias.

    Explicit rob_low_prob wins, then the provider, then 0.5.
    """
    if doc.rob_low_prob is not None:
        return doc.rob_low_prob
    if provider is not None:
        score = provider(doc)
        if not 0.0 <= score <= 1.0:
            raise ProviderError(f"RoB provider returned {score}, outside [0, 1]")
        return score
    return 0.5


def punchline_cue_count(text: str) -> int:
    """Number of punchline lexicon hits in a piece of text."""
    pattern = default_span_provider()._punchline_pattern
    if pattern is None:
        return 0
    return sum(1 for _ in pattern.finditer(text))


_default_provider: LexiconSpanProvider | None = None


def default_span_provider() -> LexiconSpanProvider:
    global _default_provider
    if _default_provider is None:
        _default_provider = LexiconSpanProvider()
    return _default_provider


def tag_set_to_dict(tags: TagSet) -> dict:
    return {
        "study_id": tags.study_id,
        "spans": [
            {"kind": s.kind, "start": s.start, "end": s.end, "score": s.score}
            for s in tags.spans
        ],
    }


def tag_set_from_dict(d: dict) -> TagSet:
    return TagSet(
        study_id=d["study_id"],
        spans=tuple(
            TaggedSpan(s["kind"], s["start"], s["end"], s.get("score", 1.0))
            for s in d["spans"]
        ),
    )
