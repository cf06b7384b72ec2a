"""Construct encoder inputs: structural markers, budgeted round-robin
sentence selection, optional span decoration, optional evidence ordering.

Budget accounting counts structural markers as single vocabulary items;
title and sentence costs come from the (replaceable) tokenizer. Decoration
tags are added after assembly and never consume budget.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .corpus import Review, StudyDocument
from .tagger import TagSet, TaggedSpan, score_rob, extract_sample_size, RobProvider
from .textproc import Token, split_sentences, tokenize

DOC_MARKER = "<S>"
TITLE_MARKER = "<T>"
ABSTRACT_MARKER = "<ABS>"

DECORATION_TAGS = {
    "punchline": ("<pl>", "</pl>"),
    "population": ("<pop>", "</pop>"),
    "intervention": ("<inter>", "</inter>"),
    "outcome": ("<out>", "</out>"),
}
# Nesting priority when spans coincide: punchline wraps outermost.
_KIND_PRIORITY = {"punchline": 0, "population": 1, "intervention": 2, "outcome": 3}

_TAG_PATTERN = re.compile(r"</?(?:pl|pop|inter|out)>|<(?:S|T|ABS)>")

Tokenizer = Callable[[str], list[Token]]

# Spans below this confidence are not decorated.
DEFAULT_SCORE_THRESHOLD = 0.5


class BudgetError(ValueError):
    """Token budget cannot fit the mandatory titles and markers."""


class DecorationError(ValueError):
    """Malformed decoration: bad offsets or unbalanced tags."""


@dataclass(frozen=True)
class BuildConfig:
    token_budget: int = 1024
    seed: int = 0
    decorate: bool = False
    sort_by_evidence: bool = False

    def __post_init__(self) -> None:
        if self.token_budget < 4:
            raise ValueError("token_budget below the overhead of a single document")


@dataclass(frozen=True)
class EncoderInput:
    review_id: str
    text: str
    included: tuple[tuple[str, tuple[int, ...]], ...]
    token_count: int


def sort_key(doc: StudyDocument, rob_provider: RobProvider | None = None) -> float:
    """Evidence weight: sample size (default 1 when absent) times the
    low-risk-of-bias probability."""
    n = extract_sample_size(doc)
    return float(n if n is not None else 1) * score_rob(doc, rob_provider)


@dataclass
class _DocState:
    doc: StudyDocument
    sentences: list
    token_runs: list[list[Token]]
    front: int = 0
    take_front: bool = True

    def __post_init__(self) -> None:
        self.back = len(self.sentences) - 1

    def exhausted(self) -> bool:
        return self.front > self.back

    def next_index(self) -> int:
        return self.front if self.take_front else self.back

    def advance(self) -> None:
        if self.take_front:
            self.front += 1
        else:
            self.back -= 1
        self.take_front = not self.take_front


def assemble(
    review: Review,
    cfg: BuildConfig,
    tags: dict[str, TagSet] | None = None,
    *,
    tokenizer: Tokenizer = tokenize,
    rob_provider: RobProvider | None = None,
    score_threshold: float = DEFAULT_SCORE_THRESHOLD,
) -> EncoderInput:
    """Build the budgeted encoder input for one review.

    Phase 1 emits `<S> <T> {title} <ABS>` for every document. Phase 2
    cycles over documents (evidence-sorted order when enabled, else a
    seeded shuffle), taking one sentence per visit while alternating each
    document's front and back cursors, until the budget is exhausted. The
    first sentence that does not fit is truncated token-wise to spend the
    budget exactly, and assembly stops there. Committed sentences are laid
    out in their original within-document order.
    """
    docs = list(review.studies)
    if cfg.sort_by_evidence:
        docs.sort(key=lambda d: -sort_key(d, rob_provider))
    states = []
    for d in docs:
        sents = split_sentences(d.abstract)
        states.append(
            _DocState(doc=d, sentences=sents, token_runs=[tokenizer(s.text) for s in sents])
        )
    header_cost = sum(3 + len(tokenizer(d.title)) for d in docs)
    if header_cost > cfg.token_budget:
        raise BudgetError(
            f"review {review.review_id!r}: titles and markers need {header_cost} "
            f"tokens, budget is {cfg.token_budget}"
        )
    remaining = cfg.token_budget - header_cost

    if cfg.sort_by_evidence:
        visiting = list(range(len(states)))
    else:
        visiting = list(range(len(states)))
        random.Random(f"{cfg.seed}:{review.review_id}").shuffle(visiting)

    committed: dict[int, set[int]] = {i: set() for i in range(len(states))}
    fragment: tuple[int, int, int] | None = None  # (doc pos, sentence idx, n tokens)
    active = True
    while active:
        active = False
        for pos in visiting:
            state = states[pos]
            if state.exhausted():
                continue
            active = True
            idx = state.next_index()
            cost = len(state.token_runs[idx])
            if cost <= remaining:
                committed[pos].add(idx)
                remaining -= cost
                state.advance()
            else:
                if remaining > 0:
                    fragment = (pos, idx, remaining)
                    remaining = 0
                active = False
                break
        if fragment is not None:
            break

    parts: list[str] = []
    segments: list[tuple[str, int, int, int]] = []  # study_id, abs range, out start
    out_len = 0

    def emit(piece: str) -> None:
        nonlocal out_len
        if parts:
            out_len += 1  # joining space
        parts.append(piece)
        out_len += len(piece)

    token_count = header_cost
    included: list[tuple[str, tuple[int, ...]]] = []
    for pos, state in enumerate(states):
        emit(DOC_MARKER)
        emit(TITLE_MARKER)
        if state.doc.title:
            emit(state.doc.title)
        emit(ABSTRACT_MARKER)
        indices = sorted(committed[pos])
        frag_here = fragment if fragment is not None and fragment[0] == pos else None
        layout = sorted(indices + [frag_here[1]]) if frag_here else indices
        for idx in layout:
            sent = state.sentences[idx]
            if frag_here is not None and idx == frag_here[1]:
                run = state.token_runs[idx]
                cut = run[frag_here[2] - 1].end
                piece = sent.text[:cut]
                token_count += frag_here[2]
            else:
                piece = sent.text
                token_count += len(state.token_runs[idx])
            start = out_len + (1 if parts else 0)
            emit(piece)
            segments.append((state.doc.study_id, sent.start, sent.start + len(piece), start))
        if indices:
            included.append((state.doc.study_id, tuple(indices)))

    text = " ".join(parts)
    if cfg.decorate and tags:
        spans = _remap_spans(tags, segments, score_threshold)
        text = decorate(text, spans)
    return EncoderInput(
        review_id=review.review_id,
        text=text,
        included=tuple(included),
        token_count=token_count,
    )


def _remap_spans(
    tags: dict[str, TagSet],
    segments: list[tuple[str, int, int, int]],
    score_threshold: float = DEFAULT_SCORE_THRESHOLD,
) -> list[TaggedSpan]:
    """Project abstract-coordinate spans onto the assembled text, clipping
    to the committed portions. Low-confidence spans are dropped."""
    out: list[TaggedSpan] = []
    for study_id, abs_start, abs_end, out_start in segments:
        tag_set = tags.get(study_id)
        if tag_set is None:
            continue
        for span in tag_set.spans:
            if span.score < score_threshold:
                continue
            lo = max(span.start, abs_start)
            hi = min(span.end, abs_end)
            if lo < hi:
                out.append(
                    TaggedSpan(
                        span.kind,
                        out_start + (lo - abs_start),
                        out_start + (hi - abs_start),
                        span.score,
                    )
                )
    return out


def decorate(text: str, spans: Iterable[TaggedSpan]) -> str:
    """Wrap spans in their decoration tags.

    Span offsets index into `text`. Same-kind spans must not overlap
    (tagger normalization guarantees this); cross-kind spans may nest.
    """
    span_list = sorted(spans, key=lambda s: (s.start, -s.end, _KIND_PRIORITY[s.kind]))
    by_kind: dict[str, int] = {}
    for span in span_list:
        if span.end > len(text):
            raise DecorationError(f"span [{span.start}, {span.end}) exceeds text length")
        if span.kind in by_kind and span.start < by_kind[span.kind]:
            raise DecorationError(f"overlapping {span.kind} spans")
        by_kind[span.kind] = span.end

    opens: dict[int, list[TaggedSpan]] = {}
    closes: dict[int, list[TaggedSpan]] = {}
    for span in span_list:
        opens.setdefault(span.start, []).append(span)
        closes.setdefault(span.end, []).append(span)
    for pos in opens:
        opens[pos].sort(key=lambda s: (-s.end, _KIND_PRIORITY[s.kind]))
    for pos in closes:
        closes[pos].sort(key=lambda s: (-s.start, -_KIND_PRIORITY[s.kind]))

    out: list[str] = []
    for pos in range(len(text) + 1):
        for span in closes.get(pos, ()):
            out.append(" " + DECORATION_TAGS[span.kind][1])
        for span in opens.get(pos, ()):
            out.append(DECORATION_TAGS[span.kind][0] + " ")
        if pos < len(text):
            out.append(text[pos])
    return "".join(out)


def strip_decoration(text: str) -> str:
    """Remove decoration and structural markers, undoing the whitespace
    they introduced. Unbalanced decoration tags are an error."""
    stacks: dict[str, int] = {}
    for m in _TAG_PATTERN.finditer(text):
        tag = m.group()
        if tag in (DOC_MARKER, TITLE_MARKER, ABSTRACT_MARKER):
            continue
        name = tag.strip("</>")
        if tag.startswith("</"):
            if stacks.get(name, 0) == 0:
                raise DecorationError(f"unopened closing tag {tag}")
            stacks[name] -= 1
        else:
            stacks[name] = stacks.get(name, 0) + 1
    unclosed = [k for k, v in stacks.items() if v]
    if unclosed:
        raise DecorationError(f"unclosed tags: {', '.join(sorted(unclosed))}")

    out: list[str] = []
    pos = 0
    for m in _TAG_PATTERN.finditer(text):
        out.append(text[pos : m.start()])
        pos = m.end()
        if m.group().startswith("</"):
            if out and out[-1].endswith(" "):
                out[-1] = out[-1][:-1]
            elif pos < len(text) and text[pos] == " ":
                pos += 1
        else:
            if pos < len(text) and text[pos] == " ":
                pos += 1
            elif out and out[-1].endswith(" "):
                out[-1] = out[-1][:-1]
    out.append(text[pos:])
    return "".join(out)


def input_to_dict(enc: EncoderInput) -> dict:
    return {
        "review_id": enc.review_id,
        "text": enc.text,
        "token_count": enc.token_count,
        "included": [[sid, list(idxs)] for sid, idxs in enc.included],
    }


def input_from_dict(d: dict) -> EncoderInput:
    return EncoderInput(
        review_id=d["review_id"],
        text=d["text"],
        included=tuple((sid, tuple(idxs)) for sid, idxs in d["included"]),
        token_count=d["token_count"],
    )
