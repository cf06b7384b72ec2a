"""Blinded human-evaluation protocol: randomized slot order per
(review, annotator), two-page question flow, append-only journal, and an
unblinded admin export.

Annotators never see which system produced a summary. Each review's
summaries are shuffled into opaque slots by a permutation derived from
(global_seed, review_id, annotator_id), so the order is stable across
requests and independent across reviews and annotators.
"""
from __future__ import annotations

import json
import random
import secrets
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from .corpus import Review
from .summarizer import GeneratedSummary

SCALE_QUESTIONS = {
    "relevance": (1, 2, 3),
    "plausibility": (1, 2, 3, 4, 5),
    "factual_agreement": (1, 2, 3, 4, 5),
}
DIRECTION_CHOICES = ("benefit", "harm", "no_difference", "cannot_tell")

PAGE1_QUESTIONS = (
    {"question": "relevance", "scale": [1, 2, 3], "level": "slot"},
    {"question": "plausibility", "scale": [1, 2, 3, 4, 5], "level": "slot"},
)
PAGE2_QUESTIONS = (
    {"question": "reference_direction", "choices": list(DIRECTION_CHOICES), "level": "review"},
    {"question": "factual_agreement", "scale": [1, 2, 3, 4, 5], "level": "slot"},
)


class AnnotationError(Exception):
    def __init__(self, message: str, status: int = 400) -> None:
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class AnnotationConfig:
    global_seed: int
    annotators: tuple[str, ...]
    admin_token: str

    def __post_init__(self) -> None:
        if not self.annotators:
            raise ValueError("empty annotator roster")
        if not self.admin_token:
            raise ValueError("empty admin token")

    @classmethod
    def load(cls, path: str | Path) -> "AnnotationConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            global_seed=int(raw["global_seed"]),
            annotators=tuple(raw["annotators"]),
            admin_token=str(raw["admin_token"]),
        )

    def save(self, path: str | Path) -> None:
        payload = {
            "global_seed": self.global_seed,
            "annotators": list(self.annotators),
            "admin_token": self.admin_token,
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Judgment:
    annotator_id: str
    review_id: str
    slot_id: str | None
    question: str
    value: int | str
    timestamp: str

    def __post_init__(self) -> None:
        if self.question in SCALE_QUESTIONS:
            scale = SCALE_QUESTIONS[self.question]
            if isinstance(self.value, bool) or self.value not in scale:
                raise AnnotationError(
                    f"{self.question} must be one of {list(scale)}, got {self.value!r}"
                )
            if self.slot_id is None:
                raise AnnotationError(f"{self.question} requires a slot_id")
        elif self.question == "reference_direction":
            if self.value not in DIRECTION_CHOICES:
                raise AnnotationError(
                    f"reference_direction must be one of {list(DIRECTION_CHOICES)}"
                )
            if self.slot_id is not None:
                raise AnnotationError("reference_direction is review-level; omit slot_id")
        else:
            raise AnnotationError(f"unknown question {self.question!r}")


@dataclass(frozen=True)
class AnnotationTask:
    review_id: str
    topic_title: str
    reference_summary: str
    slots: tuple[tuple[str, str], ...]
    answered: tuple[dict, ...]

    def to_payload(self) -> dict:
        return {
            "review_id": self.review_id,
            "topic_title": self.topic_title,
            "reference_summary": self.reference_summary,
            "slots": [{"slot_id": sid, "summary": text} for sid, text in self.slots],
            "page1_questions": [dict(q) for q in PAGE1_QUESTIONS],
            "page2_questions": [dict(q) for q in PAGE2_QUESTIONS],
            "answered": list(self.answered),
        }


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


# State key: (annotator, review, slot or None, question).
_Key = tuple[str, str, str | None, str]


class AnnotationStore:
    """Protocol state: sessions, task assembly, judgment upserts, export.

    Judgments are appended to a line-delimited journal before they are
    acknowledged; replaying the journal rebuilds the exact state, and a
    torn final line (a crash mid-write) is ignored.
    """

    def __init__(
        self,
        config: AnnotationConfig,
        reviews: Sequence[Review],
        summaries: Sequence[GeneratedSummary],
        journal_path: str | Path,
        clock: Callable[[], str] = _utc_now,
    ) -> None:
        self.config = config
        self.clock = clock
        self.journal_path = Path(journal_path)
        self._lock = threading.Lock()
        self._sessions: dict[str, str] = {}
        self._state: dict[_Key, Judgment] = {}

        self._reviews: dict[str, Review] = {}
        self._items: dict[str, list[GeneratedSummary]] = {}
        seen: set[tuple[str, str]] = set()
        for s in summaries:
            if (s.review_id, s.system_id) in seen:
                raise ValueError(
                    f"duplicate summary for review {s.review_id!r}, system {s.system_id!r}"
                )
            seen.add((s.review_id, s.system_id))
            self._items.setdefault(s.review_id, []).append(s)
        self._review_order: list[str] = []
        for r in reviews:
            self._reviews[r.review_id] = r
            if r.review_id in self._items:
                self._review_order.append(r.review_id)
                # canonical item order; the per-annotator permutation hides it
                self._items[r.review_id].sort(key=lambda s: s.system_id)
        self._replay_journal()

    # -- sessions --------------------------------------------------------

    def create_session(self, annotator_id: str) -> str:
        if annotator_id not in self.config.annotators:
            raise AnnotationError(f"unknown annotator {annotator_id!r}", status=403)
        token = secrets.token_hex(16)
        with self._lock:
            self._sessions[token] = annotator_id
        return token

    def annotator_for(self, token: str) -> str:
        try:
            return self._sessions[token]
        except KeyError:
            raise AnnotationError("invalid session token", status=401) from None

    # -- blinded task assembly -------------------------------------------

    def _permutation(self, review_id: str, annotator_id: str) -> list[int]:
        n = len(self._items[review_id])
        order = list(range(n))
        random.Random(
            f"{self.config.global_seed}|{review_id}|{annotator_id}"
        ).shuffle(order)
        return order

    def _slots(self, review_id: str, annotator_id: str) -> list[tuple[str, GeneratedSummary]]:
        items = self._items[review_id]
        perm = self._permutation(review_id, annotator_id)
        return [(f"slot-{i + 1}", items[perm[i]]) for i in range(len(items))]

    def system_for_slot(self, review_id: str, annotator_id: str, slot_id: str) -> str:
        for sid, item in self._slots(review_id, annotator_id):
            if sid == slot_id:
                return item.system_id
        raise AnnotationError(f"unknown slot {slot_id!r}", status=404)

    def _answered(self, annotator_id: str, review_id: str) -> list[Judgment]:
        found = [
            j
            for (ann, rid, _, _), j in self._state.items()
            if ann == annotator_id and rid == review_id
        ]
        found.sort(key=lambda j: (j.slot_id or "", j.question))
        return found

    def _is_complete(self, annotator_id: str, review_id: str) -> bool:
        slots = self._slots(review_id, annotator_id)
        for sid, _ in slots:
            for q in ("relevance", "plausibility", "factual_agreement"):
                if (annotator_id, review_id, sid, q) not in self._state:
                    return False
        return (annotator_id, review_id, None, "reference_direction") in self._state

    def progress(self, token: str) -> dict:
        annotator = self.annotator_for(token)
        done = sum(1 for rid in self._review_order if self._is_complete(annotator, rid))
        return {"completed_reviews": done, "total_reviews": len(self._review_order)}

    def next_task(self, token: str) -> AnnotationTask | None:
        annotator = self.annotator_for(token)
        for rid in self._review_order:
            if self._is_complete(annotator, rid):
                continue
            review = self._reviews[rid]
            slots = tuple(
                (sid, item.text) for sid, item in self._slots(rid, annotator)
            )
            answered = tuple(
                {"slot_id": j.slot_id, "question": j.question, "value": j.value}
                for j in self._answered(annotator, rid)
            )
            return AnnotationTask(
                review_id=rid,
                topic_title=review.topic_title,
                reference_summary=review.target_summary,
                slots=slots,
                answered=answered,
            )
        return None

    # -- judgments ---------------------------------------------------------

    def _check_gating(self, annotator: str, review_id: str, slot_id: str | None, question: str) -> None:
        def page1_done(sid: str) -> bool:
            return (annotator, review_id, sid, "relevance") in self._state and (
                annotator,
                review_id,
                sid,
                "plausibility",
            ) in self._state

        if question == "factual_agreement":
            if not page1_done(slot_id):  # type: ignore[arg-type]
                raise AnnotationError(
                    "page-order violation: answer relevance and plausibility first",
                    status=409,
                )
        elif question == "reference_direction":
            if not any(sid for sid, _ in self._slots(review_id, annotator) if page1_done(sid)):
                raise AnnotationError(
                    "page-order violation: no slot has completed page 1",
                    status=409,
                )

    def submit_judgment(
        self,
        token: str,
        review_id: str,
        question: str,
        value: int | str,
        slot_id: str | None = None,
    ) -> Judgment:
        annotator = self.annotator_for(token)
        if review_id not in self._items:
            raise AnnotationError(f"unknown review {review_id!r}", status=404)
        if slot_id is not None:
            valid = {sid for sid, _ in self._slots(review_id, annotator)}
            if slot_id not in valid:
                raise AnnotationError(f"unknown slot {slot_id!r}", status=404)
        judgment = Judgment(
            annotator_id=annotator,
            review_id=review_id,
            slot_id=slot_id,
            question=question,
            value=value,
            timestamp=self.clock(),
        )
        with self._lock:
            self._check_gating(annotator, review_id, slot_id, question)
            self._append_journal(judgment)
            key: _Key = (annotator, review_id, slot_id, question)
            self._state[key] = judgment
        return judgment

    # -- persistence -------------------------------------------------------

    def _append_journal(self, j: Judgment) -> None:
        record = {
            "annotator_id": j.annotator_id,
            "review_id": j.review_id,
            "slot_id": j.slot_id,
            "question": j.question,
            "value": j.value,
            "timestamp": j.timestamp,
        }
        with open(self.journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()

    def _replay_journal(self) -> None:
        if not self.journal_path.exists():
            return
        lines = self.journal_path.read_text(encoding="utf-8").splitlines()
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                judgment = Judgment(
                    annotator_id=raw["annotator_id"],
                    review_id=raw["review_id"],
                    slot_id=raw.get("slot_id"),
                    question=raw["question"],
                    value=raw["value"],
                    timestamp=raw["timestamp"],
                )
            except (json.JSONDecodeError, KeyError, TypeError):
                if lineno == len(lines):
                    break  # torn final line from a crash mid-append
                raise AnnotationError(f"corrupt journal line {lineno}")
            key: _Key = (
                judgment.annotator_id,
                judgment.review_id,
                judgment.slot_id,
                judgment.question,
            )
            self._state[key] = judgment

    # -- export ------------------------------------------------------------

    def export_rows(self, admin_token: str) -> list[dict]:
        """Unblinded judgment table. Review-level rows carry an empty
        system_id."""
        if admin_token != self.config.admin_token:
            raise AnnotationError("invalid admin token", status=403)
        rows = []
        for (annotator, review_id, slot_id, question), j in self._state.items():
            system = (
                self.system_for_slot(review_id, annotator, slot_id) if slot_id else ""
            )
            rows.append(
                {
                    "annotator_id": annotator,
                    "review_id": review_id,
                    "system_id": system,
                    "question": question,
                    "value": j.value,
                    "timestamp": j.timestamp,
                }
            )
        rows.sort(
            key=lambda r: (
                r["annotator_id"],
                r["review_id"],
                r["question"],
                r["system_id"],
            )
        )
        return rows

    def export_ndjson(self, admin_token: str) -> str:
        rows = self.export_rows(admin_token)
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
