"""Canonical data model for review bundles, plus loading and splitting.

A corpus file is UTF-8, line-delimited JSON: one review per line with
fields {review_id, topic_title, target_summary, studies:[{study_id, title,
abstract, sample_size?, rob_low_prob?}]}.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path


class CorpusError(ValueError):
    """Malformed corpus file or record; message carries the line number."""


@dataclass(frozen=True)
class StudyDocument:
    study_id: str
    title: str
    abstract: str
    sample_size: int | None = None
    rob_low_prob: float | None = None

    def __post_init__(self) -> None:
        if not self.study_id:
            raise ValueError("study_id must be non-empty")
        if not self.title and not self.abstract:
            raise ValueError(f"study {self.study_id!r}: title and abstract both empty")
        if self.sample_size is not None and self.sample_size <= 0:
            raise ValueError(f"study {self.study_id!r}: sample_size must be positive")
        if self.rob_low_prob is not None and not 0.0 <= self.rob_low_prob <= 1.0:
            raise ValueError(f"study {self.study_id!r}: rob_low_prob outside [0, 1]")


@dataclass(frozen=True)
class Review:
    review_id: str
    topic_title: str
    target_summary: str
    studies: tuple[StudyDocument, ...]

    def __post_init__(self) -> None:
        if not self.review_id:
            raise ValueError("review_id must be non-empty")
        if not self.target_summary:
            raise ValueError(f"review {self.review_id!r}: target_summary empty")
        if not self.studies:
            raise ValueError(f"review {self.review_id!r}: no studies")
        seen = set()
        for s in self.studies:
            if s.study_id in seen:
                raise ValueError(
                    f"review {self.review_id!r}: duplicate study_id {s.study_id!r}"
                )
            seen.add(s.study_id)


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self) -> None:
        if any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be non-negative")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")


def _study_from_dict(d: dict, review_id: str) -> StudyDocument:
    try:
        return StudyDocument(
            study_id=str(d["study_id"]),
            title=str(d.get("title", "")),
            abstract=str(d.get("abstract", "")),
            sample_size=d.get("sample_size"),
            rob_low_prob=d.get("rob_low_prob"),
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"review {review_id!r}: {exc}") from exc


def review_from_dict(d: dict) -> Review:
    review_id = str(d.get("review_id", ""))
    studies = tuple(_study_from_dict(s, review_id) for s in d.get("studies", []))
    return Review(
        review_id=review_id,
        topic_title=str(d.get("topic_title", "")),
        target_summary=str(d.get("target_summary", "")),
        studies=studies,
    )


def review_to_dict(review: Review) -> dict:
    studies = []
    for s in review.studies:
        sd: dict = {"study_id": s.study_id, "title": s.title, "abstract": s.abstract}
        if s.sample_size is not None:
            sd["sample_size"] = s.sample_size
        if s.rob_low_prob is not None:
            sd["rob_low_prob"] = s.rob_low_prob
        studies.append(sd)
    return {
        "review_id": review.review_id,
        "topic_title": review.topic_title,
        "target_summary": review.target_summary,
        "studies": studies,
    }


def load_corpus(path: str | Path) -> list[Review]:
    """Load all reviews from a line-delimited JSON file, in file order."""
    reviews: list[Review] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            try:
                review = review_from_dict(record)
            except ValueError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from exc
            if review.review_id in seen:
                raise CorpusError(
                    f"line {lineno}: duplicate review_id {review.review_id!r} "
                    f"(first seen on line {seen[review.review_id]})"
                )
            seen[review.review_id] = lineno
            reviews.append(review)
    return reviews


def save_corpus(reviews: list[Review], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for review in reviews:
            fh.write(json.dumps(review_to_dict(review), sort_keys=True) + "\n")


def split_corpus(
    reviews: list[Review], spec: SplitSpec
) -> tuple[list[Review], list[Review], list[Review]]:
    """Partition reviews into train/dev/test.

    Dev and test sizes are the rounded fractions; train absorbs the
    remainder. Membership depends only on the review ids and the spec,
    not on input order.
    """
    n = len(reviews)
    n_dev = round(spec.fractions[1] * n)
    n_test = round(spec.fractions[2] * n)
    if n_dev + n_test > n:
        raise ValueError("dev and test fractions leave no room for train")
    ids = sorted(r.review_id for r in reviews)
    rng = random.Random(spec.seed)
    rng.shuffle(ids)
    dev_ids = set(ids[:n_dev])
    test_ids = set(ids[n_dev : n_dev + n_test])
    train = [r for r in reviews if r.review_id not in dev_ids and r.review_id not in test_ids]
    dev = [r for r in reviews if r.review_id in dev_ids]
    test = [r for r in reviews if r.review_id in test_ids]
    return train, dev, test


def toy_corpus_path() -> Path:
    """Location of the bundled toy corpus fixture."""
    from importlib import resources

    return Path(str(resources.files("evisum.data").joinpath("toy_corpus.jsonl")))
