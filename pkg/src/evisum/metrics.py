"""Evaluation metrics: ROUGE-L for surface overlap and a findings-level
divergence that compares the direction of the reported result.

The findings metric selects each summary's punchline sentence with a
linear classifier, predicts a distribution over {significant difference,
no significant difference}, and reports the Jensen-Shannon divergence
(base 2, so values live in [0, 1]) between the two distributions.
"""
from __future__ import annotations

import json
import math
import random
import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .textproc import Sentence, split_sentences, tokenize

HASH_DIMENSION = 1 << 18


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f: float
    lcs_len: int


@dataclass(frozen=True)
class FindingsDistribution:
    p_sig: float
    p_nosig: float

    def __post_init__(self) -> None:
        total = self.p_sig + self.p_nosig
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"probabilities sum to {total}, not 1")
        if min(self.p_sig, self.p_nosig) < 0:
            raise ValueError("negative probability")

    def as_tuple(self) -> tuple[float, float]:
        return (self.p_sig, self.p_nosig)


def _lower_tokens(text: str) -> list[str]:
    return [t.text.lower() for t in tokenize(text)]


def rouge_l(candidate: str, reference: str, beta: float = 1.0) -> RougeScore:
    """Longest-common-subsequence overlap on lowercased tokens."""
    cand = _lower_tokens(candidate)
    ref = _lower_tokens(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0, 0)
    # Two-row LCS table: prev[j] is LCS(cand[:i], ref[:j]).
    prev = [0] * (len(ref) + 1)
    for tok in cand:
        cur = [0] * (len(ref) + 1)
        for j, rtok in enumerate(ref, start=1):
            if tok == rtok:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    lcs = prev[-1]
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if lcs == 0:
        f = 0.0
    else:
        b2 = beta * beta
        f = (1 + b2) * precision * recall / (recall + b2 * precision)
    return RougeScore(precision, recall, f, lcs)


def jsd(
    p: Sequence[float] | FindingsDistribution, q: Sequence[float] | FindingsDistribution
) -> float:
    """Jensen-Shannon divergence, log base 2."""
    if isinstance(p, FindingsDistribution):
        p = p.as_tuple()
    if isinstance(q, FindingsDistribution):
        q = q.as_tuple()
    if len(p) != len(q) or not p:
        raise ValueError("distributions must be non-empty and equal length")
    for dist in (p, q):
        if min(dist) < 0:
            raise ValueError("negative probability")
        if not math.isclose(sum(dist), 1.0, abs_tol=1e-9):
            raise ValueError(f"distribution sums to {sum(dist)}, not 1")

    def kl_to_mid(a: Sequence[float]) -> float:
        total = 0.0
        for ai, pi, qi in zip(a, p, q):
            if ai > 0:
                total += ai * math.log2(2 * ai / (pi + qi))
        return total

    value = 0.5 * kl_to_mid(p) + 0.5 * kl_to_mid(q)
    return max(value, 0.0)  # guard tiny negative rounding


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _softplus(z: float) -> float:
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


class LinearTextClassifier:
    """Binary logistic regression over hashed unigram and bigram counts.

    Feature hashing keys every n-gram through crc32 with a seed prefix, so
    two classifiers built with the same seed agree on feature indices.
    `label_space[1]` is the positive class.
    """

    def __init__(
        self,
        label_space: tuple[str, str],
        hash_seed: int = 0,
        dimension: int = HASH_DIMENSION,
    ) -> None:
        if len(label_space) != 2 or len(set(label_space)) != 2:
            raise ValueError("label_space must be two distinct labels")
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.label_space = tuple(label_space)
        self.hash_seed = hash_seed
        self.dimension = dimension
        self.weights = np.zeros(dimension, dtype=np.float64)
        self.bias = 0.0

    def _index(self, feature: str) -> int:
        return zlib.crc32(f"{self.hash_seed}|{feature}".encode("utf-8")) % self.dimension

    def features(self, text: str) -> dict[int, float]:
        toks = _lower_tokens(text)
        feats: dict[int, float] = {}
        grams: Iterable[str] = toks
        for gram in grams:
            idx = self._index(gram)
            feats[idx] = feats.get(idx, 0.0) + 1.0
        for a, b in zip(toks, toks[1:]):
            idx = self._index(f"{a} {b}")
            feats[idx] = feats.get(idx, 0.0) + 1.0
        return feats

    def decision(self, text: str) -> float:
        feats = self.features(text)
        z = self.bias
        for idx, count in feats.items():
            z += self.weights[idx] * count
        return z

    def predict_proba(self, text: str) -> dict[str, float]:
        p1 = _sigmoid(self.decision(text))
        return {self.label_space[0]: 1.0 - p1, self.label_space[1]: p1}

    def predict(self, text: str) -> str:
        return self.label_space[1] if self.decision(text) >= 0 else self.label_space[0]


def loss_and_gradient(
    clf: LinearTextClassifier, text: str, label: str, l2: float = 0.0
) -> tuple[float, dict[int, float], float]:
    """Logistic loss with L2 on the touched weights, plus its gradient.

    Returns (loss, weight gradients keyed by feature index, bias gradient).
    Pure: the classifier is not modified.
    """
    if label not in clf.label_space:
        raise ValueError(f"unknown label {label!r}")
    y = 1.0 if label == clf.label_space[1] else 0.0
    feats = clf.features(text)
    z = clf.bias + sum(clf.weights[i] * c for i, c in feats.items())
    loss = _softplus(z) - y * z
    err = _sigmoid(z) - y
    grads: dict[int, float] = {}
    for idx, count in feats.items():
        w = clf.weights[idx]
        loss += 0.5 * l2 * w * w
        grads[idx] = err * count + l2 * w
    return loss, grads, err


def train_classifier(
    examples: Sequence[tuple[str, str]],
    label_space: tuple[str, str],
    *,
    seed: int = 0,
    epochs: int = 20,
    learning_rate: float = 0.1,
    l2: float = 1e-4,
    dimension: int = HASH_DIMENSION,
) -> LinearTextClassifier:
    """Seeded SGD. Identical inputs and seed give identical weights."""
    if not examples:
        raise ValueError("no training examples")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    seen = {label for _, label in examples}
    if stray := seen - set(label_space):
        raise ValueError(f"unknown labels: {sorted(stray)}")
    if len(seen) < 2:
        raise ValueError("training set covers a single label")
    clf = LinearTextClassifier(label_space, hash_seed=seed, dimension=dimension)
    cached = [(clf.features(text), label) for text, label in examples]
    rng = random.Random(seed)
    order = list(range(len(cached)))
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            feats, label = cached[i]
            y = 1.0 if label == label_space[1] else 0.0
            z = clf.bias + sum(clf.weights[j] * c for j, c in feats.items())
            err = _sigmoid(z) - y
            for idx, count in feats.items():
                clf.weights[idx] -= learning_rate * (err * count + l2 * clf.weights[idx])
            clf.bias -= learning_rate * err
    return clf


def save_classifier(clf: LinearTextClassifier, path: str) -> None:
    nonzero = np.nonzero(clf.weights)[0]
    payload = {
        "hash_seed": clf.hash_seed,
        "dimension": clf.dimension,
        "label_space": list(clf.label_space),
        "weights": {str(int(i)): float(clf.weights[i]) for i in nonzero},
        "bias": clf.bias,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_classifier(path: str) -> LinearTextClassifier:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    clf = LinearTextClassifier(
        tuple(payload["label_space"]),
        hash_seed=payload["hash_seed"],
        dimension=payload["dimension"],
    )
    for key, value in payload["weights"].items():
        clf.weights[int(key)] = value
    clf.bias = payload["bias"]
    return clf


def select_punchline(text: str, clf: LinearTextClassifier) -> Sentence:
    """Pick the sentence most likely to state the main finding. Ties go to
    the earliest sentence."""
    sentences = split_sentences(text)
    if not sentences:
        raise ValueError("no sentences to choose from")
    best: Sentence | None = None
    best_p = -1.0
    positive = clf.label_space[1]
    for sent in sentences:
        p = clf.predict_proba(sent.text)[positive]
        if p > best_p:
            best, best_p = sent, p
    assert best is not None
    return best


def predict_direction(sentence: str, clf: LinearTextClassifier) -> FindingsDistribution:
    proba = clf.predict_proba(sentence)
    if "sig_diff" not in proba or "no_sig_diff" not in proba:
        raise ValueError("direction classifier must use sig_diff / no_sig_diff labels")
    return FindingsDistribution(p_sig=proba["sig_diff"], p_nosig=proba["no_sig_diff"])


def findings_jsd(
    candidate: str,
    reference: str,
    punchline_clf: LinearTextClassifier,
    direction_clf: LinearTextClassifier,
) -> float:
    """Divergence between the finding-direction distributions of the two
    summaries' punchline sentences."""
    cand_sent = select_punchline(candidate, punchline_clf)
    ref_sent = select_punchline(reference, punchline_clf)
    cand_dist = predict_direction(cand_sent.text, direction_clf)
    ref_dist = predict_direction(ref_sent.text, direction_clf)
    return jsd(cand_dist.as_tuple(), ref_dist.as_tuple())
