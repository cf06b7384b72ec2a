"""End-to-end acceptance checks, one per shipping requirement.

Each test carries a `criterion` marker; conftest replays one PASS/FAIL
line per criterion in the terminal summary.
"""
from __future__ import annotations

import json
import random
import time
from importlib import resources

import numpy as np
import pytest
from fastapi.testclient import TestClient

from evisum.annotation import AnnotationConfig, AnnotationStore
from evisum.cli import dispatch
from evisum.corpus import Review, StudyDocument
from evisum.input_builder import (
    BudgetError,
    BuildConfig,
    assemble,
    decorate,
    sort_key,
    strip_decoration,
)
from evisum.metrics import (
    LinearTextClassifier,
    findings_jsd,
    jsd,
    loss_and_gradient,
    rouge_l,
    train_classifier,
)
from evisum.stats import PairedRatings, ols_regress, paired_ttest, weighted_kappa
from evisum.summarizer import GeneratedSummary
from evisum.tagger import TaggedSpan
from evisum.textproc import tokenize
from evisum.webapp import create_app


def criterion(label):
    return pytest.mark.criterion(label)


def _bundled_training(name):
    path = resources.files("evisum.data.training").joinpath(name)
    rows = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    return [(r["text"], r["label"]) for r in rows]


# -- 1: ROUGE-L against a brute-force oracle ---------------------------------


@criterion("ROUGE-L equals brute-force LCS oracle on 500 random pairs in <10s")
def test_rouge_against_brute_force_oracle():
    def lcs_table(a, b):
        table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
        for i in range(1, len(a) + 1):
            for j in range(1, len(b) + 1):
                if a[i - 1] == b[j - 1]:
                    table[i][j] = table[i - 1][j - 1] + 1
                else:
                    table[i][j] = max(table[i - 1][j], table[i][j - 1])
        return table[len(a)][len(b)]

    rng = random.Random(1001)
    vocab = ["one", "two", "three", "four", "five", "six", "seven"]
    started = time.perf_counter()
    for _ in range(500):
        cand = [rng.choice(vocab) for _ in range(rng.randrange(0, 13))]
        ref = [rng.choice(vocab) for _ in range(rng.randrange(1, 13))]
        score = rouge_l(" ".join(cand), " ".join(ref))
        lcs = lcs_table(cand, ref)
        assert score.lcs_len == lcs
        if cand and lcs:
            p = lcs / len(cand)
            r = lcs / len(ref)
            assert score.precision == p
            assert score.recall == r
            assert score.f == (1 + 1.0) * p * r / (r + 1.0 * p)
        else:
            assert score.f == 0.0
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"oracle comparison took {elapsed:.1f}s"


# -- 2: JSD properties ---------------------------------------------------------


@criterion("JSD symmetry/bounds/zero-iff-equal on 1000 distributions; worked value ok")
def test_jsd_property_suite():
    rng = random.Random(1002)
    for _ in range(1000):
        p = rng.random()
        q = rng.random()
        a, b = (p, 1 - p), (q, 1 - q)
        d_ab = jsd(a, b)
        d_ba = jsd(b, a)
        assert abs(d_ab - d_ba) <= 1e-12, "symmetry"
        assert -1e-12 <= d_ab <= 1.0 + 1e-12, "bounds"
        if p == q:
            assert d_ab == 0.0
        else:
            assert jsd(a, a) == 0.0
            if abs(p - q) > 1e-9:
                assert d_ab > 0.0, "zero only when equal"
    assert abs(jsd((0.5, 0.5), (1.0, 0.0)) - 0.311278) < 1e-5


# -- 3: input-builder suite --------------------------------------------------


@criterion("input builder: 1000-review fuzz invariants + budget-28 trace reproduce")
def test_input_builder_suite():
    # hand-traced case: 2-token titles, 4-token sentences, budget 28
    review = Review(
        review_id="r1",
        topic_title="Topic",
        target_summary="Target.",
        studies=(
            StudyDocument("A", "Alpha trial", "Aa aa aone. Ab bb atwo. Ac cc athree."),
            StudyDocument("B", "Beta trial", "Ba aa bone. Bb bb btwo. Bc cc bthree."),
        ),
    )
    enc = assemble(review, BuildConfig(token_budget=28, seed=0))
    assert enc.token_count == 28
    assert enc.included == (("A", (0, 2)), ("B", (0, 2)))  # a1, a3, b1, b3
    assert enc.text == (
        "<S> <T> Alpha trial <ABS> Aa aa aone. Ab bb Ac cc athree. "
        "<S> <T> Beta trial <ABS> Ba aa bone. Bc cc bthree."
    )

    words = ["alpha", "beta", "gamma", "delta", "omega", "kappa"]
    rng = random.Random(1003)
    built = 0
    for i in range(1000):
        studies = []
        for d in range(rng.randrange(1, 5)):
            sents = [
                " ".join(rng.choice(words) for _ in range(rng.randrange(1, 7))) + "."
                for _ in range(rng.randrange(1, 5))
            ]
            studies.append(
                StudyDocument(
                    f"s{d}",
                    " ".join(rng.choice(words) for _ in range(rng.randrange(1, 4))),
                    " ".join(sents),
                    sample_size=rng.randrange(1, 500) if rng.random() < 0.4 else None,
                    rob_low_prob=rng.random() if rng.random() < 0.4 else None,
                )
            )
        fuzzed = Review(
            review_id=f"r{i}", topic_title="T", target_summary="S.", studies=tuple(studies)
        )
        budget = rng.randrange(4, 140)
        sort_flag = rng.random() < 0.5
        cfg = BuildConfig(token_budget=budget, seed=rng.randrange(50), sort_by_evidence=sort_flag)
        header = sum(3 + len(tokenize(s.title)) for s in studies)
        if header > budget:
            with pytest.raises(BudgetError):
                assemble(fuzzed, cfg)
            continue
        out = assemble(fuzzed, cfg)
        built += 1
        assert out.token_count <= budget, "budget exceeded"
        # title priority: every doc's header block is present
        for s in studies:
            assert f"<S> <T> {s.title} <ABS>" in out.text, "missing title block"
        if sort_flag:
            keys = {s.study_id: sort_key(s) for s in studies}
            consumed = [keys[sid] for sid, _ in out.included]
            assert all(
                consumed[i] >= consumed[i + 1] - 1e-9 for i in range(len(consumed) - 1)
            ), "consumption order not sorted by evidence"
    assert built > 500

    # decorate/strip round-trip identity on 1000 fuzzed (text, tags) pairs
    for _ in range(1000):
        text = " ".join(rng.choice(words) for _ in range(rng.randrange(1, 15)))
        spans = []
        for kind in ("punchline", "population", "intervention", "outcome"):
            cursor = 0
            while cursor < len(text) and rng.random() < 0.5:
                start = rng.randrange(cursor, len(text))
                end = rng.randrange(start + 1, len(text) + 1)
                spans.append(TaggedSpan(kind, start, end, 1.0))
                cursor = end
        assert strip_decoration(decorate(text, spans)) == text, "round trip broken"


# -- 4: classifier suite ------------------------------------------------------


@criterion("classifier: gradient check <1e-4 at 100 points; >=0.95 accuracy; seeded determinism")
def test_classifier_suite():
    rng = random.Random(1004)
    clf = LinearTextClassifier(("neg", "pos"), hash_seed=3, dimension=128)
    clf.weights = np.array([rng.uniform(-0.5, 0.5) for _ in range(128)])
    clf.bias = -0.2
    vocab = ["improved", "significantly", "searched", "databases", "mortality", "pain"]
    eps = 1e-6
    points = 0
    while points < 100:
        text = " ".join(rng.choice(vocab) for _ in range(rng.randrange(2, 8)))
        label = rng.choice(("neg", "pos"))
        loss, grads, bias_grad = loss_and_gradient(clf, text, label, l2=0.01)
        for idx, grad in grads.items():
            orig = clf.weights[idx]
            clf.weights[idx] = orig + eps
            up = loss_and_gradient(clf, text, label, l2=0.01)[0]
            clf.weights[idx] = orig - eps
            down = loss_and_gradient(clf, text, label, l2=0.01)[0]
            clf.weights[idx] = orig
            numeric = (up - down) / (2 * eps)
            rel = abs(grad - numeric) / max(1.0, abs(numeric))
            assert rel < 1e-4, f"gradient off by {rel}"
            points += 1
            if points >= 100:
                break

    examples = _bundled_training("punchline.jsonl")
    trained = train_classifier(examples, ("not_punchline", "punchline"), seed=0)
    accuracy = sum(trained.predict(t) == y for t, y in examples) / len(examples)
    assert accuracy >= 0.95, f"accuracy {accuracy}"

    again = train_classifier(examples, ("not_punchline", "punchline"), seed=0)
    assert np.array_equal(trained.weights, again.weights), "weights not bit-identical"
    assert trained.bias == again.bias


# -- 5: stats suite ------------------------------------------------------------


@criterion("stats: kappa hand values (1e-12), OLS vs normal equations (1e-9), t-test cases")
def test_stats_suite():
    perfect = PairedRatings.from_pairs([(1, 1), (2, 2), (3, 3)], 1, 3)
    assert abs(weighted_kappa(perfect) - 1.0) <= 1e-12
    worst = PairedRatings.from_pairs([(1, 2), (2, 1)], 1, 3)
    assert abs(weighted_kappa(worst) - (-1.0)) <= 1e-12

    rng = random.Random(1005)
    for _ in range(200):
        n = rng.randrange(3, 40)
        xs = [rng.uniform(-5, 5) for _ in range(n)]
        if max(xs) == min(xs):
            continue
        ys = [1.7 * x + 0.3 + rng.gauss(0, 0.6) for x in xs]
        res = ols_regress(xs, ys)
        sx, sy = sum(xs), sum(ys)
        sxx = sum(x * x for x in xs)
        sxy = sum(x * y for x, y in zip(xs, ys))
        det = n * sxx - sx * sx
        assert abs(res.slope - (n * sxy - sx * sy) / det) <= 1e-9
        assert abs(res.intercept - (sy * sxx - sx * sxy) / det) <= 1e-9

    x = [1.0, 2.5, 3.0, 4.5]
    y = [0.5, 3.0, 2.0, 5.0]
    t_xy, p_xy = paired_ttest(x, y)
    t_yx, p_yx = paired_ttest(y, x)
    assert abs(t_xy + t_yx) <= 1e-12 and abs(p_xy - p_yx) <= 1e-12
    assert paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == (0.0, 1.0)
    with pytest.raises(ValueError):
        paired_ttest([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])


# -- 6: findings-JSD validity at desk scale ----------------------------------


@criterion("findings-JSD validity: planted factuality regresses negative (p<0.05) in <60s")
def test_findings_jsd_validity():
    started = time.perf_counter()
    punchline_clf = train_classifier(
        _bundled_training("punchline.jsonl"), ("not_punchline", "punchline"), seed=0
    )
    direction_clf = train_classifier(
        _bundled_training("direction.jsonl"), ("no_sig_diff", "sig_diff"), seed=0
    )

    outcomes = ["lung function", "mortality", "pain", "quality of life", "blood pressure"]
    sig_forms = [
        "Treatment significantly improved {}.",
        "Therapy significantly reduced {}.",
        "The intervention significantly increased {} in the active arm.",
    ]
    nosig_forms = [
        "There was no significant difference in {} between groups.",
        "Reported {} did not differ between arms.",
        "The groups were comparable between groups for {}.",
    ]
    fillers = [
        "Patients were recruited from twelve centres.",
        "Both groups completed follow-up.",
        "The trial ran for two years.",
    ]

    def punchline(direction, rng):
        outcome = rng.choice(outcomes)
        forms = sig_forms if direction == "sig" else nosig_forms
        return rng.choice(forms).format(outcome)

    rng = random.Random(1006)
    jsds, factualities = [], []
    agree_jsds, disagree_jsds = [], []
    for _ in range(200):
        ref_dir = rng.choice(["sig", "nosig"])
        agree = rng.random() < 0.5
        cand_dir = ref_dir if agree else ("nosig" if ref_dir == "sig" else "sig")
        reference = f"{rng.choice(fillers)} {punchline(ref_dir, rng)}"
        candidate = f"{rng.choice(fillers)} {punchline(cand_dir, rng)}"
        value = findings_jsd(candidate, reference, punchline_clf, direction_clf)
        # planted ground truth: agreement earns a high factuality score
        factuality = (4 if agree else 1) + rng.random()
        jsds.append(value)
        factualities.append(factuality)
        (agree_jsds if agree else disagree_jsds).append(value)

    result = ols_regress(jsds, factualities)
    assert result.slope < 0, f"slope {result.slope} not negative"
    assert result.p_value < 0.05, f"p {result.p_value}"
    mean_agree = sum(agree_jsds) / len(agree_jsds)
    mean_disagree = sum(disagree_jsds) / len(disagree_jsds)
    assert mean_agree < mean_disagree
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


# -- 7: end-to-end CLI pipeline ------------------------------------------------


@criterion("CLI pipeline on toy corpus: deterministic five-variant report in <2min")
def test_cli_pipeline_end_to_end(tmp_path):
    started = time.perf_counter()
    toy = str(resources.files("evisum.data").joinpath("toy_corpus.jsonl"))
    assert dispatch(["corpus", "validate", toy]) == 0

    run1 = tmp_path / "run1"
    run2 = tmp_path / "run2"
    for out_dir in (run1, run2):
        code = dispatch(
            ["pipeline", "--out-dir", str(out_dir), "--seed", "0", "--budget", "256"]
        )
        assert code == 0
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0, f"pipeline took {elapsed:.1f}s"

    report = json.loads((run1 / "report.json").read_text())
    systems = report["systems"]
    assert set(systems) == {
        "base",
        "domain",
        "domain-decorate",
        "domain-sort",
        "domain-decorate-sort",
    }
    for row in systems.values():
        for column in ("rouge_l_dev", "rouge_l_test", "findings_jsd_dev", "findings_jsd_test"):
            assert isinstance(row[column], float)
    assert (run1 / "report.json").read_bytes() == (run2 / "report.json").read_bytes()
    assert (run1 / "summaries.jsonl").read_bytes() == (run2 / "summaries.jsonl").read_bytes()


# -- 8: blinded annotation end to end ----------------------------------------


@criterion("blinding e2e: no system ids leak, permutations stable, export exact, dup kappa=1")
def test_blinded_annotation_end_to_end(tmp_path, capsys):
    systems = ("model-alpha", "model-beta", "model-gamma")
    reviews = [
        Review(
            review_id=f"rev{i}",
            topic_title=f"Question {i}",
            target_summary=f"Reference conclusion {i}.",
            studies=(StudyDocument(f"st{i}", f"Trial {i}", f"Abstract body {i}."),),
        )
        for i in range(1, 4)
    ]
    summaries = [
        GeneratedSummary(
            review_id=r.review_id,
            system_id=s,
            text=f"Candidate text {k + 1} for {r.review_id}.",
        )
        for r in reviews
        for k, s in enumerate(systems)
    ]
    config = AnnotationConfig(global_seed=11, annotators=("ann1", "ann2"), admin_token="adm")
    store = AnnotationStore(config, reviews, summaries, tmp_path / "journal.ndjson")
    client = TestClient(create_app(store))

    def scan(payload):
        blob = json.dumps(payload)
        for system in systems:
            assert system not in blob, f"system id {system} leaked"

    token = client.post("/sessions", json={"annotator_id": "ann1"}).json()["token"]
    submitted = []
    values = iter([1, 2, 3, 4, 5] * 20)
    for _ in range(3):
        task = client.get("/tasks/next", params={"token": token}).json()
        scan(task)
        assert task["done"] is False
        rid = task["review_id"]
        slot_ids = [s["slot_id"] for s in task["slots"]]
        for slot in slot_ids:
            for question, scale in (("relevance", 3), ("plausibility", 5)):
                value = next(values) % scale + 1
                resp = client.post(
                    "/judgments",
                    json={"token": token, "review_id": rid, "question": question,
                          "value": value, "slot_id": slot},
                )
                assert resp.status_code == 200
                scan(resp.json())
                submitted.append((rid, slot, question, value))
        resp = client.post(
            "/judgments",
            json={"token": token, "review_id": rid,
                  "question": "reference_direction", "value": "benefit"},
        )
        assert resp.status_code == 200
        scan(resp.json())
        submitted.append((rid, None, "reference_direction", "benefit"))
        for slot in slot_ids:
            value = next(values) % 5 + 1
            resp = client.post(
                "/judgments",
                json={"token": token, "review_id": rid, "question": "factual_agreement",
                      "value": value, "slot_id": slot},
            )
            assert resp.status_code == 200
            scan(resp.json())
            submitted.append((rid, slot, "factual_agreement", value))
    final = client.get("/tasks/next", params={"token": token}).json()
    scan(final)
    assert final["done"] is True
    assert final["progress"] == {"completed_reviews": 3, "total_reviews": 3}

    # permutations are a pure function of (seed, review, annotator)
    rebuilt = AnnotationStore(config, reviews, summaries, tmp_path / "other.ndjson")
    for r in reviews:
        for ann in ("ann1", "ann2"):
            assert store._permutation(r.review_id, ann) == rebuilt._permutation(
                r.review_id, ann
            )

    # export contains exactly the submitted judgments, unblinded
    rows = [
        json.loads(line)
        for line in client.get("/admin/export", params={"token": "adm"}).text.splitlines()
    ]
    expected = {
        (
            rid,
            store.system_for_slot(rid, "ann1", slot) if slot else "",
            question,
            value,
        )
        for rid, slot, question, value in submitted
    }
    got = {(r["review_id"], r["system_id"], r["question"], r["value"]) for r in rows}
    assert got == expected
    assert len(rows) == len(submitted)

    # duplicating the annotator and feeding stats kappa gives kappa = 1
    dup_path = tmp_path / "dup.ndjson"
    with open(dup_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            twin = dict(row)
            twin["annotator_id"] = "ann2"
            fh.write(json.dumps(twin, sort_keys=True) + "\n")
    capsys.readouterr()
    assert dispatch(["stats", "kappa", "--export", str(dup_path)]) == 0
    out = capsys.readouterr().out
    assert "1.0000" in out, out
