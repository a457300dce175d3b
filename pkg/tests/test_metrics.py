import logging
import math
import random
from dataclasses import dataclass
from typing import Optional

import pytest

from questionscope.corpus import DataError
from questionscope.metrics import (
    ArticleIndexRecord,
    aggregate,
    compute_article_indices,
    nearest_rank,
    spot_check_sample,
    stance_answerability_table,
    stance_global_table,
    sweep_confidence,
    sweep_similarity,
)
from questionscope.semantics import EntityMention


def qa_row(sent_id, has_answer, answer_has_quotes=False, question_has_quotes=False,
           stance="information-seeking", answer_sim=None):
    if has_answer and answer_sim is None:
        answer_sim = 0.8
    return {
        "sent_id": sent_id,
        "has_answer": has_answer,
        "answer_has_quotes": answer_has_quotes,
        "question_has_quotes": question_has_quotes,
        "stance": stance,
        "answer_sim": answer_sim,
    }


def ent(label, score=0.9):
    return EntityMention(text="x", label=label, score=score, start=0, end=1)


class TestArticleIndices:
    def test_hand_computed_example(self):
        # 10 sentences, 4 questions, 3 answered, 1 answer via quotes.
        rows = [
            qa_row(1, True),
            qa_row(3, True, answer_has_quotes=True),
            qa_row(5, True),
            qa_row(7, False),
        ]
        rec = compute_article_indices("a", 10, rows)
        assert rec.ID_a == pytest.approx(0.4)
        assert rec.Ans_a == pytest.approx(0.75)
        assert rec.share_unanswered == pytest.approx(0.25)
        assert rec.share_external == pytest.approx(0.25)
        assert rec.share_internal == pytest.approx(0.5)

    def test_shares_sum_to_one(self):
        rng = random.Random(7)
        rows = [
            qa_row(i, rng.random() < 0.6, answer_has_quotes=rng.random() < 0.3)
            for i in range(9)
        ]
        rec = compute_article_indices("a", 20, rows)
        total = rec.share_unanswered + rec.share_internal + rec.share_external
        assert total == pytest.approx(1.0)

    def test_no_questions_yields_none_ratios(self):
        rec = compute_article_indices("a", 5, [])
        assert rec.Q_a == 0 and rec.ID_a == 0.0
        assert rec.Ans_a is None
        assert rec.share_unanswered is None
        assert rec.addr_actor is None

    def test_zero_sentences_rejected(self):
        with pytest.raises(DataError):
            compute_article_indices("a", 0, [])

    def test_addressivity_and_personalization(self):
        rows = [qa_row(0, True), qa_row(1, False), qa_row(2, True), qa_row(3, False)]
        entities = {
            0: [ent("person")],
            1: [ent("public or audience")],
            2: [ent("event")],
            # sent 3 has no mentions at all
        }
        rec = compute_article_indices("a", 8, rows, entities)
        assert rec.addr_actor == pytest.approx(0.25)
        assert rec.addr_group == pytest.approx(0.25)
        assert rec.addr_issue == pytest.approx(0.5)
        assert rec.pers_flag_count == 1

    def test_question_quote_count(self):
        rows = [qa_row(0, False, question_has_quotes=True),
                qa_row(1, False, question_has_quotes=True),
                qa_row(2, False)]
        rec = compute_article_indices("a", 4, rows)
        assert rec.q_quote_count == 2


def make_record(article_id, id_a, ans_a=None):
    return ArticleIndexRecord(
        article_id=article_id, S_a=10, Q_a=2, A_a=1, ID_a=id_a, Ans_a=ans_a,
        share_unanswered=None, share_internal=None, share_external=None,
        addr_actor=None, addr_group=None, addr_issue=None,
        pers_flag_count=0, q_quote_count=0,
    )


class TestAggregate:
    def test_hand_computed_stats(self):
        # Group "g": ID_a values 0.1, 0.2, 0.6. Mean 0.3, median 0.2 by
        # nearest rank, population SD sqrt(0.14/3), P90 = max.
        recs = [make_record(f"a{i}", v) for i, v in enumerate([0.1, 0.2, 0.6])]
        groups = {r.article_id: "g" for r in recs}
        (row,) = aggregate(recs, "outlet", groups)
        assert row.n_articles == 3
        assert row.mean == pytest.approx(0.3)
        assert row.median == pytest.approx(0.2)
        assert row.sd == pytest.approx(math.sqrt(0.14 / 3))
        assert row.p90 == pytest.approx(0.6)

    def test_none_metric_excluded(self):
        recs = [make_record("a", 0.5, ans_a=None), make_record("b", 0.5, ans_a=0.25)]
        groups = {"a": "g", "b": "g"}
        (row,) = aggregate(recs, "outlet", groups, metric="Ans_a")
        assert row.n_articles == 1 and row.mean == pytest.approx(0.25)

    def test_empty_group_omitted(self):
        recs = [make_record("a", 0.5, ans_a=None)]
        assert aggregate(recs, "scale", {"a": "g"}, metric="Ans_a") == []

    def test_groups_sorted(self):
        recs = [make_record("a", 0.1), make_record("b", 0.2), make_record("c", 0.3)]
        groups = {"a": "zeta", "b": "alpha", "c": "mid"}
        rows = aggregate(recs, "meta_topic", groups)
        assert [r.group for r in rows] == ["alpha", "mid", "zeta"]

    def test_unknown_dimension_rejected(self):
        with pytest.raises(DataError):
            aggregate([], "language", {})

    def test_nearest_rank_matches_definition(self):
        values = [5, 1, 4, 2, 3]
        # P50 of 5 values: rank ceil(2.5) = 3 -> third smallest.
        assert nearest_rank(values, 50) == 3
        assert nearest_rank(values, 90) == 5
        assert nearest_rank(values, 1) == 1
        assert nearest_rank([7.0], 90) == 7.0


class TestStanceTables:
    def test_global_percentages(self):
        rows = (
            [qa_row(i, False, stance="rhetorical") for i in range(3)]
            + [qa_row(i + 3, False, stance="information-seeking") for i in range(1)]
        )
        table = stance_global_table(rows)
        by = {r["stance"]: r for r in table}
        assert by["rhetorical"]["pct_of_interrogatives"] == pytest.approx(75.0)
        assert by["information-seeking"]["n"] == 1
        assert sum(r["pct_of_interrogatives"] for r in table) == pytest.approx(100.0)

    def test_answerability_per_stance(self):
        rows = [
            qa_row(0, True, stance="leading"),
            qa_row(1, False, stance="leading"),
            qa_row(2, False, stance="tag"),
        ]
        table = stance_answerability_table(rows)
        by = {r["stance"]: r for r in table}
        assert by["leading"]["pct_answered"] == pytest.approx(50.0)
        assert by["tag"]["pct_answered"] == pytest.approx(0.0)


@dataclass
class FakePred:
    stance: Optional[str]
    stance_conf: Optional[float]


class TestSweeps:
    def test_confidence_counts_monotone_nonincreasing(self):
        rng = random.Random(3)
        preds = {}
        counts = {}
        for i in range(30):
            aid = f"a{i:02d}"
            n = rng.randint(3, 10)
            counts[aid] = n
            preds[aid] = [
                FakePred("rhetorical", rng.choice([0.5, 0.65, 0.75, 0.85, 0.95]))
                if rng.random() < 0.5
                else FakePred(None, None)
                for _ in range(n)
            ]
        rows = sweep_confidence(preds, counts)
        ns = [r["n_questions"] for r in rows]
        assert ns == sorted(ns, reverse=True)
        assert [r["threshold"] for r in rows] == [0.6, 0.7, 0.8]

    def test_confidence_inclusive_at_threshold(self):
        preds = {"a": [FakePred("tag", 0.7)]}
        rows = sweep_confidence(preds, {"a": 2}, thresholds=(0.7,))
        assert rows[0]["n_questions"] == 1
        assert rows[0]["mean_interrogative_index"] == pytest.approx(0.5)

    def test_similarity_hand_computed(self):
        rows = [
            qa_row(0, True, answer_sim=0.9, answer_has_quotes=True),
            qa_row(1, True, answer_sim=0.5),
            qa_row(2, False, answer_sim=0.2),
            qa_row(3, False, answer_sim=None),
        ]
        out = sweep_similarity(rows, thresholds=(0.05, 0.40, 0.80, 0.95))
        by = {r["threshold"]: r for r in out}
        assert by[0.05]["pct_answered"] == pytest.approx(75.0)
        assert by[0.40]["pct_answered"] == pytest.approx(50.0)
        assert by[0.80]["pct_answered"] == pytest.approx(25.0)
        assert by[0.95]["pct_answered"] == pytest.approx(0.0)
        assert by[0.80]["pct_via_quotes"] == pytest.approx(25.0)
        assert by[0.40]["pct_internal"] == pytest.approx(25.0)

    def test_similarity_answered_unanswered_complement(self):
        rows = [qa_row(i, i % 2 == 0, answer_sim=0.1 * i) for i in range(1, 9)]
        for r in sweep_similarity(rows):
            assert r["pct_answered"] + r["pct_unanswered"] == pytest.approx(100.0)

    def test_answered_row_without_similarity_rejected(self):
        bad = [{"sent_id": 0, "has_answer": True, "answer_sim": None,
                "answer_has_quotes": False, "question_has_quotes": False,
                "stance": "tag"}]
        with pytest.raises(DataError):
            sweep_similarity(bad)


def make_group_rows(n_articles, stratum_of, answered_share=0.7, seed=11):
    rng = random.Random(seed)
    rows = []
    for i in range(n_articles):
        aid = f"art{i:03d}"
        stratum_of[aid] = "local" if i % 2 == 0 else "national"
        for g in range(rng.randint(1, 3)):
            rows.append(
                {
                    "article_id": aid,
                    "group_id": g,
                    "has_answer": rng.random() < answered_share,
                    "question_text": f"Q {aid} {g} ?",
                    "answer_text": f"A {aid} {g}." if rng.random() < 0.9 else None,
                }
            )
    return rows


class TestSpotCheck:
    def test_default_quota_shape(self):
        strata = {}
        rows = make_group_rows(400, strata)
        picked = spot_check_sample(rows, strata, seed=5)
        assert len(picked) == 50
        assert sum(1 for p in picked if p.predicted_answered) == 40
        cell = {}
        for p in picked:
            cell[(p.stratum, p.predicted_answered)] = cell.get(
                (p.stratum, p.predicted_answered), 0) + 1
        assert cell == {("local", True): 20, ("local", False): 5,
                        ("national", True): 20, ("national", False): 5}

    def test_articles_distinct(self):
        strata = {}
        rows = make_group_rows(300, strata)
        picked = spot_check_sample(rows, strata, seed=9)
        ids = [p.article_id for p in picked]
        assert len(ids) == len(set(ids))

    def test_deterministic_in_seed(self):
        strata = {}
        rows = make_group_rows(200, strata)
        a = spot_check_sample(rows, strata, seed=1)
        b = spot_check_sample(rows, strata, seed=1)
        c = spot_check_sample(rows, strata, seed=2)
        assert a == b
        assert a != c

    def test_verdict_fields_blank(self):
        strata = {}
        rows = make_group_rows(200, strata)
        for p in spot_check_sample(rows, strata, seed=4):
            assert p.verdict == "" and p.notes == ""

    def test_too_few_articles_rejected(self):
        strata = {}
        rows = make_group_rows(30, strata)
        with pytest.raises(DataError):
            spot_check_sample(rows, strata, seed=0)

    def test_three_strata_rejected(self):
        strata = {"a": "x", "b": "y", "c": "z"}
        with pytest.raises(DataError):
            spot_check_sample([], strata, seed=0)

    def test_understocked_cell_warns_not_raises(self, caplog):
        strata = {}
        # All groups answered, so unanswered cells come up short.
        rows = make_group_rows(200, strata, answered_share=1.0)
        with caplog.at_level(logging.WARNING):
            picked = spot_check_sample(rows, strata, seed=3)
        assert sum(1 for p in picked if p.predicted_answered) == 40
        assert sum(1 for p in picked if not p.predicted_answered) == 0
        assert any("spot check" in r.message for r in caplog.records)
