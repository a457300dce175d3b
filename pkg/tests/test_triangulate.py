import collections
import random

import pytest

from questionscope.corpus import DataError
from questionscope.providers import STANCE_LABELS
from questionscope.triangulate import (
    AgreementReport,
    GoldUnit,
    SamplePlan,
    align_spans,
    cohen_kappa,
    compute_agreement,
    corpus_jaccard,
    dominant_stance,
    evaluate_binary,
    evaluate_stance,
    f1_from_pr,
    gold_positive_sentences,
    span_jaccard,
    stratified_sample,
)


def unit(start, end, annotator="A", article="art1", function="information-seeking",
         unit_id=None):
    return GoldUnit(
        article_id=article,
        unit_id=unit_id or f"{annotator}-{start}-{end}",
        annotator_id=annotator,
        start=start,
        end=end,
        text="x" * (end - start),
        interactional_context="non-interview",
        addressee="audience",
        form="wh",
        function=function,
        macro_axes=("Framing/agenda-setting",),
        answer_realized=False,
    )


class TestGoldUnit:
    def test_round_trip(self):
        u = unit(3, 20)
        assert GoldUnit.from_dict(u.to_dict()) == u

    def test_bad_span_rejected(self):
        with pytest.raises(DataError):
            unit(10, 10)

    def test_bad_function_rejected(self):
        with pytest.raises(DataError):
            unit(0, 5, function="sarcastic")

    def test_macro_axes_limit(self):
        with pytest.raises(DataError):
            GoldUnit(
                article_id="a", unit_id="u", annotator_id="A", start=0, end=4,
                text="abcd", interactional_context="interview",
                addressee="individual", form="polar",
                function="rhetorical",
                macro_axes=("Authority positioning", "Legitimation",
                            "Stance/alignment"),
                answer_realized=True,
            )


class TestSpanJaccard:
    def test_hand_computed(self):
        # [0,10) vs [5,15): intersection 5 chars, union 15, so 1/3.
        assert span_jaccard((0, 10), (5, 15)) == pytest.approx(5 / 15)

    def test_identical_spans(self):
        assert span_jaccard((4, 9), (4, 9)) == 1.0

    def test_disjoint_spans(self):
        assert span_jaccard((0, 5), (5, 10)) == 0.0

    def test_containment(self):
        # [0,12) contains [3,6): intersection 3, union 12.
        assert span_jaccard((0, 12), (3, 6)) == pytest.approx(0.25)


class TestAlignment:
    def test_one_to_one_best_match(self):
        a = [unit(0, 10, "A"), unit(20, 30, "A")]
        b = [unit(2, 10, "B"), unit(21, 29, "B")]
        al = align_spans(a, b)
        assert len(al.pairs) == 2
        assert al.unmatched_a == [] and al.unmatched_b == []
        assert al.pairs[0][0].start == 0 and al.pairs[0][1].start == 2

    def test_zero_overlap_never_matches(self):
        al = align_spans([unit(0, 5, "A")], [unit(100, 110, "B")])
        assert al.pairs == []
        assert len(al.unmatched_a) == 1 and len(al.unmatched_b) == 1

    def test_greedy_takes_best_first(self):
        # B's single span overlaps both A spans; it must pair with the
        # higher-Jaccard one and leave the other unmatched.
        a = [unit(0, 10, "A"), unit(8, 30, "A")]
        b = [unit(8, 28, "B")]
        al = align_spans(a, b)
        assert len(al.pairs) == 1
        assert al.pairs[0][0].start == 8
        assert al.unmatched_a[0].start == 0

    def test_optimal_can_beat_greedy(self):
        # Greedy pairs A1-B1 (jac 0.9) leaving A2 and B2 unmatched at 0.
        # Optimal pairs A1-B2 and A2-B1 for a higher total.
        a = [unit(0, 100, "A"), unit(95, 200, "A")]
        b = [unit(0, 110, "B"), unit(0, 99, "B")]
        greedy = align_spans(a, b)
        optimal = align_spans(a, b, optimal=True)
        assert sum(j for _, _, j in optimal.pairs) >= sum(
            j for _, _, j in greedy.pairs)
        assert len(optimal.pairs) == 2

    def test_deterministic(self):
        rng = random.Random(0)
        a = [unit(s, s + rng.randint(5, 30), "A") for s in range(0, 300, 25)]
        b = [unit(s + 3, s + 3 + rng.randint(5, 30), "B") for s in range(0, 300, 25)]
        first = align_spans(a, b)
        second = align_spans(a, b)
        assert first.pairs == second.pairs


class TestCorpusJaccard:
    def test_hand_computed_two_articles(self):
        # Article 1: matched pair [0,10) vs [5,15), inter 5 union 15.
        # Article 2: matched pair [0,8) vs [0,8), inter 8 union 8,
        # plus one unmatched A unit of length 4 (union only).
        al1 = align_spans([unit(0, 10, "A")], [unit(5, 15, "B")])
        al2 = align_spans([unit(0, 8, "A", "art2"), unit(50, 54, "A", "art2")],
                          [unit(0, 8, "B", "art2")])
        # (5 + 8) / (15 + 8 + 4) = 13/27
        assert corpus_jaccard([al1, al2]) == pytest.approx(13 / 27)

    def test_perfect_agreement(self):
        al = align_spans([unit(0, 9, "A")], [unit(0, 9, "B")])
        assert corpus_jaccard([al]) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            corpus_jaccard([])


def oracle_kappa(pairs):
    """Direct textbook computation, kept independent of the implementation."""
    n = len(pairs)
    observed = sum(1 for a, b in pairs if a == b) / n
    count_a = collections.Counter(a for a, _ in pairs)
    count_b = collections.Counter(b for _, b in pairs)
    expected = sum(
        (count_a[l] / n) * (count_b[l] / n) for l in set(count_a) | set(count_b)
    )
    return (observed - expected) / (1 - expected)


class TestKappa:
    def test_against_oracle_random_pairs(self):
        rng = random.Random(17)
        for _ in range(50):
            labels = rng.sample(STANCE_LABELS, k=rng.randint(2, 4))
            pairs = [(rng.choice(labels), rng.choice(labels)) for _ in range(40)]
            if all(a == b for a, b in pairs):
                continue
            assert cohen_kappa(pairs) == pytest.approx(oracle_kappa(pairs), abs=1e-12)

    def test_hand_computed_example(self):
        # 2x2 case: p_o = 0.7, marginals A: 0.5/0.5, B: 0.6/0.4,
        # p_e = 0.5*0.6 + 0.5*0.4 = 0.5, kappa = 0.4.
        pairs = (
            [("rhetorical", "rhetorical")] * 4
            + [("rhetorical", "tag")] * 1
            + [("tag", "rhetorical")] * 2
            + [("tag", "tag")] * 3
        )
        assert cohen_kappa(pairs) == pytest.approx(0.4)

    def test_perfect_single_label(self):
        assert cohen_kappa([("tag", "tag")] * 5) == 1.0

    def test_chance_level_is_zero(self):
        pairs = [("tag", "tag"), ("tag", "rhetorical"),
                 ("rhetorical", "tag"), ("rhetorical", "rhetorical")]
        assert cohen_kappa(pairs) == pytest.approx(0.0)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            cohen_kappa([])


class TestComputeAgreement:
    def test_report_fields(self):
        units = {
            "art1": ([unit(0, 10, "A", function="rhetorical")],
                     [unit(0, 10, "B", function="rhetorical")]),
            "art2": ([unit(5, 25, "A", "art2", function="tag")],
                     [unit(5, 25, "B", "art2", function="rhetorical")]),
        }
        rep = compute_agreement(units)
        assert isinstance(rep, AgreementReport)
        assert rep.n_articles == 2
        assert rep.n_matched_units == 2
        assert rep.jaccard_overlap == 1.0
        assert rep.label_accuracy == 0.5
        assert rep.confusion["tag"]["rhetorical"] == 1

    def test_no_matches_rejected(self):
        units = {"art1": ([unit(0, 5, "A")], [unit(50, 60, "B")])}
        with pytest.raises(DataError):
            compute_agreement(units)


class TestDominantStance:
    def test_plain_majority(self):
        assert dominant_stance({"rhetorical": 3, "tag": 1}) == "rhetorical"

    def test_tie_breaks_in_fixed_label_order(self):
        assert dominant_stance({"rhetorical": 2, "information-seeking": 2}) == (
            "information-seeking")

    def test_empty_is_no_question(self):
        assert dominant_stance({}) == "no-question"


def make_article_pool(n, seed=23, question_share=0.85):
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        counts = {}
        if rng.random() < question_share:
            for label in rng.sample(STANCE_LABELS, k=rng.randint(1, 3)):
                counts[label] = rng.randint(1, 6)
        rows.append(
            {
                "article_id": f"art{i:04d}",
                "source_stratum": "wire" if i % 2 else "regional",
                "stance_counts": counts,
            }
        )
    return rows


class TestStratifiedSample:
    def test_component_sizes_scaled_plan(self):
        plan = SamplePlan(main_eval=40, double_coded=10, extension_per_annotator=10)
        manifest = stratified_sample(make_article_pool(300), plan, seed=5)
        sizes = collections.Counter(m["component"] for m in manifest)
        assert sizes == {"main_eval": 40, "double": 10,
                         "extension-A": 10, "extension-B": 10}

    def test_source_strata_balanced(self):
        plan = SamplePlan(main_eval=40, double_coded=10, extension_per_annotator=10)
        manifest = stratified_sample(make_article_pool(300), plan, seed=5)
        for component in ("main_eval", "double", "extension-A", "extension-B"):
            strata = collections.Counter(
                m["source_stratum"] for m in manifest if m["component"] == component
            )
            assert strata["wire"] == strata["regional"]

    def test_no_article_in_two_components(self):
        plan = SamplePlan(main_eval=40, double_coded=10, extension_per_annotator=10)
        manifest = stratified_sample(make_article_pool(300), plan, seed=8)
        ids = [m["article_id"] for m in manifest]
        assert len(ids) == len(set(ids))

    def test_question_components_exclude_no_question(self):
        plan = SamplePlan(main_eval=20, double_coded=10, extension_per_annotator=10)
        manifest = stratified_sample(make_article_pool(300, question_share=0.7),
                                     plan, seed=2)
        for m in manifest:
            if m["component"] != "main_eval":
                assert m["dominant_stance"] != "no-question"

    def test_deterministic_in_seed(self):
        plan = SamplePlan(main_eval=20, double_coded=10, extension_per_annotator=10)
        pool = make_article_pool(200)
        assert stratified_sample(pool, plan, seed=4) == stratified_sample(
            pool, plan, seed=4)
        assert stratified_sample(pool, plan, seed=4) != stratified_sample(
            pool, plan, seed=5)

    def test_single_stratum_rejected(self):
        rows = [{"article_id": "a", "source_stratum": "wire", "stance_counts": {}}]
        with pytest.raises(DataError):
            stratified_sample(rows, SamplePlan(), seed=0)


class TestGoldProjection:
    def test_char_overlap_marks_sentence(self):
        offsets = {"art1": [(0, 0, 20), (1, 21, 40), (2, 41, 60)]}
        positives = gold_positive_sentences([unit(15, 30)], offsets)
        assert positives == {("art1", 0), ("art1", 1)}

    def test_boundary_touch_is_not_overlap(self):
        offsets = {"art1": [(0, 0, 20), (1, 20, 40)]}
        assert gold_positive_sentences([unit(0, 20)], offsets) == {("art1", 0)}


class TestEvaluation:
    def test_binary_hand_computed(self):
        all_s = {("a", i) for i in range(10)}
        gold = {("a", 0), ("a", 1), ("a", 2), ("a", 3)}
        pred = {("a", 0), ("a", 1), ("a", 2), ("a", 5)}
        out = evaluate_binary(pred, gold, all_s)
        assert out["precision"] == pytest.approx(0.75)
        assert out["recall"] == pytest.approx(0.75)
        assert out["accuracy"] == pytest.approx(0.8)
        assert out["null_flag"] is False

    def test_binary_degenerate_null_flag(self):
        all_s = {("a", 0), ("a", 1)}
        out = evaluate_binary(set(), set(), all_s)
        assert out["precision"] is None and out["null_flag"] is True
        assert out["accuracy"] == 1.0

    def test_stance_unconditional_counts_gated_as_misses(self):
        pairs = [("rhetorical", "rhetorical"), ("rhetorical", None)]
        out = evaluate_stance(pairs)
        stats = out["per_class"]["rhetorical"]
        assert stats["recall"] == pytest.approx(0.5)
        assert stats["support"] == 2

    def test_stance_conditional_excludes_none(self):
        pairs = [("rhetorical", "rhetorical"), ("rhetorical", None)]
        out = evaluate_stance(pairs, conditional=True)
        assert out["n_pairs"] == 1
        assert out["per_class"]["rhetorical"]["recall"] == 1.0
        row = out["confusion"]["rhetorical"]
        assert sum(row.values()) == pytest.approx(1.0)

    def test_conditional_rows_normalized(self):
        pairs = [("tag", "tag"), ("tag", "rhetorical"),
                 ("leading", "leading")]
        out = evaluate_stance(pairs, conditional=True)
        assert out["confusion"]["tag"]["tag"] == pytest.approx(0.5)
        assert "rhetorical" not in out["confusion"]

    def test_macro_f1_over_supported_classes(self):
        pairs = [("tag", "tag")] * 3 + [("echo-clarification", "tag")]
        out = evaluate_stance(pairs)
        # tag: P 3/4, R 1 -> F1 6/7. echo: R 0 with no predictions -> F1 None.
        assert out["per_class"]["tag"]["f1"] == pytest.approx(6 / 7)
        assert out["macro_f1"] == pytest.approx(6 / 7)

    def test_f1_from_pr_hand_value(self):
        assert f1_from_pr(0.76, 0.80) == pytest.approx(2 * 0.76 * 0.80 / 1.56)
