"""Article-level indices, group aggregates, sensitivity sweeps, spot checks."""
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .corpus import DataError
from .semantics import EntityMention, classify_addressivity
from .stance import STANCE_LABELS

log = logging.getLogger(__name__)

SPOT_CHECK_VERDICTS = ("clear", "partial", "elsewhere", "none")


@dataclass
class ArticleIndexRecord:
    article_id: str
    S_a: int
    Q_a: int
    A_a: int
    ID_a: float
    Ans_a: Optional[float]
    share_unanswered: Optional[float]
    share_internal: Optional[float]
    share_external: Optional[float]
    addr_actor: Optional[float]
    addr_group: Optional[float]
    addr_issue: Optional[float]
    pers_flag_count: int
    q_quote_count: int


def compute_article_indices(
    article_id: str,
    sentence_count: int,
    qa_rows: Sequence[Mapping],
    question_entities: Optional[Mapping[int, Sequence[EntityMention]]] = None,
) -> ArticleIndexRecord:
    """Derive interrogativity, answerability, dialogicity, and addressivity
    for one article.

    Shares are fractions of Q_a and are None (like Ans_a) when the article
    has no questions. External = answered with quote markers in the answer
    span; internal = answered without.
    """
    if sentence_count <= 0:
        raise DataError(f"article {article_id}: sentence count must be positive")
    q = len(qa_rows)
    a = sum(1 for r in qa_rows if r["has_answer"])
    record = ArticleIndexRecord(
        article_id=article_id,
        S_a=sentence_count,
        Q_a=q,
        A_a=a,
        ID_a=q / sentence_count,
        Ans_a=None,
        share_unanswered=None,
        share_internal=None,
        share_external=None,
        addr_actor=None,
        addr_group=None,
        addr_issue=None,
        pers_flag_count=0,
        q_quote_count=sum(1 for r in qa_rows if r["question_has_quotes"]),
    )
    if q == 0:
        return record
    record.Ans_a = a / q
    external = sum(1 for r in qa_rows if r["has_answer"] and r["answer_has_quotes"])
    internal = a - external
    record.share_unanswered = (q - a) / q
    record.share_internal = internal / q
    record.share_external = external / q
    if question_entities is not None:
        counts = {"actor-focused": 0, "group-focused": 0, "issue-focused": 0}
        persons = 0
        for r in qa_rows:
            mentions = question_entities.get(r["sent_id"], [])
            counts[classify_addressivity(mentions)] += 1
            if any(m.label == "person" for m in mentions):
                persons += 1
        record.addr_actor = counts["actor-focused"] / q
        record.addr_group = counts["group-focused"] / q
        record.addr_issue = counts["issue-focused"] / q
        record.pers_flag_count = persons
    return record


# --- descriptive aggregation -------------------------------------------------


def nearest_rank(values: Sequence[float], percentile: float) -> float:
    """Nearest-rank percentile for cross-platform determinism."""
    if not values:
        raise ValueError("empty values")
    ordered = sorted(values)
    rank = max(1, math.ceil(percentile / 100.0 * len(ordered)))
    return ordered[rank - 1]


@dataclass
class AggregateRow:
    dimension: str
    group: str
    n_articles: int
    mean: float
    median: float
    sd: float
    p90: float


DIMENSIONS = ("outlet", "country_region", "scale", "meta_topic")


def aggregate(
    records: Sequence[ArticleIndexRecord],
    dimension: str,
    group_of: Mapping[str, str],
    metric: str = "ID_a",
) -> List[AggregateRow]:
    """Per-group mean/median/SD/P90 of an article-level metric.

    Articles whose metric is None (e.g. Ans_a with Q_a = 0) are excluded;
    empty groups are omitted rather than emitted as NaN. SD is the
    population standard deviation.
    """
    if dimension not in DIMENSIONS:
        raise DataError(f"unknown aggregation dimension {dimension!r}")
    by_group: Dict[str, List[float]] = {}
    for rec in records:
        value = getattr(rec, metric)
        if value is None:
            continue
        group = group_of.get(rec.article_id)
        if group is None:
            continue
        by_group.setdefault(group, []).append(value)
    rows = []
    for group in sorted(by_group):
        vals = by_group[group]
        n = len(vals)
        mean = sum(vals) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in vals) / n)
        rows.append(
            AggregateRow(
                dimension=dimension,
                group=group,
                n_articles=n,
                mean=mean,
                median=nearest_rank(vals, 50),
                sd=sd,
                p90=nearest_rank(vals, 90),
            )
        )
    return rows


def stance_global_table(qa_rows: Sequence[Mapping]) -> List[Dict]:
    """Stance, N, % of interrogatives over all question sentences."""
    counts: Dict[str, int] = {}
    for r in qa_rows:
        counts[r["stance"]] = counts.get(r["stance"], 0) + 1
    total = sum(counts.values())
    return [
        {
            "stance": s,
            "n": counts.get(s, 0),
            "pct_of_interrogatives": 100.0 * counts.get(s, 0) / total if total else 0.0,
        }
        for s in STANCE_LABELS
    ]


def stance_answerability_table(qa_rows: Sequence[Mapping]) -> List[Dict]:
    """Per-stance N questions and % answered (answered status propagated
    from the question group to every member sentence)."""
    n: Dict[str, int] = {}
    answered: Dict[str, int] = {}
    for r in qa_rows:
        n[r["stance"]] = n.get(r["stance"], 0) + 1
        if r["has_answer"]:
            answered[r["stance"]] = answered.get(r["stance"], 0) + 1
    return [
        {
            "stance": s,
            "n_questions": n.get(s, 0),
            "pct_answered": 100.0 * answered.get(s, 0) / n[s] if n.get(s) else 0.0,
        }
        for s in STANCE_LABELS
    ]


# --- sensitivity sweeps -------------------------------------------------------


def sweep_confidence(
    predictions_by_article: Mapping[str, Sequence],
    sentence_counts: Mapping[str, int],
    thresholds: Sequence[float] = (0.6, 0.7, 0.8),
) -> List[Dict]:
    """Question counts and mean interrogative density at each stance-confidence
    threshold. N is non-increasing in the threshold by construction."""
    total_sentences = sum(sentence_counts.values())
    rows = []
    for t in thresholds:
        n_questions = 0
        densities = []
        for article_id, preds in predictions_by_article.items():
            q = sum(
                1
                for p in preds
                if p.stance is not None and (p.stance_conf or 0.0) >= t
            )
            n_questions += q
            densities.append(q / sentence_counts[article_id])
        rows.append(
            {
                "threshold": t,
                "n_questions": n_questions,
                "pct_of_sentences": 100.0 * n_questions / total_sentences if total_sentences else 0.0,
                "mean_interrogative_index": sum(densities) / len(densities) if densities else 0.0,
            }
        )
    return rows


def sweep_similarity(
    qa_rows: Sequence[Mapping],
    thresholds: Sequence[float] = (0.05, 0.40, 0.80, 0.95, 0.975),
) -> List[Dict]:
    """Re-derive answered/dialogicity shares from stored best scores without
    re-searching. Rows originally below every threshold keep their best
    sub-threshold score; rows with no candidate window have None."""
    for r in qa_rows:
        if r["has_answer"] and r["answer_sim"] is None:
            raise DataError("answered QA row without a stored similarity")
    total = len(qa_rows)
    rows = []
    for t in thresholds:
        answered = [r for r in qa_rows if r["answer_sim"] is not None and r["answer_sim"] >= t]
        via_quotes = sum(1 for r in answered if r["answer_has_quotes"])
        internal = len(answered) - via_quotes
        rows.append(
            {
                "threshold": t,
                "pct_answered": 100.0 * len(answered) / total if total else 0.0,
                "pct_unanswered": 100.0 * (total - len(answered)) / total if total else 0.0,
                "pct_internal": 100.0 * internal / total if total else 0.0,
                "pct_via_quotes": 100.0 * via_quotes / total if total else 0.0,
            }
        )
    return rows


# --- manual spot-check sampling -----------------------------------------------


@dataclass
class SpotCheckRow:
    stratum: str
    article_id: str
    group_id: int
    predicted_answered: bool
    question_text: str
    answer_text: Optional[str]
    verdict: str = ""  # audit column, one of SPOT_CHECK_VERDICTS once filled
    notes: str = ""


def spot_check_sample(
    group_rows: Sequence[Mapping],
    strata: Mapping[str, str],
    seed: int,
    n_answered: int = 40,
    n_unanswered: int = 10,
) -> List[SpotCheckRow]:
    """Sample question groups for manual audit: n_answered + n_unanswered
    groups from distinct articles, split evenly across the two strata.

    ``group_rows`` carry one entry per question group with article_id,
    group_id, has_answer, question_text, answer_text. Understocked cells
    fall back to everything available, with a warning.
    """
    n_total = n_answered + n_unanswered
    stratum_names = sorted(set(strata.values()))
    if len(stratum_names) != 2:
        raise DataError(f"expected exactly two strata, got {stratum_names}")
    eligible = [r for r in group_rows if r["article_id"] in strata]
    if len({r["article_id"] for r in eligible}) < n_total:
        raise DataError(
            f"need {n_total} eligible articles, found {len({r['article_id'] for r in eligible})}"
        )

    rng = random.Random(seed)
    used_articles: set = set()
    picked: List[SpotCheckRow] = []
    quotas = []
    for stratum in stratum_names:
        quotas.append((stratum, True, n_answered // 2))
        quotas.append((stratum, False, n_unanswered // 2))
    for stratum, answered, quota in quotas:
        pool = sorted(
            (
                r
                for r in eligible
                if strata[r["article_id"]] == stratum and bool(r["has_answer"]) == answered
            ),
            key=lambda r: (r["article_id"], r["group_id"]),
        )
        rng.shuffle(pool)
        taken = 0
        for r in pool:
            if taken >= quota:
                break
            if r["article_id"] in used_articles:
                continue
            used_articles.add(r["article_id"])
            picked.append(
                SpotCheckRow(
                    stratum=stratum,
                    article_id=r["article_id"],
                    group_id=r["group_id"],
                    predicted_answered=answered,
                    question_text=r["question_text"],
                    answer_text=r.get("answer_text"),
                )
            )
            taken += 1
        if taken < quota:
            log.warning(
                "spot check: stratum %r %s cell has only %d of %d requested groups",
                stratum, "answered" if answered else "unanswered", taken, quota,
            )
    picked.sort(key=lambda r: (r.stratum, not r.predicted_answered, r.article_id))
    return picked
