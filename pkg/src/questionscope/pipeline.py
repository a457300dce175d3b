"""Stage orchestration over an output directory of JSONL/CSV stage files.

Each stage reads the files its predecessors wrote and writes its own, so
any stage can be re-run in isolation and reruns with unchanged inputs and
seed are byte-identical.
"""
import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .answers import (
    QuoteMarkers,
    SearchConfig,
    embed_sentences,
    find_answer_span,
    group_questions,
    qa_records,
)
from .candidates import calibration_sample, detect_candidate, load_rules
from .config import PipelineConfig
from .corpus import (
    ArticleRecord,
    DataError,
    IngestStats,
    SentenceRecord,
    ingest_articles,
    load_ontology,
    segment,
    sentence_offsets,
    build_context,
)
from .jsonl import read_jsonl, write_jsonl
from .metrics import (
    compute_article_indices,
    spot_check_sample,
    stance_answerability_table,
    stance_global_table,
    sweep_confidence,
    sweep_similarity,
)
from .providers import (
    STANCE_LABELS,
    BinaryLabelProvider,
    EmbeddingProvider,
    NerProvider,
    StanceLabelProvider,
    make_transport,
)
from .semantics import (
    EntityMention,
    annotate_batch,
    join_meta_topics,
    load_meta_topic_map,
    question_context,
)
from .stance import (
    Prediction,
    PseudoLabel,
    filter_high_confidence,
    export_training_set,
    infer_two_step,
    teacher_label,
)
from .triangulate import (
    GoldUnit,
    SamplePlan,
    compute_agreement,
    evaluate_binary,
    evaluate_stance,
    gold_positive_sentences,
    stratified_sample,
)

log = logging.getLogger(__name__)

ARTICLES = "articles.jsonl"
SENTENCES = "sentences.jsonl"
STATS = "ingest_stats.json"
CANDIDATES = "candidates.jsonl"
PSEUDO = "pseudo_labels.jsonl"
TRAIN_DIR = "train"
PREDICTIONS = "predictions.jsonl"
QA = "qa.jsonl"
GROUPS = "groups.jsonl"
ENTITIES = "entities.jsonl"
INDICES = "indices.jsonl"
EVAL = "eval.json"
SAMPLE = "sample_manifest.jsonl"
SPOT_CHECK = "spot_check.csv"


def _path(cfg: PipelineConfig, name: str) -> str:
    return os.path.join(cfg.out_dir, name)


def _require(cfg: PipelineConfig, name: str) -> str:
    path = _path(cfg, name)
    if not os.path.exists(path):
        raise DataError(f"missing prior stage output: {name} (run the earlier stage first)")
    return path


def _seed(cfg: PipelineConfig) -> int:
    if cfg.seed is None:
        raise DataError("this stage samples; --seed is required")
    return cfg.seed


def _transport(cfg: PipelineConfig, url: str, record: bool = False):
    return make_transport(url, cassette_path=cfg.cassette, record=record,
                          seed=cfg.seed or 0)


def _load_sentences_by_article(cfg: PipelineConfig) -> Dict[str, List[SentenceRecord]]:
    by_article: Dict[str, List[SentenceRecord]] = {}
    for row in read_jsonl(_require(cfg, SENTENCES)):
        by_article.setdefault(row["article_id"], []).append(
            SentenceRecord(row["article_id"], row["sent_id"], row["text"])
        )
    for sents in by_article.values():
        sents.sort(key=lambda s: s.sent_id)
    return by_article


def _load_articles(cfg: PipelineConfig) -> List[Dict]:
    return list(read_jsonl(_require(cfg, ARTICLES)))


def _map_articles(cfg: PipelineConfig, items: Sequence, fn) -> List:
    """Run fn over article-level work items, optionally in parallel; callers
    re-sort outputs so thread count never changes the files."""
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# --- stages --------------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig) -> IngestStats:
    if not cfg.articles:
        raise DataError("ingest requires an articles file")
    ontology = load_ontology(cfg.ontology) if cfg.ontology else {}
    topic_map = load_meta_topic_map(cfg.meta_topic_map) if cfg.meta_topic_map else {}
    stats = IngestStats()
    article_rows: List[Dict] = []
    sentence_rows: List[Dict] = []
    for article in ingest_articles(cfg.articles, ontology, lenient=cfg.lenient,
                                   stats=stats):
        (article,) = join_meta_topics([article], topic_map)
        sentences = segment(article)
        offsets = sentence_offsets(article, sentences)
        article_rows.append(
            {
                "article_id": article.article_id,
                "source": article.source,
                "published_at": article.published_at,
                "country_region": article.outlet.country_region if article.outlet else None,
                "scale": article.outlet.scale if article.outlet else None,
                "type": article.outlet.type if article.outlet else None,
                "topic_id": article.topic_id,
                "meta_topic": article.meta_topic,
                "n_sentences": len(sentences),
                "offsets": [list(o) for o in offsets],
                "text": article.text,
            }
        )
        sentence_rows.extend(
            {"article_id": s.article_id, "sent_id": s.sent_id, "text": s.text}
            for s in sentences
        )
    article_rows.sort(key=lambda r: r["article_id"])
    sentence_rows.sort(key=lambda r: (r["article_id"], r["sent_id"]))
    write_jsonl(_path(cfg, ARTICLES), article_rows)
    write_jsonl(_path(cfg, SENTENCES), sentence_rows)
    with open(_path(cfg, STATS), "w", encoding="utf-8") as f:
        json.dump(asdict(stats), f, sort_keys=True, indent=2)
        f.write("\n")
    return stats


def stage_candidates(cfg: PipelineConfig) -> Dict[str, int]:
    rules = load_rules()
    seed = _seed(cfg)
    records = []
    non_candidates: List[Tuple[str, int]] = []
    for row in read_jsonl(_require(cfg, SENTENCES)):
        rec = detect_candidate(
            SentenceRecord(row["article_id"], row["sent_id"], row["text"]), rules
        )
        records.append(rec)
        if not rec.is_candidate:
            non_candidates.append((rec.article_id, rec.sent_id))
    n_candidates = sum(1 for r in records if r.is_candidate)
    picks = calibration_sample(non_candidates, n_candidates, seed,
                               fraction=cfg.calibration_fraction)
    rows = [
        {
            "article_id": r.article_id,
            "sent_id": r.sent_id,
            "is_candidate": r.is_candidate,
            "matched_rules": sorted(r.matched_rules),
            "calibration_pick": (r.article_id, r.sent_id) in picks,
        }
        for r in records
    ]
    rows.sort(key=lambda r: (r["article_id"], r["sent_id"]))
    write_jsonl(_path(cfg, CANDIDATES), rows)
    return {"candidates": n_candidates, "calibration_picks": len(picks)}


def stage_pseudo_label(cfg: PipelineConfig) -> Dict[str, int]:
    by_article = _load_sentences_by_article(cfg)
    selected = [
        (row["article_id"], row["sent_id"])
        for row in read_jsonl(_require(cfg, CANDIDATES))
        if row["is_candidate"] or row["calibration_pick"]
    ]
    windows = [
        build_context(by_article[aid], sid, cfg.classify_radius)
        for aid, sid in sorted(selected)
    ]
    binary_provider = BinaryLabelProvider(_transport(cfg, cfg.binary_url))
    stance_provider = StanceLabelProvider(_transport(cfg, cfg.stance_url))
    binary_labels = teacher_label(windows, "binary", binary_provider,
                                  max_in_flight=cfg.threads)
    positive = {
        (p.article_id, p.sent_id)
        for p in binary_labels
        if p.error is None and p.is_interrogative
        and p.binary_confidence >= cfg.binary_gate
    }
    stance_windows = [w for w in windows if (w.article_id, w.sent_id) in positive]
    stance_labels = teacher_label(stance_windows, "stance", stance_provider,
                                  max_in_flight=cfg.threads)
    stance_by_key = {(p.article_id, p.sent_id): p for p in stance_labels}
    rows = []
    for b in binary_labels:
        s = stance_by_key.get((b.article_id, b.sent_id))
        rows.append(
            {
                "article_id": b.article_id,
                "sent_id": b.sent_id,
                "context_text": b.context_text,
                "is_interrogative": b.is_interrogative,
                "binary_confidence": b.binary_confidence,
                "stance": s.stance if s else None,
                "stance_confidence": s.stance_confidence if s else None,
                "snapped": b.snapped or bool(s and s.snapped),
                "error": b.error or (s.error if s else None),
            }
        )
    rows.sort(key=lambda r: (r["article_id"], r["sent_id"]))
    write_jsonl(_path(cfg, PSEUDO), rows)
    return {"labeled": len(rows), "stance_labeled": len(stance_labels)}


def _load_pseudo_labels(cfg: PipelineConfig) -> List[PseudoLabel]:
    labels = []
    for row in read_jsonl(_require(cfg, PSEUDO)):
        stance = row["stance"] if row["is_interrogative"] else None
        labels.append(
            PseudoLabel(
                article_id=row["article_id"],
                sent_id=row["sent_id"],
                context_text=row["context_text"],
                is_interrogative=row["is_interrogative"],
                binary_confidence=row["binary_confidence"],
                stance=stance,
                stance_confidence=row["stance_confidence"] if stance else None,
                snapped=row.get("snapped", False),
                error=row.get("error"),
            )
        )
    return labels


def stage_export_train(cfg: PipelineConfig) -> Dict[str, Dict]:
    labels = _load_pseudo_labels(cfg)
    seed = _seed(cfg)
    eval_ids = set()
    if cfg.gold and os.path.exists(cfg.gold):
        eval_ids = {row["article_id"] for row in read_jsonl(cfg.gold)}
    out_dir = _path(cfg, TRAIN_DIR)
    manifests = {}
    for mode in ("binary", "stance"):
        kept = list(filter_high_confidence(labels, cfg.teacher_keep, mode))
        manifest = export_training_set(
            kept, eval_ids, out_dir, mode=mode,
            holdout_fraction=cfg.holdout_fraction, seed=seed,
        )
        manifests[mode] = asdict(manifest)
    return manifests


def stage_infer(cfg: PipelineConfig) -> int:
    by_article = _load_sentences_by_article(cfg)
    binary_provider = BinaryLabelProvider(_transport(cfg, cfg.binary_url))
    stance_provider = StanceLabelProvider(_transport(cfg, cfg.stance_url))

    def run(article_id: str) -> List[Prediction]:
        sentences = by_article[article_id]
        windows = [
            build_context(sentences, s.sent_id, cfg.classify_radius)
            for s in sentences
        ]
        return infer_two_step(windows, binary_provider, stance_provider,
                              gate=cfg.binary_gate)

    results = _map_articles(cfg, sorted(by_article), run)
    rows = [asdict(p) for preds in results for p in preds]
    rows.sort(key=lambda r: (r["article_id"], r["sent_id"]))
    write_jsonl(_path(cfg, PREDICTIONS), rows)
    return len(rows)


def _load_predictions(cfg: PipelineConfig) -> Dict[str, List[Prediction]]:
    by_article: Dict[str, List[Prediction]] = {}
    for row in read_jsonl(_require(cfg, PREDICTIONS)):
        by_article.setdefault(row["article_id"], []).append(Prediction(**row))
    return by_article


def stage_answers(cfg: PipelineConfig) -> Dict[str, int]:
    by_article = _load_sentences_by_article(cfg)
    preds = _load_predictions(cfg)
    embed_provider = EmbeddingProvider(_transport(cfg, cfg.embed_url))
    search_cfg = SearchConfig(
        horizon=cfg.horizon,
        window_lengths=tuple(cfg.window_lengths),
        similarity_threshold=cfg.similarity_threshold,
        stance_gate=cfg.stance_gate,
    )
    markers = QuoteMarkers()

    def run(article_id: str):
        sentences = by_article[article_id]
        article_preds = preds.get(article_id, [])
        vectors = embed_sentences(sentences, embed_provider, radius=cfg.embed_radius)
        groups, _ = group_questions(article_preds, vectors, gate=cfg.stance_gate)
        spans = {
            g.group_id: find_answer_span(g, vectors, search_cfg,
                                         sentences=sentences, quote_markers=markers)
            for g in groups
        }
        qa = qa_records(sentences, article_preds, groups, spans, quote_markers=markers)
        text_by_id = {s.sent_id: s.text for s in sentences}
        group_rows = [
            {
                "article_id": article_id,
                "group_id": g.group_id,
                "sent_ids": list(g.sent_ids),
                "has_answer": spans[g.group_id].found,
                "answer_sim": spans[g.group_id].similarity,
                "answer_start": spans[g.group_id].start,
                "answer_len": spans[g.group_id].length,
                "question_text": " ".join(text_by_id[i] for i in g.sent_ids),
                "answer_text": spans[g.group_id].text,
                "answer_has_quotes": spans[g.group_id].has_quote_markers,
            }
            for g in groups
        ]
        return qa, group_rows

    results = _map_articles(cfg, sorted(by_article), run)
    qa_rows = [r for qa, _ in results for r in qa]
    group_rows = [r for _, groups_part in results for r in groups_part]
    qa_rows.sort(key=lambda r: (r["article_id"], r["sent_id"]))
    group_rows.sort(key=lambda r: (r["article_id"], r["group_id"]))
    write_jsonl(_path(cfg, QA), qa_rows)
    write_jsonl(_path(cfg, GROUPS), group_rows)
    return {"questions": len(qa_rows), "groups": len(group_rows)}


def stage_entities(cfg: PipelineConfig) -> Dict[str, int]:
    by_article = _load_sentences_by_article(cfg)
    qa_rows = list(read_jsonl(_require(cfg, QA)))
    group_rows = list(read_jsonl(_require(cfg, GROUPS)))
    provider = NerProvider(_transport(cfg, cfg.ner_url))

    question_items = [(r["article_id"], r["sent_id"]) for r in qa_rows]
    question_texts = [
        question_context(by_article[aid], sid) for aid, sid in question_items
    ]
    answer_items = [
        (r["article_id"], r["group_id"], r["answer_text"])
        for r in group_rows
        if r["has_answer"] and r["answer_text"]
    ]
    mentions_q = annotate_batch(question_texts, provider, threshold=cfg.ner_score)
    mentions_a = annotate_batch([t for _, _, t in answer_items], provider,
                                threshold=cfg.ner_score)

    def mention_dicts(mentions: List[EntityMention]) -> List[Dict]:
        return [
            {"text": m.text, "label": m.label, "score": m.score,
             "start": m.start, "end": m.end}
            for m in mentions
        ]

    rows = [
        {"article_id": aid, "kind": "question", "sent_id": sid,
         "mentions": mention_dicts(ms)}
        for (aid, sid), ms in zip(question_items, mentions_q)
    ] + [
        {"article_id": aid, "kind": "answer", "group_id": gid,
         "mentions": mention_dicts(ms)}
        for (aid, gid, _), ms in zip(answer_items, mentions_a)
    ]
    rows.sort(key=lambda r: (r["article_id"], r["kind"],
                             r.get("sent_id", r.get("group_id"))))
    write_jsonl(_path(cfg, ENTITIES), rows)
    return {"question_contexts": len(mentions_q), "answer_spans": len(mentions_a)}


def _load_question_entities(cfg: PipelineConfig) -> Dict[str, Dict[int, List[EntityMention]]]:
    out: Dict[str, Dict[int, List[EntityMention]]] = {}
    for row in read_jsonl(_require(cfg, ENTITIES)):
        if row["kind"] != "question":
            continue
        mentions = [EntityMention(**m) for m in row["mentions"]]
        out.setdefault(row["article_id"], {})[row["sent_id"]] = mentions
    return out


def stage_indices(cfg: PipelineConfig) -> int:
    articles = _load_articles(cfg)
    qa_by_article: Dict[str, List[Dict]] = {}
    for row in read_jsonl(_require(cfg, QA)):
        qa_by_article.setdefault(row["article_id"], []).append(row)
    entities = _load_question_entities(cfg)
    rows = []
    for art in articles:
        rec = compute_article_indices(
            art["article_id"],
            art["n_sentences"],
            qa_by_article.get(art["article_id"], []),
            entities.get(art["article_id"], {}),
        )
        rows.append(asdict(rec))
    rows.sort(key=lambda r: r["article_id"])
    write_jsonl(_path(cfg, INDICES), rows)
    return len(rows)


# --- sweeps, sampling, evaluation ------------------------------------------------


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def stage_sweep(cfg: PipelineConfig, kind: str) -> str:
    if kind == "confidence":
        preds = _load_predictions(cfg)
        counts = {a["article_id"]: a["n_sentences"] for a in _load_articles(cfg)}
        rows = sweep_confidence(preds, counts)
        path = _path(cfg, os.path.join("sweeps", "confidence.csv"))
        _write_csv(
            path,
            ["Confidence", "N questions", "% of sentences", "Mean ID_a"],
            [[r["threshold"], r["n_questions"], f"{r['pct_of_sentences']:.2f}",
              f"{r['mean_interrogative_index']:.4f}"] for r in rows],
        )
        return path
    if kind == "similarity":
        qa_rows = list(read_jsonl(_require(cfg, QA)))
        rows = sweep_similarity(qa_rows)
        path = _path(cfg, os.path.join("sweeps", "similarity.csv"))
        _write_csv(
            path,
            ["Similarity", "% answered", "% unanswered", "% internal", "% via quotes"],
            [[r["threshold"], f"{r['pct_answered']:.1f}", f"{r['pct_unanswered']:.1f}",
              f"{r['pct_internal']:.1f}", f"{r['pct_via_quotes']:.1f}"] for r in rows],
        )
        return path
    raise DataError(f"unknown sweep kind {kind!r}")


def _source_stratum(article_row: Mapping) -> str:
    # Two-corpus split used for sampling and spot checks: locally anchored
    # outlets vs everything else.
    return "local" if article_row.get("scale") in ("hyper-local", "regional") else "national"


def stage_sample(cfg: PipelineConfig, plan: Optional[SamplePlan] = None) -> int:
    seed = _seed(cfg)
    preds = _load_predictions(cfg)
    articles = _load_articles(cfg)
    pool = []
    for art in articles:
        counts: Dict[str, int] = {}
        for p in preds.get(art["article_id"], []):
            if p.stance is not None and (p.stance_conf or 0.0) >= cfg.stance_gate:
                counts[p.stance] = counts.get(p.stance, 0) + 1
        pool.append(
            {
                "article_id": art["article_id"],
                "source_stratum": _source_stratum(art),
                "stance_counts": counts,
            }
        )
    manifest = stratified_sample(pool, plan or SamplePlan(), seed)
    write_jsonl(_path(cfg, SAMPLE), manifest)
    return len(manifest)


def stage_spot_check(cfg: PipelineConfig, n_answered: int = 40,
                     n_unanswered: int = 10) -> str:
    seed = _seed(cfg)
    group_rows = list(read_jsonl(_require(cfg, GROUPS)))
    strata = {a["article_id"]: _source_stratum(a) for a in _load_articles(cfg)}
    picked = spot_check_sample(group_rows, strata, seed,
                               n_answered=n_answered, n_unanswered=n_unanswered)
    path = _path(cfg, SPOT_CHECK)
    _write_csv(
        path,
        ["stratum", "article_id", "group_id", "predicted_answered",
         "question_text", "answer_text", "verdict", "notes"],
        [[p.stratum, p.article_id, p.group_id, p.predicted_answered,
          p.question_text, p.answer_text or "", p.verdict, p.notes] for p in picked],
    )
    return path


def load_gold_units(path: str) -> List[GoldUnit]:
    return [GoldUnit.from_dict(row) for row in read_jsonl(path)]


def stage_eval(cfg: PipelineConfig) -> Dict:
    if not cfg.gold:
        raise DataError("eval requires a gold units file")
    units = load_gold_units(cfg.gold)
    articles = {a["article_id"]: a for a in _load_articles(cfg)}
    preds = _load_predictions(cfg)

    offsets = {
        aid: [tuple(o) for o in art["offsets"]] for aid, art in articles.items()
    }
    gold_articles = {u.article_id for u in units}
    gold_pos = gold_positive_sentences(units, offsets)
    all_sentences = {
        (aid, sid)
        for aid in gold_articles
        for sid, _, _ in offsets.get(aid, ())
    }
    predicted_pos = {
        (p.article_id, p.sent_id)
        for aid in gold_articles
        for p in preds.get(aid, [])
        if p.binary_label and p.binary_conf >= cfg.binary_gate
    }
    binary = evaluate_binary(predicted_pos, gold_pos, all_sentences)

    # Stance pairs: one per gold unit, predicted label taken from the first
    # overlapping sentence that carries a gated stance, None if no sentence does.
    pred_by_key = {
        (p.article_id, p.sent_id): p for ps in preds.values() for p in ps
    }
    pairs: List[Tuple[str, Optional[str]]] = []
    for unit in sorted(units, key=lambda u: (u.article_id, u.start, u.unit_id)):
        predicted = None
        for sid, start, end in offsets.get(unit.article_id, ()):
            if max(start, unit.start) >= min(end, unit.end):
                continue
            p = pred_by_key.get((unit.article_id, sid))
            if p and p.stance is not None and (p.stance_conf or 0.0) >= cfg.stance_gate:
                predicted = p.stance
                break
        pairs.append((unit.function, predicted))

    report = {
        "binary": binary,
        "stance_unconditional": evaluate_stance(pairs),
        "stance_conditional": evaluate_stance(pairs, conditional=True),
        "agreement": None,
    }
    by_article: Dict[str, Dict[str, List[GoldUnit]]] = {}
    for u in units:
        by_article.setdefault(u.article_id, {}).setdefault(u.annotator_id, []).append(u)
    double = {
        aid: tuple(anns[k] for k in sorted(anns))
        for aid, anns in by_article.items()
        if len(anns) == 2
    }
    if double:
        agreement = compute_agreement(double)
        report["agreement"] = {
            "n_articles": agreement.n_articles,
            "n_matched_units": agreement.n_matched_units,
            "jaccard_overlap": agreement.jaccard_overlap,
            "label_accuracy": agreement.label_accuracy,
            "kappa": agreement.kappa,
            "confusion": agreement.confusion,
        }
    with open(_path(cfg, EVAL), "w", encoding="utf-8") as f:
        json.dump(report, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    return report


# --- report tables ---------------------------------------------------------------

REPORT_TABLES = (
    "stance-global",
    "meta-topics",
    "outlets",
    "answerability",
    "dialogicity",
    "confidence-sensitivity",
    "similarity-sensitivity",
    "spot-check",
    "model-iaa",
    "stance-per-class",
    "confusion-matrix",
)


def _fmt(value: Optional[float], digits: int = 2) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def stage_report(cfg: PipelineConfig, table: str) -> str:
    out = os.path.join("reports", table + ".csv")
    path = _path(cfg, out)
    if table == "stance-global":
        qa_rows = list(read_jsonl(_require(cfg, QA)))
        rows = stance_global_table(qa_rows)
        _write_csv(path, ["Stance", "N", "% of interrogatives"],
                   [[r["stance"], r["n"], f"{r['pct_of_interrogatives']:.1f}"]
                    for r in rows])
    elif table == "outlets":
        articles = _load_articles(cfg)
        counts: Dict[Tuple, int] = {}
        for a in articles:
            key = (a["source"], a["country_region"] or "", a["scale"] or "",
                   a["type"] or "")
            counts[key] = counts.get(key, 0) + 1
        _write_csv(path, ["Source", "Country / region", "Scale", "Type", "Articles"],
                   [[*key, n] for key, n in sorted(counts.items())])
    elif table == "meta-topics":
        articles = _load_articles(cfg)
        indices = {r["article_id"]: r for r in read_jsonl(_require(cfg, INDICES))}
        entities = _load_question_entities(cfg)
        stats: Dict[str, Dict] = {}
        for a in articles:
            topic = a["meta_topic"] or "unassigned"
            s = stats.setdefault(topic, {"articles": 0, "id_sum": 0.0,
                                         "q": 0, "org": 0, "loc": 0, "event": 0})
            s["articles"] += 1
            s["id_sum"] += indices[a["article_id"]]["ID_a"]
            for mentions in entities.get(a["article_id"], {}).values():
                s["q"] += 1
                labels = {m.label for m in mentions}
                s["org"] += "organization" in labels
                s["loc"] += "location" in labels
                s["event"] += "event" in labels
        rows = []
        for topic in sorted(stats):
            s = stats[topic]
            q = s["q"] or 1
            rows.append([
                topic, s["articles"], f"{s['id_sum'] / s['articles']:.4f}",
                f"{100.0 * s['org'] / q:.1f}", f"{100.0 * s['loc'] / q:.1f}",
                f"{100.0 * s['event'] / q:.1f}",
            ])
        _write_csv(path, ["Meta-topic", "Articles", "Mean interrogative index",
                          "% questions with ORG", "% with LOC", "% with EVENT"], rows)
    elif table == "answerability":
        qa_rows = list(read_jsonl(_require(cfg, QA)))
        rows = stance_answerability_table(qa_rows)
        total = len(qa_rows)
        answered = sum(1 for r in qa_rows if r["has_answer"])
        body = [[r["stance"], r["n_questions"], f"{r['pct_answered']:.1f}"]
                for r in rows]
        body.append(["All stances", total,
                     f"{100.0 * answered / total:.1f}" if total else ""])
        _write_csv(path, ["Stance", "N questions", "% answered"], body)
    elif table == "dialogicity":
        qa_rows = list(read_jsonl(_require(cfg, QA)))
        total = len(qa_rows)
        quotes = sum(1 for r in qa_rows if r["has_answer"] and r["answer_has_quotes"])
        answered = sum(1 for r in qa_rows if r["has_answer"])
        cells = [
            ("Unanswered", total - answered),
            ("Answered (internal)", answered - quotes),
            ("Answered (via quotes)", quotes),
        ]
        _write_csv(path, ["Category", "N", "% of interrogatives"],
                   [[name, n, f"{100.0 * n / total:.1f}" if total else ""]
                    for name, n in cells])
    elif table == "confidence-sensitivity":
        return stage_sweep(cfg, "confidence")
    elif table == "similarity-sensitivity":
        return stage_sweep(cfg, "similarity")
    elif table == "spot-check":
        return stage_spot_check(cfg)
    elif table in ("model-iaa", "stance-per-class", "confusion-matrix"):
        with open(_require(cfg, EVAL), encoding="utf-8") as f:
            ev = json.load(f)
        if table == "model-iaa":
            b = ev["binary"]
            rows = [
                ["Evaluation sentences", b["n_sentences"]],
                ["Accuracy", _fmt(b["accuracy"])],
                ["Precision (interrogative)", _fmt(b["precision"])],
                ["Recall (interrogative)", _fmt(b["recall"])],
                ["F1 (interrogative)", _fmt(b["f1"])],
                ["Evaluation interrogatives", ev["stance_unconditional"]["n_pairs"]],
                ["Macro-F1", _fmt(ev["stance_unconditional"]["macro_f1"])],
                ["Micro-F1", _fmt(ev["stance_unconditional"]["micro_f1"])],
            ]
            agr = ev.get("agreement")
            if agr:
                rows += [
                    ["Double-coded articles", agr["n_articles"]],
                    ["Matched interrogative units", agr["n_matched_units"]],
                    ["Jaccard overlap (spans)", _fmt(agr["jaccard_overlap"])],
                    ["Accuracy (stance labels)", _fmt(agr["label_accuracy"])],
                    ["Cohen's kappa", _fmt(agr["kappa"])],
                ]
            _write_csv(path, ["Metric", "Value"], rows)
        elif table == "stance-per-class":
            per_class = ev["stance_unconditional"]["per_class"]
            rows = []
            for label in STANCE_LABELS:
                stats = per_class[label]
                rows.append([
                    label.capitalize(), _fmt(stats["precision"]),
                    _fmt(stats["recall"]), _fmt(stats["f1"]), stats["support"],
                ])
            _write_csv(path, ["Stance", "Precision", "Recall", "F1", "Support"], rows)
        else:
            matrix = ev["stance_conditional"]["confusion"]
            header = ["Gold \\ Predicted", *STANCE_LABELS]
            rows = [
                [gold, *[_fmt(matrix[gold][p]) for p in STANCE_LABELS]]
                for gold in STANCE_LABELS
                if gold in matrix
            ]
            _write_csv(path, header, rows)
    else:
        raise DataError(f"unknown report table {table!r}")
    return path
