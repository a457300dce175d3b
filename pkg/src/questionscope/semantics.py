"""Entity annotation of question contexts and answer spans, addressivity
typing, and topic-to-meta-topic joining."""
import csv
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

from .corpus import ArticleRecord, DataError, SentenceRecord
from .providers import NER_LABELS, NerProvider

log = logging.getLogger(__name__)

SCORE_THRESHOLD = 0.5

ACTOR_LABELS = frozenset({"person", "organization", "location"})
GROUP_LABELS = frozenset(
    {"nationality or religious or political group", "generic social group", "public or audience"}
)

ADDRESSIVITY_CLASSES = ("actor-focused", "group-focused", "issue-focused")

META_TOPICS = (
    "professional sports",
    "national/local politics",
    "geopolitics",
    "local news",
    "lifestyle/entertainment",
    "faits divers",
    "business/economy",
    "technology",
)
UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class EntityMention:
    text: str
    label: str
    score: float
    start: int
    end: int

    def __post_init__(self):
        if self.label not in NER_LABELS:
            raise DataError(f"unknown entity label {self.label!r}")


def _parse_mentions(raw: Sequence[dict], context_len: int, threshold: float) -> List[EntityMention]:
    mentions = []
    for m in raw:
        score = float(m["score"])
        if score < threshold:
            continue
        start, end = int(m["start"]), int(m["end"])
        if not (0 <= start < end <= context_len):
            log.warning("dropping mention %r: offsets (%d,%d) out of bounds", m.get("text"), start, end)
            continue
        mentions.append(
            EntityMention(text=str(m["text"]), label=str(m["label"]), score=score,
                          start=start, end=end)
        )
    return mentions


def question_context(sentences: Sequence[SentenceRecord], sent_id: int) -> str:
    """Previous sentence (if any) + question + next sentence (if any)."""
    by_id = {s.sent_id: s.text for s in sentences}
    parts = [by_id[i] for i in (sent_id - 1, sent_id, sent_id + 1) if i in by_id]
    return " ".join(parts)


def annotate_question(
    sentences: Sequence[SentenceRecord],
    sent_id: int,
    provider: NerProvider,
    threshold: float = SCORE_THRESHOLD,
) -> List[EntityMention]:
    context = question_context(sentences, sent_id)
    raw = provider.annotate([context])[0]
    return _parse_mentions(raw, len(context), threshold)


def annotate_answer(
    answer_span_text: str,
    provider: NerProvider,
    threshold: float = SCORE_THRESHOLD,
) -> List[EntityMention]:
    """NER over the bare span text, no extra context."""
    raw = provider.annotate([answer_span_text])[0]
    return _parse_mentions(raw, len(answer_span_text), threshold)


def annotate_batch(
    texts: Sequence[str], provider: NerProvider, threshold: float = SCORE_THRESHOLD
) -> List[List[EntityMention]]:
    raw = provider.annotate(texts)
    return [_parse_mentions(r, len(t), threshold) for t, r in zip(texts, raw)]


def classify_addressivity(mentions: Sequence[EntityMention]) -> str:
    """Pure function of the retained label multiset.

    actor-focused if any person/organization/location; else group-focused
    if any collective label; else issue-focused (events alone are neither
    human nor collective).
    """
    labels = {m.label for m in mentions}
    if labels & ACTOR_LABELS:
        return "actor-focused"
    if labels & GROUP_LABELS:
        return "group-focused"
    return "issue-focused"


def load_meta_topic_map(path: str) -> Dict[int, str]:
    """Two-column CSV `topic_id,meta_topic`; duplicate ids are an error."""
    mapping: Dict[int, str] = {}
    with open(path, encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"topic_id", "meta_topic"}.issubset(reader.fieldnames):
            raise DataError("meta-topic map header must be topic_id,meta_topic")
        for row in reader:
            tid = int(row["topic_id"])
            if tid in mapping:
                raise DataError(f"duplicate topic_id {tid} in meta-topic map")
            mapping[tid] = row["meta_topic"].strip()
    return mapping


def join_meta_topics(
    articles: Iterable[ArticleRecord], mapping: Dict[int, str]
) -> List[ArticleRecord]:
    """Annotate each article with its meta-topic, or "unassigned"."""
    out = []
    for article in articles:
        if article.topic_id is not None and article.topic_id in mapping:
            article.meta_topic = mapping[article.topic_id]
        else:
            article.meta_topic = UNASSIGNED
        out.append(article)
    return out
