"""Question grouping and embedding-based answer-span search.

Consecutive gated question sentences form a group; the group's unit-norm
mean embedding is compared against every contiguous window (lengths 1-5,
fully inside the 15-sentence horizon after the group) of subsequent
sentences, using prefix sums for O(1) window means. The best window wins
if its cosine reaches the similarity threshold; ties break on earliest
start, then shortest length.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import ContextWindow, DELIM, SentenceRecord, TGT_CLOSE, TGT_OPEN, build_context
from .stance import Prediction

log = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-6


class EmbeddingError(Exception):
    pass


@dataclass
class SearchConfig:
    horizon: int = 15
    window_lengths: Tuple[int, ...] = (1, 2, 3, 4, 5)
    similarity_threshold: float = 0.40
    stance_gate: float = 0.7

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if list(self.window_lengths) != sorted(self.window_lengths) or min(self.window_lengths) < 1:
            raise ValueError("window lengths must be ascending positive")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity threshold must be in [-1, 1]")


@dataclass
class QuestionGroup:
    article_id: str
    group_id: int
    sent_ids: List[int]
    group_vector: np.ndarray


@dataclass
class AnswerSpan:
    group_id: int
    found: bool
    similarity: Optional[float] = None  # best score even when below threshold
    start: Optional[int] = None
    length: Optional[int] = None
    text: Optional[str] = None
    has_quote_markers: bool = False


def embed_sentences(
    sentences: Sequence[SentenceRecord], provider, radius: int = 1
) -> np.ndarray:
    """Embed each sentence via its ±radius context window; rows are unit-norm.

    The provider owns pooling; vectors are re-normalized defensively here.
    Zero vectors and dimension mismatches are hard errors.
    """
    texts = [build_context(sentences, s.sent_id, radius).context_text for s in sentences]
    dim, vectors = provider.embed(texts)
    try:
        mat = np.asarray(vectors, dtype=np.float64)
    except ValueError as e:
        raise EmbeddingError(f"ragged embedding batch: {e}")
    if mat.ndim != 2 or mat.shape != (len(sentences), dim):
        raise EmbeddingError(
            f"expected {len(sentences)}x{dim} vectors, got shape {mat.shape}"
        )
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmax(norms == 0.0))
        raise EmbeddingError(f"zero embedding for sentence {sentences[bad].sent_id}")
    off = np.abs(norms - 1.0) > UNIT_NORM_TOL
    if np.any(off):
        log.warning("re-normalizing %d non-unit embeddings", int(off.sum()))
    return mat / norms[:, None]


def group_questions(
    predictions: Sequence[Prediction],
    vectors: np.ndarray,
    gate: float = 0.7,
) -> Tuple[List[QuestionGroup], List[List[int]]]:
    """Group maximal runs of consecutive gated question sentences.

    Membership requires a stance label with stance_conf >= gate. Returns
    (groups, degenerate_runs); a run whose mean embedding is exactly zero
    cannot be searched and is excluded with a warning.
    """
    question_ids = [
        p.sent_id
        for p in sorted(predictions, key=lambda p: p.sent_id)
        if p.stance is not None and (p.stance_conf or 0.0) >= gate
    ]
    runs: List[List[int]] = []
    for sid in question_ids:
        if runs and runs[-1][-1] == sid - 1:
            runs[-1].append(sid)
        else:
            runs.append([sid])
    groups: List[QuestionGroup] = []
    degenerate: List[List[int]] = []
    article_id = predictions[0].article_id if predictions else ""
    for gid, run in enumerate(runs):
        mean = vectors[run].mean(axis=0)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            log.warning("article %s: degenerate zero-mean question group %s", article_id, run)
            degenerate.append(run)
            continue
        groups.append(
            QuestionGroup(
                article_id=article_id,
                group_id=gid,
                sent_ids=run,
                group_vector=mean / norm,
            )
        )
    return groups, degenerate


def find_answer_span(
    group: QuestionGroup,
    vectors: np.ndarray,
    cfg: SearchConfig,
    sentences: Optional[Sequence[SentenceRecord]] = None,
    quote_markers: Optional["QuoteMarkers"] = None,
) -> AnswerSpan:
    """Score every candidate window after the group; argmax vs threshold.

    Windows of length L start after the last question sentence and must lie
    entirely within both the horizon and the article. Uses prefix sums over
    the article's unit vectors.
    """
    n = vectors.shape[0]
    q_last = group.sent_ids[-1]
    limit = min(q_last + cfg.horizon, n - 1)
    prefix = np.vstack([np.zeros(vectors.shape[1]), np.cumsum(vectors, axis=0)])

    best_score = -np.inf
    best: Optional[Tuple[int, int]] = None
    for start in range(q_last + 1, limit + 1):
        for length in cfg.window_lengths:
            end = start + length - 1
            if end > limit:
                break
            window_sum = prefix[end + 1] - prefix[start]
            norm = float(np.linalg.norm(window_sum))
            if norm == 0.0:
                continue
            score = float(np.dot(group.group_vector, window_sum) / norm)
            # strict ">" keeps the earliest-start, shortest-length winner
            if score > best_score:
                best_score = score
                best = (start, length)

    if best is None:
        return AnswerSpan(group_id=group.group_id, found=False, similarity=None)
    found = best_score >= cfg.similarity_threshold
    span = AnswerSpan(group_id=group.group_id, found=found, similarity=best_score)
    if found:
        span.start, span.length = best
        if sentences is not None:
            by_id = {s.sent_id: s.text for s in sentences}
            span.text = " ".join(by_id[i] for i in range(span.start, span.start + span.length))
            if quote_markers is not None:
                span.has_quote_markers = quote_markers.detect(span.text)
    return span


# --- quote markers ----------------------------------------------------------

DEFAULT_QUOTE_SUBSTRINGS = ("«", "»", "“", "”", '"')
_SINGLE_PAIR_RE = re.compile("‘[^’]*’")
_DASH_DIALOGUE_RE = re.compile(r"(?:^|\n)\s*[–—-]\s+\S", re.M)


@dataclass
class QuoteMarkers:
    """Configurable inventory of direct-speech markers."""

    substrings: Tuple[str, ...] = DEFAULT_QUOTE_SUBSTRINGS

    def detect(self, text: str) -> bool:
        if any(m in text for m in self.substrings):
            return True
        if _SINGLE_PAIR_RE.search(text):
            return True
        return bool(_DASH_DIALOGUE_RE.search(text))


def detect_quote_markers(text: str, markers: Optional[QuoteMarkers] = None) -> bool:
    return (markers or QuoteMarkers()).detect(text)


# --- per-question QA records -------------------------------------------------


def qa_records(
    sentences: Sequence[SentenceRecord],
    predictions: Sequence[Prediction],
    groups: Sequence[QuestionGroup],
    spans: Dict[int, AnswerSpan],
    quote_markers: Optional[QuoteMarkers] = None,
) -> List[Dict]:
    """One output row per question sentence, carrying its group's answer
    status verbatim."""
    qm = quote_markers or QuoteMarkers()
    by_sent = {p.sent_id: p for p in predictions}
    text_by_id = {s.sent_id: s.text for s in sentences}
    rows = []
    for group in groups:
        span = spans[group.group_id]
        for sid in group.sent_ids:
            pred = by_sent[sid]
            rows.append(
                {
                    "article_id": group.article_id,
                    "sent_id": sid,
                    "stance": pred.stance,
                    "stance_conf": pred.stance_conf,
                    "group_id": group.group_id,
                    "has_answer": span.found,
                    "answer_sim": span.similarity,
                    "answer_start": span.start,
                    "answer_len": span.length,
                    "answer_text": span.text,
                    "question_has_quotes": qm.detect(text_by_id[sid]),
                    "answer_has_quotes": span.has_quote_markers,
                }
            )
    rows.sort(key=lambda r: (r["article_id"], r["sent_id"]))
    return rows
