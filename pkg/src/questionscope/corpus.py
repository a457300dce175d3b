"""Article ingestion, French sentence segmentation, and context windows."""
import csv
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

log = logging.getLogger(__name__)

OUTLET_SCALES = {"hyper-local", "regional", "national", "transnational", "thematic"}
OUTLET_TYPES = {"general", "sports", "celebrity", "wire", "business"}

TGT_OPEN = "<tgt>"
TGT_CLOSE = "</tgt>"
DELIM = " </s> "


class DataError(Exception):
    """Malformed or invariant-violating input data."""


@dataclass(frozen=True)
class OutletMeta:
    source: str
    country_region: str
    scale: str
    type: str

    def __post_init__(self):
        if self.scale not in OUTLET_SCALES:
            raise DataError(f"unknown outlet scale {self.scale!r} for {self.source}")
        if self.type not in OUTLET_TYPES:
            raise DataError(f"unknown outlet type {self.type!r} for {self.source}")


@dataclass
class ArticleRecord:
    article_id: str
    source: str
    published_at: str
    text: str
    title: Optional[str] = None
    topic_id: Optional[int] = None
    lang: str = "fr"
    outlet: Optional[OutletMeta] = None
    meta_topic: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SentenceRecord:
    article_id: str
    sent_id: int
    text: str


@dataclass(frozen=True)
class ContextWindow:
    article_id: str
    sent_id: int
    context_text: str
    radius: int


@dataclass
class IngestStats:
    read: int = 0
    yielded: int = 0
    rejected: int = 0
    unknown_source: int = 0


def load_ontology(path: str) -> Dict[str, OutletMeta]:
    """Load the outlet ontology CSV (source,country_region,scale,type)."""
    out: Dict[str, OutletMeta] = {}
    with open(path, encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"source", "country_region", "scale", "type"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"ontology header must contain {sorted(required)}")
        for row in reader:
            src = row["source"].strip()
            if src in out:
                raise DataError(f"duplicate ontology source {src!r}")
            out[src] = OutletMeta(
                source=src,
                country_region=row["country_region"].strip(),
                scale=row["scale"].strip().lower(),
                type=row["type"].strip().lower(),
            )
    return out


_KNOWN_KEYS = {"article_id", "source", "published_at", "title", "text", "topic_id", "lang"}


def ingest_articles(
    path: str,
    ontology: Optional[Dict[str, OutletMeta]] = None,
    lenient: bool = False,
    stats: Optional[IngestStats] = None,
) -> Iterator[ArticleRecord]:
    """Stream ArticleRecords from a JSON-lines file, in file order.

    Unknown sources are kept with a warning (left-outer ontology join).
    Malformed lines raise DataError with the line number unless ``lenient``.
    """
    if stats is None:
        stats = IngestStats()
    seen_ids: set = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            stats.read += 1
            try:
                obj = json.loads(line)
                rec = _parse_article(obj, seen_ids)
            except (json.JSONDecodeError, DataError, TypeError, KeyError) as e:
                stats.rejected += 1
                msg = f"{path}:{lineno}: bad article line: {e}"
                if lenient:
                    log.warning(msg)
                    continue
                raise DataError(msg) from e
            if ontology is not None:
                rec.outlet = ontology.get(rec.source)
                if rec.outlet is None:
                    stats.unknown_source += 1
                    log.warning("%s:%d: source %r not in ontology", path, lineno, rec.source)
            stats.yielded += 1
            yield rec


def _parse_article(obj: Dict[str, Any], seen_ids: set) -> ArticleRecord:
    article_id = str(obj["article_id"])
    if not article_id:
        raise DataError("empty article_id")
    if article_id in seen_ids:
        raise DataError(f"duplicate article_id {article_id!r}")
    seen_ids.add(article_id)
    text = obj["text"]
    if not isinstance(text, str) or not text.strip():
        raise DataError(f"article {article_id!r} has empty text")
    topic_id = obj.get("topic_id")
    if topic_id is not None:
        topic_id = int(topic_id)
    return ArticleRecord(
        article_id=article_id,
        source=str(obj.get("source", "")),
        published_at=str(obj.get("published_at", "")),
        title=obj.get("title"),
        text=text,
        topic_id=topic_id,
        lang=str(obj.get("lang", "fr")),
        extra={k: v for k, v in obj.items() if k not in _KNOWN_KEYS},
    )


# --- sentence segmentation -------------------------------------------------

# Tokens that end with "." without closing a sentence. Compared lowercase,
# without the trailing dot.
FRENCH_ABBREVIATIONS = frozenset(
    """
    m mm mme mmes mlle mlles dr drs me pr prof st ste sts
    etc cf ex p pp vol chap fig art no nos env min max
    av bd bld boul fbg rte tel tél jan janv fév fevr avr
    juil sept oct nov déc dec num réf ref suppl trad éd ed
    """.split()
)

_TERMINALS = ".!?…"
# characters that may trail a terminal and still belong to the sentence
_TRAILERS = "»”\"'’)]"
_OPENERS = "«“\"'‘([–—-"


def _is_abbreviation(text: str, dot_pos: int) -> bool:
    """True when the '.' at dot_pos ends an abbreviation or an initial."""
    i = dot_pos - 1
    start = i
    while start >= 0 and (text[start].isalpha() or text[start] in "'’"):
        start -= 1
    token = text[start + 1 : dot_pos]
    if not token:
        return False
    if len(token) == 1 and token.isupper():
        return True  # personal initial, "J. Dupont"
    return token.lower() in FRENCH_ABBREVIATIONS


def _boundary_after(text: str, pos: int) -> bool:
    """Decide whether the terminal run ending before ``pos`` closes a sentence."""
    j = pos
    while j < len(text) and text[j] in " \t":
        j += 1
    if j >= len(text) or text[j] == "\n":
        return True
    nxt = text[j]
    if nxt in _OPENERS or nxt.isupper() or nxt.isdigit():
        return True
    return False


def segment(article: ArticleRecord) -> List[SentenceRecord]:
    """Deterministic rule-based French sentence splitter.

    Splits on terminal punctuation (. ! ? …) and newlines, guarded by a
    French abbreviation list, personal initials, decimal numbers, and a
    following-lowercase check so quoted questions mid-sentence
    («Que faire ?», demande-t-il.) stay intact.
    """
    text = article.text
    sentences: List[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            piece = text[start:i].strip()
            if piece:
                sentences.append(piece)
            start = i + 1
            i += 1
            continue
        if ch in _TERMINALS:
            if ch == ".":
                if 0 < i < n - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
                    i += 1
                    continue
                if _is_abbreviation(text, i):
                    i += 1
                    continue
            j = i + 1
            while j < n and text[j] in _TERMINALS:
                j += 1
            while j < n and text[j] in _TRAILERS:
                j += 1
            if _boundary_after(text, j):
                piece = text[start:j].strip()
                if piece:
                    sentences.append(piece)
                start = j
            i = j
            continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    if not sentences:
        sentences = [text.strip()]
    return [
        SentenceRecord(article_id=article.article_id, sent_id=k, text=s)
        for k, s in enumerate(sentences)
    ]


def sentence_offsets(
    article: ArticleRecord, sentences: Sequence[SentenceRecord]
) -> List[Tuple[int, int, int]]:
    """Locate each sentence in the article text as (sent_id, start, end).

    Sentences are verbatim substrings of the text, so a moving-cursor find
    recovers their character spans.
    """
    offsets = []
    cursor = 0
    for s in sentences:
        start = article.text.find(s.text, cursor)
        if start < 0:
            raise DataError(
                f"article {article.article_id}: sentence {s.sent_id} not found in text"
            )
        offsets.append((s.sent_id, start, start + len(s.text)))
        cursor = start + len(s.text)
    return offsets


def build_context(
    sentences: Sequence[SentenceRecord], sent_id: int, radius: int
) -> ContextWindow:
    """Compose a context window with the target wrapped in <tgt>…</tgt>.

    Neighbors are clamped at article boundaries; pieces are joined by the
    literal ``" </s> "`` delimiter.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    index = {s.sent_id: k for k, s in enumerate(sentences)}
    if sent_id not in index:
        raise DataError(f"sent_id {sent_id} not found in article")
    k = index[sent_id]
    lo = max(0, k - radius)
    hi = min(len(sentences), k + radius + 1)
    pieces = []
    for s in sentences[lo:hi]:
        if s.sent_id == sent_id:
            pieces.append(f"{TGT_OPEN}{s.text}{TGT_CLOSE}")
        else:
            pieces.append(s.text)
    return ContextWindow(
        article_id=sentences[k].article_id,
        sent_id=sent_id,
        context_text=DELIM.join(pieces),
        radius=radius,
    )
