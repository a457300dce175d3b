"""Label, embedding, and NER providers.

Three families:
  * HTTP providers speaking the JSON wire protocols (/v1/label/binary,
    /v1/label/stance, /v1/embed, /v1/ner) with bounded retry/backoff;
  * a cassette layer that records transcripts and replays them offline;
  * deterministic mock providers (pure functions of the input text) used
    by tests, CI, and the bundled end-to-end fixture.
"""
import hashlib
import json
import logging
import os
import re
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import httpx

log = logging.getLogger(__name__)

CONFIDENCE_SCALE = (0.2, 0.5, 0.8, 0.95)

STANCE_LABELS = (
    "framing-procedural",
    "information-seeking",
    "rhetorical",
    "leading",
    "tag",
    "echo-clarification",
)

NER_LABELS = (
    "person",
    "organization",
    "location",
    "nationality or religious or political group",
    "generic social group",
    "public or audience",
    "event",
)


class ProviderError(Exception):
    """Transport failure or malformed provider response."""


def snap_confidence(value: float) -> Tuple[float, bool]:
    """Snap a confidence to the nearest allowed scale value.

    Returns (snapped, was_snapped). Ties go to the lower value.
    """
    best = min(CONFIDENCE_SCALE, key=lambda s: (abs(s - value), s))
    return best, best != value


# --- HTTP transport ---------------------------------------------------------


class HttpTransport:
    def __init__(self, base_url: str, retries: int = 3, backoff: float = 0.5,
                 timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout)

    def post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        url = self.base_url + path
        last_exc: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(url, json=payload)
                resp.raise_for_status()
                return resp.json()
            except (httpx.TransportError, httpx.HTTPStatusError) as e:
                last_exc = e
                if attempt < self.retries:
                    delay = self.backoff * (2 ** attempt)
                    log.warning("provider %s failed (%s), retrying in %.1fs", url, e, delay)
                    time.sleep(delay)
        raise ProviderError(f"provider {url} unreachable after {self.retries + 1} attempts: {last_exc}")


# --- cassette record/replay -------------------------------------------------


class Cassette:
    """Request/response transcript keyed by (endpoint, payload) hash."""

    def __init__(self, path: str, record: bool = False):
        self.path = path
        self.record = record
        self._entries: Dict[str, Any] = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as f:
                self._entries = json.load(f)

    @staticmethod
    def key(endpoint: str, payload: Dict[str, Any]) -> str:
        canon = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256((endpoint + "\n" + canon).encode("utf-8")).hexdigest()

    def lookup(self, endpoint: str, payload: Dict[str, Any]) -> Optional[Dict[str, Any]]:
        return self._entries.get(self.key(endpoint, payload))

    def store(self, endpoint: str, payload: Dict[str, Any], response: Dict[str, Any]) -> None:
        self._entries[self.key(endpoint, payload)] = response

    def save(self) -> None:
        parent = os.path.dirname(self.path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as f:
            json.dump(self._entries, f, ensure_ascii=False, sort_keys=True, indent=0)


class CassetteTransport:
    """Wraps a transport: replays known exchanges, optionally records new ones."""

    def __init__(self, cassette: Cassette, inner: Optional[HttpTransport] = None):
        self.cassette = cassette
        self.inner = inner

    def post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        hit = self.cassette.lookup(path, payload)
        if hit is not None:
            return hit
        if self.inner is None or not self.cassette.record:
            raise ProviderError(f"cassette miss for {path} and recording disabled")
        resp = self.inner.post(path, payload)
        self.cassette.store(path, payload, resp)
        return resp


# --- provider endpoints -----------------------------------------------------


class BinaryLabelProvider:
    """POST /v1/label/binary with {"items":[{"context_text":...}]}."""

    PATH = "/v1/label/binary"

    def __init__(self, transport):
        self.transport = transport

    def label(self, context_texts: Sequence[str]) -> List[Dict[str, Any]]:
        payload = {"items": [{"context_text": t} for t in context_texts]}
        resp = self.transport.post(self.PATH, payload)
        results = resp.get("results")
        if not isinstance(results, list) or len(results) != len(context_texts):
            raise ProviderError(f"{self.PATH}: expected {len(context_texts)} results")
        return results


class StanceLabelProvider:
    PATH = "/v1/label/stance"

    def __init__(self, transport):
        self.transport = transport

    def label(self, context_texts: Sequence[str]) -> List[Dict[str, Any]]:
        payload = {"items": [{"context_text": t} for t in context_texts]}
        resp = self.transport.post(self.PATH, payload)
        results = resp.get("results")
        if not isinstance(results, list) or len(results) != len(context_texts):
            raise ProviderError(f"{self.PATH}: expected {len(context_texts)} results")
        return results


class EmbeddingProvider:
    PATH = "/v1/embed"

    def __init__(self, transport):
        self.transport = transport

    def embed(self, texts: Sequence[str]) -> Tuple[int, List[List[float]]]:
        resp = self.transport.post(self.PATH, {"texts": list(texts)})
        dim = resp.get("dim")
        vectors = resp.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError(f"{self.PATH}: expected {len(texts)} vectors")
        return int(dim), vectors


class NerProvider:
    PATH = "/v1/ner"

    def __init__(self, transport, labels: Sequence[str] = NER_LABELS):
        self.transport = transport
        self.labels = list(labels)

    def annotate(self, texts: Sequence[str]) -> List[List[Dict[str, Any]]]:
        payload = {"items": [{"text": t, "labels": self.labels} for t in texts]}
        resp = self.transport.post(self.PATH, payload)
        results = resp.get("results")
        if not isinstance(results, list) or len(results) != len(texts):
            raise ProviderError(f"{self.PATH}: expected {len(texts)} results")
        return results


# --- deterministic mocks ----------------------------------------------------


def _text_hash(namespace: str, text: str, seed: int = 0) -> int:
    digest = hashlib.sha256(f"{namespace}|{seed}|{text}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class MockTransport:
    """Serves all provider endpoints from pure functions of the request text.

    No network, no state: identical requests always get identical replies,
    which is what makes the end-to-end golden fixture reproducible.
    """

    def __init__(self, seed: int = 0, embed_dim: int = 16):
        self.seed = seed
        self.embed_dim = embed_dim

    def post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        if path == BinaryLabelProvider.PATH:
            return {"results": [self._binary(i["context_text"]) for i in payload["items"]]}
        if path == StanceLabelProvider.PATH:
            return {"results": [self._stance(i["context_text"]) for i in payload["items"]]}
        if path == EmbeddingProvider.PATH:
            vectors = [self._embed(t) for t in payload["texts"]]
            return {"dim": self.embed_dim, "vectors": vectors}
        if path == NerProvider.PATH:
            return {"results": [self._ner(i["text"]) for i in payload["items"]]}
        raise ProviderError(f"mock transport: unknown endpoint {path}")

    # binary stance: question marks are near-certain, softer interrogative
    # cues get mid-scale confidences, declaratives are confident negatives.
    def _binary(self, context_text: str) -> Dict[str, Any]:
        target = _extract_target(context_text)
        h = _text_hash("binary", target, self.seed)
        if "?" in target:
            return {"is_interrogative": True, "confidence": 0.95 if h % 10 else 0.8}
        lowered = target.lower()
        cues = ("se demande", "interroge", "question", "savoir si", "reste à savoir")
        if any(c in lowered for c in cues):
            return {"is_interrogative": True, "confidence": (0.5, 0.8, 0.95)[h % 3]}
        return {"is_interrogative": False, "confidence": 0.95 if h % 8 else 0.8}

    def _stance(self, context_text: str) -> Dict[str, Any]:
        target = _extract_target(context_text)
        h = _text_hash("stance", target, self.seed)
        lowered = target.lower()
        if lowered.rstrip(" ?!»\"").endswith(("n'est-ce pas", "non", "hein")):
            label = "tag"
        elif lowered.startswith(("pourquoi", "comment", "combien", "que ", "qui ", "quand")):
            label = ("information-seeking", "rhetorical", "framing-procedural")[h % 3]
        elif "?" not in target:
            label = ("framing-procedural", "information-seeking")[h % 2]
        else:
            label = STANCE_LABELS[h % len(STANCE_LABELS)]
        confidence = (0.8, 0.95, 0.8, 0.5)[h % 4]
        return {"label": label, "confidence": confidence}

    # bag-of-words hashed embedding: shared vocabulary yields genuinely
    # similar vectors, so the answer search has non-trivial structure.
    def _embed(self, text: str) -> List[float]:
        acc = [0.0] * self.embed_dim
        tokens = re.findall(r"\w+", text.lower())
        if not tokens:
            tokens = ["<empty>"]
        for tok in tokens:
            h = _text_hash("embed", tok, self.seed)
            for d in range(self.embed_dim):
                # two pseudo-random bits per dimension -> {-1, 0, 0, 1}
                bits = (h >> (2 * d)) & 3
                acc[d] += (1.0 if bits == 3 else -1.0 if bits == 0 else 0.0)
        norm = sum(x * x for x in acc) ** 0.5
        if norm == 0.0:
            acc[0] = 1.0
            norm = 1.0
        return [x / norm for x in acc]

    _NAME_RE = re.compile(r"\b(?:[A-ZÀ-Þ][\w’'-]+)(?:\s+[A-ZÀ-Þ][\w’'-]+)*")

    def _ner(self, text: str) -> List[Dict[str, Any]]:
        mentions = []
        for m in self._NAME_RE.finditer(text):
            if m.start() == 0:
                continue  # skip sentence-initial capitalization
            surface = m.group(0)
            h = _text_hash("ner", surface, self.seed)
            label = NER_LABELS[h % 16 % len(NER_LABELS)] if h % 16 < 7 else NER_LABELS[h % 3]
            score = round(0.30 + (h % 70) / 100.0, 2)
            mentions.append(
                {"text": surface, "label": label, "score": score,
                 "start": m.start(), "end": m.end()}
            )
        return mentions


def _extract_target(context_text: str) -> str:
    m = re.search(r"<tgt>(.*?)</tgt>", context_text, flags=re.S)
    return m.group(1) if m else context_text


def make_transport(
    url: Optional[str],
    cassette_path: Optional[str] = None,
    record: bool = False,
    seed: int = 0,
):
    """Build a transport from a URL, ``mock:`` scheme, or cassette file."""
    if url and url.startswith("mock:"):
        return MockTransport(seed=seed)
    inner = HttpTransport(url) if url else None
    if cassette_path:
        return CassetteTransport(Cassette(cassette_path, record=record), inner)
    if inner is None:
        raise ProviderError("no provider URL and no cassette configured")
    return inner
