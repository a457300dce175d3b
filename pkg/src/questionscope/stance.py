"""Teacher pseudo-labeling, confidence gating, training export, inference."""
import json
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .corpus import ContextWindow
from .jsonl import write_jsonl
from .providers import (
    STANCE_LABELS,
    BinaryLabelProvider,
    ProviderError,
    StanceLabelProvider,
    snap_confidence,
)

log = logging.getLogger(__name__)

BINARY_LABELS = ("non-interrogative", "interrogative")


@dataclass
class PseudoLabel:
    article_id: str
    sent_id: int
    context_text: str
    is_interrogative: bool
    binary_confidence: float
    stance: Optional[str] = None
    stance_confidence: Optional[float] = None
    snapped: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        if self.stance is not None and not self.is_interrogative:
            raise ValueError("stance label on a non-interrogative pseudo-label")


@dataclass
class Prediction:
    article_id: str
    sent_id: int
    binary_label: bool
    binary_conf: float
    stance: Optional[str] = None
    stance_conf: Optional[float] = None


def _batches(items: Sequence, size: int) -> Iterator[Sequence]:
    for i in range(0, len(items), size):
        yield items[i : i + size]


def teacher_label(
    items: Sequence[ContextWindow],
    mode: str,
    provider,
    batch_size: int = 8,
    max_in_flight: int = 1,
) -> List[PseudoLabel]:
    """Query the teacher provider for a batch of context windows.

    One result per item, order-preserving. Confidences outside the
    four-point scale are snapped to the nearest allowed value and flagged.
    Unparsable single results become item-level errors; the batch continues.
    """
    if mode not in ("binary", "stance"):
        raise ValueError(f"unknown teacher mode {mode!r}")
    if not items:
        return []

    def run_batch(batch: Sequence[ContextWindow]) -> List[PseudoLabel]:
        raw = provider.label([w.context_text for w in batch])
        out = []
        for window, result in zip(batch, raw):
            out.append(_parse_result(window, result, mode))
        return out

    chunks = list(_batches(items, batch_size))
    if max_in_flight > 1:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            results = list(pool.map(run_batch, chunks))
    else:
        results = [run_batch(c) for c in chunks]
    flat = [label for chunk in results for label in chunk]
    flat.sort(key=lambda p: (p.article_id, p.sent_id))
    return flat


def _parse_result(window: ContextWindow, result, mode: str) -> PseudoLabel:
    base = dict(
        article_id=window.article_id,
        sent_id=window.sent_id,
        context_text=window.context_text,
    )
    try:
        if not isinstance(result, dict):
            raise ValueError(f"non-object result: {result!r}")
        if mode == "binary":
            is_interrogative = bool(result["is_interrogative"])
            conf, snapped = snap_confidence(float(result["confidence"]))
            return PseudoLabel(
                **base,
                is_interrogative=is_interrogative,
                binary_confidence=conf,
                snapped=snapped,
            )
        label = result["label"]
        if label not in STANCE_LABELS:
            raise ValueError(f"unknown stance label {label!r}")
        conf, snapped = snap_confidence(float(result["confidence"]))
        return PseudoLabel(
            **base,
            is_interrogative=True,
            binary_confidence=1.0,
            stance=label,
            stance_confidence=conf,
            snapped=snapped,
        )
    except (KeyError, TypeError, ValueError) as e:
        log.warning("item (%s,%s): bad teacher result: %s", window.article_id, window.sent_id, e)
        return PseudoLabel(
            **base, is_interrogative=False, binary_confidence=0.0, error=str(e)
        )


def filter_high_confidence(
    labels: Iterable[PseudoLabel], threshold: float = 0.7, mode: str = "binary"
) -> Iterator[PseudoLabel]:
    """Keep training-worthy rows: confidence >= threshold (inclusive)."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    for label in labels:
        if label.error is not None:
            continue
        if mode == "binary":
            if label.binary_confidence >= threshold:
                yield label
        else:
            if label.stance is not None and (label.stance_confidence or 0.0) >= threshold:
                yield label


@dataclass
class ExportManifest:
    mode: str
    seed: int
    holdout_fraction: float
    n_train: int = 0
    n_validation: int = 0
    n_excluded: int = 0
    train_label_counts: Dict[str, int] = field(default_factory=dict)
    validation_label_counts: Dict[str, int] = field(default_factory=dict)


def export_training_set(
    labels: Iterable[PseudoLabel],
    eval_article_ids: Set[str],
    out_dir: str,
    mode: str = "binary",
    holdout_fraction: float = 0.10,
    seed: int = 0,
) -> ExportManifest:
    """Write train/validation JSONL ({"context_text","label"}) plus a manifest.

    The split is by article_id (no article spans both files) and the
    evaluation articles are excluded from both.
    """
    rows: List[Tuple[str, int, str, str]] = []
    excluded = 0
    for label in labels:
        if label.article_id in eval_article_ids:
            excluded += 1
            continue
        if mode == "binary":
            text_label = BINARY_LABELS[int(label.is_interrogative)]
        else:
            if label.stance is None:
                continue
            text_label = label.stance
        rows.append((label.article_id, label.sent_id, label.context_text, text_label))
    if not rows:
        raise ValueError("no training rows remain after exclusion")

    article_ids = sorted({r[0] for r in rows})
    rng = random.Random(seed)
    rng.shuffle(article_ids)
    n_val = round(holdout_fraction * len(article_ids))
    validation_ids = set(article_ids[:n_val])

    rows.sort(key=lambda r: (r[0], r[1]))
    manifest = ExportManifest(mode=mode, seed=seed, holdout_fraction=holdout_fraction,
                              n_excluded=excluded)
    os.makedirs(out_dir, exist_ok=True)

    def emit(split_ids, filename, counts_attr):
        split_rows = [r for r in rows if (r[0] in validation_ids) == split_ids]
        counts: Dict[str, int] = {}
        for r in split_rows:
            counts[r[3]] = counts.get(r[3], 0) + 1
        write_jsonl(
            os.path.join(out_dir, filename),
            ({"context_text": r[2], "label": r[3]} for r in split_rows),
        )
        setattr(manifest, counts_attr, dict(sorted(counts.items())))
        return len(split_rows)

    manifest.n_train = emit(False, f"{mode}_train.jsonl", "train_label_counts")
    manifest.n_validation = emit(True, f"{mode}_validation.jsonl", "validation_label_counts")

    with open(os.path.join(out_dir, f"{mode}_manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest.__dict__, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    return manifest


def infer_two_step(
    windows: Sequence[ContextWindow],
    binary_provider: BinaryLabelProvider,
    stance_provider: StanceLabelProvider,
    gate: float = 0.7,
    batch_size: int = 32,
) -> List[Prediction]:
    """Binary pass over all windows, stance pass only over gated positives.

    The stance stage sees a sentence iff binary_label is true and
    binary_conf >= gate; everything else emits a binary-only Prediction.
    """
    predictions: Dict[Tuple[str, int], Prediction] = {}
    gated: List[ContextWindow] = []
    for batch in _batches(windows, batch_size):
        results = binary_provider.label([w.context_text for w in batch])
        for window, result in zip(batch, results):
            try:
                binary_label = bool(result["is_interrogative"])
                binary_conf = float(result["confidence"])
            except (KeyError, TypeError, ValueError) as e:
                raise ProviderError(f"bad binary result for ({window.article_id},{window.sent_id}): {e}")
            predictions[(window.article_id, window.sent_id)] = Prediction(
                article_id=window.article_id,
                sent_id=window.sent_id,
                binary_label=binary_label,
                binary_conf=binary_conf,
            )
            if binary_label and binary_conf >= gate:
                gated.append(window)
    for batch in _batches(gated, batch_size):
        results = stance_provider.label([w.context_text for w in batch])
        for window, result in zip(batch, results):
            try:
                stance = result["label"]
                stance_conf = float(result["confidence"])
            except (KeyError, TypeError, ValueError) as e:
                raise ProviderError(f"bad stance result for ({window.article_id},{window.sent_id}): {e}")
            if stance not in STANCE_LABELS:
                raise ProviderError(f"unknown stance label {stance!r}")
            pred = predictions[(window.article_id, window.sent_id)]
            pred.stance = stance
            pred.stance_conf = stance_conf
    out = list(predictions.values())
    out.sort(key=lambda p: (p.article_id, p.sent_id))
    return out
