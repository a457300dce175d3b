"""Gold-annotation schema, stratified sampling for human coding, fuzzy span
alignment, inter-annotator agreement, and model-vs-gold evaluation."""
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .corpus import DataError
from .providers import STANCE_LABELS

log = logging.getLogger(__name__)

INTERACTIONAL_CONTEXTS = ("interview", "non-interview")
ADDRESSEES = ("individual", "collective", "audience", "self")
FORMS = ("wh", "polar", "alternative", "tag", "declarative-question", "elliptic", "indirect")
MACRO_AXES = (
    "Authority positioning",
    "Framing/agenda-setting",
    "Stance/alignment",
    "Legitimation",
    "Discursive strategy",
)

COMPONENTS = ("main_eval", "double", "extension-A", "extension-B")
NO_QUESTION = "no-question"


@dataclass(frozen=True)
class GoldUnit:
    article_id: str
    unit_id: str
    annotator_id: str
    start: int
    end: int
    text: str
    interactional_context: str
    addressee: str
    form: str
    function: str
    macro_axes: Tuple[str, ...]
    answer_realized: bool

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise DataError(f"unit {self.unit_id}: invalid span [{self.start},{self.end})")
        if self.interactional_context not in INTERACTIONAL_CONTEXTS:
            raise DataError(f"unit {self.unit_id}: bad interactional_context")
        if self.addressee not in ADDRESSEES:
            raise DataError(f"unit {self.unit_id}: bad addressee")
        if self.form not in FORMS:
            raise DataError(f"unit {self.unit_id}: bad form")
        if self.function not in STANCE_LABELS:
            raise DataError(f"unit {self.unit_id}: bad function")
        if not 1 <= len(self.macro_axes) <= 2:
            raise DataError(f"unit {self.unit_id}: needs 1-2 macro axes")
        for axis in self.macro_axes:
            if axis not in MACRO_AXES:
                raise DataError(f"unit {self.unit_id}: bad macro axis {axis!r}")

    def to_dict(self) -> Dict:
        return {
            "article_id": self.article_id,
            "unit_id": self.unit_id,
            "annotator_id": self.annotator_id,
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "interactional_context": self.interactional_context,
            "addressee": self.addressee,
            "form": self.form,
            "function": self.function,
            "macro_axes": list(self.macro_axes),
            "answer_realized": self.answer_realized,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "GoldUnit":
        return cls(
            article_id=str(obj["article_id"]),
            unit_id=str(obj["unit_id"]),
            annotator_id=str(obj["annotator_id"]),
            start=int(obj["start"]),
            end=int(obj["end"]),
            text=str(obj["text"]),
            interactional_context=obj["interactional_context"],
            addressee=obj["addressee"],
            form=obj["form"],
            function=obj["function"],
            macro_axes=tuple(obj["macro_axes"]),
            answer_realized=bool(obj["answer_realized"]),
        )


# --- stratified sampling ------------------------------------------------------


@dataclass
class SamplePlan:
    main_eval: int = 400
    double_coded: int = 100
    extension_per_annotator: int = 100

    @property
    def total(self) -> int:
        return self.main_eval + self.double_coded + 2 * self.extension_per_annotator


def dominant_stance(stance_counts: Mapping[str, int]) -> str:
    """Most frequent pseudo-labeled stance; ties break by the fixed label
    order of the stance typology."""
    if not stance_counts:
        return NO_QUESTION
    return max(STANCE_LABELS, key=lambda s: (stance_counts.get(s, 0), -STANCE_LABELS.index(s)))


def stratified_sample(
    articles: Sequence[Mapping],
    plan: SamplePlan,
    seed: int,
) -> List[Dict]:
    """Assign articles to annotation components, balanced 50/50 by source.

    Each input row carries article_id, source_stratum (two values), and
    stance_counts (pseudo-label histogram; empty = no-question article).
    Question-containing components stratify on the dominant stance via
    round-robin so the full range of interrogative functions is covered.
    Populations smaller than the plan scale down with a warning.
    """
    strata = sorted({a["source_stratum"] for a in articles})
    if len(strata) != 2:
        raise DataError(f"expected two source strata, got {strata}")
    rng = random.Random(seed)
    remaining = {a["article_id"]: a for a in articles}

    def draw(count: int, stratum: str, question_only: bool) -> List[Mapping]:
        pool = [
            a
            for a in remaining.values()
            if a["source_stratum"] == stratum
            and (not question_only or a["stance_counts"])
        ]
        by_key: Dict[str, List[Mapping]] = {}
        for a in pool:
            by_key.setdefault(dominant_stance(a["stance_counts"]), []).append(a)
        for key in by_key:
            by_key[key].sort(key=lambda a: a["article_id"])
            rng.shuffle(by_key[key])
        picked: List[Mapping] = []
        keys = sorted(by_key)
        while len(picked) < count and keys:
            for key in list(keys):
                bucket = by_key[key]
                if not bucket:
                    keys.remove(key)
                    continue
                picked.append(bucket.pop())
                if len(picked) >= count:
                    break
        if len(picked) < count:
            log.warning(
                "stratified sample: stratum %r yields %d of %d requested articles",
                stratum, len(picked), count,
            )
        for a in picked:
            del remaining[a["article_id"]]
        return picked

    components = [
        ("double", plan.double_coded, True),
        ("extension-A", plan.extension_per_annotator, True),
        ("extension-B", plan.extension_per_annotator, True),
        ("main_eval", plan.main_eval, False),
    ]
    manifest: List[Dict] = []
    for component, count, question_only in components:
        half, odd = divmod(count, 2)
        for k, stratum in enumerate(strata):
            for a in draw(half + (odd if k == 0 else 0), stratum, question_only):
                manifest.append(
                    {
                        "article_id": a["article_id"],
                        "component": component,
                        "source_stratum": stratum,
                        "dominant_stance": dominant_stance(a["stance_counts"]),
                    }
                )
    manifest.sort(key=lambda m: (COMPONENTS.index(m["component"]), m["article_id"]))
    return manifest


# --- span alignment and agreement ----------------------------------------------


def span_jaccard(a: Tuple[int, int], b: Tuple[int, int]) -> float:
    """Character-level Jaccard of two [start, end) intervals."""
    inter = max(0, min(a[1], b[1]) - max(a[0], b[0]))
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union if union else 0.0


@dataclass
class Alignment:
    pairs: List[Tuple[GoldUnit, GoldUnit, float]]
    unmatched_a: List[GoldUnit]
    unmatched_b: List[GoldUnit]


def align_spans(
    units_a: Sequence[GoldUnit],
    units_b: Sequence[GoldUnit],
    optimal: bool = False,
) -> Alignment:
    """Fuzzy one-to-one matching of two annotators' spans for one article.

    Greedy in descending pairwise Jaccard (deterministic tie-break on span
    positions); zero-overlap pairs never match. ``optimal`` switches to a
    maximum-total-Jaccard assignment for sensitivity checks.
    """
    scored = []
    for i, ua in enumerate(units_a):
        for j, ub in enumerate(units_b):
            jac = span_jaccard((ua.start, ua.end), (ub.start, ub.end))
            if jac > 0.0:
                scored.append((jac, i, j))
    chosen: List[Tuple[int, int, float]] = []
    if optimal and scored:
        import numpy as np
        from scipy.optimize import linear_sum_assignment

        cost = np.zeros((len(units_a), len(units_b)))
        for jac, i, j in scored:
            cost[i, j] = -jac
        rows, cols = linear_sum_assignment(cost)
        chosen = [(i, j, -cost[i, j]) for i, j in zip(rows, cols) if cost[i, j] < 0.0]
    else:
        scored.sort(key=lambda t: (-t[0], t[1], t[2]))
        used_a: Set[int] = set()
        used_b: Set[int] = set()
        for jac, i, j in scored:
            if i in used_a or j in used_b:
                continue
            used_a.add(i)
            used_b.add(j)
            chosen.append((i, j, jac))
    matched_a = {i for i, _, _ in chosen}
    matched_b = {j for _, j, _ in chosen}
    return Alignment(
        pairs=[(units_a[i], units_b[j], jac) for i, j, jac in sorted(chosen)],
        unmatched_a=[u for k, u in enumerate(units_a) if k not in matched_a],
        unmatched_b=[u for k, u in enumerate(units_b) if k not in matched_b],
    )


def corpus_jaccard(alignments: Sequence[Alignment]) -> float:
    """Sum of intersections over sum of unions across all double-coded
    articles; unmatched units contribute their length to the union only."""
    if not alignments:
        raise DataError("no alignments")
    inter_total = 0
    union_total = 0
    for al in alignments:
        for ua, ub, _ in al.pairs:
            inter = max(0, min(ua.end, ub.end) - max(ua.start, ub.start))
            inter_total += inter
            union_total += (ua.end - ua.start) + (ub.end - ub.start) - inter
        for u in al.unmatched_a + al.unmatched_b:
            union_total += u.end - u.start
    return inter_total / union_total if union_total else 0.0


def cohen_kappa(pairs: Sequence[Tuple[str, str]]) -> float:
    """Cohen's kappa over matched label pairs: (p_o - p_e) / (1 - p_e)."""
    if not pairs:
        raise DataError("kappa needs at least one matched pair")
    n = len(pairs)
    p_o = sum(1 for a, b in pairs if a == b) / n
    marg_a: Dict[str, int] = {}
    marg_b: Dict[str, int] = {}
    for a, b in pairs:
        marg_a[a] = marg_a.get(a, 0) + 1
        marg_b[b] = marg_b.get(b, 0) + 1
    labels = set(marg_a) | set(marg_b)
    p_e = sum(marg_a.get(l, 0) * marg_b.get(l, 0) for l in labels) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


@dataclass
class AgreementReport:
    n_articles: int
    n_matched_units: int
    jaccard_overlap: float
    label_accuracy: float
    kappa: float
    confusion: Dict[str, Dict[str, int]]
    partial: bool = False


def compute_agreement(
    units_by_article: Mapping[str, Tuple[Sequence[GoldUnit], Sequence[GoldUnit]]],
    optimal: bool = False,
) -> AgreementReport:
    """Aggregate agreement over double-coded articles (both annotators)."""
    alignments = []
    label_pairs: List[Tuple[str, str]] = []
    for article_id in sorted(units_by_article):
        units_a, units_b = units_by_article[article_id]
        al = align_spans(list(units_a), list(units_b), optimal=optimal)
        alignments.append(al)
        label_pairs.extend((ua.function, ub.function) for ua, ub, _ in al.pairs)
    if not label_pairs:
        raise DataError("no matched units across double-coded articles")
    confusion: Dict[str, Dict[str, int]] = {
        a: {b: 0 for b in STANCE_LABELS} for a in STANCE_LABELS
    }
    for a, b in label_pairs:
        confusion[a][b] += 1
    accuracy = sum(1 for a, b in label_pairs if a == b) / len(label_pairs)
    return AgreementReport(
        n_articles=len(units_by_article),
        n_matched_units=len(label_pairs),
        jaccard_overlap=corpus_jaccard(alignments),
        label_accuracy=accuracy,
        kappa=cohen_kappa(label_pairs),
        confusion=confusion,
    )


# --- model-vs-gold evaluation ---------------------------------------------------


def gold_positive_sentences(
    units: Iterable[GoldUnit],
    sentence_offsets: Mapping[str, Sequence[Tuple[int, int, int]]],
) -> Set[Tuple[str, int]]:
    """Project gold spans onto sentences: any character overlap counts.

    ``sentence_offsets`` maps article_id to (sent_id, start, end) triples in
    article-text coordinates.
    """
    positives: Set[Tuple[str, int]] = set()
    for unit in units:
        for sent_id, start, end in sentence_offsets.get(unit.article_id, ()):
            if max(start, unit.start) < min(end, unit.end):
                positives.add((unit.article_id, sent_id))
    return positives


def _prf(tp: int, fp: int, fn: int) -> Dict[str, Optional[float]]:
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None or precision + recall == 0.0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1}


def evaluate_binary(
    predicted_positive: Set[Tuple[str, int]],
    gold_positive: Set[Tuple[str, int]],
    all_sentences: Set[Tuple[str, int]],
) -> Dict:
    """Accuracy plus P/R/F1 for the interrogative class; degenerate
    denominators yield None with a flag rather than silent zeros."""
    tp = len(predicted_positive & gold_positive)
    fp = len(predicted_positive - gold_positive)
    fn = len(gold_positive - predicted_positive)
    tn = len(all_sentences) - tp - fp - fn
    out = {"n_sentences": len(all_sentences), "accuracy": (tp + tn) / len(all_sentences)}
    out.update(_prf(tp, fp, fn))
    out["null_flag"] = any(out[k] is None for k in ("precision", "recall", "f1"))
    return out


def evaluate_stance(
    pairs: Sequence[Tuple[str, Optional[str]]],
    conditional: bool = False,
) -> Dict:
    """Six-way evaluation over (gold_label, predicted_label) pairs.

    Predictions of None are gold positives the binary gate kept from the
    stance stage; in conditional mode those pairs are excluded and the
    confusion matrix is row-normalized.
    """
    if conditional:
        pairs = [(g, p) for g, p in pairs if p is not None]
    per_class = {}
    confusion = {g: {p: 0 for p in STANCE_LABELS} for g in STANCE_LABELS}
    none_counts = {g: 0 for g in STANCE_LABELS}
    for g, p in pairs:
        if p is None:
            none_counts[g] += 1
        else:
            confusion[g][p] += 1
    f1s = []
    micro_tp = micro_fp = micro_fn = 0
    for label in STANCE_LABELS:
        tp = confusion[label][label]
        fp = sum(confusion[g][label] for g in STANCE_LABELS if g != label)
        fn = sum(v for p, v in confusion[label].items() if p != label) + none_counts[label]
        support = sum(confusion[label].values()) + none_counts[label]
        stats = _prf(tp, fp, fn)
        stats["support"] = support
        per_class[label] = stats
        micro_tp += tp
        micro_fp += fp
        micro_fn += fn
        if support > 0 and stats["f1"] is not None:
            f1s.append(stats["f1"])
    macro_f1 = sum(f1s) / len(f1s) if f1s else None
    micro = _prf(micro_tp, micro_fp, micro_fn)
    matrix: Dict[str, Dict[str, float]] = {}
    for g in STANCE_LABELS:
        row_total = sum(confusion[g].values())
        if conditional:
            if row_total == 0:
                continue  # gated-out or absent gold classes have no row
            matrix[g] = {p: confusion[g][p] / row_total for p in STANCE_LABELS}
        else:
            matrix[g] = dict(confusion[g])
    return {
        "per_class": per_class,
        "macro_f1": macro_f1,
        "micro_f1": micro["f1"],
        "confusion": matrix,
        "n_pairs": len(pairs),
        "conditional": conditional,
    }


def f1_from_pr(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall)
