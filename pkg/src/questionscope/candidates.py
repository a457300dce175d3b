"""High-recall rule-based detection of interrogative-candidate sentences."""
import math
import random
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .corpus import SentenceRecord

RULE_QMARK = "qmark"
RULE_INITIAL = "initial_pattern"
RULE_VERB = "verb_pattern"
RULE_NOUN = "noun_pattern"

_SECTION_TO_RULE = {"initial": RULE_INITIAL, "verb": RULE_VERB, "noun": RULE_NOUN}

# leading characters ignored when anchoring sentence-initial patterns
_LEAD_STRIP = "«»\"'’‘“”–—-— \t"


@dataclass(frozen=True)
class CandidateRecord:
    article_id: str
    sent_id: int
    is_candidate: bool
    matched_rules: frozenset
    calibration_pick: bool = False


def _normalize(text: str) -> str:
    # apostrophe variants collapse so patterns written with U+2019 match both
    return text.replace("’", "'").lower()


def _fold_accents(text: str) -> str:
    return "".join(
        c for c in unicodedata.normalize("NFD", text) if unicodedata.category(c) != "Mn"
    )


class RuleSet:
    """Compiled pattern inventory loaded from a plain-text rule file."""

    def __init__(self, sections: Dict[str, List[str]], fold_accents: bool = False):
        self.fold_accents = fold_accents
        self.sections = sections
        self._compiled: Dict[str, re.Pattern] = {}
        for name, patterns in sections.items():
            if name not in _SECTION_TO_RULE:
                raise ValueError(f"unknown rule section [{name}]")
            if not patterns:
                continue
            parts = []
            for p in patterns:
                p = _normalize(p)
                if fold_accents:
                    p = _fold_accents(p)
                parts.append(r"\b" + re.escape(p).replace(r"\ ", r"\s+"))
            self._compiled[name] = re.compile("|".join(parts))

    def match_rules(self, sentence_text: str) -> Set[str]:
        text = _normalize(sentence_text)
        if self.fold_accents:
            text = _fold_accents(text)
        rules: Set[str] = set()
        if "?" in sentence_text:
            rules.add(RULE_QMARK)
        anchored = text.lstrip(_LEAD_STRIP)
        pat = self._compiled.get("initial")
        if pat is not None and pat.match(anchored):
            rules.add(RULE_INITIAL)
        for section in ("verb", "noun"):
            pat = self._compiled.get(section)
            if pat is not None and pat.search(text):
                rules.add(_SECTION_TO_RULE[section])
        return rules


def parse_rule_file(text: str, fold_accents: bool = False) -> RuleSet:
    """Parse `[section]` headers with one pattern per line; `#` comments."""
    sections: Dict[str, List[str]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ValueError(f"rule file line {lineno}: pattern before any [section]")
        sections[current].append(line)
    return RuleSet(sections, fold_accents=fold_accents)


def load_rules(path: Optional[str] = None, fold_accents: bool = False) -> RuleSet:
    """Load a rule file from ``path`` or the bundled default inventory."""
    if path is not None:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    else:
        text = (
            resources.files("questionscope.data")
            .joinpath("interrogative_rules.txt")
            .read_text(encoding="utf-8")
        )
    return parse_rule_file(text, fold_accents=fold_accents)


def detect_candidate(sentence: SentenceRecord, rules: RuleSet) -> CandidateRecord:
    matched = rules.match_rules(sentence.text)
    return CandidateRecord(
        article_id=sentence.article_id,
        sent_id=sentence.sent_id,
        is_candidate=bool(matched),
        matched_rules=frozenset(matched),
    )


def calibration_sample(
    non_candidates: Iterable[Tuple[str, int]],
    n_candidates: int,
    seed: int,
    fraction: float = 0.25,
) -> Set[Tuple[str, int]]:
    """Sample ceil(fraction * n_candidates) non-candidate keys, capped at the
    population, uniformly without replacement and reproducibly by seed.

    Keys are sorted before sampling so the draw is independent of input
    order (and hence of any upstream parallelism).
    """
    population = sorted(set(non_candidates))
    k = min(math.ceil(fraction * n_candidates), len(population))
    rng = random.Random(seed)
    return set(rng.sample(population, k))
