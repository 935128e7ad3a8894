"""Parsing of final-stage responses into canonical demographic predictions.

The parser is total: any byte sequence yields a DemographicPrediction,
with `parse_status` recording how much repair was needed. A well-formed
machine-readable answer block always wins; otherwise ordered heuristics
look for the last explicit category mention, then a bracket range
expression. Category synonyms live in per-attribute JSON data files so
model-specific quirks can be patched without touching code.

Answer-block grammar (demanded verbatim by the stage-3 templates):
    PREDICTION: <category>
    CONFIDENCE: <1-5>
    INDICATORS: <i1,i2,i3,i4,i5>      (income only)
    ALTERNATIVES: <cat>[, <cat>...]
    REASONING: <free text to end>
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .categories import (
    CategoryConfig,
    DEFAULT_CATEGORIES,
    INCOME_INDICATORS,
    UNPARSED,
)

STATUS_CLEAN = "clean"
STATUS_REPAIRED = "repaired"
STATUS_UNPARSED = "unparsed"

_BLOCK_KEYS = ("PREDICTION", "CONFIDENCE", "INDICATORS", "ALTERNATIVES", "REASONING")
_KEY_RES = {
    key: re.compile(
        rf"^[ \t>*_`#-]*{key}\b[ \t]*[:：][ \t]*(.*?)[ \t]*$",
        re.IGNORECASE | re.MULTILINE,
    )
    for key in _BLOCK_KEYS
}
_INT_RE = re.compile(r"-?\d+")
_DASHES = str.maketrans({"‐": "-", "‑": "-", "‒": "-", "–": "-",
                         "—": "-", "−": "-"})


@dataclass(frozen=True)
class DemographicPrediction:
    """Canonical parse of one final-stage response."""

    agent_id: str
    attribute: str
    label: str  # canonical category or Unparsed
    confidence: int | None = None
    indicator_scores: dict[str, int] | None = None
    alternatives: tuple[str, ...] = ()
    reasoning: str = ""
    parse_status: str = STATUS_CLEAN

    def __post_init__(self) -> None:
        if self.confidence is not None and not 1 <= self.confidence <= 5:
            raise ValueError(f"confidence {self.confidence} outside [1, 5]")
        if self.indicator_scores is not None:
            if set(self.indicator_scores) != set(INCOME_INDICATORS):
                raise ValueError("indicator scores must cover exactly the five named indicators")
            for name, score in self.indicator_scores.items():
                if not 1 <= score <= 10:
                    raise ValueError(f"indicator {name}={score} outside [1, 10]")
        if self.label in self.alternatives:
            raise ValueError("alternatives must exclude the primary label")
        if len(set(self.alternatives)) != len(self.alternatives):
            raise ValueError("alternatives must not repeat")
        if self.parse_status not in (STATUS_CLEAN, STATUS_REPAIRED, STATUS_UNPARSED):
            raise ValueError(f"bad parse_status {self.parse_status!r}")

    def to_answer_block(self) -> str:
        """Canonical re-serialization; parsing it back yields an equal prediction."""
        lines = [f"PREDICTION: {self.label}"]
        if self.confidence is not None:
            lines.append(f"CONFIDENCE: {self.confidence}")
        if self.indicator_scores is not None:
            lines.append(
                "INDICATORS: " + ",".join(str(self.indicator_scores[k]) for k in INCOME_INDICATORS)
            )
        if self.alternatives:
            lines.append("ALTERNATIVES: " + ", ".join(self.alternatives))
        if self.reasoning:
            lines.append(f"REASONING: {self.reasoning}")
        return "\n".join(lines)


@dataclass(frozen=True)
class _PhraseMatch:
    start: int
    end: int
    category: str
    kind: str  # "name" | "range"


class LabelNormalizer:
    """Whole-token matcher from free text onto one attribute's categories."""

    def __init__(
        self,
        attribute: str,
        categories: tuple[str, ...],
        synonym_table: dict | None = None,
    ):
        self.attribute = attribute
        self.categories = categories
        table = synonym_table if synonym_table is not None else _load_synonym_table(attribute)
        self._patterns: list[tuple[re.Pattern, str, str]] = []
        for category in categories:
            entry = table.get(category, {})
            names = {category.lower(), *(s.lower() for s in entry.get("synonyms", ()))}
            ranges = {s.lower() for s in entry.get("ranges", ())}
            for phrase in sorted(names):
                self._patterns.append((_phrase_pattern(phrase), category, "name"))
            for phrase in sorted(ranges):
                self._patterns.append((_phrase_pattern(phrase), category, "range"))
        # Exclusion phrases mask spans that merely contain a category word
        # ("high school" is not an income signal); they win overlaps by length.
        for phrase in sorted(s.lower() for s in table.get("_exclusions", ())):
            self._patterns.append((_phrase_pattern(phrase), "", "exclusion"))

    def matches(self, text: str) -> list[_PhraseMatch]:
        """All category mentions, longest-match-first on overlaps."""
        normalized = text.lower().translate(_DASHES)
        found: list[_PhraseMatch] = []
        for pattern, category, kind in self._patterns:
            for m in pattern.finditer(normalized):
                found.append(_PhraseMatch(m.start(), m.end(), category, kind))
        found.sort(key=lambda m: (m.start, -(m.end - m.start), m.kind, m.category))
        chosen: list[_PhraseMatch] = []
        covered_end = -1
        for m in found:
            if m.start >= covered_end:
                chosen.append(m)
                covered_end = m.end
        return [m for m in chosen if m.kind != "exclusion"]

    def normalize(self, fragment: str) -> str | None:
        """The unique category the fragment mentions, or None (absent/ambiguous)."""
        categories = {m.category for m in self.matches(fragment)}
        if len(categories) == 1:
            return next(iter(categories))
        return None

    def last_mention(self, text: str, kind: str) -> str | None:
        mentions = [m for m in self.matches(text) if m.kind == kind]
        return mentions[-1].category if mentions else None


def _phrase_pattern(phrase: str) -> re.Pattern:
    words = phrase.split()
    body = r"\s+".join(re.escape(w) for w in words)
    return re.compile(rf"(?<![a-z0-9$-]){body}(?![a-z0-9-])")


def _load_synonym_table(attribute: str) -> dict:
    path = resources.files("mobilens").joinpath(f"data/synonyms/{attribute}.json")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        return {}
    table = dict(raw.get("categories", {}))
    table["_exclusions"] = raw.get("exclusions", [])
    return table


@lru_cache(maxsize=None)
def _normalizer_for(attribute: str, categories: CategoryConfig) -> LabelNormalizer:
    return LabelNormalizer(attribute, categories.categories(attribute))


def normalize_label(
    fragment: str, attribute: str, categories: CategoryConfig | None = None
) -> str | None:
    """Map a text fragment to a canonical category; None when absent or ambiguous."""
    return _normalizer_for(attribute, categories or DEFAULT_CATEGORIES).normalize(fragment)


def _last_key_value(raw: str, key: str) -> str | None:
    matches = list(_KEY_RES[key].finditer(raw))
    return matches[-1].group(1).strip() if matches else None


def extract_scores(raw: str, attribute: str) -> tuple[int | None, dict[str, int] | None, bool]:
    """Pull confidence and (for income) indicator scores out of a response.

    Returns (confidence, indicators, repaired); values are clamped into
    their ranges and `repaired` reports whether any clamp or discard
    happened. Missing lines simply yield None without repair.
    """
    repaired = False
    confidence: int | None = None
    value = _last_key_value(raw, "CONFIDENCE")
    if value is not None:
        m = _INT_RE.search(value)
        if m:
            parsed = int(m.group())
            confidence = min(5, max(1, parsed))
            if confidence != parsed:
                repaired = True
        else:
            repaired = True
    indicators: dict[str, int] | None = None
    if attribute == "income":
        value = _last_key_value(raw, "INDICATORS")
        if value is not None:
            parsed_values = [int(tok) for tok in _INT_RE.findall(value)]
            if len(parsed_values) == len(INCOME_INDICATORS):
                clamped = [min(10, max(1, v)) for v in parsed_values]
                if clamped != parsed_values:
                    repaired = True
                indicators = dict(zip(INCOME_INDICATORS, clamped))
            else:
                repaired = True
    return confidence, indicators, repaired


def parse_stage3(
    raw: str,
    attribute: str,
    agent_id: str = "",
    categories: CategoryConfig | None = None,
) -> DemographicPrediction:
    """Parse a raw final-stage response; total over arbitrary text.

    Resolution order: answer block if present and well formed (clean),
    then last explicit category mention, then bracket range expression
    (repaired), else Unparsed. Score clamping and dropped alternative
    entries demote an otherwise clean parse to repaired.
    """
    cats = categories or DEFAULT_CATEGORIES
    normalizer = _normalizer_for(attribute, cats)

    repaired = False
    label: str | None = None
    from_block = False
    pred_value = _last_key_value(raw, "PREDICTION")
    if pred_value is not None:
        label = normalizer.normalize(pred_value)
        if label is not None:
            from_block = True
        else:
            repaired = True
    if label is None:
        label = normalizer.last_mention(raw, kind="name") or normalizer.last_mention(
            raw, kind="range"
        )
        if label is not None:
            repaired = True

    confidence, indicators, scores_repaired = extract_scores(raw, attribute)
    repaired = repaired or scores_repaired

    alternatives: list[str] = []
    alt_value = _last_key_value(raw, "ALTERNATIVES")
    if alt_value is not None:
        for fragment in alt_value.split(","):
            fragment = fragment.strip()
            if not fragment:
                continue
            category = normalizer.normalize(fragment)
            if category is None:
                repaired = True
            elif category != label and category not in alternatives:
                alternatives.append(category)

    reasoning = ""
    reasoning_matches = list(_KEY_RES["REASONING"].finditer(raw))
    if reasoning_matches:
        tail = reasoning_matches[-1]
        reasoning = (tail.group(1) + raw[tail.end():]).strip()

    if label is None:
        status = STATUS_UNPARSED
        label = UNPARSED
    elif from_block and not repaired:
        status = STATUS_CLEAN
    else:
        status = STATUS_REPAIRED

    return DemographicPrediction(
        agent_id=agent_id,
        attribute=attribute,
        label=label,
        confidence=confidence,
        indicator_scores=indicators,
        alternatives=tuple(a for a in alternatives if a != label),
        reasoning=reasoning,
        parse_status=status,
    )
