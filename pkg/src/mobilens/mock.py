"""Deterministic rule-based oracle standing in for a live model.

The oracle is a pure function of the prompt. Stage 1 and Stage 2 echo
canned analyses that embed the venue names found in the prompt's
narrative; Stage 3 applies a planted keyword table (venue-name keyword ->
bracket) to the *Stage 1 findings section only*, so removing Stage 1 from
a chain verifiably destroys the oracle's signal while removing Stage 2
does not. The default keyword table inverts the synthetic generator's
planted venue names, giving a known end-to-end recovery ceiling.
"""

from __future__ import annotations

import re

from .backend import BackendError, CompletionRequest
from .categories import ATTRIBUTES, CategoryConfig, DEFAULT_CATEGORIES
from .synth import PLANTED_KEYWORDS

_STAGE_RE = re.compile(r"^Task: Stage (\d) - ")
_ATTRIBUTE_RE = re.compile(r"^Task: Stage 3 - demographic inference \((\w+)\)\.")
_VENUE_LINE_RE = re.compile(r"\(\d+ mins\): (.+) - .+$")
_S1_SECTION_RE = re.compile(r"Stage 1 findings:\n(.*?)\n\nStage 2 findings:", re.DOTALL)
_NARRATIVE_RE = re.compile(r"Narrative:\n(.*)", re.DOTALL)

# How the oracle spells its predicted bracket; exercises the parser's
# normalization instead of handing it canonical identifiers.
_PREDICTION_STYLE = {
    "VeryLow": "Very Low",
    "Low": "Low",
    "Middle": "Middle",
    "UpperMiddle": "Upper-middle",
    "High": "High",
    "VeryHigh": "Very high",
}

_INCOME_BASE_SCORE = {"VeryLow": 1, "Low": 2, "Middle": 5, "UpperMiddle": 7, "High": 8, "VeryHigh": 9}

# Bracket predicted when no planted keyword is visible in the Stage 1 section.
FALLBACK_BRACKETS = {"age": "25-44", "income": "Middle", "education": "SomeCollege"}


class MockOracleError(BackendError):
    """The prompt was not produced by a known stage template."""


def _extract_venues(text: str) -> tuple[list[str], int]:
    """Distinct venue names in first-appearance order, plus the visit-line count."""
    venues: list[str] = []
    lines = 0
    for line in text.splitlines():
        match = _VENUE_LINE_RE.search(line)
        if match:
            lines += 1
            if match.group(1) not in venues:
                venues.append(match.group(1))
    return venues, lines


class MockBackend:
    """Planted-rule completion oracle; total and deterministic over shipped templates."""

    def __init__(
        self,
        keyword_tables: dict[str, dict[str, str]] | None = None,
        categories: CategoryConfig | None = None,
    ):
        # attribute -> {venue-name keyword -> bracket}
        tables = keyword_tables or {
            attr: {kw: bracket for bracket, kw in PLANTED_KEYWORDS[attr].items()}
            for attr in ATTRIBUTES
        }
        self.keyword_tables = tables
        self.categories = categories or DEFAULT_CATEGORIES

    def complete(self, request: CompletionRequest) -> str:
        prompt = request.last_user_content
        first_line = prompt.splitlines()[0] if prompt else ""
        stage_match = _STAGE_RE.match(first_line)
        if not stage_match:
            raise MockOracleError(f"prompt lacks a stage marker (first line {first_line!r})")
        stage = stage_match.group(1)
        if stage == "1":
            return self._stage1(prompt)
        if stage == "2":
            return self._stage2(prompt)
        if stage == "3":
            return self._stage3(prompt, first_line)
        raise MockOracleError(f"unknown stage marker {stage!r}")

    def _stage1(self, prompt: str) -> str:
        narrative = _NARRATIVE_RE.search(prompt)
        venues, visit_count = _extract_venues(narrative.group(1)) if narrative else ([], 0)
        inventory = "; ".join(venues) if venues else "none observed"
        return (
            "Factual findings from the narrative:\n"
            f"- Location inventory: {inventory}.\n"
            f"- Temporal patterns: {visit_count} visits recorded across the week.\n"
            "- Spatial characteristics: activity concentrated around recurring venues.\n"
            "- Sequence observations: visits repeat in a stable weekly order."
        )

    def _stage2(self, prompt: str) -> str:
        narrative = _NARRATIVE_RE.search(prompt)
        venues, _ = _extract_venues(narrative.group(1)) if narrative else ([], 0)
        spots = "; ".join(venues) if venues else "no venues noted"
        return (
            "Behavioral interpretation across five dimensions:\n"
            "- Temporal patterns: routine weekly structure with recurring slots.\n"
            f"- Economic patterns: spending venues on record include {spots}.\n"
            "- Social patterns: a mix of obligations and leisure outings.\n"
            "- Spatial patterns: compact activity space around frequented venues.\n"
            "- Stability patterns: consistent week-over-week behavior."
        )

    def _stage3(self, prompt: str, first_line: str) -> str:
        attr_match = _ATTRIBUTE_RE.match(first_line)
        if not attr_match or attr_match.group(1) not in self.keyword_tables:
            raise MockOracleError(f"unrecognized inference attribute in {first_line!r}")
        attribute = attr_match.group(1)
        section = _S1_SECTION_RE.search(prompt)
        if not section:
            raise MockOracleError("prompt lacks the staged findings sections")

        table = self.keyword_tables[attribute]
        order = list(self.categories.categories(attribute))
        hits = {bracket: section.group(1).count(keyword) for keyword, bracket in table.items()}
        best = max(hits.values(), default=0)
        if best > 0:
            bracket = min((b for b, h in hits.items() if h == best), key=order.index)
            confidence = 5
        else:
            bracket = FALLBACK_BRACKETS[attribute]
            confidence = 1

        lines = ["Synthesis of the staged findings.", ""]
        lines.append(f"PREDICTION: {self._display(attribute, bracket)}")
        lines.append(f"CONFIDENCE: {confidence}")
        if attribute == "income":
            base = _INCOME_BASE_SCORE[bracket]
            scores = (base, max(1, base - 1), min(10, base + 1), base, base)
            lines.append("INDICATORS: " + ",".join(str(s) for s in scores))
        alternatives = self._neighbors(attribute, bracket)
        if alternatives:
            lines.append(
                "ALTERNATIVES: " + ", ".join(self._display(attribute, a) for a in alternatives)
            )
        if best > 0:
            lines.append(
                "REASONING: Signature venues in the Stage 1 inventory match this bracket."
            )
        else:
            lines.append(
                "REASONING: No distinctive venues were visible, so the central bracket is assumed."
            )
        return "\n".join(lines)

    def _display(self, attribute: str, bracket: str) -> str:
        if attribute == "income":
            return _PREDICTION_STYLE[bracket]
        return bracket

    def _neighbors(self, attribute: str, bracket: str) -> list[str]:
        order = list(self.categories.categories(attribute))
        idx = order.index(bracket)
        out = []
        if idx + 1 < len(order):
            out.append(order[idx + 1])
        if idx - 1 >= 0:
            out.append(order[idx - 1])
        return out
