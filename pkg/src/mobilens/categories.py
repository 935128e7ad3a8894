"""Canonical demographic category sets and their configuration.

Income brackets are fixed. Age and education bracket names are
configurable through the dataset manifest because only their counts
(4 and 5) are contractually fixed; the defaults below are placeholders
for datasets that do not declare their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ATTRIBUTES = ("age", "income", "education")

# Sentinel label for predictions from which no canonical category could
# be recovered. Scored as incorrect everywhere.
UNPARSED = "Unparsed"

INCOME_BRACKETS = ("VeryLow", "Low", "Middle", "UpperMiddle", "High", "VeryHigh")

# Display form used when enumerating brackets in prompts.
INCOME_DISPLAY = {
    "VeryLow": "Very Low <$15k",
    "Low": "Low $15k-$35k",
    "Middle": "Middle $35k-$75k",
    "UpperMiddle": "Upper-middle $75k-$125k",
    "High": "High $125k-$200k",
    "VeryHigh": "Very high >$200k",
}

DEFAULT_AGE_BRACKETS = ("Under25", "25-44", "45-64", "65plus")
DEFAULT_EDUCATION_LEVELS = (
    "NoHighSchool",
    "HighSchool",
    "SomeCollege",
    "Bachelors",
    "Graduate",
)

# The five per-income indicator scores demanded in the final inference
# stage, each on a 1-10 scale, in pinned order.
INCOME_INDICATORS = (
    "location_economics",
    "neighborhood",
    "leisure_cost",
    "shopping",
    "commuting",
)


class CategoryConfigError(ValueError):
    """Raised when a category configuration violates its contract."""


@dataclass(frozen=True)
class CategoryConfig:
    """Canonical category names per demographic attribute."""

    age: tuple[str, ...] = DEFAULT_AGE_BRACKETS
    income: tuple[str, ...] = INCOME_BRACKETS
    education: tuple[str, ...] = DEFAULT_EDUCATION_LEVELS

    def __post_init__(self) -> None:
        if tuple(self.income) != INCOME_BRACKETS:
            raise CategoryConfigError(
                f"income brackets are fixed; expected {INCOME_BRACKETS}, got {self.income}"
            )
        if len(self.age) != 4:
            raise CategoryConfigError(f"age needs exactly 4 categories, got {len(self.age)}")
        if len(self.education) != 5:
            raise CategoryConfigError(
                f"education needs exactly 5 categories, got {len(self.education)}"
            )
        for attr in ATTRIBUTES:
            cats = self.categories(attr)
            if len(set(cats)) != len(cats):
                raise CategoryConfigError(f"duplicate {attr} category in {cats}")
            if UNPARSED in cats:
                raise CategoryConfigError(f"{UNPARSED!r} is reserved and cannot be a category")

    def categories(self, attribute: str) -> tuple[str, ...]:
        if attribute not in ATTRIBUTES:
            raise CategoryConfigError(f"unknown attribute {attribute!r}")
        return getattr(self, attribute)

    def display(self, attribute: str) -> tuple[str, ...]:
        """Category names as they should be enumerated in a prompt."""
        cats = self.categories(attribute)
        if attribute == "income":
            return tuple(INCOME_DISPLAY[c] for c in cats)
        return cats


DEFAULT_CATEGORIES = CategoryConfig()
