"""Labeled synthetic agents whose venue choices encode their demographics.

Every bracket of every attribute owns a small pool of signature venues
whose names carry a unique keyword and whose activity types carry a
unique tag (both listed in PLANTED_KEYWORDS / the pools below), so both
the rule-based mock oracle (names) and a supervised feature model (tags)
can recover the planted labels. The separability knob sigma controls how
often a signature visit leaks from another bracket's pool; at sigma=1
the signature sets are fully disjoint and keyword recovery is exact.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .categories import ATTRIBUTES, CategoryConfig, DEFAULT_CATEGORIES
from .trajectory import (
    DatasetManifest,
    DemographicLabel,
    Poi,
    PoiCatalog,
    StayPoint,
    write_labels,
    write_poi_catalog,
    write_stay_points,
)

DAYPART_HOURS = ((0, 6), (6, 12), (12, 18), (18, 24))


@dataclass(frozen=True)
class SynthVenue:
    name: str
    activity_types: tuple[str, ...]
    tier: str  # luxury | mid-range | budget


@dataclass(frozen=True)
class ProfileRule:
    """Signature venues and visiting habits for one bracket of one attribute."""

    attribute: str
    bracket: str
    venues: tuple[SynthVenue, ...]
    visits_per_week: tuple[int, int]  # inclusive range of signature visits
    daypart_weights: tuple[float, float, float, float]


# One name keyword per bracket; unique across all attributes and absent
# from every neutral venue name. The mock oracle matches on these.
PLANTED_KEYWORDS: dict[str, dict[str, str]] = {
    "income": {
        "VeryLow": "Penny",
        "Low": "Thrift",
        "Middle": "Maple",
        "UpperMiddle": "Cedarbrook",
        "High": "Velvet",
        "VeryHigh": "Platinum",
    },
    "age": {
        "Under25": "Campus",
        "25-44": "Crossfit",
        "45-64": "Orchard",
        "65plus": "Heritage",
    },
    "education": {
        "NoHighSchool": "Millyard",
        "HighSchool": "Depot",
        "SomeCollege": "Crescent",
        "Bachelors": "Atlas",
        "Graduate": "Athenaeum",
    },
}

_INCOME_POOLS = {
    "VeryLow": (
        SynthVenue("Penny Pantry Surplus", ("Shopping", "DiscountEssentials"), "budget"),
        SynthVenue("Penny Wash Laundromat", ("Services", "DiscountEssentials"), "budget"),
    ),
    "Low": (
        SynthVenue("Thrift Corner Outlet", ("Shopping", "BudgetRetail"), "budget"),
        SynthVenue("Thrift Town Diner", ("Food", "BudgetRetail"), "budget"),
    ),
    "Middle": (
        SynthVenue("Maple Court Grocery", ("Shopping", "MidMarketRetail"), "mid-range"),
        SynthVenue("Maple Lane Cinema", ("Leisure", "MidMarketRetail"), "mid-range"),
    ),
    "UpperMiddle": (
        SynthVenue("Cedarbrook Fitness Studio", ("Fitness", "BoutiqueRetail"), "mid-range"),
        SynthVenue("Cedarbrook Wine Bar", ("Food", "BoutiqueRetail"), "mid-range"),
    ),
    "High": (
        SynthVenue("Velvet Harbor Bistro", ("Food", "PremiumLeisure"), "luxury"),
        SynthVenue("Velvet Peak Spa", ("Leisure", "PremiumLeisure"), "luxury"),
    ),
    "VeryHigh": (
        SynthVenue("Platinum Vault Club", ("Leisure", "LuxuryRetail"), "luxury"),
        SynthVenue("Platinum Row Jewelers", ("Shopping", "LuxuryRetail"), "luxury"),
    ),
}

_AGE_POOLS = {
    "Under25": (
        SynthVenue("Campus Quad Cafe", ("Food", "CampusLife"), "budget"),
        SynthVenue("Campus Arcade Hall", ("Leisure", "CampusLife"), "budget"),
    ),
    "25-44": (
        SynthVenue("Crossfit Forge Gym", ("Fitness", "ActiveCareer"), "mid-range"),
        SynthVenue("Crossfit Annex Smoothies", ("Food", "ActiveCareer"), "mid-range"),
    ),
    "45-64": (
        SynthVenue("Orchard Club House", ("Leisure", "EstablishedSuburb"), "mid-range"),
        SynthVenue("Orchard Garden Supply", ("Shopping", "EstablishedSuburb"), "mid-range"),
    ),
    "65plus": (
        SynthVenue("Heritage Senior Center", ("Services", "SeniorCommunity"), "budget"),
        SynthVenue("Heritage Bridge Club", ("Leisure", "SeniorCommunity"), "budget"),
    ),
}

_EDUCATION_POOLS = {
    "NoHighSchool": (
        SynthVenue("Millyard Works Floor", ("Work", "ManualTrades"), "budget"),
        SynthVenue("Millyard Tool Exchange", ("Shopping", "ManualTrades"), "budget"),
    ),
    "HighSchool": (
        SynthVenue("Depot Bowling Lanes", ("Leisure", "ServiceWork"), "budget"),
        SynthVenue("Depot Freight Cafe", ("Food", "ServiceWork"), "budget"),
    ),
    "SomeCollege": (
        SynthVenue("Crescent Night Classes", ("Services", "ContinuingEd"), "mid-range"),
        SynthVenue("Crescent Study Lounge", ("Leisure", "ContinuingEd"), "mid-range"),
    ),
    "Bachelors": (
        SynthVenue("Atlas Office Tower", ("Work", "ProfessionalDistrict"), "mid-range"),
        SynthVenue("Atlas Commons Salad Bar", ("Food", "ProfessionalDistrict"), "mid-range"),
    ),
    "Graduate": (
        SynthVenue("Athenaeum Research Library", ("Services", "ResearchQuarter"), "mid-range"),
        SynthVenue("Athenaeum Seminar Hall", ("Work", "ResearchQuarter"), "mid-range"),
    ),
}

NEUTRAL_VENUES = (
    SynthVenue("Riverbend Market", ("Shopping",), "mid-range"),
    SynthVenue("Sunrise Bakery", ("Food",), "mid-range"),
    SynthVenue("Central Transit Stop", ("Transit",), "budget"),
    SynthVenue("Westside Park", ("Outdoors",), "budget"),
    SynthVenue("Oakwood Clinic", ("Health",), "mid-range"),
    SynthVenue("Harborline Gym", ("Fitness",), "mid-range"),
    SynthVenue("Elm Street Library", ("Services",), "budget"),
    SynthVenue("Stonegate Post Office", ("Services",), "budget"),
)


@dataclass(frozen=True)
class RuleSet:
    """Complete generation recipe: one ProfileRule per (attribute, bracket)."""

    profiles: tuple[ProfileRule, ...]
    neutral_venues: tuple[SynthVenue, ...] = NEUTRAL_VENUES
    neutral_visits_per_week: tuple[int, int] = (3, 5)
    separability: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.separability <= 1.0:
            raise ValueError("separability must lie in [0, 1]")

    def profile(self, attribute: str, bracket: str) -> ProfileRule:
        for rule in self.profiles:
            if rule.attribute == attribute and rule.bracket == bracket:
                return rule
        raise KeyError((attribute, bracket))

    def pools(self, attribute: str) -> dict[str, tuple[SynthVenue, ...]]:
        return {r.bracket: r.venues for r in self.profiles if r.attribute == attribute}

    def validate_coverage(self, categories: CategoryConfig) -> None:
        for attribute in ATTRIBUTES:
            covered = {r.bracket for r in self.profiles if r.attribute == attribute}
            missing = set(categories.categories(attribute)) - covered
            if missing:
                raise ValueError(f"rules missing {attribute} brackets: {sorted(missing)}")

    def rule_hash(self) -> str:
        payload = json.dumps(
            {
                "profiles": [
                    {
                        "attribute": r.attribute,
                        "bracket": r.bracket,
                        "venues": [[v.name, list(v.activity_types), v.tier] for v in r.venues],
                        "visits_per_week": list(r.visits_per_week),
                        "daypart_weights": list(r.daypart_weights),
                    }
                    for r in self.profiles
                ],
                "neutral": [[v.name, list(v.activity_types), v.tier] for v in self.neutral_venues],
                "neutral_visits_per_week": list(self.neutral_visits_per_week),
                "separability": self.separability,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def default_rules(separability: float = 1.0) -> RuleSet:
    profiles = []
    for attribute, pools in (
        ("income", _INCOME_POOLS),
        ("age", _AGE_POOLS),
        ("education", _EDUCATION_POOLS),
    ):
        for bracket, venues in pools.items():
            profiles.append(
                ProfileRule(
                    attribute=attribute,
                    bracket=bracket,
                    venues=venues,
                    visits_per_week=(2, 3),
                    daypart_weights=(0.05, 0.4, 0.35, 0.2),
                )
            )
    return RuleSet(profiles=tuple(profiles), separability=separability)


def _all_venues(rules: RuleSet) -> list[SynthVenue]:
    seen: dict[str, SynthVenue] = {}
    for rule in rules.profiles:
        for venue in rule.venues:
            seen.setdefault(venue.name, venue)
    for venue in rules.neutral_venues:
        seen.setdefault(venue.name, venue)
    return list(seen.values())


def _weighted_daypart(rng: random.Random, weights) -> tuple[int, int]:
    return rng.choices(DAYPART_HOURS, weights=weights, k=1)[0]


@dataclass
class GenerationResult:
    out_dir: Path
    stay_points_path: Path
    pois_path: Path
    labels_path: Path
    manifest_path: Path
    generator_manifest_path: Path
    n_agents: int
    n_stay_points: int
    labels: dict[str, DemographicLabel]


def generate_agents(
    n: int,
    seed: int,
    rules: RuleSet | None = None,
    weeks: int = 2,
    out_dir: str | Path = ".",
    categories: CategoryConfig | None = None,
    start_monday: dt.date = dt.date(2024, 1, 1),
) -> GenerationResult:
    """Write stay-point/POI/labels CSVs plus manifests for n synthetic agents.

    Deterministic for fixed (n, seed, rules, weeks): agents are assigned
    brackets round-robin (so label counts stay balanced), then each week
    receives signature visits for every attribute plus neutral filler.
    """
    cats = categories or DEFAULT_CATEGORIES
    rules = rules or default_rules()
    rules.validate_coverage(cats)
    if start_monday.weekday() != 0:
        raise ValueError("start_monday must be a Monday")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    venues = _all_venues(rules)
    poi_ids = {venue.name: f"p{idx:04d}" for idx, venue in enumerate(venues, start=1)}
    pois: dict[str, Poi] = {}
    for venue in venues:
        pois[poi_ids[venue.name]] = Poi(
            poi_id=poi_ids[venue.name],
            name=venue.name,
            activity_types=venue.activity_types,
            lon=round(-93.30 + rng.random() * 0.2, 6),
            lat=round(44.90 + rng.random() * 0.2, 6),
        )
    vocabulary = sorted({tag for venue in venues for tag in venue.activity_types})
    catalog = PoiCatalog(pois=pois, vocabulary=frozenset(vocabulary))

    labels: dict[str, DemographicLabel] = {}
    stay_points: list[StayPoint] = []
    for i in range(n):
        agent_id = f"agent{i:04d}"
        bracket_of = {
            attr: cats.categories(attr)[i % len(cats.categories(attr))] for attr in ATTRIBUTES
        }
        labels[agent_id] = DemographicLabel(
            agent_id=agent_id,
            age_bracket=bracket_of["age"],
            income_bracket=bracket_of["income"],
            education_level=bracket_of["education"],
            sex="F" if i % 2 else "M",
        )
        for w in range(weeks):
            monday = start_monday + dt.timedelta(days=7 * w)
            plan: list[tuple[SynthVenue, ProfileRule | None]] = []
            for attr in ATTRIBUTES:
                rule = rules.profile(attr, bracket_of[attr])
                pools = rules.pools(attr)
                others = [v for b, vs in pools.items() if b != rule.bracket for v in vs]
                for _ in range(rng.randint(*rule.visits_per_week)):
                    if others and rng.random() >= rules.separability:
                        plan.append((rng.choice(others), rule))
                    else:
                        plan.append((rng.choice(rule.venues), rule))
            for _ in range(rng.randint(*rules.neutral_visits_per_week)):
                plan.append((rng.choice(rules.neutral_venues), None))
            for venue, rule in plan:
                weights = rule.daypart_weights if rule else (0.25, 0.25, 0.25, 0.25)
                lo, hi = _weighted_daypart(rng, weights)
                start_local = dt.datetime.combine(
                    monday + dt.timedelta(days=rng.randrange(7)),
                    dt.time(rng.randrange(lo, hi), rng.randrange(60), rng.randrange(60)),
                    tzinfo=dt.timezone.utc,
                )
                duration = dt.timedelta(minutes=rng.randrange(20, 121), seconds=rng.randrange(60))
                poi = pois[poi_ids[venue.name]]
                stay_points.append(
                    StayPoint(
                        agent_id=agent_id,
                        start_ts=start_local,
                        end_ts=start_local + duration,
                        poi_id=poi.poi_id,
                        lon=poi.lon,
                        lat=poi.lat,
                    )
                )

    stay_points.sort(key=lambda sp: (sp.agent_id, sp.start_ts, sp.poi_id))

    sp_path = out / "stay_points.csv"
    poi_path = out / "pois.csv"
    labels_path = out / "labels.csv"
    manifest_path = out / "manifest.json"
    generator_manifest_path = out / "generator_manifest.json"

    write_stay_points(stay_points, sp_path)
    write_poi_catalog(catalog, poi_path)
    write_labels(labels, labels_path)
    DatasetManifest(
        timezone="UTC", activity_types=tuple(vocabulary), categories=cats
    ).dump(manifest_path)
    generator_manifest_path.write_text(
        json.dumps(
            {
                "seed": seed,
                "n_agents": n,
                "weeks": weeks,
                "separability": rules.separability,
                "rule_hash": rules.rule_hash(),
                "n_stay_points": len(stay_points),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    return GenerationResult(
        out_dir=out,
        stay_points_path=sp_path,
        pois_path=poi_path,
        labels_path=labels_path,
        manifest_path=manifest_path,
        generator_manifest_path=generator_manifest_path,
        n_agents=n,
        n_stay_points=len(stay_points),
        labels=labels,
    )
