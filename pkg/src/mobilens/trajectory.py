"""Stay-point trajectory model: core types, CSV loaders, visit joining,
week partitioning, and reproducible agent sampling.

File schemas (all UTF-8 CSV with header):
  stay points: agent_id,start_ts,end_ts,poi_id,lon,lat  (RFC 3339 timestamps)
  POIs:        poi_id,name,activity_types,lon,lat       (activity_types '|'-separated)
  labels:      agent_id,age_bracket,income_bracket,education_level,sex

A dataset manifest (JSON) declares the timezone, the activity-tag
vocabulary, and the demographic category configuration.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from zoneinfo import ZoneInfo

from .categories import ATTRIBUTES, CategoryConfig, DEFAULT_CATEGORIES

logger = logging.getLogger(__name__)

STAY_POINT_HEADER = ["agent_id", "start_ts", "end_ts", "poi_id", "lon", "lat"]
POI_HEADER = ["poi_id", "name", "activity_types", "lon", "lat"]
LABELS_HEADER = ["agent_id", "age_bracket", "income_bracket", "education_level", "sex"]

_MASK64 = (1 << 64) - 1

# Version tag of the pinned sampling algorithm: lexicographic id sort,
# then a partial Fisher-Yates shuffle driven by splitmix64 with unbiased
# rejection sampling. Recorded so "fixed random seed" runs stay
# reproducible across implementations.
SAMPLER_VERSION = "splitmix64-fisher-yates-v1"


class DataFormatError(ValueError):
    """Malformed input file. Carries the file, line number, and field."""

    def __init__(self, path, line_no: int | None, field_name: str | None, message: str):
        self.path = str(path)
        self.line_no = line_no
        self.field = field_name
        where = self.path
        if line_no is not None:
            where += f":{line_no}"
        if field_name:
            where += f" (field {field_name})"
        super().__init__(f"{where}: {message}")


# Domain types -----------------------------------------------------------------


@dataclass(frozen=True)
class StayPoint:
    """One timestamped dwell at a POI; the atomic trajectory record."""

    agent_id: str
    start_ts: dt.datetime  # aware, UTC, second resolution
    end_ts: dt.datetime
    poi_id: str
    lon: float
    lat: float

    def __post_init__(self) -> None:
        if self.end_ts <= self.start_ts:
            raise ValueError(f"end_ts {self.end_ts} must be after start_ts {self.start_ts}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon {self.lon} outside [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat {self.lat} outside [-90, 90]")


@dataclass(frozen=True)
class Poi:
    """A named venue with coordinates and pre-assigned activity-type tags."""

    poi_id: str
    name: str
    activity_types: tuple[str, ...]
    lon: float
    lat: float

    def __post_init__(self) -> None:
        if not self.activity_types:
            raise ValueError(f"POI {self.poi_id} has no activity types")


@dataclass(frozen=True)
class PoiCatalog:
    """poi_id -> Poi map plus the tag vocabulary the catalog was validated against."""

    pois: dict[str, Poi]
    vocabulary: frozenset[str] | None = None

    def __len__(self) -> int:
        return len(self.pois)

    def __contains__(self, poi_id: str) -> bool:
        return poi_id in self.pois

    def __getitem__(self, poi_id: str) -> Poi:
        return self.pois[poi_id]


@dataclass(frozen=True)
class Visit:
    """A stay point enriched with the resolved venue name and activity types."""

    agent_id: str
    start_ts: dt.datetime
    end_ts: dt.datetime
    poi_id: str
    lon: float
    lat: float
    name: str
    activity_types: tuple[str, ...]
    duration_s: int

    @staticmethod
    def from_stay_point(sp: StayPoint, poi: Poi) -> "Visit":
        return Visit(
            agent_id=sp.agent_id,
            start_ts=sp.start_ts,
            end_ts=sp.end_ts,
            poi_id=sp.poi_id,
            lon=sp.lon,
            lat=sp.lat,
            name=poi.name,
            activity_types=poi.activity_types,
            duration_s=int((sp.end_ts - sp.start_ts).total_seconds()),
        )


@dataclass(frozen=True)
class AgentWeek:
    """One agent's chronologically ordered visits for one Monday-opened week."""

    agent_id: str
    week_start: dt.date  # the Monday opening the week, in `tz`
    visits: tuple[Visit, ...]
    tz: str = "UTC"

    def __post_init__(self) -> None:
        if not self.visits:
            raise ValueError("AgentWeek must contain at least one visit")
        zone = ZoneInfo(self.tz)
        lo = dt.datetime.combine(self.week_start, dt.time.min, tzinfo=zone)
        hi = lo + dt.timedelta(days=7)
        for v in self.visits:
            local = v.start_ts.astimezone(zone)
            if not lo <= local < hi:
                raise ValueError(
                    f"visit at {v.start_ts} falls outside week of {self.week_start}"
                )


@dataclass(frozen=True)
class DemographicLabel:
    """Ground-truth brackets for one agent; sex is an unevaluated pass-through."""

    agent_id: str
    age_bracket: str
    income_bracket: str
    education_level: str
    sex: str | None = None

    def get(self, attribute: str) -> str:
        if attribute == "age":
            return self.age_bracket
        if attribute == "income":
            return self.income_bracket
        if attribute == "education":
            return self.education_level
        raise KeyError(attribute)


@dataclass(frozen=True)
class DatasetManifest:
    """Dataset-level configuration: timezone, tag vocabulary, category sets."""

    timezone: str = "UTC"
    activity_types: tuple[str, ...] = ()
    categories: CategoryConfig = field(default_factory=lambda: DEFAULT_CATEGORIES)

    @staticmethod
    def load(path: str | Path) -> "DatasetManifest":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        cats = raw.get("categories", {})
        config = CategoryConfig(
            age=tuple(cats.get("age", DEFAULT_CATEGORIES.age)),
            income=tuple(cats.get("income", DEFAULT_CATEGORIES.income)),
            education=tuple(cats.get("education", DEFAULT_CATEGORIES.education)),
        )
        return DatasetManifest(
            timezone=raw.get("timezone", "UTC"),
            activity_types=tuple(raw.get("activity_types", ())),
            categories=config,
        )

    def dump(self, path: str | Path) -> None:
        payload = {
            "timezone": self.timezone,
            "activity_types": list(self.activity_types),
            "categories": {a: list(self.categories.categories(a)) for a in ATTRIBUTES},
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# Timestamp handling -----------------------------------------------------------


def parse_rfc3339(text: str) -> dt.datetime:
    """Parse an RFC 3339 timestamp at second resolution into aware UTC."""
    normalized = text.strip()
    if normalized.endswith(("Z", "z")):
        normalized = normalized[:-1] + "+00:00"
    try:
        parsed = dt.datetime.fromisoformat(normalized)
    except ValueError as exc:
        raise ValueError(f"invalid RFC 3339 timestamp {text!r}: {exc}") from None
    if parsed.tzinfo is None:
        raise ValueError(f"timestamp {text!r} lacks a UTC offset")
    if parsed.microsecond:
        raise ValueError(f"timestamp {text!r} has sub-second precision")
    return parsed.astimezone(dt.timezone.utc)


def format_rfc3339(ts: dt.datetime) -> str:
    """Canonical RFC 3339 form: UTC, trailing Z, whole seconds."""
    return ts.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_float(value: str, field_name: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"invalid number {value!r} for {field_name}") from None


# Loaders and canonical writers -------------------------------------------------


def _read_rows(path: str | Path, expected_header: list[str]):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(path, 1, None, "missing header") from None
        if header != expected_header:
            raise DataFormatError(
                path, 1, None, f"expected header {expected_header}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise DataFormatError(
                    path, line_no, None,
                    f"expected {len(expected_header)} fields, got {len(row)}",
                )
            yield line_no, row


def load_stay_points(path: str | Path) -> list[StayPoint]:
    """Load a stay-point CSV, preserving file order. Malformed rows raise."""
    records: list[StayPoint] = []
    for line_no, row in _read_rows(path, STAY_POINT_HEADER):
        agent_id, start_raw, end_raw, poi_id, lon_raw, lat_raw = row
        try:
            start_ts = parse_rfc3339(start_raw)
        except ValueError as exc:
            raise DataFormatError(path, line_no, "start_ts", str(exc)) from None
        try:
            end_ts = parse_rfc3339(end_raw)
        except ValueError as exc:
            raise DataFormatError(path, line_no, "end_ts", str(exc)) from None
        try:
            lon = _parse_float(lon_raw, "lon")
            lat = _parse_float(lat_raw, "lat")
        except ValueError as exc:
            raise DataFormatError(path, line_no, "lon/lat", str(exc)) from None
        try:
            records.append(
                StayPoint(agent_id, start_ts, end_ts, poi_id, lon, lat)
            )
        except ValueError as exc:
            raise DataFormatError(path, line_no, None, str(exc)) from None
    return records


def write_stay_points(records: list[StayPoint], path: str | Path) -> None:
    """Write the canonical stay-point CSV form."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STAY_POINT_HEADER)
        for sp in records:
            writer.writerow(
                [
                    sp.agent_id,
                    format_rfc3339(sp.start_ts),
                    format_rfc3339(sp.end_ts),
                    sp.poi_id,
                    repr(sp.lon),
                    repr(sp.lat),
                ]
            )


def load_poi_catalog(
    path: str | Path, vocabulary: frozenset[str] | set[str] | None = None
) -> PoiCatalog:
    """Load a POI CSV into a catalog, enforcing unique ids and non-empty tags.

    When `vocabulary` is given (normally from the dataset manifest), every
    activity tag must be drawn from it.
    """
    vocab = frozenset(vocabulary) if vocabulary is not None else None
    pois: dict[str, Poi] = {}
    for line_no, row in _read_rows(path, POI_HEADER):
        poi_id, name, tags_raw, lon_raw, lat_raw = row
        if poi_id in pois:
            raise DataFormatError(path, line_no, "poi_id", f"duplicate poi_id {poi_id!r}")
        tags = tuple(t for t in tags_raw.split("|") if t)
        if not tags:
            raise DataFormatError(path, line_no, "activity_types", "empty activity list")
        if vocab is not None:
            unknown = [t for t in tags if t not in vocab]
            if unknown:
                raise DataFormatError(
                    path, line_no, "activity_types",
                    f"tags {unknown} not in declared vocabulary",
                )
        try:
            lon = _parse_float(lon_raw, "lon")
            lat = _parse_float(lat_raw, "lat")
        except ValueError as exc:
            raise DataFormatError(path, line_no, "lon/lat", str(exc)) from None
        pois[poi_id] = Poi(poi_id, name, tags, lon, lat)
    return PoiCatalog(pois=pois, vocabulary=vocab)


def write_poi_catalog(catalog: PoiCatalog, path: str | Path) -> None:
    """Write the canonical POI CSV form (insertion order preserved)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POI_HEADER)
        for poi in catalog.pois.values():
            writer.writerow(
                [poi.poi_id, poi.name, "|".join(poi.activity_types), repr(poi.lon), repr(poi.lat)]
            )


def load_labels(
    path: str | Path, categories: CategoryConfig | None = None
) -> dict[str, DemographicLabel]:
    """Load the labels CSV; bracket values must belong to the configured sets."""
    cats = categories or DEFAULT_CATEGORIES
    labels: dict[str, DemographicLabel] = {}
    for line_no, row in _read_rows(path, LABELS_HEADER):
        agent_id, age, income, education, sex = row
        if agent_id in labels:
            raise DataFormatError(path, line_no, "agent_id", f"duplicate agent {agent_id!r}")
        for attr, value in (("age", age), ("income", income), ("education", education)):
            if value not in cats.categories(attr):
                raise DataFormatError(
                    path, line_no, f"{attr}_bracket",
                    f"{value!r} not in configured {attr} categories",
                )
        labels[agent_id] = DemographicLabel(agent_id, age, income, education, sex or None)
    return labels


def write_labels(labels: dict[str, DemographicLabel], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABELS_HEADER)
        for label in labels.values():
            writer.writerow(
                [label.agent_id, label.age_bracket, label.income_bracket,
                 label.education_level, label.sex or ""]
            )


# Joining and partitioning -------------------------------------------------------


@dataclass
class JoinResult:
    """Per-agent ordered visit lists plus skip bookkeeping."""

    visits: dict[str, list[Visit]]
    skipped: int = 0


def join_visits(
    stay_points: list[StayPoint],
    catalog: PoiCatalog,
    on_missing: str = "error",
) -> JoinResult:
    """Resolve stay points against the catalog into per-agent Visit lists.

    Visits are grouped by agent and sorted ascending by start_ts (ties by
    poi_id). `on_missing` is 'error' (default) or 'skip'; skip counts a
    warning per dropped record instead of failing.
    """
    if on_missing not in ("error", "skip"):
        raise ValueError(f"on_missing must be 'error' or 'skip', got {on_missing!r}")
    by_agent: dict[str, list[Visit]] = {}
    skipped = 0
    for sp in stay_points:
        if sp.poi_id not in catalog:
            if on_missing == "error":
                raise KeyError(f"stay point for agent {sp.agent_id} references unknown POI {sp.poi_id!r}")
            skipped += 1
            logger.warning("skipping stay point with unknown POI %s (agent %s)", sp.poi_id, sp.agent_id)
            continue
        by_agent.setdefault(sp.agent_id, []).append(Visit.from_stay_point(sp, catalog[sp.poi_id]))
    for visits in by_agent.values():
        visits.sort(key=lambda v: (v.start_ts, v.poi_id))
    return JoinResult(visits=by_agent, skipped=skipped)


def week_start_of(ts: dt.datetime, tz: str = "UTC") -> dt.date:
    """The Monday date opening the week containing `ts`, in timezone `tz`."""
    local = ts.astimezone(ZoneInfo(tz))
    return local.date() - dt.timedelta(days=local.weekday())


def partition_weeks(visits: dict[str, list[Visit]], tz: str = "UTC") -> list[AgentWeek]:
    """Partition per-agent visits into Monday-opened calendar weeks.

    Every visit lands in exactly one week (by its start_ts); empty weeks
    are never emitted. Output is ordered by (agent_id, week_start).
    """
    weeks: list[AgentWeek] = []
    for agent_id in sorted(visits):
        buckets: dict[dt.date, list[Visit]] = {}
        for v in visits[agent_id]:
            buckets.setdefault(week_start_of(v.start_ts, tz), []).append(v)
        for monday in sorted(buckets):
            ordered = sorted(buckets[monday], key=lambda v: (v.start_ts, v.poi_id))
            weeks.append(AgentWeek(agent_id, monday, tuple(ordered), tz=tz))
    return weeks


# Reproducible sampling ----------------------------------------------------------


class Splitmix64:
    """splitmix64 PRNG (Steele, Lea & Flood's finalizer); pinned for sampling."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via unbiased rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % bound)
        while True:
            value = self.next_uint64()
            if value < limit:
                return value % bound


def sample_agents(agent_ids, n: int, seed: int) -> list[str]:
    """Sample `n` agent ids uniformly without replacement, reproducibly.

    Ids are first sorted lexicographically, then a partial Fisher-Yates
    shuffle driven by splitmix64(seed) selects the sample, so the result
    is a pure function of (set of ids, n, seed). See SAMPLER_VERSION.
    """
    pool = sorted(set(agent_ids))
    if n > len(pool):
        raise ValueError(f"cannot sample {n} agents from a population of {len(pool)}")
    rng = Splitmix64(seed)
    for i in range(n):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:n]
