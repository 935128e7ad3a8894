"""Deterministic rendering of agent weeks into the two narrative artifacts:
the per-visit activity chronicle and the multi-scale visiting summary.

All output is byte-stable: English day/month names, fixed section order,
minutes as floor(duration_s / 60), averages rounded half-up to one decimal.
"""

from __future__ import annotations

import datetime as dt
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from zoneinfo import ZoneInfo

from .trajectory import AgentWeek, Visit

WEEKDAY_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)

# Daypart bins over the local start hour, half-open [lo, hi).
DAYPARTS = (
    ("Night", 0, 6),
    ("Morning", 6, 12),
    ("Afternoon", 12, 18),
    ("Evening", 18, 24),
)


class NarrativeBudgetError(ValueError):
    """A single week's narrative exceeds the character budget."""


@dataclass(frozen=True)
class VisitStats:
    """Recomputable statistics backing every figure in a weekly summary."""

    activity_counts: dict[str, int]  # per tag; multi-tag visits count once per tag
    daypart_counts: dict[str, int]  # keyed by daypart name, all four present
    weekday_avg: float  # visits / 5 weekdays, half-up to 1 decimal
    weekend_avg: float  # visits / 2 weekend days, half-up to 1 decimal
    total_visits: int
    distinct_venues: int
    total_duration_min: int  # sum of per-visit floor(duration_s / 60)


@dataclass(frozen=True)
class WeeklyNarrative:
    """Rendered chronicle + summary pair for one agent-week."""

    agent_id: str
    week_start: dt.date
    chronicle: str
    summary: str
    stats: VisitStats

    @property
    def text(self) -> str:
        return self.chronicle + "\n\n" + self.summary


def _round_half_up_1dp(numerator: int, denominator: int) -> float:
    value = (Decimal(numerator) / Decimal(denominator)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )
    return float(value)


def _local(visit: Visit, tz: str) -> dt.datetime:
    return visit.start_ts.astimezone(ZoneInfo(tz))


def visit_line(visit: Visit, tz: str = "UTC") -> str:
    """Render one visit in the fixed chronicle line format.

    Clock times are truncated to the minute and the duration is
    floor(duration_s / 60), so a 09:10:30-10:14:10 stay reads
    "09:10-10:14 (63 mins)".
    """
    start = _local(visit, tz)
    end = visit.end_ts.astimezone(ZoneInfo(tz))
    day_kind = "Weekend" if start.weekday() >= 5 else "Weekday"
    minutes = visit.duration_s // 60
    tags = ", ".join(visit.activity_types)
    return (
        f"{WEEKDAY_NAMES[start.weekday()]}, {MONTH_NAMES[start.month - 1]} {start.day}"
        f" ({day_kind}) - {start:%H:%M}-{end:%H:%M} ({minutes} mins): {visit.name} - {tags}"
    )


def render_chronicle(agent_week: AgentWeek) -> str:
    """Render every visit of the week, one line each, in chronological order.

    Days with visits are contiguous line groups sharing the same
    "{Weekday}, {Month D} ({Weekday|Weekend})" prefix; days without
    visits do not appear.
    """
    return "\n".join(visit_line(v, agent_week.tz) for v in agent_week.visits)


def compute_stats(agent_week: AgentWeek) -> VisitStats:
    zone = agent_week.tz
    activity_counts: Counter[str] = Counter()
    daypart_counts = {name: 0 for name, _, _ in DAYPARTS}
    weekday_visits = 0
    weekend_visits = 0
    total_minutes = 0
    venues = set()
    for v in agent_week.visits:
        local = _local(v, zone)
        for tag in v.activity_types:
            activity_counts[tag] += 1
        for name, lo, hi in DAYPARTS:
            if lo <= local.hour < hi:
                daypart_counts[name] += 1
                break
        if local.weekday() >= 5:
            weekend_visits += 1
        else:
            weekday_visits += 1
        total_minutes += v.duration_s // 60
        venues.add(v.name)
    return VisitStats(
        activity_counts=dict(activity_counts),
        daypart_counts=daypart_counts,
        # Divisors are the calendar days of each kind in a week, not the
        # days the agent was active.
        weekday_avg=_round_half_up_1dp(weekday_visits, 5),
        weekend_avg=_round_half_up_1dp(weekend_visits, 2),
        total_visits=len(agent_week.visits),
        distinct_venues=len(venues),
        total_duration_min=total_minutes,
    )


def render_summary(agent_week: AgentWeek) -> tuple[str, VisitStats]:
    """Render the weekly statistics narrative; every number comes from stats.

    Sections, in pinned order: totals, activity-type frequencies (count
    descending, name ascending on ties), daypart distribution, and the
    weekday/weekend contrast line.
    """
    stats = compute_stats(agent_week)
    frequencies = ", ".join(
        f"{tag}: {count}"
        for tag, count in sorted(stats.activity_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    )
    dayparts = ", ".join(
        f"{name} ({lo:02d}-{hi:02d}): {stats.daypart_counts[name]}" for name, lo, hi in DAYPARTS
    )
    lines = [
        "Weekly visiting summary:",
        (
            f"Total visits: {stats.total_visits} across {stats.distinct_venues} distinct venues, "
            f"{stats.total_duration_min} minutes total."
        ),
        f"Activity type frequencies: {frequencies}.",
        f"Activity time distribution: {dayparts}.",
        f"Average activities on weekdays: {stats.weekday_avg:.1f}, weekends: {stats.weekend_avg:.1f}",
    ]
    return "\n".join(lines), stats


def render_week(agent_week: AgentWeek) -> WeeklyNarrative:
    summary, stats = render_summary(agent_week)
    return WeeklyNarrative(
        agent_id=agent_week.agent_id,
        week_start=agent_week.week_start,
        chronicle=render_chronicle(agent_week),
        summary=summary,
        stats=stats,
    )


def narrative_prompt_text(narratives: list[WeeklyNarrative]) -> str:
    """The exact text handed to the model: weeks joined by blank lines."""
    return "\n\n".join(n.text for n in narratives)


def build_narrative(agent_weeks: list[AgentWeek], budget: int) -> list[WeeklyNarrative]:
    """Render weeks newest-first, dropping whole weeks oldest-first to fit.

    The budget bounds len(narrative_prompt_text(result)). Weeks are never
    truncated internally; if even the newest week alone exceeds the
    budget, a NarrativeBudgetError asks for a larger budget.
    """
    if not agent_weeks:
        raise ValueError("need at least one agent week")
    rendered = [render_week(w) for w in sorted(agent_weeks, key=lambda w: w.week_start, reverse=True)]
    while rendered:
        if len(narrative_prompt_text(rendered)) <= budget:
            return rendered
        rendered = rendered[:-1]  # drop the oldest remaining week
    shortest = len(narrative_prompt_text([render_week(max(agent_weeks, key=lambda w: w.week_start))]))
    raise NarrativeBudgetError(
        f"newest week needs {shortest} characters but the budget is {budget}; "
        "increase the narrative budget"
    )
