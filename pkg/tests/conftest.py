"""Shared fixtures: visit builders, synthetic datasets, and a network guard."""

from __future__ import annotations

import datetime as dt
import socket

import pytest

from mobilens.synth import default_rules, generate_agents
from mobilens.trajectory import AgentWeek, Poi, StayPoint, Visit

UTC = dt.timezone.utc


def make_visit(
    agent_id: str = "a1",
    start: dt.datetime = dt.datetime(2024, 1, 29, 9, 10, 30, tzinfo=UTC),
    end: dt.datetime = dt.datetime(2024, 1, 29, 10, 14, 10, tzinfo=UTC),
    poi_id: str = "p7",
    name: str = "Bear Wire",
    activity_types: tuple[str, ...] = ("Work", "Services", "DropOff"),
) -> Visit:
    return Visit(
        agent_id=agent_id,
        start_ts=start,
        end_ts=end,
        poi_id=poi_id,
        lon=-93.2,
        lat=44.9,
        name=name,
        activity_types=activity_types,
        duration_s=int((end - start).total_seconds()),
    )


def make_week(visits, agent_id: str = "a1", week_start: dt.date = dt.date(2024, 1, 29)) -> AgentWeek:
    ordered = tuple(sorted(visits, key=lambda v: (v.start_ts, v.poi_id)))
    return AgentWeek(agent_id=agent_id, week_start=week_start, visits=ordered)


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    """A small sigma=1 planted dataset shared across tests."""
    out = tmp_path_factory.mktemp("synthdata")
    return generate_agents(n=24, seed=11, rules=default_rules(), weeks=2, out_dir=out)


@pytest.fixture
def no_network(monkeypatch):
    """Fail the test if anything opens a socket."""

    def guard(*args, **kwargs):
        raise AssertionError("network access attempted during a network-free test")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
    return guard
