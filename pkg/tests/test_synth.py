"""Synthetic generator: determinism, balance, loadability, planted ceiling."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import pytest

from mobilens.categories import DEFAULT_CATEGORIES
from mobilens.synth import PLANTED_KEYWORDS, RuleSet, default_rules, generate_agents
from mobilens.trajectory import (
    join_visits,
    load_labels,
    load_poi_catalog,
    load_stay_points,
    partition_weeks,
    DatasetManifest,
)


def test_same_seed_twice_gives_identical_files(tmp_path):
    a = generate_agents(n=8, seed=3, out_dir=tmp_path / "a")
    b = generate_agents(n=8, seed=3, out_dir=tmp_path / "b")
    for name in ("stay_points.csv", "pois.csv", "labels.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seed_changes_data(tmp_path):
    a = generate_agents(n=8, seed=3, out_dir=tmp_path / "a")
    c = generate_agents(n=8, seed=4, out_dir=tmp_path / "c")
    assert a.stay_points_path.read_bytes() != c.stay_points_path.read_bytes()


def test_income_brackets_balanced_for_200_agents(tmp_path):
    result = generate_agents(n=200, seed=7, out_dir=tmp_path)
    counts = Counter(l.income_bracket for l in result.labels.values())
    assert set(counts.values()) <= {33, 34}
    assert sum(counts.values()) == 200


def test_generated_files_load_cleanly_and_counts_match(synth_dataset):
    manifest = DatasetManifest.load(synth_dataset.manifest_path)
    stay_points = load_stay_points(synth_dataset.stay_points_path)
    assert len(stay_points) == synth_dataset.n_stay_points
    catalog = load_poi_catalog(synth_dataset.pois_path, set(manifest.activity_types))
    joined = join_visits(stay_points, catalog)
    assert joined.skipped == 0
    assert sum(len(v) for v in joined.visits.values()) == len(stay_points)
    weeks = partition_weeks(joined.visits, manifest.timezone)
    assert {w.agent_id for w in weeks} == set(joined.visits)
    labels = load_labels(synth_dataset.labels_path, manifest.categories)
    assert set(labels) == set(joined.visits)


def test_sigma_one_signature_venues_disjoint_by_bracket(synth_dataset):
    labels = load_labels(synth_dataset.labels_path)
    stay_points = load_stay_points(synth_dataset.stay_points_path)
    catalog = load_poi_catalog(synth_dataset.pois_path)
    joined = join_visits(stay_points, catalog)
    keywords = PLANTED_KEYWORDS["income"]
    for agent_id, visits in joined.visits.items():
        own = keywords[labels[agent_id].income_bracket]
        for visit in visits:
            for bracket, keyword in keywords.items():
                if keyword in visit.name:
                    assert keyword == own, f"{agent_id} visited {visit.name}, bracket {bracket}"


def test_trivial_keyword_classifier_recovers_income_exactly(synth_dataset):
    """At sigma=1 a venue-name keyword scan is a perfect income classifier."""
    labels = load_labels(synth_dataset.labels_path)
    stay_points = load_stay_points(synth_dataset.stay_points_path)
    catalog = load_poi_catalog(synth_dataset.pois_path)
    joined = join_visits(stay_points, catalog)
    keywords = PLANTED_KEYWORDS["income"]
    correct = 0
    for agent_id, visits in joined.visits.items():
        names = " ".join(v.name for v in visits)
        hits = {bracket: names.count(kw) for bracket, kw in keywords.items()}
        guess = max(hits, key=lambda b: (hits[b], b))
        correct += guess == labels[agent_id].income_bracket
    assert correct == len(joined.visits)


def test_every_week_carries_signature_visits_for_all_attributes(synth_dataset):
    labels = load_labels(synth_dataset.labels_path)
    stay_points = load_stay_points(synth_dataset.stay_points_path)
    catalog = load_poi_catalog(synth_dataset.pois_path)
    joined = join_visits(stay_points, catalog)
    for week in partition_weeks(joined.visits):
        names = " ".join(v.name for v in week.visits)
        for attribute in ("income", "age", "education"):
            keyword = PLANTED_KEYWORDS[attribute][labels[week.agent_id].get(attribute)]
            assert keyword in names


def test_lower_sigma_leaks_other_brackets(tmp_path):
    result = generate_agents(n=30, seed=13, rules=default_rules(separability=0.2),
                             weeks=2, out_dir=tmp_path)
    labels = load_labels(result.labels_path)
    stay_points = load_stay_points(result.stay_points_path)
    catalog = load_poi_catalog(result.pois_path)
    joined = join_visits(stay_points, catalog)
    keywords = PLANTED_KEYWORDS["income"]
    leaked = 0
    for agent_id, visits in joined.visits.items():
        own = keywords[labels[agent_id].income_bracket]
        for visit in visits:
            for keyword in keywords.values():
                if keyword in visit.name and keyword != own:
                    leaked += 1
    assert leaked > 0


def test_incomplete_rule_coverage_rejected(tmp_path):
    rules = default_rules()
    partial = RuleSet(profiles=tuple(r for r in rules.profiles if r.bracket != "Middle"))
    with pytest.raises(ValueError) as err:
        generate_agents(n=4, seed=1, rules=partial, out_dir=tmp_path)
    assert "Middle" in str(err.value)


def test_generator_manifest_records_provenance(synth_dataset):
    manifest = json.loads(Path(synth_dataset.generator_manifest_path).read_text())
    assert manifest["seed"] == 11
    assert manifest["separability"] == 1.0
    assert manifest["rule_hash"] == default_rules().rule_hash()
    assert manifest["n_stay_points"] == synth_dataset.n_stay_points


def test_planted_keywords_unique_and_absent_from_neutral_names():
    rules = default_rules()
    keywords = [kw for table in PLANTED_KEYWORDS.values() for kw in table.values()]
    assert len(set(keywords)) == len(keywords)
    for a in keywords:
        for b in keywords:
            if a != b:
                assert a not in b
    for venue in rules.neutral_venues:
        for keyword in keywords:
            assert keyword not in venue.name


def test_rules_cover_every_default_bracket():
    default_rules().validate_coverage(DEFAULT_CATEGORIES)
