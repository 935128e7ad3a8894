"""Classification metrics, experiment driver, and report rendering.

Experiments sample agents with a pinned seed, build narratives, run one
chain per (agent, attribute), parse the final responses, and score them
against the labels file. Reports carry the full run configuration plus
dataset and template hashes so two runs are comparable byte-for-byte
(timestamps aside).
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Mapping

from .backend import Backend, BackendConfig, HttpBackend, wrap_with_cache
from .categories import ATTRIBUTES, CategoryConfig, UNPARSED
from .chain import VARIANTS, StageTranscript, run_chain
from .mock import MockBackend
from .narrative import NarrativeBudgetError, build_narrative, narrative_prompt_text
from .parsing import DemographicPrediction, STATUS_UNPARSED, parse_stage3
from .templates import TemplateRegistry
from .trajectory import (
    DatasetManifest,
    join_visits,
    load_labels,
    load_poi_catalog,
    load_stay_points,
    partition_weeks,
    sample_agents,
)

logger = logging.getLogger(__name__)


# Metrics ------------------------------------------------------------------------


def _check_aligned(preds: Mapping[str, str], truths: Mapping[str, str]) -> None:
    if len(preds) != len(truths):
        raise ValueError(f"prediction/truth length mismatch: {len(preds)} vs {len(truths)}")
    if not truths:
        raise ValueError("cannot score an empty result set")
    if set(preds) != set(truths):
        missing = sorted(set(truths) ^ set(preds))[:5]
        raise ValueError(f"prediction/truth agent ids differ (e.g. {missing})")


def accuracy(preds: Mapping[str, str], truths: Mapping[str, str]) -> float:
    """Exact-match fraction; Unparsed never matches any truth."""
    _check_aligned(preds, truths)
    hits = sum(
        1 for agent, truth in truths.items() if preds[agent] == truth and truth != UNPARSED
    )
    return hits / len(truths)


def _class_universe(
    preds: Mapping[str, str], truths: Mapping[str, str], canonical: tuple[str, ...] | None
) -> list[str]:
    if canonical is not None:
        return list(canonical)
    observed = set(truths.values()) | set(preds.values())
    observed.discard(UNPARSED)
    return sorted(observed)


def per_class_metrics(
    preds: Mapping[str, str],
    truths: Mapping[str, str],
    canonical: tuple[str, ...] | None = None,
) -> dict[str, dict[str, float]]:
    """Precision/recall/F1/support per class in the scoring universe.

    The universe defaults to the classes observed in truths and
    predictions (Unparsed excluded); passing `canonical` pins it to the
    attribute's full category set instead.
    """
    _check_aligned(preds, truths)
    out: dict[str, dict[str, float]] = {}
    for cls in _class_universe(preds, truths, canonical):
        tp = sum(1 for a, t in truths.items() if t == cls and preds[a] == cls)
        fp = sum(1 for a, t in truths.items() if t != cls and preds[a] == cls)
        fn = sum(1 for a, t in truths.items() if t == cls and preds[a] != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[cls] = {"precision": precision, "recall": recall, "f1": f1, "support": tp + fn}
    return out


def macro_f1(
    preds: Mapping[str, str],
    truths: Mapping[str, str],
    canonical: tuple[str, ...] | None = None,
) -> float:
    """Unweighted mean of per-class F1 over the scoring universe."""
    per_class = per_class_metrics(preds, truths, canonical)
    if not per_class:
        return 0.0
    return sum(m["f1"] for m in per_class.values()) / len(per_class)


def confusion_matrix(
    preds: Mapping[str, str],
    truths: Mapping[str, str],
    labels: list[str] | None = None,
) -> tuple[list[str], list[list[int]]]:
    """Square truth-by-prediction counts; Unparsed is kept as the last axis label."""
    _check_aligned(preds, truths)
    observed = set(truths.values()) | set(preds.values())
    if labels is None:
        labels = sorted(observed - {UNPARSED})
    else:
        labels = [l for l in labels if l != UNPARSED]
        labels += sorted(observed - set(labels) - {UNPARSED})
    if UNPARSED in observed:
        labels = labels + [UNPARSED]
    index = {label: i for i, label in enumerate(labels)}
    matrix = [[0] * len(labels) for _ in labels]
    for agent, truth in truths.items():
        matrix[index[truth]][index[preds[agent]]] += 1
    return labels, matrix


# Run configuration and reports ---------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; serialized whole into reports and transcripts."""

    stay_points: str
    pois: str
    labels: str
    manifest: str
    out_dir: str
    attributes: tuple[str, ...] = ("income",)
    variant: str = "full"
    sample_size: int | None = None
    seed: int = 7
    narrative_budget: int = 16000
    parallel: int = 1
    mock: bool = False
    backend_config: str | None = None  # path to a BackendConfig JSON
    cache_mode: str | None = None  # overrides the backend config when set
    cache_path: str | None = None
    template_dir: str | None = None
    include_narrative_in_stage3: bool = False
    macro_f1_universe: str = "observed"  # observed | canonical
    resume: bool = True

    def __post_init__(self) -> None:
        for attribute in self.attributes:
            if attribute not in ATTRIBUTES:
                raise ValueError(f"unknown attribute {attribute!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.macro_f1_universe not in ("observed", "canonical"):
            raise ValueError("macro_f1_universe must be 'observed' or 'canonical'")

    def to_dict(self) -> dict:
        return asdict(self)

    # Fields that describe how a run executed rather than what it computed.
    # They stay out of report provenance so a strict replay of a recorded
    # run reproduces the report byte-for-byte (timestamps aside).
    _EXECUTION_FIELDS = ("out_dir", "cache_mode", "cache_path", "resume", "parallel")

    def provenance_dict(self) -> dict:
        full = self.to_dict()
        return {k: v for k, v in full.items() if k not in self._EXECUTION_FIELDS}

    @staticmethod
    def from_dict(raw: dict) -> "RunConfig":
        raw = dict(raw)
        raw["attributes"] = tuple(raw.get("attributes", ("income",)))
        return RunConfig(**raw)


def _sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def dataset_hash(config: RunConfig) -> str:
    parts = [
        _sha256_file(p) for p in (config.stay_points, config.pois, config.labels, config.manifest)
    ]
    return hashlib.sha256("".join(parts).encode("ascii")).hexdigest()


@dataclass
class AttributeResult:
    n: int
    accuracy: float
    macro_f1: float
    parse_failure_rate: float
    per_class: dict[str, dict[str, float]]
    confusion_labels: list[str]
    confusion: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "parse_failure_rate": self.parse_failure_rate,
            "per_class": self.per_class,
            "confusion": {"labels": self.confusion_labels, "matrix": self.confusion},
        }


@dataclass
class EvalReport:
    run: dict
    attributes: dict[str, AttributeResult]
    excluded_agents: dict[str, str] = field(default_factory=dict)
    generated_at: str = ""

    def to_dict(self) -> dict:
        return {
            "run": self.run,
            "attributes": {a: r.to_dict() for a, r in self.attributes.items()},
            "excluded_agents": self.excluded_agents,
            "generated_at": self.generated_at,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @staticmethod
    def load_dict(path: str | Path) -> dict:
        return json.loads(Path(path).read_text(encoding="utf-8"))


def render_report_markdown(report: EvalReport, categories: CategoryConfig) -> str:
    """One row per attribute, mirroring the main-results table layout."""
    lines = [
        "| Attribute | Acc. | F1 | Parse failures | n |",
        "|---|---|---|---|---|",
    ]
    for attribute, result in report.attributes.items():
        k = len(categories.categories(attribute))
        lines.append(
            f"| {attribute.capitalize()} ({k}) | {result.accuracy:.3f} | {result.macro_f1:.3f} "
            f"| {result.parse_failure_rate:.3f} | {result.n} |"
        )
    return "\n".join(lines) + "\n"


# Experiment driver ----------------------------------------------------------------


@dataclass
class _LoadedDataset:
    manifest: DatasetManifest
    labels: dict
    weeks_by_agent: dict[str, list]


def _load_dataset(config: RunConfig) -> _LoadedDataset:
    manifest = DatasetManifest.load(config.manifest)
    labels = load_labels(config.labels, manifest.categories)
    catalog = load_poi_catalog(config.pois, set(manifest.activity_types) or None)
    stay_points = load_stay_points(config.stay_points)
    joined = join_visits(stay_points, catalog)
    weeks_by_agent: dict[str, list] = {}
    for week in partition_weeks(joined.visits, manifest.timezone):
        weeks_by_agent.setdefault(week.agent_id, []).append(week)
    return _LoadedDataset(manifest=manifest, labels=labels, weeks_by_agent=weeks_by_agent)


def build_backend(config: RunConfig, backend_config: BackendConfig) -> Backend:
    base: Backend | None
    if backend_config.cache_mode == "replay_strict":
        base = None  # strict replay never opens a connection
    elif config.mock:
        base = MockBackend()
    else:
        base = HttpBackend(backend_config)
    if backend_config.cache_mode == "off" and base is None:
        raise ValueError("no backend available")
    return wrap_with_cache(base, backend_config)


def _resolve_backend_config(config: RunConfig) -> BackendConfig:
    if config.backend_config:
        backend_config = BackendConfig.load(config.backend_config)
    else:
        backend_config = BackendConfig(model="mock-oracle" if config.mock else "local-model")
    overrides: dict = {}
    if config.cache_mode is not None:
        overrides["cache_mode"] = config.cache_mode
    if config.cache_path is not None:
        overrides["cache_path"] = config.cache_path
    if overrides:
        backend_config = BackendConfig(**{**asdict(backend_config), **overrides,
                                          "retry": backend_config.retry})
    return backend_config


def _transcript_path(out_dir: Path, attribute: str, variant: str, agent_id: str) -> Path:
    return out_dir / "transcripts" / attribute / variant / f"{agent_id}.json"


def _run_agent_chain(
    agent_id: str,
    narrative: str,
    attribute: str,
    variant: str,
    backend: Backend,
    registry: TemplateRegistry,
    backend_config: BackendConfig,
    config: RunConfig,
    categories: CategoryConfig,
    out_dir: Path,
) -> DemographicPrediction:
    path = _transcript_path(out_dir, attribute, variant, agent_id)
    transcript: StageTranscript | None = None
    if config.resume and path.exists():
        cached = StageTranscript.load(path)
        if cached.status == "ok":
            transcript = cached
    if transcript is None:
        transcript = run_chain(
            narrative,
            agent_id,
            attribute,
            variant,
            backend,
            registry,
            backend_config,
            categories,
            include_narrative_in_stage3=config.include_narrative_in_stage3,
            run_config=config.to_dict(),
        )
        path.parent.mkdir(parents=True, exist_ok=True)
        transcript.save(path)
    response = transcript.stage3_response()
    if transcript.status != "ok" or response is None:
        # A chain the backend killed still counts against the run.
        return DemographicPrediction(
            agent_id=agent_id,
            attribute=attribute,
            label=UNPARSED,
            parse_status=STATUS_UNPARSED,
            reasoning=transcript.error or "chain failed",
        )
    return parse_stage3(response, attribute, agent_id, categories)


def _score_attribute(
    predictions: dict[str, DemographicPrediction],
    truths: dict[str, str],
    categories: CategoryConfig,
    attribute: str,
    universe: str,
) -> AttributeResult:
    pred_labels = {a: p.label for a, p in predictions.items()}
    canonical = categories.categories(attribute) if universe == "canonical" else None
    labels_axis = list(categories.categories(attribute))
    confusion_labels, matrix = confusion_matrix(pred_labels, truths, labels_axis)
    failures = sum(1 for p in predictions.values() if p.parse_status == STATUS_UNPARSED)
    return AttributeResult(
        n=len(truths),
        accuracy=accuracy(pred_labels, truths),
        macro_f1=macro_f1(pred_labels, truths, canonical),
        parse_failure_rate=failures / len(truths),
        per_class=per_class_metrics(pred_labels, truths, canonical),
        confusion_labels=confusion_labels,
        confusion=matrix,
    )


def run_experiment(
    config: RunConfig,
    backend: Backend | None = None,
    variant: str | None = None,
    write_outputs: bool = True,
) -> EvalReport:
    """Sample, narrate, chain, parse, and score one variant end to end.

    Agents whose narrative cannot be built inside the budget are excluded
    from n (and listed in the report); agents whose chain failed at the
    backend stay in n scored as Unparsed.
    """
    variant = variant or config.variant
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(config)
    categories = dataset.manifest.categories

    population = sorted(set(dataset.weeks_by_agent) & set(dataset.labels))
    if not population:
        raise ValueError("no agents with both narratable weeks and labels")
    size = config.sample_size if config.sample_size is not None else len(population)
    sampled = sample_agents(population, size, config.seed)
    if not sampled:
        raise ValueError("agent sample is empty")

    backend_config = _resolve_backend_config(config)
    if backend is None:
        backend = build_backend(config, backend_config)
    registry = (
        TemplateRegistry.load_dir(config.template_dir)
        if config.template_dir
        else TemplateRegistry.load_default()
    )

    narratives: dict[str, str] = {}
    excluded: dict[str, str] = {}
    for agent_id in sampled:
        try:
            weeks = build_narrative(dataset.weeks_by_agent[agent_id], config.narrative_budget)
        except NarrativeBudgetError as exc:
            excluded[agent_id] = str(exc)
            continue
        narratives[agent_id] = narrative_prompt_text(weeks)
    if not narratives:
        raise ValueError("every sampled agent failed narrative construction")

    run_info = {
        "config": config.provenance_dict(),
        "variant": variant,
        "dataset_hash": dataset_hash(config),
        "model": backend_config.model,
        "temperature": backend_config.temperature,
        "max_tokens": backend_config.max_tokens,
        "template_ids": {a: registry.template_ids(a) for a in config.attributes},
        "sampler": "splitmix64-fisher-yates-v1",
        "sample_seed": config.seed,
        "sample_size": len(sampled),
    }

    results: dict[str, AttributeResult] = {}
    predictions_by_attr: dict[str, dict[str, DemographicPrediction]] = {}
    for attribute in config.attributes:
        agents = sorted(narratives)
        with ThreadPoolExecutor(max_workers=max(1, config.parallel)) as pool:
            predictions = dict(
                zip(
                    agents,
                    pool.map(
                        lambda a: _run_agent_chain(
                            a, narratives[a], attribute, variant, backend,
                            registry, backend_config, config, categories, out_dir,
                        ),
                        agents,
                    ),
                )
            )
        predictions_by_attr[attribute] = predictions
        truths = {a: dataset.labels[a].get(attribute) for a in agents}
        results[attribute] = _score_attribute(
            predictions, truths, categories, attribute, config.macro_f1_universe
        )

    report = EvalReport(
        run=run_info,
        attributes=results,
        excluded_agents=excluded,
        generated_at=dt.datetime.now(dt.timezone.utc).isoformat(),
    )
    if write_outputs:
        (out_dir / "run_config.json").write_text(
            json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        for attribute, predictions in predictions_by_attr.items():
            with open(out_dir / f"predictions.{attribute}.{variant}.jsonl", "w",
                      encoding="utf-8") as fh:
                for agent_id in sorted(predictions):
                    p = predictions[agent_id]
                    fh.write(json.dumps({
                        "agent_id": p.agent_id,
                        "attribute": p.attribute,
                        "label": p.label,
                        "confidence": p.confidence,
                        "indicator_scores": p.indicator_scores,
                        "alternatives": list(p.alternatives),
                        "parse_status": p.parse_status,
                    }, ensure_ascii=False) + "\n")
        report.save(out_dir / f"report.{variant}.json")
        (out_dir / f"report.{variant}.md").write_text(
            render_report_markdown(report, categories), encoding="utf-8"
        )
    return report


def run_ablation(config: RunConfig, backend: Backend | None = None) -> dict:
    """Run full / no_s1 / no_s2 on the same agent sample and report deltas."""
    reports = {v: run_experiment(config, backend=backend, variant=v) for v in VARIANTS}
    full = reports["full"]
    deltas: dict[str, dict[str, dict[str, float]]] = {}
    for variant in ("no_s1", "no_s2"):
        deltas[variant] = {
            attribute: {
                "accuracy": reports[variant].attributes[attribute].accuracy
                - full.attributes[attribute].accuracy,
                "macro_f1": reports[variant].attributes[attribute].macro_f1
                - full.attributes[attribute].macro_f1,
            }
            for attribute in config.attributes
        }
    combined = {
        "run": full.run,
        "variants": {v: r.to_dict() for v, r in reports.items()},
        "deltas": deltas,
        "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(),
    }
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ablation.json").write_text(
        json.dumps(combined, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    (out_dir / "ablation.md").write_text(render_ablation_markdown(combined), encoding="utf-8")
    return combined


def render_ablation_markdown(combined: dict) -> str:
    """Variant-per-row table mirroring the ablation-table layout."""
    attributes = list(next(iter(combined["variants"].values()))["attributes"])
    lines = ["| Variant | " + " | ".join(f"{a} Acc. | {a} F1" for a in attributes) + " |"]
    lines.append("|" + "---|" * (1 + 2 * len(attributes)))
    for variant in VARIANTS:
        row = [variant]
        for attribute in attributes:
            result = combined["variants"][variant]["attributes"][attribute]
            row.append(f"{result['accuracy']:.3f}")
            row.append(f"{result['macro_f1']:.3f}")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def evaluate_transcripts(
    run_dir: str | Path,
    labels_path: str | Path,
    manifest_path: str | Path,
    attributes: tuple[str, ...] = ("income",),
    variant: str = "full",
    universe: str = "observed",
) -> EvalReport:
    """Re-parse stored transcripts and score them against the labels file.

    Lets a patched parser or synonym table re-score an old run without
    re-running any chains.
    """
    run_dir = Path(run_dir)
    manifest = DatasetManifest.load(manifest_path)
    categories = manifest.categories
    labels = load_labels(labels_path, categories)
    results: dict[str, AttributeResult] = {}
    for attribute in attributes:
        transcript_dir = run_dir / "transcripts" / attribute / variant
        paths = sorted(transcript_dir.glob("*.json"))
        if not paths:
            raise ValueError(f"no transcripts under {transcript_dir}")
        predictions: dict[str, DemographicPrediction] = {}
        for path in paths:
            transcript = StageTranscript.load(path)
            response = transcript.stage3_response()
            if transcript.status != "ok" or response is None:
                predictions[transcript.agent_id] = DemographicPrediction(
                    agent_id=transcript.agent_id,
                    attribute=attribute,
                    label=UNPARSED,
                    parse_status=STATUS_UNPARSED,
                    reasoning=transcript.error or "chain failed",
                )
            else:
                predictions[transcript.agent_id] = parse_stage3(
                    response, attribute, transcript.agent_id, categories
                )
        missing = sorted(set(predictions) - set(labels))
        if missing:
            raise ValueError(f"transcripts without labels: {missing[:5]}")
        truths = {a: labels[a].get(attribute) for a in predictions}
        results[attribute] = _score_attribute(predictions, truths, categories, attribute, universe)

    run_config_path = run_dir / "run_config.json"
    run_info: dict = {"source": "transcripts", "run_dir": str(run_dir)}
    if run_config_path.exists():
        run_info["config"] = json.loads(run_config_path.read_text(encoding="utf-8"))
    return EvalReport(
        run=run_info,
        attributes=results,
        generated_at=dt.datetime.now(dt.timezone.utc).isoformat(),
    )


def render_sweep_markdown(sweep: dict) -> str:
    """Render a training-size sweep JSON (from the supervised baseline)
    as the two-panel accuracy/F1 tables."""
    fractions = sweep["fractions"]
    attributes = sorted(sweep["attributes"])
    out = []
    for metric, title in (("accuracy", "Accuracy"), ("macro_f1", "F1 score")):
        out.append(f"### {title} by training fraction")
        out.append("| Fraction | " + " | ".join(attributes) + " |")
        out.append("|" + "---|" * (1 + len(attributes)))
        for i, fraction in enumerate(fractions):
            row = [f"{fraction:g}"]
            for attribute in attributes:
                row.append(f"{sweep['attributes'][attribute][metric][i]:.3f}")
            out.append("| " + " | ".join(row) + " |")
        out.append("")
    return "\n".join(out)
