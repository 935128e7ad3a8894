"""Command-line entry point wiring the pipeline together.

Subcommands: synth, ingest, narrate, infer, eval, ablate, replay.
Exit codes: 0 success, 1 runtime failure (JSON diagnostic on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backend import BackendConfig
from .categories import ATTRIBUTES
from .chain import VARIANTS
from .evaluation import (
    EvalReport,
    RunConfig,
    evaluate_transcripts,
    render_report_markdown,
    render_sweep_markdown,
    run_ablation,
    run_experiment,
)
from .narrative import build_narrative, render_week
from .synth import default_rules, generate_agents
from .trajectory import (
    DatasetManifest,
    join_visits,
    load_labels,
    load_poi_catalog,
    load_stay_points,
    partition_weeks,
    write_labels,
    write_poi_catalog,
    write_stay_points,
)


def _add_dataset_args(parser: argparse.ArgumentParser, labels_required: bool = True) -> None:
    parser.add_argument("--data", help="directory holding stay_points.csv, pois.csv, labels.csv, manifest.json")
    parser.add_argument("--stay-points", help="stay-point CSV path")
    parser.add_argument("--pois", help="POI CSV path")
    parser.add_argument("--labels", help="labels CSV path", required=False)
    parser.add_argument("--manifest", help="dataset manifest JSON path")
    parser.set_defaults(_labels_required=labels_required)


def _resolve_dataset(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    paths = {
        "stay_points": args.stay_points,
        "pois": args.pois,
        "labels": args.labels,
        "manifest": args.manifest,
    }
    if args.data:
        defaults = {
            "stay_points": Path(args.data) / "stay_points.csv",
            "pois": Path(args.data) / "pois.csv",
            "labels": Path(args.data) / "labels.csv",
            "manifest": Path(args.data) / "manifest.json",
        }
        for key, default in defaults.items():
            paths[key] = paths[key] or str(default)
    required = ["stay_points", "pois", "manifest"] + (
        ["labels"] if getattr(args, "_labels_required", True) else []
    )
    missing = [k for k in required if not paths[k]]
    if missing:
        parser.error(f"missing dataset inputs: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return paths


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--attribute", action="append", choices=ATTRIBUTES,
                        help="attribute to infer (repeatable; default income)")
    parser.add_argument("--sample", type=int, default=None, help="number of agents to sample")
    parser.add_argument("--seed", type=int, default=7, help="sampling seed")
    parser.add_argument("--budget", type=int, default=16000, help="narrative character budget")
    parser.add_argument("--parallel", type=int, default=1, help="max in-flight chains")
    parser.add_argument("--mock", action="store_true", help="use the rule-based mock oracle")
    parser.add_argument("--backend", help="backend config JSON path")
    parser.add_argument("--record", action="store_true", help="record responses to a cache file")
    parser.add_argument("--replay", metavar="CACHE", help="replay strictly from a cache file (no network)")
    parser.add_argument("--templates", help="directory of prompt template files")
    parser.add_argument("--no-resume", action="store_true", help="ignore existing transcripts")
    parser.add_argument("--f1-universe", choices=("observed", "canonical"), default="observed")


def _build_run_config(args, parser, paths: dict, variant: str) -> RunConfig:
    if args.record and args.replay:
        parser.error("--record and --replay are mutually exclusive")
    cache_mode = None
    cache_path = None
    if args.record:
        cache_mode = "record"
        cache_path = str(Path(args.out) / "cache.jsonl")
    elif args.replay:
        cache_mode = "replay_strict"
        cache_path = args.replay
    return RunConfig(
        stay_points=str(paths["stay_points"]),
        pois=str(paths["pois"]),
        labels=str(paths["labels"]),
        manifest=str(paths["manifest"]),
        out_dir=args.out,
        attributes=tuple(args.attribute or ("income",)),
        variant=variant,
        sample_size=args.sample,
        seed=args.seed,
        narrative_budget=args.budget,
        parallel=args.parallel,
        mock=args.mock,
        backend_config=args.backend,
        cache_mode=cache_mode,
        cache_path=cache_path,
        template_dir=args.templates,
        resume=not args.no_resume,
        macro_f1_universe=args.f1_universe,
    )


def _cmd_synth(args, parser) -> int:
    result = generate_agents(
        n=args.n,
        seed=args.seed,
        rules=default_rules(separability=args.sigma),
        weeks=args.weeks,
        out_dir=args.out,
    )
    print(json.dumps({
        "out_dir": str(result.out_dir),
        "agents": result.n_agents,
        "stay_points": result.n_stay_points,
    }))
    return 0


def _cmd_ingest(args, parser) -> int:
    paths = _resolve_dataset(args, parser)
    manifest = DatasetManifest.load(paths["manifest"])
    stay_points = load_stay_points(paths["stay_points"])
    catalog = load_poi_catalog(paths["pois"], set(manifest.activity_types) or None)
    joined = join_visits(stay_points, catalog, on_missing=args.on_missing)
    weeks = partition_weeks(joined.visits, manifest.timezone)
    labels = load_labels(paths["labels"], manifest.categories) if paths["labels"] else {}
    if args.canonical_out:
        out = Path(args.canonical_out)
        out.mkdir(parents=True, exist_ok=True)
        write_stay_points(stay_points, out / "stay_points.csv")
        write_poi_catalog(catalog, out / "pois.csv")
        if labels:
            write_labels(labels, out / "labels.csv")
        manifest.dump(out / "manifest.json")
    print(json.dumps({
        "stay_points": len(stay_points),
        "pois": len(catalog),
        "agents": len(joined.visits),
        "weeks": len(weeks),
        "labels": len(labels),
        "skipped": joined.skipped,
    }))
    return 0


def _cmd_narrate(args, parser) -> int:
    paths = _resolve_dataset(args, parser)
    manifest = DatasetManifest.load(paths["manifest"])
    stay_points = load_stay_points(paths["stay_points"])
    catalog = load_poi_catalog(paths["pois"], set(manifest.activity_types) or None)
    joined = join_visits(stay_points, catalog)
    weeks = partition_weeks(joined.visits, manifest.timezone)
    by_agent: dict[str, list] = {}
    for week in weeks:
        by_agent.setdefault(week.agent_id, []).append(week)
    wanted = set(args.agents.split(",")) if args.agents else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for agent_id, agent_weeks in sorted(by_agent.items()):
        if wanted is not None and agent_id not in wanted:
            continue
        narratives = build_narrative(agent_weeks, args.budget)
        text = "\n\n".join(n.text for n in narratives)
        (out / f"{agent_id}.narrative.txt").write_text(text + "\n", encoding="utf-8")
        sidecar = [
            {
                "week_start": n.week_start.isoformat(),
                "total_visits": n.stats.total_visits,
                "distinct_venues": n.stats.distinct_venues,
                "total_duration_min": n.stats.total_duration_min,
                "weekday_avg": n.stats.weekday_avg,
                "weekend_avg": n.stats.weekend_avg,
                "activity_counts": n.stats.activity_counts,
                "daypart_counts": n.stats.daypart_counts,
            }
            for n in narratives
        ]
        (out / f"{agent_id}.stats.json").write_text(
            json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
        )
        written += 1
    print(json.dumps({"agents_written": written, "out_dir": str(out)}))
    return 0


def _cmd_infer(args, parser) -> int:
    paths = _resolve_dataset(args, parser)
    config = _build_run_config(args, parser, paths, variant=args.variant)
    report = run_experiment(config)
    print(json.dumps({
        "report": str(Path(args.out) / f"report.{args.variant}.json"),
        "attributes": {a: {"accuracy": r.accuracy, "macro_f1": r.macro_f1,
                           "parse_failure_rate": r.parse_failure_rate, "n": r.n}
                       for a, r in report.attributes.items()},
    }))
    return 0


def _cmd_eval(args, parser) -> int:
    if args.sweep:
        sweep = json.loads(Path(args.sweep).read_text(encoding="utf-8"))
        markdown = render_sweep_markdown(sweep)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "sweep.md").write_text(markdown, encoding="utf-8")
        print(markdown)
        return 0
    if not (args.run_dir and args.labels and args.manifest):
        parser.error("eval needs --run-dir, --labels and --manifest (or --sweep)")
    report = evaluate_transcripts(
        run_dir=args.run_dir,
        labels_path=args.labels,
        manifest_path=args.manifest,
        attributes=tuple(args.attribute or ("income",)),
        variant=args.variant,
        universe=args.f1_universe,
    )
    manifest = DatasetManifest.load(args.manifest)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.save(out / f"report.{args.variant}.json")
        (out / f"report.{args.variant}.md").write_text(
            render_report_markdown(report, manifest.categories), encoding="utf-8"
        )
    print(report.to_json())
    return 0


def _cmd_ablate(args, parser) -> int:
    paths = _resolve_dataset(args, parser)
    config = _build_run_config(args, parser, paths, variant="full")
    combined = run_ablation(config)
    print(json.dumps({
        "report": str(Path(args.out) / "ablation.json"),
        "variants": {
            v: {a: {"accuracy": r["attributes"][a]["accuracy"],
                    "macro_f1": r["attributes"][a]["macro_f1"]}
                for a in r["attributes"]}
            for v, r in combined["variants"].items()
        },
    }))
    return 0


def _cmd_replay(args, parser) -> int:
    run_dir = Path(args.run)
    config_path = run_dir / "run_config.json"
    if not config_path.exists():
        raise FileNotFoundError(f"{config_path} not found; was this directory produced by infer?")
    stored = json.loads(config_path.read_text(encoding="utf-8"))
    cache_path = args.cache or stored.get("cache_path") or str(run_dir / "cache.jsonl")
    config = RunConfig.from_dict({
        **stored,
        "out_dir": args.out or str(run_dir),
        "cache_mode": "replay_strict",
        "cache_path": cache_path,
        "resume": False,
    })
    report = run_experiment(config)
    print(json.dumps({
        "replayed": True,
        "attributes": {a: {"accuracy": r.accuracy, "macro_f1": r.macro_f1, "n": r.n}
                       for a, r in report.attributes.items()},
    }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobilens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="number of agents")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--weeks", type=int, default=2)
    p.add_argument("--sigma", type=float, default=1.0, help="bracket separability in [0,1]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="load, validate, and summarize a dataset")
    _add_dataset_args(p, labels_required=False)
    p.add_argument("--on-missing", choices=("error", "skip"), default="error")
    p.add_argument("--canonical-out", help="write canonicalized copies here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("narrate", help="write per-agent narrative files")
    _add_dataset_args(p, labels_required=False)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=16000)
    p.add_argument("--agents", help="comma-separated agent ids (default all)")
    p.set_defaults(func=_cmd_narrate)

    p = sub.add_parser("infer", help="run chains and score one variant")
    _add_dataset_args(p)
    _add_run_args(p)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="recompute a report from stored transcripts")
    p.add_argument("--run-dir", help="directory holding transcripts/")
    p.add_argument("--labels")
    p.add_argument("--manifest")
    p.add_argument("--attribute", action="append", choices=ATTRIBUTES)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--f1-universe", choices=("observed", "canonical"), default="observed")
    p.add_argument("--sweep", help="render a training-size sweep JSON instead")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="run full/no_s1/no_s2 on one sample")
    _add_dataset_args(p)
    _add_run_args(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("replay", help="re-run a recorded run strictly from its cache")
    p.add_argument("--run", required=True, help="directory of the recorded run")
    p.add_argument("--cache", help="cache file (default: the run's cache.jsonl)")
    p.add_argument("--out", help="write outputs here instead of the run directory")
    p.set_defaults(func=_cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
