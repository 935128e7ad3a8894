"""CLI smoke and contract tests (all through main(), no subprocesses)."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from mobilens.cli import main


def _run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def cli_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("clidata")
    assert main(["synth", "--n", "18", "--seed", "7", "--out", str(out)]) == 0
    return out


class TestSynthAndIngest:
    def test_synth_writes_dataset(self, cli_dataset):
        for name in ("stay_points.csv", "pois.csv", "labels.csv", "manifest.json",
                      "generator_manifest.json"):
            assert (cli_dataset / name).exists()

    def test_ingest_summary(self, capsys, cli_dataset):
        code, out, _ = _run(capsys, "ingest", "--data", str(cli_dataset))
        assert code == 0
        summary = json.loads(out)
        assert summary["agents"] == 18
        assert summary["skipped"] == 0
        assert summary["labels"] == 18

    def test_ingest_canonical_out_round_trips(self, capsys, cli_dataset, tmp_path):
        code, _, _ = _run(capsys, "ingest", "--data", str(cli_dataset),
                          "--canonical-out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "stay_points.csv").read_bytes() == (
            cli_dataset / "stay_points.csv"
        ).read_bytes()


class TestNarrate:
    def test_writes_narrative_and_sidecar(self, capsys, cli_dataset, tmp_path):
        code, out, _ = _run(capsys, "narrate", "--data", str(cli_dataset),
                            "--out", str(tmp_path), "--agents", "agent0000")
        assert code == 0
        narrative = (tmp_path / "agent0000.narrative.txt").read_text()
        assert "Weekly visiting summary:" in narrative
        sidecar = json.loads((tmp_path / "agent0000.stats.json").read_text())
        assert sidecar[0]["total_visits"] > 0


class TestInfer:
    def test_smoke_report_exists(self, capsys, cli_dataset, tmp_path):
        code, out, _ = _run(
            capsys, "infer", "--data", str(cli_dataset), "--mock",
            "--attribute", "income", "--out", str(tmp_path / "run"), "--seed", "3",
        )
        assert code == 0
        payload = json.loads(out)
        assert Path(payload["report"]).exists()
        assert payload["attributes"]["income"]["accuracy"] >= 0.95

    def test_infer_without_dataset_is_usage_error(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as exit_info:
            main(["infer", "--mock", "--out", str(tmp_path)])
        assert exit_info.value.code == 2

    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            main(["infer", "--frobnicate"])
        assert exit_info.value.code == 2

    def test_record_and_replay_conflict(self, capsys, cli_dataset, tmp_path):
        with pytest.raises(SystemExit):
            main(["infer", "--data", str(cli_dataset), "--mock", "--out", str(tmp_path),
                  "--record", "--replay", "x.jsonl"])

    def test_runtime_failure_reports_json_error(self, capsys, cli_dataset, tmp_path):
        code, _, err = _run(
            capsys, "infer", "--data", str(cli_dataset), "--mock",
            "--attribute", "income", "--out", str(tmp_path / "run"),
            "--sample", "99999",
        )
        assert code == 1
        diagnostic = json.loads(err)
        assert diagnostic["type"] == "ValueError"


class TestEvalAndReplay:
    def test_eval_from_transcripts(self, capsys, cli_dataset, tmp_path):
        run_dir = tmp_path / "run"
        _run(capsys, "infer", "--data", str(cli_dataset), "--mock",
             "--attribute", "income", "--out", str(run_dir), "--seed", "3")
        code, out, _ = _run(
            capsys, "eval", "--run-dir", str(run_dir),
            "--labels", str(cli_dataset / "labels.csv"),
            "--manifest", str(cli_dataset / "manifest.json"),
            "--attribute", "income",
        )
        assert code == 0
        report = json.loads(out)
        assert report["attributes"]["income"]["accuracy"] >= 0.95

    def test_record_then_replay_subcommand(self, capsys, cli_dataset, tmp_path, no_network):
        run_dir = tmp_path / "rec"
        code, out, _ = _run(
            capsys, "infer", "--data", str(cli_dataset), "--mock",
            "--attribute", "income", "--out", str(run_dir), "--record", "--sample", "5",
        )
        assert code == 0
        recorded = json.loads((run_dir / "report.full.json").read_text())

        replay_dir = tmp_path / "rep"
        code, out, _ = _run(capsys, "replay", "--run", str(run_dir), "--out", str(replay_dir))
        assert code == 0
        replayed = json.loads((replay_dir / "report.full.json").read_text())
        recorded.pop("generated_at"), replayed.pop("generated_at")
        assert recorded == replayed

    def test_ablate_reports_three_variants(self, capsys, cli_dataset, tmp_path):
        code, out, _ = _run(
            capsys, "ablate", "--data", str(cli_dataset), "--mock",
            "--attribute", "income", "--out", str(tmp_path / "abl"), "--sample", "6",
        )
        assert code == 0
        payload = json.loads(out)
        assert set(payload["variants"]) == {"full", "no_s1", "no_s2"}
        assert (tmp_path / "abl" / "ablation.md").exists()

    def test_eval_sweep_rendering(self, capsys, tmp_path):
        sweep = {
            "fractions": [0.2, 1.0],
            "attributes": {"income": {"accuracy": [0.4, 0.9], "macro_f1": [0.3, 0.8]}},
        }
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(sweep))
        code, out, _ = _run(capsys, "eval", "--sweep", str(path))
        assert code == 0
        assert "### Accuracy by training fraction" in out
