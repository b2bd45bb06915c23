import json

import pytest

from bridge.cli import main
from bridge.prompts import list_strategies

MINI_CONFIG = "fixtures/configs/mini_replay.json"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSimpleCommands:
    def test_strategies_lists_all_keys(self, capsys):
        code, out, err = run_cli(capsys, "strategies")
        assert code == 0 and err == ""
        keys = out.splitlines()
        assert len(keys) == 22
        assert all("/" in k for k in keys)
        assert "code/direct" in keys and "proof/termination" in keys
        assert keys == [s.key for s in list_strategies()]

    def test_validate_ok(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "fixtures/corpus.jsonl")
        assert code == 0
        assert "12 problems ok" in out

    def test_validate_malformed_manifest(self, capsys, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "x"}\n', encoding="utf-8")
        code, _, err = run_cli(capsys, "validate", str(bad))
        assert code == 3
        assert err.startswith("error:")

    def test_validate_missing_manifest(self, capsys):
        code, _, err = run_cli(capsys, "validate", "no/such/file.jsonl")
        assert code == 3
        assert "error:" in err


class TestRunCommand:
    def test_missing_config_file(self, capsys):
        code, _, err = run_cli(capsys, "run", "--config", "no/such/config.json")
        assert code == 2
        assert "error:" in err

    def test_malformed_override(self, capsys):
        code, _, err = run_cli(capsys, "run", "--config", MINI_CONFIG,
                               "--override", "runs_root")
        assert code == 2
        assert "key=value" in err

    def test_mini_replay_run(self, capsys, tmp_path):
        code, out, err = run_cli(
            capsys, "run", "--config", MINI_CONFIG,
            "--runs-root", str(tmp_path / "runs"))
        assert code == 0, err
        assert "chains=60" in out
        run_id = out.split()[0]
        run_dir = tmp_path / "runs" / run_id
        assert (run_dir / "chains.jsonl").exists()
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["chain_count"] == 60

    def test_replay_miss_exit_code(self, capsys, tmp_path):
        empty = tmp_path / "empty-archive"
        empty.mkdir()
        code, _, err = run_cli(
            capsys, "run", "--config", MINI_CONFIG,
            "--runs-root", str(tmp_path / "runs"),
            "--override", f"gateway.archive_dir={empty}")
        assert code == 5
        assert "error:" in err

    def test_missing_transcript_bank_exit_code(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "run", "--config", MINI_CONFIG,
            "--runs-root", str(tmp_path / "runs"),
            "--override", "lean.transcripts=no/such/bank.json")
        assert code == 4
        assert "transcript bank not found" in err


class TestReplayAndReport:
    @pytest.fixture()
    def finished_run(self, capsys, tmp_path):
        runs_root = tmp_path / "runs"
        code, out, err = run_cli(
            capsys, "run", "--config", MINI_CONFIG,
            "--runs-root", str(runs_root))
        assert code == 0, err
        return runs_root, out.split()[0]

    def test_replay_creates_fresh_directory(self, capsys, finished_run):
        runs_root, run_id = finished_run
        code, out, err = run_cli(
            capsys, "replay", "--run", run_id, "--runs-root", str(runs_root))
        assert code == 0, err
        new_dir = out.split("dir=")[1].strip()
        assert new_dir != str(runs_root / run_id)
        original = (runs_root / run_id / "chains.jsonl").read_bytes()
        replayed = (runs_root / run_id).parent.joinpath(
            new_dir.rsplit("/", 1)[-1], "chains.jsonl").read_bytes()
        assert original == replayed

    def test_replay_unknown_run(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "replay", "--run", "run-doesnotexist",
            "--runs-root", str(tmp_path))
        assert code == 2
        assert "error:" in err

    def test_report_writes_metrics(self, capsys, finished_run):
        runs_root, run_id = finished_run
        code, out, err = run_cli(
            capsys, "report", "--run", run_id, "--runs-root", str(runs_root))
        assert code == 0, err
        rows = (runs_root / run_id / "report" / "rows.csv").read_text(
            encoding="utf-8")
        assert "pass@1" in rows.splitlines()[0]
        assert (runs_root / run_id / "report" / "curves.jsonl").exists()

    def test_report_unknown_run(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "report", "--run", "run-missing", "--runs-root", str(tmp_path))
        assert code == 2
