"""CLI subcommands: flags, JSON-line output, exit codes."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from tickbench.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _json_lines(output: str) -> list[dict]:
    return [json.loads(line) for line in output.splitlines()
            if line.startswith("{")]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Generated small dataset + ingested engine + config file."""
    tmp = tmp_path_factory.mktemp("cli")
    data = tmp / "data"
    runner = CliRunner()
    result = runner.invoke(main, [
        "generate", "--seed", "2", "--day", "2022-06-18",
        "--trades-rows", "3000", "--book-rows", "2500", "--out", str(data)])
    assert result.exit_code == 0, result.output
    config = tmp / "config.ini"
    config.write_text(f"[embedded]\nkind = embedded\nroot = {tmp / 'engine'}\n")
    result = runner.invoke(main, [
        "ingest", "--backend", "embedded", "--data", str(data),
        "--config", str(config)])
    assert result.exit_code == 0, result.output
    return {"dir": tmp, "data": data, "config": config,
            "ingest_output": _json_lines(result.output)}


class TestGenerate:
    def test_reports_rows_and_digests(self, runner, tmp_path):
        result = runner.invoke(main, [
            "generate", "--seed", "1", "--day", "2022-06-01",
            "--trades-rows", "100", "--book-rows", "50", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        lines = _json_lines(result.output)
        assert [l["rows"] for l in lines] == [100, 50]
        assert all(len(l["sha256"]) == 64 for l in lines)

    def test_zero_rows_header_only(self, runner, tmp_path):
        result = runner.invoke(main, [
            "generate", "--seed", "1", "--day", "2022-06-01",
            "--trades-rows", "0", "--book-rows", "0", "--out", str(tmp_path)])
        assert result.exit_code == 0
        assert (tmp_path / "trades.csv").read_text().count("\n") == 1

    def test_same_flags_same_digests(self, runner, tmp_path):
        args = ["generate", "--seed", "9", "--day", "2022-06-01",
                "--trades-rows", "200", "--book-rows", "100"]
        first = runner.invoke(main, args + ["--out", str(tmp_path / "a")])
        second = runner.invoke(main, args + ["--out", str(tmp_path / "b")])
        assert ([l["sha256"] for l in _json_lines(first.output)]
                == [l["sha256"] for l in _json_lines(second.output)])

    def test_bad_day_exits_one(self, runner, tmp_path):
        result = runner.invoke(main, [
            "generate", "--day", "June 1", "--out", str(tmp_path)])
        assert result.exit_code == 1


class TestIngest:
    def test_w_and_se_reported(self, workspace):
        lines = workspace["ingest_output"]
        w = next(l for l in lines if l["benchmark"] == "W")
        se = next(l for l in lines if l["benchmark"] == "SE")
        assert w["elapsed_ms"] > 0 and w["rows"] == 5500
        assert w["throughput_mb_s"] > 0
        assert 0 < se["efficiency_percent"] < 200

    def test_missing_file_named(self, runner, tmp_path, workspace):
        (tmp_path / "trades.csv").write_text("x\n")
        result = runner.invoke(main, [
            "ingest", "--backend", "embedded", "--data", str(tmp_path),
            "--config", str(workspace["config"])])
        assert result.exit_code == 1
        assert "books.csv" in result.output

    def test_rerun_on_nonempty_table_refused(self, runner, workspace):
        result = runner.invoke(main, [
            "ingest", "--backend", "embedded", "--data", str(workspace["data"]),
            "--config", str(workspace["config"])])
        assert result.exit_code == 1
        assert "fresh" in result.output


class TestRun:
    def test_single_benchmark_ten_reps(self, runner, workspace, tmp_path):
        out = tmp_path / "results.json"
        result = runner.invoke(main, [
            "run", "--backend", "embedded", "--benchmarks", "T-V1",
            "--reps", "10", "--out", str(out),
            "--config", str(workspace["config"])])
        assert result.exit_code == 0, result.output
        lines = _json_lines(result.output)
        assert len(lines) == 1
        assert len(lines[0]["latencies_ms"]) == 10
        report = json.loads(out.read_text())
        assert len(report["results"][0]["latencies_ms"]) == 10

    def test_all_runs_fourteen_in_table_order(self, runner, workspace):
        result = runner.invoke(main, [
            "run", "--backend", "embedded", "--benchmarks", "all", "--reps", "1",
            "--config", str(workspace["config"])])
        assert result.exit_code == 0, result.output
        ids = [l["benchmark"] for l in _json_lines(result.output)]
        assert ids == ["T-V1", "T-V2", "T-VWAP", "O-T", "O-B1", "O-B2", "O-S",
                       "O-V1", "O-V2", "O-NBBO", "C-R", "C-VT", "C-VO1", "C-VO2"]

    def test_unknown_benchmark_lists_valid_ids(self, runner, workspace):
        result = runner.invoke(main, [
            "run", "--benchmarks", "T-V9", "--config", str(workspace["config"])])
        assert result.exit_code == 1
        assert "T-V1" in result.output and "C-VO2" in result.output

    def test_cache_clear_invocations(self, runner, workspace, tmp_path):
        counter = tmp_path / "count.txt"
        result = runner.invoke(main, [
            "run", "--backend", "embedded", "--benchmarks", "O-B1",
            "--reps", "10", "--cache-clear-cmd", f"echo x >> {counter}",
            "--config", str(workspace["config"])])
        assert result.exit_code == 0, result.output
        assert counter.read_text().count("x") == 10

    def test_help_lists_benchmark_descriptions(self, runner):
        result = runner.invoke(main, ["run", "--help"])
        assert "T-VWAP" in result.output
        assert "Volume-weighted average price" in result.output

    def test_config_via_environment(self, runner, workspace):
        result = runner.invoke(
            main, ["run", "--benchmarks", "O-B1", "--reps", "1"],
            env={"TICKBENCH_CONFIG": str(workspace["config"])})
        assert result.exit_code == 0, result.output
        assert _json_lines(result.output)[0]["benchmark"] == "O-B1"


class TestVerify:
    def test_embedded_vs_embedded_exit_zero(self, runner, workspace):
        result = runner.invoke(main, [
            "verify", "--backend", "embedded", "--against", "embedded",
            "--config", str(workspace["config"])])
        assert result.exit_code == 0, result.output
        lines = _json_lines(result.output)
        assert len(lines) == 14
        assert all(l["equal"] for l in lines)

    def test_faulted_asset_exit_two_localized(self, runner, workspace, tmp_path):
        faulted = tmp_path / "faulted_assets"
        faulted.mkdir()
        source = Path(__file__).parent.parent / "src/tickbench/assets/embedded"
        for tpl in source.glob("*.tpl"):
            text = tpl.read_text().replace('"sample"', '"population"')
            (faulted / tpl.name).write_text(text)
        (faulted / "dialect").write_text("json\n")
        config = tmp_path / "config.ini"
        config.write_text(
            workspace["config"].read_text()
            + "[faulted]\nkind = embedded\n"
            + f"root = {workspace['dir'] / 'engine'}\n"
            + f"asset_dir = {faulted}\n")
        result = runner.invoke(main, [
            "verify", "--backend", "faulted", "--against", "embedded",
            "--config", str(config)])
        assert result.exit_code == 2, result.output
        lines = _json_lines(result.output)
        mismatched = {l["benchmark"] for l in lines if not l["equal"]}
        assert mismatched == {"C-VT", "C-VO1", "C-VO2"}

    def test_unreachable_backend_exit_one(self, runner, workspace, tmp_path):
        config = tmp_path / "config.ini"
        config.write_text(workspace["config"].read_text()
                          + "[ghost]\nkind = http\nbase_url = http://127.0.0.1:1\n")
        result = runner.invoke(main, [
            "verify", "--backend", "ghost", "--config", str(config)])
        assert result.exit_code == 1


class TestReport:
    def _results_file(self, runner, workspace, tmp_path) -> Path:
        out = tmp_path / "results.json"
        result = runner.invoke(main, [
            "run", "--backend", "embedded", "--benchmarks", "T-V1,O-B1,C-VO1",
            "--reps", "2", "--out", str(out), "--config", str(workspace["config"])])
        assert result.exit_code == 0
        return out

    def test_csv_row_count(self, runner, workspace, tmp_path):
        results = self._results_file(runner, workspace, tmp_path)
        out_csv = tmp_path / "report.csv"
        result = runner.invoke(main, [
            "report", "--in", str(results), "--format", "csv", "--out", str(out_csv)])
        assert result.exit_code == 0
        assert len(out_csv.read_text().splitlines()) == 4

    def test_plotdata_per_category(self, runner, workspace, tmp_path):
        results = self._results_file(runner, workspace, tmp_path)
        result = runner.invoke(main, [
            "report", "--in", str(results), "--format", "plotdata",
            "--out", str(tmp_path / "plots")])
        assert result.exit_code == 0
        names = {Path(l["written"]).name for l in _json_lines(result.output)}
        assert names == {"trades.dat", "orderbook.dat", "complexquery.dat"}

    def test_corrupted_json_exit_one(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        result = runner.invoke(main, [
            "report", "--in", str(bad), "--format", "csv",
            "--out", str(tmp_path / "x.csv")])
        assert result.exit_code == 1
