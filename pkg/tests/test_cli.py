"""End-to-end tests of the command-line interface (in-process)."""

import csv
import json
import math

import pytest

import pullpush.cli as cli
from pullpush.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def strip_timestamps(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if '"timestamp"' not in line)


class TestAnalyze:
    def test_reference_point(self, capsys):
        code, out, _ = run(
            capsys, "analyze", "--lambda-q", "250", "--lambda-p", "500", "--q", "10"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["p_s_weighted"] == pytest.approx(0.84406, abs=1e-4)
        assert doc["q"] == 10
        assert doc["k_a"] == 50
        assert doc["t_pull_s"] == pytest.approx(12.5e-3, rel=1e-12)
        assert doc["manifest"]["tool_version"]

    def test_zero_load(self, capsys):
        code, out, _ = run(capsys, "analyze", "--lambda-q", "0", "--lambda-p", "0", "--q", "1")
        assert code == 0
        doc = json.loads(out)
        assert doc["p_s_query"] == 1.0
        assert doc["p_s_push"] == 1.0
        assert doc["p_s_weighted"] == 1.0
        assert doc["throughput_push"] == 0.0

    def test_infeasible_q_exits_3(self, capsys):
        code, _, err = run(capsys, "analyze", "--lambda-q", "1", "--lambda-p", "1", "--q", "20")
        assert code == 3
        assert "k_a" in err

    def test_explicit_weight(self, capsys):
        code, out, _ = run(
            capsys,
            "analyze", "--lambda-q", "250", "--lambda-p", "500", "--q", "10", "--w-q", "1.0",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["p_s_weighted"] == pytest.approx(doc["p_s_query"], abs=1e-15)


class TestConfigHandling:
    def test_config_file_applies(self, capsys, tmp_path):
        path = tmp_path / "frame.json"
        path.write_text(json.dumps({"F": 51}))
        code, _, err = run(
            capsys,
            "analyze", "--config", str(path),
            "--lambda-q", "1", "--lambda-p", "1", "--q", "10",
        )
        assert code == 3  # q_max is 9 with 51 slots
        assert "k_a" in err

    def test_flag_overrides_config(self, capsys, tmp_path):
        path = tmp_path / "frame.json"
        path.write_text(json.dumps({"F": 51}))
        code, out, _ = run(
            capsys,
            "analyze", "--config", str(path), "--frame-slots", "101",
            "--lambda-q", "1", "--lambda-p", "1", "--q", "10",
        )
        assert code == 0
        assert json.loads(out)["k_a"] == 50

    def test_unknown_field_exits_2(self, capsys, tmp_path):
        path = tmp_path / "frame.json"
        path.write_text(json.dumps({"tau": 1}))
        code, _, err = run(
            capsys, "analyze", "--config", str(path), "--lambda-q", "1", "--lambda-p", "1", "--q", "1"
        )
        assert code == 2
        assert "tau" in err

    def test_wrong_type_names_field(self, capsys, tmp_path):
        path = tmp_path / "frame.json"
        path.write_text(json.dumps({"F": "many"}))
        code, _, err = run(
            capsys, "analyze", "--config", str(path), "--lambda-q", "1", "--lambda-p", "1", "--q", "1"
        )
        assert code == 2
        assert "'F'" in err

    def test_invalid_json_exits_2(self, capsys, tmp_path):
        path = tmp_path / "frame.json"
        path.write_text("{not json")
        code, _, err = run(
            capsys, "analyze", "--config", str(path), "--lambda-q", "1", "--lambda-p", "1", "--q", "1"
        )
        assert code == 2


class TestOptimize:
    @pytest.mark.parametrize("lambda_q,expected", [("250", 10), ("500", 14), ("750", 15)])
    def test_reference_optima(self, capsys, lambda_q, expected):
        code, out, _ = run(capsys, "optimize", "--lambda-q", lambda_q, "--lambda-p", "500")
        assert code == 0
        assert json.loads(out)["q_star"] == expected

    def test_pure_push(self, capsys):
        code, out, _ = run(capsys, "optimize", "--lambda-q", "0", "--lambda-p", "500")
        assert code == 0
        assert json.loads(out)["q_star"] == 0

    def test_csv_output(self, capsys, tmp_path):
        path = tmp_path / "table.csv"
        code, out, _ = run(
            capsys, "optimize", "--lambda-q", "250", "--lambda-p", "500", "--csv", str(path)
        )
        assert code == 0
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["q", "p_s_weighted", "p_s_query", "p_s_push", "k_a"]
        assert len(rows) == 21  # header + q in 0..19
        best = {int(r[0]): float(r[1]) for r in rows[1:]}
        assert best[10] == pytest.approx(0.844061, abs=1e-4)
        assert max(best, key=best.get) == 10
        manifest = json.loads((tmp_path / "table.csv.manifest.json").read_text())
        assert "optimize" in manifest["command"]

    def test_csv_stdout_format(self, capsys):
        code, out, err = run(
            capsys, "optimize", "--lambda-q", "250", "--lambda-p", "500", "--format", "csv"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].strip() == "q,p_s_weighted,p_s_query,p_s_push,k_a"
        assert len(lines) == 21
        assert '"timestamp"' in err  # manifest goes to stderr in csv mode


class TestGuidelines:
    def test_reference_rows(self, capsys):
        code, out, _ = run(capsys, "guidelines", "--p-th", "0.8")
        assert code == 0
        rows = {row["q"]: row for row in json.loads(out)["rows"]}
        assert rows[2]["lambda_q_max"] == pytest.approx(39.6, abs=0.5)
        assert rows[2]["lambda_p_max"] == pytest.approx(835.0, abs=2.0)
        assert rows[2]["throughput_push"] == pytest.approx(660.0, abs=2.0)
        assert rows[3]["lambda_p_max"] == pytest.approx(791.0, abs=2.0)
        assert rows[3]["throughput_push"] == pytest.approx(625.0, abs=2.0)

    def test_repeated_thresholds_nested(self, capsys):
        code, out, _ = run(
            capsys, "guidelines", "--p-th", "0.7", "--p-th", "0.8", "--p-th", "0.9"
        )
        assert code == 0
        rows = json.loads(out)["rows"]
        by_threshold = {}
        for row in rows:
            by_threshold.setdefault(row["p_th"], {})[row["q"]] = row
        for q in by_threshold[0.7]:
            assert (
                by_threshold[0.7][q]["lambda_p_max"]
                >= by_threshold[0.8][q]["lambda_p_max"]
                >= by_threshold[0.9][q]["lambda_p_max"]
            )

    def test_out_of_range_threshold_exits_2(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["guidelines", "--p-th", "1.5"])
        assert excinfo.value.code == 2

    def test_csv_format(self, capsys):
        code, out, _ = run(capsys, "guidelines", "--p-th", "0.8", "--format", "csv")
        assert code == 0
        header = out.strip().splitlines()[0].strip()
        assert header == "p_th,q,lambda_q_max,lambda_p_max,n_served_mean,throughput_push"


class TestSweep:
    def test_monotone_in_packet_rate(self, capsys):
        code, out, _ = run(
            capsys,
            "sweep", "--q-list", "1,10", "--ratio-list", "0.5",
            "--lambda-p-range", "50:3000:30",
        )
        assert code == 0
        rows = json.loads(out)["rows"]
        for q in (1, 10):
            series = [r["p_s_weighted"] for r in rows if r["q"] == q]
            assert all(a >= b for a, b in zip(series, series[1:]))

    def test_single_point_range(self, capsys):
        code, out, _ = run(
            capsys,
            "sweep", "--q-list", "1,10", "--ratio-list", "0.5,1.0",
            "--lambda-p-range", "500:500:1",
        )
        assert code == 0
        rows = json.loads(out)["rows"]
        assert len(rows) == 4  # one row per (q, ratio)

    def test_crossover_report(self, capsys):
        code, out, _ = run(
            capsys,
            "sweep", "--q-list", "1,10", "--ratio-list", "0.5",
            "--lambda-p-range", "50:3000:10", "--crossovers",
        )
        assert code == 0
        doc = json.loads(out)
        entry = doc["crossovers"][0]
        assert entry["q_low"] == 1 and entry["q_high"] == 10
        assert entry["lambda_p_cross"] > 0.0

    def test_bad_range_exits_2(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["sweep", "--q-list", "1", "--ratio-list", "1", "--lambda-p-range", "10:5:3"])
        assert excinfo.value.code == 2


class TestSimulate:
    def test_zero_load_single_frame(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--q", "1", "--lambda-q", "0", "--lambda-p", "0",
            "--frames", "1", "--seed", "1",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["queries_total"] == 0
        assert doc["packets_total"] == 0
        assert doc["zero_query_sample"] is True

    def test_reference_point_close_to_closed_form(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--q", "10", "--lambda-q", "250", "--lambda-p", "500",
            "--frames", "20000", "--seed", "1",
        )
        assert code == 0
        doc = json.loads(out)
        hw = doc["half_width_95"]["p_s_push"]
        assert abs(doc["p_s_push_hat"] - 0.7927103541470568) < 3.0 * hw
        assert doc["manifest"]["seed"] == 1

    def test_deterministic_output(self, capsys):
        argv = [
            "simulate", "--q", "5", "--lambda-q", "100", "--lambda-p", "300",
            "--frames", "2000", "--seed", "99",
        ]
        code_a, out_a, _ = run(capsys, *argv)
        code_b, out_b, _ = run(capsys, *argv)
        assert code_a == code_b == 0
        assert strip_timestamps(out_a) == strip_timestamps(out_b)

    def test_seed_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "777")
        code, out, _ = run(
            capsys,
            "simulate", "--q", "1", "--lambda-q", "1", "--lambda-p", "1", "--frames", "10",
        )
        assert code == 0
        assert json.loads(out)["manifest"]["seed"] == 777

    def test_seed_flag_beats_env(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "777")
        code, out, _ = run(
            capsys,
            "simulate", "--q", "1", "--lambda-q", "1", "--lambda-p", "1",
            "--frames", "10", "--seed", "5",
        )
        assert code == 0
        assert json.loads(out)["manifest"]["seed"] == 5


class TestValidate:
    def test_small_grid(self, capsys):
        code, out, _ = run(
            capsys,
            "validate", "--q-list", "2,10", "--lambda-q-list", "100",
            "--lambda-p-list", "500", "--frames", "5000", "--seed", "1",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["summary"]["points"] == 2
        assert set(doc["summary"]) == {
            "points",
            "flags",
            "max_abs_deviation_push",
            "max_lower_bound_violation_query",
        }
        assert len(doc["rows"]) == 2

    def test_csv_format_prints_rows_then_summary(self, capsys):
        code, out, _ = run(
            capsys,
            "validate", "--q-list", "2", "--lambda-q-list", "100",
            "--lambda-p-list", "500", "--frames", "2000", "--seed", "1",
            "--format", "csv",
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("q,lambda_q,lambda_p,")
        tail = "\n".join(lines[2:])
        assert json.loads(tail)["summary"]["points"] == 1

    def test_csv_file_output(self, capsys, tmp_path):
        path = tmp_path / "grid.csv"
        code, out, _ = run(
            capsys,
            "validate", "--q-list", "2", "--lambda-q-list", "0",
            "--lambda-p-list", "0", "--frames", "200", "--seed", "1",
            "--csv", str(path),
        )
        assert code == 0
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "q" and len(rows) == 2
        assert json.loads(out)["summary"]["points"] == 1
        assert (tmp_path / "grid.csv.manifest.json").exists()

    def test_strict_zero_flags_passes(self, capsys):
        code, _, _ = run(
            capsys,
            "validate", "--q-list", "2", "--lambda-q-list", "0",
            "--lambda-p-list", "0", "--frames", "100", "--seed", "1", "--strict",
        )
        assert code == 0

    def test_strict_with_flags_exits_4(self, capsys, monkeypatch):
        def fake_grid(*args, **kwargs):
            return [], {
                "points": 1,
                "flags": 2,
                "max_abs_deviation_push": 0.1,
                "max_lower_bound_violation_query": 0.0,
            }

        monkeypatch.setattr(cli, "validate_grid", fake_grid)
        code, _, _ = run(
            capsys,
            "validate", "--q-list", "2", "--lambda-q-list", "1",
            "--lambda-p-list", "1", "--frames", "10", "--seed", "1", "--strict",
        )
        assert code == 4


class TestReproducibility:
    def test_rerun_is_byte_identical_modulo_timestamp(self, capsys):
        argv = ["optimize", "--lambda-q", "250", "--lambda-p", "500"]
        _, out_a, _ = run(capsys, *argv)
        _, out_b, _ = run(capsys, *argv)
        assert strip_timestamps(out_a) == strip_timestamps(out_b)

    def test_command_recorded_in_manifest(self, capsys):
        code, out, _ = run(capsys, "optimize", "--lambda-q", "250", "--lambda-p", "500")
        doc = json.loads(out)
        assert doc["manifest"]["command"].startswith("pullpush optimize")

    def test_csv_floats_have_nine_significant_digits(self, capsys, tmp_path):
        path = tmp_path / "rows.csv"
        run(capsys, "optimize", "--lambda-q", "250", "--lambda-p", "500", "--csv", str(path))
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        value = rows[11][1]  # q=10 weighted success
        assert float(value) == pytest.approx(0.844061324, abs=1e-8)
        digits = value.replace(".", "").lstrip("0")
        assert len(digits) == 9
