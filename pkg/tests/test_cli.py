"""Command line behavior: output shapes, schemas, exit codes."""

import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from robinaudit.cli import main

CAND_5040 = '{"exponents": [4, 2, 1, 1]}'
CAND_30030 = '{"exponents": [1, 1, 1, 1, 1, 1]}'


def schema(name):
    text = resources.files("robinaudit").joinpath(f"schemas/{name}").read_text()
    return json.loads(text)


def run_cli(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    out, err = capsys.readouterr()
    return code, out, err


class TestVerifyCommand:
    def test_json_report_and_exit_code(self, capsys):
        code, out, _ = run_cli(["verify", "--from", "3", "--to", "30"], capsys)
        assert code == 1
        payload = json.loads(out)
        jsonschema.validate(payload, schema("verify_report.schema.json"))
        ns = [v["n"] for v in payload["violations"]]
        assert ns == [3, 4, 5, 6, 8, 9, 10, 12, 16, 18, 20, 24, 30]
        assert payload["unknowns"] == []

    def test_clean_range_exits_zero(self, capsys):
        code, out, _ = run_cli(["verify", "--from", "5041", "--to", "6000"],
                               capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["checked"] == 960
        assert payload["violations"] == []

    def test_from_clamped_to_three(self, capsys):
        code, out, _ = run_cli(["verify", "--from", "1", "--to", "10"], capsys)
        assert json.loads(out)["from"] == 3

    def test_csv_columns(self, capsys):
        code, out, _ = run_cli(
            ["verify", "--from", "3", "--to", "10", "--format", "csv"], capsys
        )
        lines = out.strip().split("\n")
        assert lines[0] == "n,sigma,rho_num,rho_den,verdict"
        assert lines[1] == "3,4,4,3,fails"
        assert len(lines) == 8  # 3 4 5 6 8 9 10

    def test_text_summary(self, capsys):
        code, out, _ = run_cli(
            ["verify", "--from", "5041", "--to", "5100", "--format", "text"],
            capsys,
        )
        assert "violations: 0" in out and code == 0

    def test_scientific_bounds_accepted(self, capsys):
        code, out, _ = run_cli(["verify", "--from", "5041", "--to", "1e4"],
                               capsys)
        assert code == 0
        assert json.loads(out)["to"] == 10000

    def test_empty_range_is_usage_error(self, capsys):
        code, _, err = run_cli(["verify", "--from", "10", "--to", "5"], capsys)
        assert code == 64


class TestSaCommand:
    def test_records_prefix(self, capsys):
        code, out, _ = run_cli(["sa", "--limit", "100"], capsys)
        assert code == 0
        ns = [r["n"] for r in json.loads(out)["records"]]
        assert ns == [1, 2, 4, 6, 12, 24, 36, 48, 60]

    def test_csv(self, capsys):
        code, out, _ = run_cli(["sa", "--limit", "10", "--format", "csv"],
                               capsys)
        assert out.startswith("n,sigma,rho_num,rho_den\n1,1,1,1\n")


class TestCaCommand:
    def test_single_epsilon(self, capsys):
        code, out, _ = run_cli(["ca", "--epsilon", "1/20"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["candidate"]["n"] == 2520
        cand_doc = {"runs": payload["candidate"]["runs"]}
        jsonschema.validate(cand_doc, schema("candidate.schema.json"))

    def test_decimal_epsilon_matches_fraction(self, capsys):
        _, out_a, _ = run_cli(["ca", "--epsilon", "0.05"], capsys)
        _, out_b, _ = run_cli(["ca", "--epsilon", "1/20"], capsys)
        a = json.loads(out_a)["candidate"]["runs"]
        b = json.loads(out_b)["candidate"]["runs"]
        assert a == b

    def test_sweep(self, capsys):
        code, out, _ = run_cli(["ca", "--count", "8"], capsys)
        assert code == 0
        ns = [c["n"] for c in json.loads(out)["candidates"]]
        assert ns == [2, 6, 12, 60, 120, 360, 2520, 5040]

    def test_empty_candidate_is_negative(self, capsys):
        code, _, err = run_cli(["ca", "--epsilon", "1"], capsys)
        assert code == 1
        assert "empty exponent vector" in err

    def test_nonpositive_epsilon_is_usage_error(self, capsys):
        code, _, _ = run_cli(["ca", "--epsilon", "0"], capsys)
        assert code == 64
        code, _, _ = run_cli(["ca", "--epsilon", "-1/2"], capsys)
        assert code == 64

    def test_epsilon_and_count_exclusive(self, capsys):
        code, _, _ = run_cli(
            ["ca", "--epsilon", "1/2", "--count", "3"], capsys
        )
        assert code == 64


class TestAuditCommand:
    def test_excluded_candidate(self, capsys):
        code, out, _ = run_cli(["audit", CAND_5040], capsys)
        assert code == 1
        payload = json.loads(out)
        jsonschema.validate(payload, schema("audit_report.schema.json"))
        assert payload["summary"]["result"] == "excluded"
        assert set(payload["summary"]["excluded_by"]) >= {
            "size_floor_C", "log_window_2", "vojak_D1", "exponents_E",
        }

    def test_output_deterministic(self, capsys):
        _, out_a, _ = run_cli(["audit", CAND_5040], capsys)
        _, out_b, _ = run_cli(["audit", CAND_5040], capsys)
        assert out_a == out_b

    def test_candidate_from_file(self, capsys, tmp_path):
        path = tmp_path / "cand.json"
        path.write_text(CAND_5040)
        code, out, _ = run_cli(["audit", f"@{path}"], capsys)
        assert code == 1 and json.loads(out)["summary"]["result"] == "excluded"

    def test_candidate_from_stdin(self, capsys, monkeypatch):
        monkeypatch.setattr(sys, "stdin", io.StringIO(CAND_5040))
        code, out, _ = run_cli(["audit", "-"], capsys)
        assert code == 1

    def test_missing_file_is_format_error(self, capsys, tmp_path):
        code, _, err = run_cli(["audit", f"@{tmp_path}/absent.json"], capsys)
        assert code == 66 and "candidate format" in err

    def test_malformed_candidate_is_format_error(self, capsys):
        code, _, err = run_cli(["audit", '{"exponents": [1, "x"]}'], capsys)
        assert code == 66
        assert "exponents[1]" in err

    def test_inconclusive_with_small_table(self, capsys):
        cand = json.dumps({
            "runs": [
                {"exponent": 20, "count": 1}, {"exponent": 13, "count": 1},
                {"exponent": 8, "count": 1}, {"exponent": 7, "count": 1},
                {"exponent": 6, "count": 1},
                {"exponent": 1, "count": 10**9},
            ]
        })
        code, out, _ = run_cli(
            ["audit", cand, "--prime-limit", "1000"], capsys
        )
        assert code == 2
        payload = json.loads(out)
        assert payload["summary"]["result"] == "inconclusive"
        assert payload["summary"]["excluded_by"] == []

    def test_alt_log_window_flag(self, capsys):
        code, out, _ = run_cli(
            ["audit", CAND_5040, "--alt-log-window"], capsys
        )
        payload = json.loads(out)
        jsonschema.validate(payload, schema("audit_report.schema.json"))
        assert len(payload["checks"]) == 18
        assert payload["extra_checks"][0]["id"] == "log_window_alt"
        assert "log_window_alt" not in payload["summary"]["excluded_by"]

    def test_csv_lists_all_checks(self, capsys):
        code, out, _ = run_cli(["audit", CAND_5040, "--format", "csv"], capsys)
        lines = out.strip().split("\n")
        assert lines[0] == "check_id,status,precision_used"
        assert len(lines) == 19

    def test_precision_flag_recorded(self, capsys):
        _, out, _ = run_cli(["audit", CAND_5040, "--precision", "192"], capsys)
        assert json.loads(out)["precision_bits"] == 192


class TestNormalizeCommand:
    def test_in_window_exit_zero(self, capsys):
        code, out, _ = run_cli(["normalize", CAND_30030], capsys)
        assert code == 0
        payload = json.loads(out)
        jsonschema.validate(payload, schema("normalize_report.schema.json"))
        assert payload["status"] == "in_window"
        assert [s["action"] for s in payload["trace"]] == ["swap", "swap"]

    def test_blocked_exit_two(self, capsys):
        code, out, _ = run_cli(["normalize", '{"exponents": [1, 2]}'], capsys)
        assert code == 2
        assert json.loads(out)["status"] == "blocked_log_window"

    def test_step_limit(self, capsys):
        code, out, _ = run_cli(
            ["normalize", CAND_30030, "--step-limit", "1"], capsys
        )
        assert code == 2 and json.loads(out)["status"] == "step_limit"

    def test_csv_trace(self, capsys):
        code, out, _ = run_cli(
            ["normalize", CAND_30030, "--format", "csv"], capsys
        )
        lines = out.strip().split("\n")
        assert lines[0] == "step,action,index,prime,removed_prime"
        assert lines[1] == "1,swap,2,3,13"
        assert len(lines) == 3


class TestPrecisionResolution:
    def test_env_variable(self, capsys, monkeypatch):
        monkeypatch.setenv("ROBIN_PRECISION_BITS", "96")
        _, out, _ = run_cli(["audit", CAND_5040], capsys)
        assert json.loads(out)["precision_bits"] == 96

    def test_flag_beats_env(self, capsys, monkeypatch):
        monkeypatch.setenv("ROBIN_PRECISION_BITS", "96")
        _, out, _ = run_cli(["audit", CAND_5040, "--precision", "128"], capsys)
        assert json.loads(out)["precision_bits"] == 128

    def test_low_precision_rejected(self, capsys):
        code, _, err = run_cli(["audit", CAND_5040, "--precision", "32"],
                               capsys)
        assert code == 64
        assert "at least 64" in err

    def test_bad_env_value_rejected(self, capsys, monkeypatch):
        monkeypatch.setenv("ROBIN_PRECISION_BITS", "plenty")
        code, _, err = run_cli(["audit", CAND_5040], capsys)
        assert code == 64


class TestUsage:
    def test_no_command(self, capsys):
        code, _, _ = run_cli([], capsys)
        assert code == 64

    def test_unknown_command(self, capsys):
        code, _, _ = run_cli(["frobnicate"], capsys)
        assert code == 64

    def test_missing_required_flag(self, capsys):
        code, _, _ = run_cli(["verify", "--from", "3"], capsys)
        assert code == 64

    def test_bad_integer(self, capsys):
        code, _, _ = run_cli(["verify", "--from", "x", "--to", "5"], capsys)
        assert code == 64


class TestSelftest:
    def test_all_green(self, capsys):
        code, out, _ = run_cli(["selftest"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["ok"] is True
        assert all(c["ok"] for c in payload["checks"])
        assert len(payload["checks"]) == 5


class TestSchemas:
    def test_candidate_schema_rejects_zero_count(self):
        doc = {"runs": [{"exponent": 2, "count": 0}]}
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(doc, schema("candidate.schema.json"))

    def test_candidate_schema_rejects_mixed_forms(self):
        doc = {"runs": [{"exponent": 1, "count": 1}], "exponents": [1]}
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(doc, schema("candidate.schema.json"))

    def test_candidate_schema_accepts_zero_exponents_form(self):
        jsonschema.validate({"exponents": [0, 2]},
                            schema("candidate.schema.json"))


class TestConsoleScript:
    def test_entry_point_version(self):
        proc = subprocess.run(
            ["robinaudit", "--version"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0.1.0"

    def test_entry_point_exit_code(self):
        proc = subprocess.run(
            ["robinaudit", "audit", CAND_5040, "--prime-limit", "100"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
