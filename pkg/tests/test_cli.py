import json
import math
from fractions import Fraction
import pytest
from src.run import main
from src.storage import read_csv_rows

LAMBDA = json.dumps({"rows": ["r1", "r2"], "cols": ["s1", "s2"], "matrix": [[0.4, 0.1], [0.1, 0.4]]})
PSI = json.dumps({"alphabet": ["s1", "s2"], "weights": [0.5, 0.5]})


def _header(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readline().strip()


def _error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


@pytest.fixture
def scenario_file(tmp_path, scenario_data):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_data), encoding="utf-8")
    return path


class TestEnumerate:
    def test_labels_only(self, tmp_path):
        out = tmp_path / "emp.csv"
        assert main(["enumerate", "--n", "2", "--labels", "a,b,c", "--out", str(out)]) == 0
        rows = read_csv_rows(out)
        assert [r["counts"] for r in rows] == ["2 0 0", "1 1 0", "1 0 1", "0 2 0", "0 1 1", "0 0 2"]
        assert _header(out).startswith("# config_hash=")
        assert _header(out).endswith(",mode=double")

    def test_exact_probabilities(self, tmp_path):
        out = tmp_path / "emp.csv"
        dist = json.dumps({"alphabet": ["a", "b"], "weights": ["1/3", "2/3"]})
        assert main(["enumerate", "--n", "2", "--dist", dist, "--mode", "exact", "--out", str(out)]) == 0
        probs = [Fraction(r["probability"]) for r in read_csv_rows(out)]
        assert probs == [Fraction(1, 9), Fraction(4, 9), Fraction(4, 9)]

    def test_needs_one_source(self, capsys):
        assert main(["enumerate", "--n", "2"]) == 4
        assert _error(capsys)["error"] == "ArgumentError"

    def test_cap(self, capsys):
        assert main(["enumerate", "--n", "40", "--labels", "a,b,c,d,e", "--cap-enum", "100"]) == 5
        assert _error(capsys)["exit_code"] == 5


class TestKernel:
    def test_law_sums_to_one(self, tmp_path):
        out = tmp_path / "kernel.csv"
        assert main(["kernel", "--n", "3", "--zeta", "1,2", "--lambda", LAMBDA, "--out", str(out)]) == 0
        rows = read_csv_rows(out)
        assert [r["phi"] for r in rows] == ["3 0", "2 1", "1 2", "0 3"]
        assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0, abs=1e-12)

    def test_zeta_must_match(self, capsys):
        assert main(["kernel", "--n", "3", "--zeta", "1,1", "--lambda", LAMBDA]) == 4


class TestRate:
    def test_rate_at_a_point(self, tmp_path):
        out = tmp_path / "rate.json"
        phi = json.dumps({"alphabet": ["r1", "r2"], "weights": [0.8, 0.2]})
        assert main(["rate", "--lambda", LAMBDA, "--psi", PSI, "--phi", phi, "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["rate"] > 0
        assert payload["J"]["margin_residual"] <= 1e-12
        assert payload["mode"] == "double"

    def test_set_infimum(self, tmp_path):
        out = tmp_path / "rate.json"
        halfspace = json.dumps({"kind": "halfspace", "coordinate": "r1", "threshold": 0.8, "op": "ge"})
        assert main(["rate", "--lambda", LAMBDA, "--psi", PSI, "--set", halfspace, "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["argmin"]["weights"] == pytest.approx([0.8, 0.2])

    def test_infeasible(self, tmp_path, capsys):
        out = tmp_path / "rate.json"
        diagonal = json.dumps({"rows": ["r1", "r2"], "cols": ["s1", "s2"], "matrix": [[0.5, 0.0], [0.0, 0.5]]})
        phi = json.dumps({"alphabet": ["r1", "r2"], "weights": [0.8, 0.2]})
        argv = ["rate", "--lambda", diagonal, "--psi", PSI, "--phi", phi, "--require-feasible", "--out", str(out)]
        assert main(argv) == 3
        assert json.loads(out.read_text())["rate"] == "inf"
        assert _error(capsys)["error"] == "InfeasibleError"

    def test_malformed_lambda(self, capsys):
        bad = json.dumps({"rows": ["r1", "r2"], "cols": ["s1", "s2"], "matrix": [[0.5, 0.6], [0.0, 0.0]]})
        phi = json.dumps({"alphabet": ["r1", "r2"], "weights": [0.8, 0.2]})
        assert main(["rate", "--lambda", bad, "--psi", PSI, "--phi", phi]) == 4
        error = _error(capsys)
        assert error["error"] == "ConfigError"
        assert "r1=1.1" in error["detail"]

    def test_inline_json_must_parse(self, capsys):
        assert main(["rate", "--lambda", "{not json", "--psi", PSI, "--phi", PSI]) == 4


class TestRound:
    def test_round_with_certificate(self, tmp_path):
        out = tmp_path / "round.json"
        xi = json.dumps({"rows": ["r1", "r2"], "cols": ["s1", "s2"], "matrix": [[0.35, 0.15], [0.05, 0.45]]})
        argv = ["round", "--xi", xi, "--zeta", "20,30", "--lambda", LAMBDA, "--delta", "0.5", "--out", str(out)]
        assert main(argv) == 0
        payload = json.loads(out.read_text())
        assert payload["passed"] and payload["s_margin_exact"]
        assert [sum(col) for col in zip(*payload["nu"]["counts"])] == [20, 30]
        assert payload["certificate"]["N"] == 641


class TestSanov:
    def test_report(self, tmp_path, scenario_file):
        out = tmp_path / "sanov.csv"
        assert main(["sanov", "--config", str(scenario_file), "--out", str(out)]) == 0
        rows = read_csv_rows(out)
        assert list(rows[0].keys()) == [
            "n", "psi_n", "a_n", "envelope_lo", "envelope_hi", "target_lo", "target_hi", "contained", "wall_ms",
        ]
        assert [r["n"] for r in rows] == ["20", "50", "100"]
        assert all(r["contained"] == "true" and r["wall_ms"] == "" for r in rows)

    def test_cap_writes_the_finished_levels(self, tmp_path, scenario_data, capsys):
        config = tmp_path / "capped.json"
        config.write_text(json.dumps({**scenario_data, "n_values": [5, 10, 400]}), encoding="utf-8")
        out = tmp_path / "sanov.csv"
        assert main(["sanov", "--config", str(config), "--cap-enum", "1000", "--out", str(out)]) == 5
        assert [r["n"] for r in read_csv_rows(out)] == ["5", "10"]
        assert _error(capsys)["error"] == "ResourceError"

    def test_missing_config(self, tmp_path, capsys):
        assert main(["sanov", "--config", str(tmp_path / "absent.json")]) == 4
        assert "not found" in _error(capsys)["detail"]

    def test_invalid_scenario(self, tmp_path, scenario_data, capsys):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({**scenario_data, "n_values": [50, 20]}), encoding="utf-8")
        assert main(["sanov", "--config", str(config)]) == 4
        assert "n_values" in _error(capsys)["detail"]

    def test_same_inputs_same_bytes(self, tmp_path, scenario_file):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sanov", "--config", str(scenario_file), "--out", str(first)]) == 0
        assert main(["sanov", "--config", str(scenario_file), "--out", str(second), "--workers", "2"]) == 0
        assert first.read_bytes() == second.read_bytes()


class TestGallery:
    def test_gaussian_header(self, tmp_path):
        out = tmp_path / "gauss.csv"
        argv = ["gallery", "gaussian", "--r", "0.5", "--lambda", "2", "--y", "1", "--n-list", "1,10", "--out", str(out)]
        assert main(argv) == 0
        rows = read_csv_rows(out)
        assert list(rows[0].keys()) == ["n", "y_n", "cumulant", "limit", "gap"]
        assert float(rows[1]["gap"]) == pytest.approx(0.1)

    def test_counterexample(self, tmp_path):
        out = tmp_path / "counter.csv"
        assert main(["gallery", "mixture", "--family", "exponential", "--demo", "counterexample", "--out", str(out)]) == 0
        rows = read_csv_rows(out)
        assert {(r["n"], r["m"]) for r in rows} >= {("1", "50"), ("10", "5000")}
        assert all(float(r["ratio"]) <= float(r["bound"]) * (1 + 1e-12) for r in rows)

    def test_counterexample_is_exponential_only(self, capsys):
        assert main(["gallery", "mixture", "--family", "gaussian", "--demo", "counterexample"]) == 4

    def test_quench_infinities(self, tmp_path):
        out = tmp_path / "quench.csv"
        assert main(["gallery", "mixture", "--family", "geometric", "--demo", "quench", "--n-list", "3", "--out", str(out)]) == 0
        row = read_csv_rows(out)[0]
        assert row["log_eta0_k_lt_n_over_n"] == "-inf"

    def test_unknown_kind(self, capsys):
        assert main(["gallery", "cauchy"]) == 4
        assert _error(capsys)["error"] == "ConfigError"


class TestConfigHash:
    def _digest(self, tmp_path, name, *extra):
        out = tmp_path / name
        assert main(["gallery", "gaussian", "--n-list", "1,2", "--out", str(out), *extra]) == 0
        return _header(out)

    def test_output_path_does_not_change_the_hash(self, tmp_path):
        assert self._digest(tmp_path, "a.csv") == self._digest(tmp_path, "b.csv", "--log-level", "debug")

    def test_inputs_change_the_hash(self, tmp_path):
        assert self._digest(tmp_path, "a.csv") != self._digest(tmp_path, "b.csv", "--seed", "7")

    def test_bad_log_level(self, capsys):
        assert main(["gallery", "gaussian", "--log-level", "loud"]) == 4


@pytest.mark.slow
class TestVerify:
    def test_all_suites_pass(self, tmp_path):
        out = tmp_path / "verify.json"
        assert main(["verify", "--seed", "11", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["passed"] and payload["seed"] == 11
        assert set(payload["suites"]) == {
            "prcp", "sandwich", "kernel", "ipf", "one_marginal", "rounding", "envelope", "gallery",
        }
        assert all(math.isfinite(s["max_residual"]) for s in payload["suites"].values())
