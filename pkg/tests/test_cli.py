import math

import pytest

from blowuplab.cli import (
    SWEEP_COLUMNS,
    main,
    read_report,
    run_experiment,
    sweep,
    write_report,
)
from blowuplab.config import parse_config
from blowuplab.errors import ConfigError
from blowuplab.solver import COLUMNS

REFERENCE = """\
[problem]
p = 2
q = 2
R = 1.0
n = 2
flux = exp_power

[solver]
u_stop = 9.0
record_every = 2
"""

TINY = """\
[problem]
p = 2
q = 2
R = 1.0
n = 2
flux = exp_power

[solver]
t_end = 1e-5
"""


@pytest.fixture(scope="module")
def ref_run(tmp_path_factory):
    """One full pipeline execution of the reference blow-up experiment."""
    config = parse_config(REFERENCE)
    out = tmp_path_factory.mktemp("ref")
    artifacts = run_experiment(config, out)
    return config, artifacts, read_report(artifacts.report)


class TestReportIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "report.txt"
        write_report({"a.x": 0.1, "a.ok": True, "b.note": "fine"}, path)
        entries = read_report(path)
        assert entries == {"a.x": "0.1", "a.ok": "true", "b.note": "fine"}

    def test_floats_survive_exactly(self, tmp_path):
        path = tmp_path / "report.txt"
        value = 0.010899422550334688
        write_report({"blowup.T_hat": value}, path)
        assert float(read_report(path)["blowup.T_hat"]) == value


class TestRunExperiment:
    def test_reference_run_passes(self, ref_run):
        _, artifacts, report = ref_run
        assert artifacts.exit_code == 0
        assert artifacts.status == "pass"
        assert report["overall.status"] == "pass"
        assert report["run.stop_reason"] == "blowup_threshold"

    def test_reference_run_rates(self, ref_run):
        _, _, report = ref_run
        assert float(report["blowup.T_hat"]) == pytest.approx(
            0.010899422550334688, rel=1e-9
        )
        assert float(report["rate.alpha_hat"]) <= 1.1
        assert float(report["rate.beta_hat"]) <= 1.1

    def test_artifact_files_exist(self, ref_run):
        _, artifacts, _ = ref_run
        assert artifacts.trajectory.exists()
        assert artifacts.report.exists()
        assert artifacts.config_echo.exists()

    def test_trajectory_header(self, ref_run):
        _, artifacts, _ = ref_run
        header = artifacts.trajectory.read_text().splitlines()[0]
        assert header == ",".join(COLUMNS)

    def test_config_echo_parses_back(self, ref_run):
        config, artifacts, _ = ref_run
        assert parse_config(artifacts.config_echo.read_text()) == config

    def test_repeat_runs_are_byte_identical(self, ref_run, tmp_path):
        config, artifacts, _ = ref_run
        again = run_experiment(config, tmp_path)
        assert again.trajectory.read_bytes() == artifacts.trajectory.read_bytes()
        assert again.report.read_bytes() == artifacts.report.read_bytes()

    def test_time_limited_run_is_inconclusive(self, tmp_path):
        artifacts = run_experiment(parse_config(TINY), tmp_path)
        report = read_report(artifacts.report)
        assert artifacts.exit_code == 0
        assert artifacts.status == "inconclusive"
        assert report["run.stop_reason"] == "time_limit"
        for name in ("rate", "boundary", "dominance"):
            assert report[f"{name}.status"].startswith("inconclusive")
        assert math.isnan(float(report["blowup.T_hat"]))

    def test_under_resolved_run_fails_with_diagnostic(self, tmp_path):
        config = parse_config(REFERENCE.replace("record_every = 2", "N = 16"))
        artifacts = run_experiment(config, tmp_path)
        assert artifacts.exit_code == 2
        report = read_report(artifacts.report)
        assert report["rate.status"].startswith("fail")


@pytest.fixture(scope="module")
def pq_sweep(tmp_path_factory):
    config = parse_config(REFERENCE + "\n[sweep]\np = 2, 3\n")
    out = tmp_path_factory.mktemp("sweep")
    summary = sweep(config, out)
    return config, out, summary.read_text()


class TestSweep:
    def test_one_row_per_point(self, pq_sweep):
        _, out, text = pq_sweep
        lines = text.splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 3
        assert (out / "run_000" / "report.txt").exists()
        assert (out / "run_001" / "report.txt").exists()

    def test_rate_columns_within_family_bounds(self, pq_sweep):
        _, _, text = pq_sweep
        rows = [line.split(",") for line in text.splitlines()[1:]]
        by_p = {float(row[0]): row for row in rows}
        alpha = SWEEP_COLUMNS.index("alpha_hat")
        # alpha = (p + 1) / (pq - 1): 1 at p = q = 2, 0.8 at p = 3, q = 2
        assert float(by_p[2.0][alpha]) <= 1.1
        assert float(by_p[3.0][alpha]) <= 0.88

    def test_parallel_sweep_is_byte_identical(self, pq_sweep, tmp_path):
        config, _, text = pq_sweep
        summary = sweep(config, tmp_path, max_parallel=2)
        assert summary.read_text() == text

    def test_flux_axis_routes_all_families(self, tmp_path):
        config = parse_config(
            TINY + "\n[sweep]\nflux = exp_power, power, exp_linear\n"
        )
        summary = sweep(config, tmp_path)
        rows = [line.split(",") for line in summary.read_text().splitlines()[1:]]
        tag = SWEEP_COLUMNS.index("flux")
        assert [row[tag] for row in rows] == ["exp_power", "power", "exp_linear"]

    def test_invalid_point_keeps_its_row(self, tmp_path):
        # p = 0.5 violates the power-family constraint; the sweep goes on
        config = parse_config(
            TINY.replace("flux = exp_power", "flux = power")
            + "\n[sweep]\np = 0.5, 2\n"
        )
        rows = sweep(config, tmp_path).read_text().splitlines()[1:]
        status = SWEEP_COLUMNS.index("status")
        cells = [row.split(",") for row in rows]
        assert cells[0][status].startswith("invalid")
        assert cells[1][status] == "inconclusive"
        # a status cell must not smuggle in extra CSV separators
        assert all(len(row.split(",")) == len(SWEEP_COLUMNS) for row in rows)

    def test_failed_run_keeps_its_row(self, tmp_path):
        config = parse_config(TINY + "\n[sweep]\nN = 8, 201\n")
        rows = sweep(config, tmp_path).read_text().splitlines()[1:]
        status = SWEEP_COLUMNS.index("status")
        assert rows[0].split(",")[status] == "error: GridTooCoarse"
        assert rows[1].split(",")[status] == "inconclusive"

    def test_run_cap(self, tmp_path):
        config = parse_config(TINY + "\n[sweep]\np = 2, 3\nmax_runs = 1\n")
        with pytest.raises(ConfigError, match="cap is 1"):
            sweep(config, tmp_path)


class TestMain:
    def write(self, tmp_path, text, name="exp.ini"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    def test_run_verb(self, tmp_path, capsys):
        path = self.write(tmp_path, TINY)
        code = main(["run", path, "--output-dir", str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert code == 0
        assert "stop: time_limit" in out
        assert "overall: inconclusive" in out

    def test_run_verb_quiet(self, tmp_path, capsys):
        path = self.write(tmp_path, TINY)
        code = main(["run", path, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert code == 0
        assert capsys.readouterr().out == ""

    def test_run_verb_check_failure_exit(self, tmp_path):
        path = self.write(tmp_path, REFERENCE.replace("record_every = 2", "N = 16"))
        code = main(["run", path, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert code == 2

    def test_sweep_verb(self, tmp_path, capsys):
        path = self.write(tmp_path, TINY + "\n[sweep]\np = 2, 3\n")
        code = main(["sweep", path, "--output-dir", str(tmp_path / "out"),
                     "--max-parallel", "2"])
        out = capsys.readouterr().out
        assert code == 0  # inconclusive rows are not failures
        assert out.splitlines()[0] == ",".join(SWEEP_COLUMNS)

    def test_validate_verb(self, tmp_path, capsys):
        path = self.write(tmp_path, REFERENCE)
        code = main(["validate", path])
        out = capsys.readouterr().out
        assert code == 0
        assert "[problem]" in out
        assert "initial data: pass" in out

    def test_missing_key_is_operational_error(self, tmp_path, capsys):
        path = self.write(tmp_path, "[problem]\np = 2\n")
        code = main(["run", path, "--output-dir", str(tmp_path / "out")])
        assert code == 1
        assert "missing required key" in capsys.readouterr().err

    def test_unreadable_config_is_operational_error(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "none.ini")])
        assert code == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_oracle_ode_on_exact_orbit(self, capsys):
        code = main(["oracle", "ode", "--p", "2", "--q", "2", "--c", "0.5"])
        out = capsys.readouterr().out
        assert code == 0
        assert "verdict: pass" in out
        alpha_fit = float(out.split("alpha_fit = ")[1].splitlines()[0])
        assert alpha_fit == pytest.approx(1.0, abs=1e-3)

    def test_oracle_ode_shallow_horizon_is_an_error(self, capsys):
        code = main(["oracle", "ode", "--p", "2", "--q", "2", "--c", "0.5",
                     "--stop-frac", "0.99"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_oracle_jump_verb(self, capsys):
        code = main(["oracle", "jump", "--R", "1.0", "--m", "24"])
        out = capsys.readouterr().out
        assert code == 0
        assert "verdict: pass" in out
        jump = float(out.split("jump = ")[1].splitlines()[0])
        assert jump == pytest.approx(-0.5, abs=0.05)
