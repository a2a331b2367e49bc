"""The command-line interface: schemas, exit codes, reproducibility."""

import json

import numpy as np
import pytest

from thetadiag import cli
from thetadiag.cli import EXIT_PASS, EXIT_USAGE, _parse_ladder, run
from thetadiag.theta import PeriodMatrix


@pytest.fixture
def tau_file(tmp_path):
    tau = PeriodMatrix(np.diag([1.0j, 1.2j, 1.5j]))
    path = tmp_path / "tau.json"
    path.write_text(json.dumps(tau.to_json()))
    return str(path)


def run_json(argv, tmp_path, name="report.json"):
    out = tmp_path / name
    code = run(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


class TestPlumbing:
    def test_ladder_power_syntax(self):
        assert _parse_ladder("2^-3..2^-5") == [0.125, 0.0625, 0.03125]

    def test_ladder_list_syntax(self):
        assert _parse_ladder("0.1,0.05") == [0.1, 0.05]

    def test_ladder_rejects_garbage(self):
        with pytest.raises(cli.UsageError):
            _parse_ladder("3^-1..3^-2")

    def test_report_envelope(self, tmp_path):
        code, report = run_json(["char", "classify", "[00;00]"], tmp_path)
        assert code == EXIT_PASS
        assert report["schema"] == 1
        assert report["seed"] == 0
        assert "timestamp" in report and report["pass"] is True

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run(["no-such-command"])
        assert exc.value.code == EXIT_USAGE


class TestChar:
    def test_classify(self, tmp_path):
        code, report = run_json(["char", "classify", "[110;110]"], tmp_path)
        assert code == EXIT_PASS
        (check,) = report["checks"]
        assert check["parity"] == "even" and check["l"] == 2

    def test_malformed_characteristic(self):
        assert run(["char", "classify", "[12;00]"]) == EXIT_USAGE


class TestOrbit:
    def test_even_orbit_g3(self, tmp_path):
        code, report = run_json(
            ["orbit", "--g", "3", "--group", "Gg", "--seed-char", "[000;000]"],
            tmp_path,
        )
        assert code == EXIT_PASS
        (check,) = report["checks"]
        assert check["orbit_size"] == 36

    def test_stab_orbit(self, tmp_path):
        code, report = run_json(
            ["orbit", "--g", "3", "--group", "stab_diagonal",
             "--seed-char", "[110;110]"],
            tmp_path,
        )
        assert code == EXIT_PASS
        (check,) = report["checks"]
        assert check["orbit_size"] == 9  # C(3,2) * 3

    def test_genus_mismatch(self):
        assert run(["orbit", "--g", "3", "--seed-char", "[00;00]"]) == EXIT_USAGE


class TestThetaEval:
    def test_constant(self, tmp_path, tau_file):
        code, report = run_json(
            ["theta-eval", "--tau", tau_file, "--char", "[000;000]"], tmp_path
        )
        assert code == EXIT_PASS
        re, im = report["checks"][0]["value"]
        assert re > 1.0 and abs(im) < 1e-12

    def test_derivative_flag(self, tmp_path, tau_file):
        code, report = run_json(
            ["theta-eval", "--tau", tau_file, "--char", "[100;100]",
             "--deriv", "1,0,0"],
            tmp_path,
        )
        assert code == EXIT_PASS
        re, im = report["checks"][0]["value"]
        assert abs(complex(re, im)) > 0

    def test_missing_file(self):
        assert run(["theta-eval", "--tau", "/no/such.json",
                    "--char", "[00;00]"]) == EXIT_USAGE

    def test_wrong_genus(self, tau_file):
        assert run(["theta-eval", "--tau", tau_file,
                    "--char", "[00;00]"]) == EXIT_USAGE


class TestVerificationJobs:
    def test_expand_verify(self, tmp_path):
        code, report = run_json(
            ["expand-verify", "--g", "4", "--seed", "1", "--directions", "2"],
            tmp_path,
        )
        assert code == EXIT_PASS
        assert len(report["checks"]) == 4  # l in {2, 4}, 2 directions each

    def test_grad_verify(self, tmp_path):
        code, report = run_json(
            ["grad-verify", "--g", "4", "--seed", "1", "--directions", "1"],
            tmp_path,
        )
        assert code == EXIT_PASS

    def test_hess_minor_single(self, tmp_path):
        code, report = run_json(
            ["hess-minor", "--g", "4", "--seed", "1", "--which", "D123"],
            tmp_path,
        )
        assert code == EXIT_PASS

    def test_loci_test(self, tmp_path):
        code, report = run_json(["loci-test", "--g", "3", "--seed", "1"], tmp_path)
        assert code == EXIT_PASS

    def test_loci_test_with_tau(self, tmp_path, tau_file):
        code, report = run_json(["loci-test", "--tau", tau_file], tmp_path)
        assert code == EXIT_PASS
        labels = [c["label"] for c in report["checks"]]
        assert any("diagonal-orbit" in x for x in labels)


class TestFormatsAndReproducibility:
    def test_csv_format(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = run(["char", "classify", "[00;00]", "--format", "csv",
                    "--out", str(out)])
        assert code == EXIT_PASS
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("label,pass")

    def test_report_all_reproducible(self, tmp_path):
        _, first = run_json(["report-all", "--g", "4", "--seed", "7"],
                            tmp_path, "a.json")
        _, second = run_json(["report-all", "--g", "4", "--seed", "7"],
                             tmp_path, "b.json")
        first.pop("timestamp")
        second.pop("timestamp")
        assert first == second

    def test_report_all_seed_changes_data(self, tmp_path):
        _, first = run_json(["report-all", "--g", "4", "--seed", "7"],
                            tmp_path, "a.json")
        _, second = run_json(["report-all", "--g", "4", "--seed", "8"],
                             tmp_path, "b.json")
        first.pop("timestamp")
        second.pop("timestamp")
        assert first != second
        assert first["pass"] and second["pass"]
