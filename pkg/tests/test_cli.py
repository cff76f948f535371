import csv
import io
import json
import subprocess
import sys

import pytest

from stable_supremum import cli

DENSITY = ["density", "--alpha", "sqrt:2", "--rho", "0.5"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGrid:
    def test_linear(self):
        assert cli.parse_grid("0:1:3") == [0.0, 0.5, 1.0]

    def test_log(self):
        assert cli.parse_grid("1:100:3:log") == pytest.approx([1, 10, 100])

    def test_list_and_single(self):
        assert cli.parse_grid("1,2.5") == [1.0, 2.5] and cli.parse_grid("3") == [3.0]

    @pytest.mark.parametrize("bad", ["1:2", "1:2:0", "a:b:c", "0:1:3:log", "1:2:3:cubic"])
    def test_malformed(self, bad):
        with pytest.raises(cli.ParseError):
            cli.parse_grid(bad)


class TestCommands:
    def test_density_csv(self, capsys):
        code, out, _ = run(capsys, *DENSITY, "--x", "0.1:10:50", "--eps", "1e-10", "--format", "csv")
        data = rows(out)
        assert code == 0 and len(data) == 50
        assert list(data[0])[:4] == ["x", "density", "est_error", "status"]
        assert float(data[0]["x"]) == 0.1 and float(data[-1]["x"]) == 10.0
        assert all(r["status"] == "Converged" for r in data)

    def test_classify_json(self, capsys):
        code, out, _ = run(capsys, "classify", "--alpha", "cf:[0;2,4,512]", "--depth", "10", "--format", "json")
        data = json.loads(out)
        assert code == 0 and {r["verdict"] for r in data} == {"InL-witnessed"}
        assert [(r["n"], r["q_n"], r["a_next"]) for r in data] == [(1, 2, 4), (2, 9, 512)]

    def test_classify_no_witness_row(self, capsys):
        code, out, _ = run(capsys, "classify", "--alpha", "sqrt:2")
        data = rows(out)
        assert code == 0 and len(data) == 1 and data[0]["verdict"] == "NotInL-to-depth" and data[0]["n"] == ""

    def test_cdf_and_quantile(self, capsys):
        _, out, _ = run(capsys, "quantile", "--alpha", "sqrt:2", "--rho", "0.5", "--u", "0.5")
        x = float(rows(out)[0]["x"])
        _, out, _ = run(capsys, "cdf", "--alpha", "sqrt:2", "--rho", "0.5", "--x", repr(x))
        assert float(rows(out)[0]["cdf"]) == pytest.approx(0.5, abs=1e-10)

    def test_lemma1_stride(self, capsys):
        code, out, _ = run(capsys, "lemma1", "--alpha", "sqrt:2", "--k-max", "1000", "--stride", "100")
        data = rows(out)
        assert code == 0 and [int(r["k"]) for r in data] == list(range(100, 1001, 100))

    def test_lemma1_shift_note(self, capsys):
        code, _, err = run(capsys, "lemma1", "--alpha", "sqrt:2", "--kind", "csc-shifted", "--shift", "0.3", "--k-max", "10")
        assert code == 0 and "no asymptotic guarantee" in err

    def test_table(self, capsys):
        code, out, _ = run(capsys, "table", "--alpha", "sqrt:2", "--rho", "0.5", "--kind", "b", "--T", "2")
        data = rows(out)
        assert code == 0 and list(data[0]) == ["m", "n", "sign", "log10_abs", "value_if_representable"]
        assert (data[0]["m"], data[0]["n"]) == ("0", "1")

    def test_montecarlo_reproducible_files(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
        args = ["montecarlo", "--alpha", "sqrt:2", "--rho", "0.5", "--x", "0.5,1,2",
                "--paths", "1000", "--steps", "100", "--seed", "42"]
        assert run(capsys, *args, "--out", "a.csv")[0] == 0
        assert run(capsys, *args, "--out", "b.csv")[0] == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv").read_text().splitlines()[0] == "x,F_emp,stderr,F_series"

    def test_verify_core(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "core", "--alpha", "sqrt:2", "--rho", "0.5")
        checks = {r["check"] for r in rows(out)}
        assert code == 0
        assert {"normalization", "residue_a00"} <= checks
        assert any(c.startswith("functional_eq") for c in checks) and any(c.startswith("cross_regime") for c in checks)

    def test_verify_failure_exit(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "run_core_checks", lambda p, e: [{"check": "x", "value": 1.0, "tolerance": 0.0, "pass": False}])
        assert run(capsys, "verify", "--alpha", "sqrt:2", "--rho", "0.5")[0] == 1


class TestExitCodes:
    def test_rational_alpha(self, capsys):
        code, _, err = run(capsys, "density", "--alpha", "cf:[1;2,2]", "--rho", "0.5", "--x", "1")
        assert code == 2 and err.startswith("error[E_DOMAIN]:") and err.count("\n") == 1

    def test_rho_out_of_range(self, capsys):
        assert run(capsys, "density", "--alpha", "sqrt:2", "--rho", "0.9", "--x", "1")[0] == 2

    def test_nonpositive_x(self, capsys):
        assert run(capsys, *DENSITY, "--x", "0")[0] == 2

    def test_parse_error(self, capsys):
        code, _, err = run(capsys, "density", "--alpha", "sqrt:", "--rho", "0.5")
        assert code == 2 and err.startswith("error[E_PARSE]:")

    def test_strict_not_converged(self, capsys):
        args = [*DENSITY, "--x", "20", "--mode", "convergent"]
        assert run(capsys, *args)[0] == 0
        assert run(capsys, *args, "--strict")[0] == 3

    def test_hypothesis_violation(self, capsys):
        alpha = "cf:[1;2,4,512,%d]" % 2**4610
        code, _, err = run(capsys, "density", "--alpha", alpha, "--rho", "0.5", "--x", "1", "--mode", "convergent")
        assert code == 4 and err.startswith("error[E_HYPOTHESIS]:") and len(err) < 300

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main([*DENSITY, "--bogus", "1"])
        assert info.value.code == 2

    def test_no_abbreviation(self):
        with pytest.raises(SystemExit):
            cli.main(["density", "--alph", "sqrt:2", "--rho", "0.5"])

    def test_decimal_note(self, capsys):
        code, _, err = run(capsys, "density", "--alpha", "1.4142135623", "--rho", "0.5", "--x", "1")
        assert code == 0 and err.startswith("note:")


class TestConfig:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# fixture\nalpha = sqrt:2\nrho=0.5\nx=1,2\neps=1e-2\nformat=json\n")
        code, out, _ = run(capsys, "cdf", "--config", str(cfg), "--eps", "1e-12")
        data = json.loads(out)
        assert code == 0 and [r["x"] for r in data] == [1.0, 2.0]
        assert all(r["est_error"] < 1e-11 for r in data)

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("alpha=sqrt:2\ncolour=blue\n")
        code, _, err = run(capsys, "density", "--config", str(cfg))
        assert code == 2 and "colour" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "density", "--config", str(tmp_path / "nope"))[0] == 2


def test_help_documents_every_flag():
    parser = cli.build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)
            if action.option_strings and action.dest != "help":
                assert action.help, (name, action.dest)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stable_supremum", "classify", "--alpha", "sqrt:2", "--format", "json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)[0]["verdict"] == "NotInL-to-depth"
