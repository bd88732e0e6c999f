import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from liebau.cli import main
from liebau.config import dump_config, load_config, parse_config
from liebau.errors import ConfigError

FIXTURES = Path(__file__).parent / "fixtures"
EXAMPLE_MODEL = "a=1.6,b=99,c=1.49,e=1.54,T=1"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def kv(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out


class TestExitCodes:
    @pytest.mark.parametrize("name,code,verdict", [("existence", 0, "existence"),
                                                   ("nonexistence", 2, "nonexistence"),
                                                   ("undecided", 1, "undecided")])
    def test_fixture(self, capsys, tmp_path, name, code, verdict):
        got, out, _ = run(capsys, "certify", "--config", FIXTURES / f"{name}.cfg", "--out", tmp_path)
        assert got == code
        assert kv(tmp_path / "report.kv")["verdict"] == verdict
        assert (tmp_path / "report.txt").read_text() == out

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "liebau.cli", "certify", "--config",
                               str(FIXTURES / "nonexistence.cfg")], capture_output=True, text=True)
        assert proc.returncode == 2 and "verdict = nonexistence" in proc.stdout

    def test_kv_deterministic(self, capsys, tmp_path):
        for d in ("a", "b"):
            run(capsys, "certify", "--config", FIXTURES / "existence.cfg", "--out", tmp_path / d)
        assert (tmp_path / "a" / "report.kv").read_bytes() == (tmp_path / "b" / "report.kv").read_bytes()


class TestConfig:
    @pytest.mark.parametrize("text,lineno", [
        ("[problem]\na = 0\nbogus = 1\n", 3),
        ("[problem]\na = 0\na = 1\n", 3),
        ("a = 0\n", 1),
        ("[nowhere]\n", 1),
        ("[problem]\n\n# c\njunk\n", 4),
    ])
    def test_parse_errors(self, text, lineno):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.lineno == lineno
        assert str(info.value).startswith(f"line {lineno}: ")

    def test_h0_error_points_at_line(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[problem]\na = 0\nT = 1\nr = 1\ns = 1\nalpha = 0.5\nbeta = 0.5\n")
        code, _, err = run(capsys, "certify", "--config", cfg)
        assert code == 1 and "ConfigError" in err and "line " in err

    def test_dump_roundtrip(self, capsys, tmp_path):
        code, out, _ = run(capsys, "certify", "--config", FIXTURES / "undecided.cfg", "--m", 1.5,
                           "--dump-config")
        assert code == 0
        again = parse_config(out)
        orig = load_config(str(FIXTURES / "undecided.cfg"))
        assert float(again.get("certify", "m")) == 1.5
        for key in ("a", "T", "s", "alpha", "beta"):
            assert float(again.get("problem", key)) == float(orig.get("problem", key))
        path = tmp_path / "dumped.cfg"
        path.write_text(out)
        code2, out2, _ = run(capsys, "certify", "--config", path, "--dump-config")
        assert code2 == 0 and out2 == out

    def test_table_path_absolute_in_dump(self):
        text = dump_config(load_config(str(FIXTURES / "undecided.cfg")))
        line = next(ln for ln in text.splitlines() if ln.startswith("r_table"))
        assert Path(line.split("=", 1)[1].strip()).is_absolute()


class TestGreen:
    def test_example_constants(self, capsys, tmp_path):
        code, out, _ = run(capsys, "green", "--a", 1.6, "--m", 0.7, "--T", 1, "--out", tmp_path, "--grid", 20)
        assert code == 0
        vals = kv(tmp_path / "green_constants.kv")
        assert vals["regime"] == "UnderDamped"
        assert float(vals["coneConst"]) == pytest.approx(0.9414, abs=5e-4)
        assert float(vals["row_integral_rel_err"]) < 1e-6
        table = np.loadtxt(tmp_path / "green.csv", delimiter=",", skiprows=1)
        assert table.shape == (21 * 21, 3) and np.all(table[:, 2] > 0)

    def test_undamped(self, capsys, tmp_path):
        run(capsys, "green", "--a", 0, "--m", math.pi / 2, "--T", 1, "--out", tmp_path)
        vals = kv(tmp_path / "green_constants.kv")
        assert vals["regime"] == "Oscillatory"
        assert float(vals["coneConst"]) == pytest.approx(math.cos(math.pi / 4), rel=1e-12)

    def test_resonance(self, capsys):
        code, _, err = run(capsys, "green", "--a", 0, "--m", math.pi, "--T", 1)
        assert code == 1 and "ResonantOrBeyond" in err


class TestSolve:
    def test_example_csv(self, capsys, tmp_path):
        code, out, _ = run(capsys, "solve", "--config", FIXTURES / "existence.cfg", "--out", tmp_path)
        assert code == 0 and "localization.upper" in out
        data = np.loadtxt(tmp_path / "solution.csv", delimiter=",", skiprows=1)
        assert np.all(data[:, 1] >= 25.4189) and np.all(data[:, 1] <= 29)
        assert float(kv(tmp_path / "diagnostics.kv")["periodicity_defect"]) < 1e-8

    def test_both_methods(self, capsys, tmp_path):
        code, out, _ = run(capsys, "solve", "--problem", "a=0,T=1,r=2,s=1,alpha=0.25,beta=0.5",
                           "--m", 1.2, "--method", "both", "--x0", 10, "--out", tmp_path)
        assert code == 0 and "[picard]" in out and "[shooting]" in out
        a = np.loadtxt(tmp_path / "solution.csv", delimiter=",", skiprows=1)
        b = np.loadtxt(tmp_path / "solution_picard.csv", delimiter=",", skiprows=1)
        assert np.max(np.abs(a[:, 1] - 16)) < 1e-8 and np.max(np.abs(b[:, 1] - 16)) < 1e-8

    def test_negative_start(self, capsys, tmp_path):
        code, _, err = run(capsys, "solve", "--model", EXAMPLE_MODEL, "--x0", -1, "--out", tmp_path)
        assert code == 1 and "NegativeState" in err
        assert "error = NegativeState" in (tmp_path / "diagnostics.kv").read_text()


class TestReproduce:
    def test_default(self, capsys, tmp_path):
        code, out, _ = run(capsys, "reproduce-example", "--out", tmp_path)
        assert code == 0 and "[FAIL]" not in out
        vals = kv(tmp_path / "reproduce.kv")
        for name in ("corexist", "cor1", "cone_const", "H1", "H2", "solve", "condition_H_roots"):
            assert vals[name] == "PASS"

    def test_beyond_resonance(self, capsys):
        code, _, err = run(capsys, "reproduce-example", "--m", 3.3)
        assert code == 1 and "ResonantOrBeyond" in err

    def test_degenerate_slab(self, capsys):
        code, _, err = run(capsys, "reproduce-example", "--r1", 29)
        assert code == 1 and "SlabError" in err
