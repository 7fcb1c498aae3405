import csv
import io
import math
import subprocess
import sys

import pytest

from ultraparabolic.cli import main


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_table1_stdout(capsys):
    assert main(["table1", "--m", "1e2"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 5
    assert rows[-1]["approx"] == "0.5698263001"
    assert rows[-1]["label"] == "m=1e2"


def test_table1_file(tmp_path):
    out = tmp_path / "t1.csv"
    assert main(["table1", "--out", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert len(rows) == 10
    assert float(rows[9]["approx"]) == pytest.approx(0.9999997239, abs=1e-10)


def test_table1_supplementary(capsys):
    assert main(["table1", "--m", "100", "--supplementary"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert sum(r["label"].endswith("supplementary") for r in rows) == 5


@pytest.mark.parametrize("argv", [["table1", "--K", "101"], ["table1", "--p", "0.5"]])
def test_table1_bad_grid(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_table1_unwritable(tmp_path, capsys):
    assert main(["table1", "--out", str(tmp_path / "no" / "x.csv")]) == 1
    assert "x.csv" in capsys.readouterr().err


def test_diverge(tmp_path, capsys):
    prof = tmp_path / "prof.csv"
    assert main(["diverge", "--m", "1,2,3,40", "--profiles", str(prof)]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert float(rows[0]["norm"]) == pytest.approx(2.066365677061246, rel=1e-9)
    assert rows[3]["norm"] == "inf"
    assert float(rows[3]["log_norm"]) == pytest.approx(800 + math.log(math.sqrt(math.pi / 3200)), rel=1e-9)
    header = prof.read_text().splitlines()[0]
    assert header == "x,exact,m=1,m=2,m=3"


def test_sweep(capsys):
    assert main(["sweep", "--point", "1,1", "--m", "1e2,1e4,1e6"]) == 0
    out = capsys.readouterr().out
    assert "slope=1.000000" in out
    assert out.startswith("m,eps,error\n100,")


def test_sweep_bad_point(capsys):
    with pytest.raises(SystemExit):
        main(["sweep", "--point", "0.5"])


def test_solve_modes_and_values(tmp_path, capsys):
    problem = tmp_path / "p.ini"
    problem.write_text("[problem]\nbuiltin = benchmark\n")
    assert main(["solve", "--problem", str(problem), "--eps", "1e-300", "--p", "10",
                 "--t", "0.5", "--s", "0.5"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert rows[0]["n"] == "1"
    assert float(rows[0]["coefficient"]) == pytest.approx(math.exp(-1.5), rel=1e-9)
    assert main(["solve", "--problem", str(problem), "--eps", "0.0125331413731550", "--p", "10",
                 "--t", "0", "--s", "0", "--x", "1.5707963267948966"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert float(rows[0]["value"]) == pytest.approx(0.5698263001, abs=1e-9)


def test_solve_warns_on_incompatible_data(tmp_path, capsys):
    problem = tmp_path / "p.ini"
    problem.write_text("[problem]\nhorizon = 1\n[phi]\n1 = const 1\n[psi]\n1 = const 0\n")
    assert main(["solve", "--problem", str(problem), "--eps", "0.1", "--p", "10",
                 "--t", "0.5", "--s", "0.2"]) == 0
    assert "warning" in capsys.readouterr().err


def test_solve_missing_problem(tmp_path, capsys):
    assert main(["solve", "--problem", str(tmp_path / "none.ini"), "--eps", "0.1", "--p", "10",
                 "--t", "0", "--s", "0"]) == 1
    assert "none.ini" in capsys.readouterr().err


def test_solve_rejects_short_filter(tmp_path, capsys):
    problem = tmp_path / "p.ini"
    problem.write_text("[problem]\nhorizon = 2\n")
    assert main(["solve", "--problem", str(problem), "--eps", "0.1", "--p", "1.5",
                 "--t", "0", "--s", "0"]) == 1


def test_profile_and_surface(capsys):
    assert main(["profile", "--m", "1e10", "--K", "20"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 21
    assert main(["surface", "--m", "1e2", "--M", "4"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 25


def test_console_module():
    proc = subprocess.run([sys.executable, "-m", "ultraparabolic", "table1", "--m", "1e10"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.count("m=1e10") == 5
