import csv
import io
import json
import subprocess
import sys

import pytest

from kostlan import cli


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moments_csv(capsys):
    code, out, _ = run(["moments", "--degrees", "16", "--samples", "2000", "--seed", "7", "--kmax", "2"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0])[:8] == ["d", "N", "k", "rawMoment", "rawStderr", "centralMoment",
                                 "centralStderr", "fallingFactorial"]
    assert rows[0]["seed"] == "7"
    assert abs(float(rows[0]["rawMoment"]) - 4) < 3 * float(rows[0]["rawStderr"])
    assert code == 0


def test_kacrice_example(capsys):
    code, out, _ = run(["kacrice", "--degrees", "4", "--grid", "512", "--kmax", "1"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert abs(float(rows[0]["integral"]) - 2) < 2e-6


def test_usage_errors(capsys, tmp_path):
    assert run(["moments", "--degrees", ""], capsys)[0] == 1
    assert run(["moments", "--samples", "-3"], capsys)[0] == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["nosuch"])
    assert e.value.code == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"degrees": [16,\n  }')
    code, _, err = run(["moments", "--config", str(bad)], capsys)
    assert code == 1 and "line 2" in err
    bad.write_text('{"degres": [16]}')
    code, _, err = run(["moments", "--config", str(bad)], capsys)
    assert code == 1 and "degres" in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"degrees": [9], "samples": 300, "kmax": 1, "seed": 3}))
    code, out, _ = run(["moments", "--config", str(cfg), "--seed", "4"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["d"] == "9" and rows[0]["N"] == "300" and rows[0]["seed"] == "4"


def test_deterministic_across_threads(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["moments", "--degrees", "25", "--samples", "1200", "--seed", "5"]
    run(base + ["--out", str(a), "--threads", "1"], capsys)
    run(base + ["--out", str(b), "--threads", "2"], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_json_report_and_plot(tmp_path, capsys):
    out, svg = tmp_path / "r.json", tmp_path / "p.svg"
    code, _, _ = run(["bergman", "--format", "json", "--out", str(out), "--plot", str(svg)], capsys)
    doc = json.loads(out.read_text())
    assert code == 0 and doc["passed"]
    assert doc["defaults"]["bergmanGrid"] == 50
    assert all("tolerance" in c for c in doc["checks"])
    assert all(r["seed"] == 0 for r in doc["tables"]["bergman"])
    assert svg.read_text().startswith("<svg")


def test_failing_check_exit_3(capsys, tmp_path):
    # a repeated degree gives equal deviation fractions, so "strictly decreasing" fails
    out = tmp_path / "r.csv"
    code, _, err = run(["concentration", "--degrees", "25,25", "--samples", "200",
                        "--out", str(out)], capsys)
    assert code == 3 and "decreasing" in err
    assert out.read_text().startswith("d,N,c")


def test_numerical_failure_exit_2(capsys, monkeypatch):
    def boom(cfg, rep):
        raise FloatingPointError("overflow")
    monkeypatch.setitem(cli.COMMANDS, "bergman", boom)
    assert run(["bergman"], capsys)[0] == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "kostlan", "bergman", "--degrees", "100,400"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("d,radius")
