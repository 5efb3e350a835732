import csv
import io

import pytest

from cpsres import cli
from cpsres.errors import ParseError, UnknownKey, ValidationError

BASE = """
command = threshold   # trailing comments are fine
a = 5
p = 0.2
lambda = z^2
rho = z^3
"""


def rows(path):
    return list(csv.reader(open(path)))


def test_parse_and_round_trip():
    cfg = cli.parse_config(BASE + "pmp = 0.1\nepsilon = 0.1;0.2\n")
    assert cfg.a == 5 and cfg.p_mp == 0.1 and cfg.epsilon == (0.1, 0.2)
    assert cli.parse_config(cli.dump_config(cfg)) == cfg


def test_round_trip_sweep_and_optimize():
    sw = cli.parse_config(BASE.replace("threshold", "sweep") + "axis = lambda\nvalues = z^2;1:0.5,2:0.5\n")
    assert cli.parse_config(cli.dump_config(sw)) == sw
    op = cli.parse_config("command = optimize\na = 3\np = 0.2\nrho = z^2\ndegrees = 2,3,4,5\n")
    assert cli.parse_config(cli.dump_config(op)) == op


def test_flags_override_file():
    cfg = cli.parse_config(BASE, {"p": "0.3", "lambda": "z^3"})
    assert cfg.p == 0.3 and cfg.lam.degrees == (3,)


def test_epsilon_range():
    assert cli._epsilons("0.1:0.3:0.1") == (0.1, 0.2, 0.3)


def test_parse_errors_carry_line():
    with pytest.raises(ParseError) as ei:
        cli.parse_config("command = de\na = 5\nthis line is broken\n")
    assert ei.value.line == 3
    with pytest.raises(UnknownKey):
        cli.parse_config("command = de\ngamma = 2\n")
    with pytest.raises(ValidationError):
        cli.parse_config(BASE + "p_mi = 1.5\n")
    with pytest.raises(ValidationError):
        cli.parse_config(BASE.replace("threshold", "sweep"))


def test_delay_rejects_losses():
    with pytest.raises(ValidationError):
        cli.parse_config(BASE.replace("threshold", "delay") + "pmc = 0.1\ndelay_slots = 2\n")


def test_threshold_to_file(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert cli.main(["threshold", "--a", "3", "--p", "0.8", "--lambda", "z^2",
                     "--rho", "z^3", "--out", str(out)]) == 0
    r = rows(out)
    assert r[0] == ["epsilon_max", "bracket_lo", "bracket_hi", "epsilon_s", "delay_slots"]
    assert abs(float(r[1][0]) - 0.1002) <= 0.003
    assert "epsilon_max=" in capsys.readouterr().out


def test_de_to_stdout(capsys):
    assert cli.main(["de", "--a", "5", "--p", "0.2", "--lambda", "z^2", "--rho", "z^3",
                     "--epsilon", "0.1"]) == 0
    out = capsys.readouterr()
    lines = out.out.strip().splitlines()
    assert lines[0] == "iteration_or_slot,density"
    assert lines[1] == "0,0.1"
    assert lines[2].startswith("1,0.0599277")
    assert "Healed" in out.err


def test_multi_epsilon_column(capsys):
    assert cli.main(["one2one", "--rho", "z^2", "--epsilon", "0.5;0.9"]) == 0
    r = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert r[0] == ["epsilon", "iteration_or_slot", "density"]
    assert {row[0] for row in r[1:]} == {"0.5", "0.9"}


def test_exit_code_validation(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code = cli.main(["threshold", "--a", "3", "--p", "0.8", "--lambda", "2:0.5,3:0.6",
                     "--rho", "z^3", "--out", str(out)])
    assert code == 1
    assert not out.exists()
    assert "lambda" in capsys.readouterr().err


def test_exit_code_numerical_leaves_no_file(tmp_path, monkeypatch):
    from cpsres.errors import NonMonotoneIndicator

    def boom(*args, **kw):
        raise NonMonotoneIndicator("synthetic")

    monkeypatch.setattr(cli, "epsilon_max", boom)
    out = tmp_path / "x.csv"
    code = cli.main(["threshold", "--a", "3", "--p", "0.8", "--lambda", "z^2",
                     "--rho", "z^3", "--out", str(out)])
    assert code == 2
    assert not out.exists()
    assert not any(tmp_path.iterdir())


def test_sweep_keeps_failed_rows(tmp_path):
    out = tmp_path / "s.csv"
    code = cli.main(["sweep", "--a", "5", "--p", "0.2", "--lambda", "z^2", "--rho", "z^3",
                     "--axis", "p", "--values", "0.2;0.1", "--out", str(out)])
    assert code == 0
    r = rows(out)
    assert r[0] == ["axis_value", "epsilon_s", "epsilon_max", "status"]
    assert [row[0] for row in r[1:]] == ["0.2", "0.1"]


def test_multi_document_config(tmp_path):
    cfg = tmp_path / "runs.cfg"
    cfg.write_text(
        "command = bound\na = 3\np = 0.8\nlambda = z^2\nout = b1.csv\n---\n"
        "command = bound\na = 5\np = 0.8\nlambda = z^2\nout = b2.csv\n"
    )
    assert cli.main(["--config", str(cfg), "--out-dir", str(tmp_path / "res")]) == 0
    assert rows(tmp_path / "res" / "b1.csv")[1][-1] == "0.0739645"
    assert rows(tmp_path / "res" / "b2.csv")[1][-1] == "0.0369822"


def test_simulate_small(tmp_path):
    out, graph, trace = tmp_path / "m.csv", tmp_path / "g.txt", tmp_path / "tr.csv"
    code = cli.main(["simulate", "--a", "3", "--p", "0.1", "--lambda", "1:0.5,2:0.5",
                     "--rho", "z^2", "--epsilon", "0.1", "--n-cyber", "300", "--trials", "3",
                     "--max-iters", "4", "--seed", "5", "--out", str(out),
                     "--graph-out", str(graph), "--trace-out", str(trace)])
    assert code == 0
    r = rows(out)
    assert r[0] == ["slot", "mean_fraction", "std", "trials"]
    assert len(r) == 1 + 5
    assert graph.exists() and trace.exists()


def test_missing_config_file(capsys):
    assert cli.main(["--config", "/nonexistent/file.cfg"]) == 1
