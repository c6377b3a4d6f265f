import csv
import math

import pytest

import etdsplit.cli as cli
from etdsplit.errors import DivergenceError


def test_converge_writes_csv_and_table(tmp_path, capsys):
    out = tmp_path / "report.csv"
    code = cli.main(["converge", "--problem", "enzyme", "--scheme", "etdrk4p22if",
                     "--k0", "0.1", "--levels", "2", "--mode", "self",
                     "--coupling", "fixed_h", "--h", "0.05",
                     "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.err == ""
    assert "scheme=etdrk4p22if" in captured.out
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(raw.decode("utf-8").splitlines()))
    assert len(rows) == 2
    assert rows[0]["order"] == ""
    assert float(rows[0]["error"]) == pytest.approx(4.2433e-7, rel=0.05)
    assert float(rows[1]["order"]) == pytest.approx(5.87, abs=0.1)
    assert rows[0]["scheme"] == "etdrk4p22if" and rows[0]["problem"] == "enzyme"


def test_converge_single_level_empty_order(tmp_path):
    out = tmp_path / "one.csv"
    code = cli.main(["converge", "--problem", "enzyme", "--scheme", "etdrk4p22if",
                     "--k0", "0.1", "--levels", "1", "--mode", "self",
                     "--coupling", "fixed_h", "--m", "19", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 1 and rows[0]["order"] == ""


def test_converge_plot_out(tmp_path):
    plot = tmp_path / "plot.csv"
    code = cli.main(["converge", "--problem", "enzyme", "--scheme", "etdrk4p22if",
                     "--k0", "0.1", "--levels", "2", "--mode", "self",
                     "--coupling", "fixed_h", "--m", "19",
                     "--plot-out", str(plot)])
    assert code == 0
    rows = list(csv.DictReader(plot.read_text().splitlines()))
    assert [r["k"] for r in rows] == ["0.10000000000000001", "0.050000000000000003"]
    assert all(float(r["error"]) > 0 for r in rows)


def test_converge_missing_required_flags(capsys):
    code = cli.main(["converge", "--problem", "enzyme"])
    assert code == 1
    assert "k0" in capsys.readouterr().err


def test_bad_flag_values_exit_one():
    with pytest.raises(SystemExit) as exc:
        cli.main(["converge", "--problem", "not_a_problem", "--scheme",
                  "etdrk4p22if", "--k0", "0.1"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["table", "99"])
    assert exc.value.code == 1


def test_converge_numerical_failure_exit_two(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise DivergenceError("level 1 (k = 0.05): non-finite state after step 3")
    monkeypatch.setattr(cli, "run_study", boom)
    code = cli.main(["converge", "--problem", "enzyme", "--scheme", "etdrk4p22if",
                     "--k0", "0.1", "--mode", "self", "--coupling", "fixed_h",
                     "--m", "19"])
    assert code == 2
    assert "level 1" in capsys.readouterr().err


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text(
        "# study configuration\n"
        "problem = enzyme\n"
        "scheme = etdrk4p22if\n"
        "k0 = 0.1\n"
        "levels = 3\n"
        "mode = self\n"
        "coupling = fixed_h\n"
        "m = 19\n")
    out = tmp_path / "merged.csv"
    # flag overrides the file's levels = 3
    code = cli.main(["converge", "--config", str(cfg), "--levels", "1",
                     "--out", str(out)])
    assert code == 0
    assert len(list(csv.DictReader(out.read_text().splitlines()))) == 1


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("problem enzyme\n")
    assert cli.main(["converge", "--config", str(bad)]) == 1
    bad.write_text("planet = mars\n")
    assert cli.main(["converge", "--config", str(bad)]) == 1
    assert cli.main(["converge", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_solve_t_zero_echoes_initial(tmp_path):
    out = tmp_path / "field.csv"
    code = cli.main(["solve", "--problem", "model_dirichlet", "--m", "9",
                     "--T", "0", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 81
    # node values are cos(x)cos(y)
    for rec in rows[:5]:
        x, y, u = (float(rec[c]) for c in ("x", "y", "u"))
        assert u == pytest.approx(math.cos(x) * math.cos(y), rel=1e-12)


def test_solve_stdout_and_max_abs(capsys):
    # final-time field peak matches the decayed exact amplitude
    code = cli.main(["solve", "--problem", "model_neumann", "--m", "159",
                     "--k", "0.0125", "--T", "1"])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.err == ""
    rows = list(csv.DictReader(captured.out.splitlines()))
    assert len(rows) == 161 * 161
    max_abs = max(abs(float(r["u"])) for r in rows)
    assert abs(max_abs - math.exp(-3.0)) <= 3e-9


def test_solve_brusselator_two_species_columns(tmp_path):
    out = tmp_path / "bruss.csv"
    code = cli.main(["solve", "--problem", "brusselator", "--m", "4",
                     "--T", "0", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert set(rows[0]) == {"x", "y", "u1", "u2"}


def test_solve_snapshots(tmp_path):
    out = tmp_path / "run.csv"
    code = cli.main(["solve", "--problem", "enzyme", "--m", "9", "--k", "0.25",
                     "--T", "1", "--out", str(out), "--snapshot-every", "2"])
    assert code == 0
    assert (tmp_path / "run_step000002.csv").exists()
    assert (tmp_path / "run_step000004.csv").exists()
    assert out.exists()


def test_solve_smoothed_nonsmooth_bounds(tmp_path):
    out = tmp_path / "smooth.csv"
    code = cli.main(["solve", "--problem", "enzyme_nonsmooth", "--h", "0.05",
                     "--k", "0.1", "--T", "1", "--smoothing-steps", "3",
                     "--out", str(out)])
    assert code == 0
    vals = [float(r["u"]) for r in csv.DictReader(out.read_text().splitlines())]
    assert min(vals) >= -1e-6 and max(vals) <= 1.0 + 1e-6


def test_solve_validations(capsys):
    assert cli.main(["solve", "--problem", "enzyme"]) == 1           # no grid
    assert cli.main(["solve", "--problem", "enzyme", "--m", "9"]) == 1  # no k
    assert cli.main(["solve", "--problem", "enzyme", "--m", "9", "--h", "0.1",
                     "--k", "0.1"]) == 1                              # both m and h
    assert cli.main(["solve", "--problem", "enzyme", "--m", "9", "--k", "0.25",
                     "--snapshot-every", "2"]) == 1                   # snapshots need out


def test_table_preset_runs(capsys):
    code = cli.main(["table", "3", "--levels", "2"])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.err == ""
    assert "reference" in captured.out
    assert "etdrk4p22if" in captured.out and "etdrk4p22" in captured.out
    # reproduced values sit on top of the reference ones
    for line in captured.out.splitlines():
        if "%" in line:
            dev = float(line.split("%")[0].rsplit(None, 1)[-1])
            assert dev <= 10.0


def test_table_notes_mention_out_of_scope_columns(capsys):
    code = cli.main(["table", "A3", "--levels", "1"])
    captured = capsys.readouterr()
    assert code == 0
    assert "ETDRDP-IF" in captured.out
    assert "out of scope" in captured.out
