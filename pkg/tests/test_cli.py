import json

import pytest

from capres.cli import main, read_placement


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_solve_eo_json(capsys):
    assert main(["solve", "--network", "syn7", "--algo", "eo", "--price", "100", "--seed", "1", "--fe-budget", "500", "--json"]) == 0
    rep = _json(capsys)
    assert rep["feasible"] is True
    assert rep["algorithm"] == "eo"
    assert rep["fe_used"] <= 500
    assert rep["annual_savings"] == pytest.approx(rep["base_annual_cost"] - rep["annual_cost"])


def test_solve_ma_repair_text(capsys):
    assert main(["solve", "--network", "syn7", "--algo", "ma+strtg1", "--fe-budget", "300"]) == 0
    out = capsys.readouterr().out
    assert "annual savings" in out and "feasible              yes" in out


def test_solve_band_mode_and_root(capsys):
    assert main(["solve", "--network", "syn7", "--resonance-mode", "band", "--allow-root", "--fe-budget", "200", "--json"]) == 0
    assert _json(capsys)["feasible"] is True


def test_check_exit_codes(tmp_path, capsys, bw33):
    from capres.resonance import feasibility_table

    table = feasibility_table(bw33, (150, 300, 450, 600, 900, 1200))
    good_bus = next(b for b in range(1, 33) if table[b, 2])
    bad_bus = next(b for b in range(1, 33) if not table[b, 2])
    good = tmp_path / "good.csv"
    good.write_text(f"bus,type\n{good_bus},2\n")
    bad = tmp_path / "bad.csv"
    bad.write_text(f"bus,type\n{bad_bus},2\n")
    assert main(["check", "--network", "bw33", "--placement", str(good)]) == 0
    capsys.readouterr()
    assert main(["check", "--network", "bw33", "--placement", str(bad), "--json"]) == 2
    assert _json(capsys)["violating_buses"] == [bad_bus]


@pytest.mark.parametrize(
    "rows, fragment",
    [("bus,type\n0,1\n", "substation"), ("bus,type\n99,1\n", "unknown bus"), ("bus,type\n3,x\n", "integer"), ("bus,type\n3,9\n", "0..6")],
)
def test_check_errors(tmp_path, capsys, rows, fragment):
    p = tmp_path / "p.csv"
    p.write_text(rows)
    assert main(["check", "--placement", str(p)]) == 1
    assert fragment in capsys.readouterr().err


def test_missing_network(capsys):
    assert main(["solve", "--network", "nowhere.csv"]) == 1
    assert "nowhere.csv" in capsys.readouterr().err


def test_read_placement(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("bus,type\n3,2\n7,6\n")
    assert read_placement(p, 10).tolist() == [0, 0, 0, 2, 0, 0, 0, 6, 0, 0]


def test_sweep(tmp_path, capsys):
    spec = tmp_path / "exp.cfg"
    spec.write_text("network = syn7\nalgorithms = eo, ma+strtg2\nprice_grid = 50, 100\nprice_scale_grid =\nruns = 2\nfe_budget = 200\n")
    out = tmp_path / "out"
    assert main(["sweep", "--spec", str(spec), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "energy_price" in text
    first = (out / "sweep.csv").read_bytes()
    assert main(["sweep", "--spec", str(spec), "--out", str(out)]) == 0
    assert (out / "sweep.csv").read_bytes() == first


def test_sweep_without_output(tmp_path, capsys):
    spec = tmp_path / "exp.cfg"
    spec.write_text("network = syn7\nruns = 1\n")
    assert main(["sweep", "--spec", str(spec)]) == 1
    assert "output" in capsys.readouterr().err
