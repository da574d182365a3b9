import csv
import io
import json

import pytest

from kinrecip.cli import main

TINY_SIM = ["--G", "4", "--N", "4", "--T", "20", "--runs", "2", "--report-window", "5"]


def _table(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _header(path):
    return [ln for ln in path.read_text().splitlines() if ln.startswith("#")]


def test_spe_pd2_curve(tmp_path):
    out = tmp_path / "pd2.csv"
    assert main(["spe-pd2", "--r-points", "101", "--out", str(out)]) == 0
    rows = _table(out)
    assert len(rows) == 101
    assert float(rows[0]["omega_star"]) == pytest.approx(1 / 3, abs=1e-9)
    gap = [row for row in rows if 1 / 6 < float(row["r"]) < 1 / 3]
    assert gap and all(row["omega_star"] == "INF" for row in gap)
    assert all(float(row["omega_star"]) == 0 for row in rows if float(row["r"]) > 1 / 3)
    assert rows[25]["strategy_1"] == "AllC" and rows[25]["strategy_2"] == "AllD"
    assert rows[25]["payoff_2"] == "2.875"


def test_spe_header_records_config(tmp_path):
    out = tmp_path / "pdn.csv"
    assert main(["spe-pdn", "--r-points", "3", "--omega", "0.7", "--out", str(out)]) == 0
    header = _header(out)
    assert header[0].startswith("# kinrecip ")
    assert "# command = spe-pdn" in header
    assert "# omega = 0.7" in header
    assert "# b = 2,1.8,1.6,1.4,1.2" in header
    assert len(_table(out)[0]) == 5 + 4 * 5


def test_spe_pdn_gap_before_last_threshold(tmp_path):
    out = tmp_path / "pdn.csv"
    g4, g5 = 1 / 1.4, 1 / 1.2
    assert main(["spe-pdn", "--r-min", str(g4 + 1e-3), "--r-max", str(g5 - 1e-3),
                 "--r-points", "5", "--out", str(out)]) == 0
    assert all(row["omega_star"] == "INF" for row in _table(out))


def test_spe_pgg_json(tmp_path):
    out = tmp_path / "pgg.json"
    assert main(["spe-pgg", "--r-points", "2", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["command"] == "spe-pgg"
    assert doc["rows"][0]["omega_star"] == pytest.approx(0.76 / 1.36, abs=1e-12)
    assert doc["rows"][1]["regime"] == "High"


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("b = 2,2\nc = 1,1\nr-points = 2\nomega = 0.4\n")
    out = tmp_path / "o.csv"
    assert main(["spe-pd2", "--config", str(cfg), "--omega", "0.8", "--out", str(out)]) == 0
    header = _header(out)
    assert "# omega = 0.8" in header and "# b = 2,2" in header
    rows = _table(out)
    assert len(rows) == 2 and float(rows[0]["omega_star"]) == pytest.approx(0.5)


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(SystemExit) as exc:
        main(["spe-pd2", "--config", str(cfg)])
    assert exc.value.code != 0


def test_missing_config_file(tmp_path, capsys):
    assert main(["spe-pd2", "--config", str(tmp_path / "absent.cfg")]) != 0
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["spe-pd2", "--r-min", "0.5", "--r-max", "0.2"],
        ["spe-pd2", "--r-min", "-0.5"],
        ["spe-pd2", "--b", "3,3,3", "--c", "1,1,1"],
        ["simulate", "--G", "4", "--N", "5", "--T", "20", "--runs", "2", "--report-window", "5"],
    ],
)
def test_invalid_input_exits_nonzero(argv, capsys):
    assert main(argv) != 0
    assert "error" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    assert main(["spe-pd2", "--r-points", "2", "--out", str(tmp_path / "no" / "such" / "f.csv")]) != 0


def test_simulate_row(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", *TINY_SIM, "--r", "0.25", "--out", str(out)]) == 0
    (row,) = _table(out)
    assert float(row["r"]) == pytest.approx(0.25, abs=1e-8)
    p1 = sum(float(row[f"p1_{s}"]) for s in ("AllC", "AllD", "GRIM"))
    assert p1 == pytest.approx(1.0, abs=1e-8)
    assert row["runs"] == "2" and row["T"] == "20" and row["seed"] == "0"


def test_simulate_s5_initial_condition(tmp_path):
    out = tmp_path / "s5.csv"
    argv = ["simulate", "--G", "4", "--N", "4", "--T", "1", "--runs", "1", "--report-window", "1",
            "--init", "0.05,0.9,0.05", "--lam", "0", "--out", str(out)]
    assert main(argv) == 0
    assert "# init = 0.05,0.9,0.05" in _header(out)


def test_sweep_sim_grids_and_timeseries(tmp_path):
    out = tmp_path / "sweep.csv"
    prefix = tmp_path / "ts"
    argv = ["sweep-sim", *TINY_SIM, "--d-min", "0.2", "--d-max", "1", "--d-points", "3",
            "--timeseries", str(prefix), "--out", str(out)]
    assert main(argv) == 0
    assert [float(row["d"]) for row in _table(out)] == [0.2, 0.6, 1.0]
    series = _table(tmp_path / "ts_001.csv")
    assert len(series) == 20 and series[0]["generation"] == "1"

    out_r = tmp_path / "sweep_r.csv"
    assert main(["sweep-sim", *TINY_SIM, "--r-values", "0,0.1", "--out", str(out_r)]) == 0
    assert [float(row["r"]) for row in _table(out_r)] == pytest.approx([0.0, 0.1], abs=1e-9)


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep-sim", *TINY_SIM, "--mu", "0.01", "--r-values", "0,0.3", "--seed", "9"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_report(tmp_path):
    out = tmp_path / "verify.csv"
    assert main(["verify", "--draws", "40", "--out", str(out)]) == 0
    rows = {row["property"]: row for row in _table(out)}
    assert set(rows) == {
        "pd2-invasion-equivalence",
        "pdn-oracle-omega",
        "pdn-impossible-iff-not-found",
        "pgg-oracle-omega",
        "pgg-impossible-iff-not-found",
    }
    assert all(row["passed"] == "true" for row in rows.values())
    # c/b draws above 1 are set aside rather than counted as failures
    assert int(rows["pdn-oracle-omega"]["out_of_domain"]) > 0
    assert float(rows["pdn-oracle-omega"]["worst_discrepancy"]) <= 1e-6
