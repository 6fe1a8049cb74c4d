import csv
import json

from run import EXIT_CONFIG, EXIT_REJECTED, main

PETC_REQUEST = {
    "kind": "PETC",
    "sigma": 0.2,
    "bundle": {"P": [[10.0, -1.0], [-1.0, 0.5]], "rho": 0.1, "T": 0.1, "mu2": 1.0},
    "A": [[0.0]],
    "B": [[1.0]],
    "K": [[-1.0]],
}


def test_schedule(capsys):
    assert main(["schedule", "--protocol", "SDCTDMA"]) == 0
    assert "T_min=564.0" in capsys.readouterr().out


def test_certify_exit_codes(tmp_path):
    feasible = tmp_path / "feasible.json"
    feasible.write_text(json.dumps(PETC_REQUEST), encoding="utf-8")
    assert main(["certify", str(feasible)]) == 0

    rejected = tmp_path / "rejected.json"
    request = {**PETC_REQUEST, "bundle": {**PETC_REQUEST["bundle"], "rho": 100.0}}
    rejected.write_text(json.dumps(request), encoding="utf-8")
    assert main(["certify", str(rejected)]) == EXIT_REJECTED


def test_bad_config_file(tmp_path):
    config = tmp_path / "scenario.env"
    config.write_text("PERIOD=abc\n", encoding="utf-8")
    assert main(["--config", str(config), "schedule", "--protocol", "CTDMA"]) == EXIT_CONFIG


def test_period_below_minimum(tmp_path):
    code = main(["--out", str(tmp_path), "run", "--strategy", "PSDETC", "--period", "0.3",
                 "--t-end", "2", "--repetitions", "1"])
    assert code == EXIT_CONFIG


def test_run_writes_results(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "run", "--strategy", "TTC", "--period", "1",
                 "--t-end", "4", "--repetitions", "1", "--trace"])
    assert code == 0
    assert "TTC T=1" in capsys.readouterr().out

    with (tmp_path / "TTC_T1.csv").open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [row["window"] for row in rows] == ["total", "until_switch"]
    assert float(rows[0]["state_transmissions"]) == 12.0

    assert (tmp_path / "runs.jsonl").read_text(encoding="utf-8").count("\n") == 2
    trace = (tmp_path / "TTC_T1_trace.jsonl").read_text(encoding="utf-8").splitlines()
    assert json.loads(trace[0])["node"] == 1


def test_sweep_writes_tables(tmp_path):
    code = main(["--out", str(tmp_path), "sweep", "--strategies", "TTC,PADETCabs", "--t-end", "3",
                 "--repetitions", "1"])
    assert code == 0
    assert (tmp_path / "sweep.csv").exists()
    with (tmp_path / "savings.csv").open(encoding="utf-8") as f:
        assert [row["strategy"] for row in csv.DictReader(f)] == ["TTC", "TTC", "PADETCabs", "PADETCabs"]
