import json
import numpy as np
from modsampling.cli import EXIT_INGESTION, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from modsampling.encoder import EncodedTrace, ModuloParams
from modsampling.traces import writeTrace


def output(capsys):
    return json.loads(capsys.readouterr().out)


def test_bounds(capsys):
    code = main(["bounds", "--lambda", "1.5", "--h", "1.5", "--N", "3", "--T", "0.02", "--omega", "4.4",
                 "--g-inf", "4.0"])
    assert code == EXIT_OK
    result = output(capsys)
    assert result["detection_threshold"] == 0.125
    assert result["max_order"] is None
    assert result["conditions"]["TH2"] is True
    assert result["noiseless_bound"] == "not applicable"
    assert "fold_count_bound" not in result


def test_bounds_with_fold_count(capsys):
    assert main(["bounds", "--lambda", "1.5", "--h", "1.5", "--N", "3", "--T", "0.02", "--P", "22",
                 "--K", "400"]) == EXIT_OK
    assert abs(output(capsys)["fold_count_bound"] - 0.0034375) < 1e-12


def test_experiment_report(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert main(["experiment", "--preset", "exp1", "--report", str(report)]) == EXIT_OK
    assert report.exists()
    assert output(capsys)["method"] == "threshold"


def test_encode_then_recover(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["encode", "--preset", "exp1", "--seed", "3", "-o", str(trace)]) == EXIT_OK
    folds = output(capsys)["folds"]
    assert main(["recover", str(trace), "--N", "3", "--plot", str(tmp_path / "plot.csv")]) == EXIT_OK
    result = output(capsys)
    assert result["metrics"]["P_true"] == folds
    assert (tmp_path / "plot.csv").exists()


def test_sweep(capsys):
    assert main(["sweep", "--preset", "exp1", "--kind", "N", "--values", "1,2"]) == EXIT_OK
    rows = output(capsys)
    assert [row["N"] for row in rows] == [1, 2]


def test_exit_codes(tmp_path):
    assert main(["recover", str(tmp_path / "missing.csv")]) == EXIT_IO
    capture = tmp_path / "capture.csv"
    capture.write_text("time,value\n0,1\n", encoding="utf-8")
    assert main(["ingest", str(capture), "--lambda", "1.0"]) == EXIT_INGESTION
    assert main(["experiment", "--K", "0"]) == EXIT_VALIDATION
    assert main(["experiment", "--preset", "exp1", "--N", "auto"]) == EXIT_VALIDATION


def test_recover_without_anchor(tmp_path, capsys):
    # Every filtered sample is above the threshold, the low rate sweep has nowhere to start
    y = np.array([(-1.0) ** k for k in range(10)])
    path = tmp_path / "alternating.csv"
    writeTrace(EncodedTrace(T=1.0, y=y, params=ModuloParams(1.5, 1.5, 0.5)), path)
    assert main(["recover", str(path), "--method", "lowrate", "--N", "2"]) == EXIT_OK
    result = output(capsys)
    assert result["P"] == 0
    assert any("no run of 2 filtered samples" in warning for warning in result["diagnostics"]["warnings"])
